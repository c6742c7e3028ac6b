"""faciesqc: data-conditioned facies realizations from latent-vector
generative models, plus a minimum-acceptance check suite comparing
conditional ensembles against unconditional baselines and a training image.
"""

__version__ = "0.1.0"

from . import conditioning, experiment, generator, grids, metrics, optimize, report

__all__ = [
    "__version__",
    "grids",
    "metrics",
    "optimize",
    "generator",
    "conditioning",
    "experiment",
    "report",
]
