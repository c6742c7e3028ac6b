"""Generators and plausibility scoring.

Three pieces:

* ProceduralChannelGenerator - a deterministic, differentiable-in-latent
  stand-in for a trained generative model: each group of 5 latent
  coordinates decodes (via tanh squashing) to one sinusoidal channel.
* plausibility_score - a statistics-based stand-in for a trained
  discriminator, scoring a grid by its deviation from training-image
  proportion and semivariogram targets.
* ExternalGenerator - host adapter for an externally trained model spoken
  to over newline-delimited JSON on stdin/stdout.
"""

from __future__ import annotations

import json
import math
import selectors
import subprocess
import time
from dataclasses import dataclass

import numpy as np

from .grids import CategoricalGrid, RealGrid, threshold_grid
from .metrics import directional_semivariogram, facies_proportion

__all__ = [
    "GeneratorInfo",
    "LatentVector",
    "ChannelParams",
    "TIStats",
    "ProceduralChannelGenerator",
    "ExternalGenerator",
    "ProtocolError",
    "sample_latent",
    "ti_stats",
    "plausibility_score",
]


@dataclass(frozen=True)
class GeneratorInfo:
    latent_dim: int
    n_rows: int
    n_cols: int
    supports_discriminator: bool
    name: str

    def __post_init__(self):
        if self.latent_dim < 1 or self.n_rows < 1 or self.n_cols < 1:
            raise ValueError("generator dimensions must be positive")


# LatentVector is a plain 1D float array; helpers below validate it.
LatentVector = np.ndarray


def _check_latent(z, latent_dim: int) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1 or z.size != latent_dim:
        raise ValueError(f"latent dimension mismatch: expected {latent_dim}, got {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("latent vector contains non-finite values")
    return z


def sample_latent(rng_seed: int, latent_dim: int) -> np.ndarray:
    """I.i.d. standard normal latent vector; deterministic per seed."""
    if latent_dim < 1:
        raise ValueError("latent_dim must be >= 1")
    return np.random.default_rng(rng_seed).standard_normal(latent_dim)


@dataclass(frozen=True)
class ChannelParams:
    amplitude: float
    wavelength: float
    phase: float
    vertical_offset: float
    half_thickness: float


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


class ProceduralChannelGenerator:
    """Deterministic latent-to-grid channel pattern generator.

    Latent dimension is 5 per channel. Decoded parameter ranges are fixed
    relative to a 64x64 reference grid (scale = n_rows/64 or n_cols/64):

    * amplitude          (5 +/- 3) * row scale
    * wavelength         (44 +/- 20) * col scale
    * phase              +/- pi
    * vertical_offset    channel-c band center (c+0.5)/C * n_rows, +/- n_rows/16
    * half_thickness     2.75 +/- 1.25 cells

    A cell's value is the max over channels of a logistic soft membership
    with edge slope 4, so output is in (0, 1) and continuous in the latent.
    """

    EDGE_SLOPE = 4.0

    def __init__(self, n_channels: int = 3, n_rows: int = 64, n_cols: int = 64):
        if n_channels < 1:
            raise ValueError("need at least one channel")
        self.n_channels = n_channels
        self.info = GeneratorInfo(5 * n_channels, n_rows, n_cols, False, "procedural")

    def decode(self, z) -> list:
        """Latent vector -> per-channel parameters."""
        z = _check_latent(z, self.info.latent_dim)
        nr, nc = self.info.n_rows, self.info.n_cols
        rs, cs = nr / 64.0, nc / 64.0
        params = []
        for c in range(self.n_channels):
            za, zw, zp, zo, zt = np.tanh(z[5 * c:5 * c + 5])
            params.append(ChannelParams(
                amplitude=(5.0 + 3.0 * za) * rs,
                wavelength=(44.0 + 20.0 * zw) * cs,
                phase=math.pi * zp,
                vertical_offset=(c + 0.5) * nr / self.n_channels + (nr / 16.0) * zo,
                half_thickness=2.75 + 1.25 * zt,
            ))
        return params

    def generate(self, z) -> RealGrid:
        nr, nc = self.info.n_rows, self.info.n_cols
        rows = np.arange(nr, dtype=np.float64)[:, None]
        cols = np.arange(nc, dtype=np.float64)[None, :]
        value = np.zeros((nr, nc))
        for p in self.decode(z):
            center = p.vertical_offset + p.amplitude * np.sin(
                2.0 * math.pi * cols / p.wavelength + p.phase)
            member = _sigmoid(self.EDGE_SLOPE * (p.half_thickness - np.abs(rows - center)))
            np.maximum(value, member, out=value)
        return RealGrid(value)


@dataclass(frozen=True)
class TIStats:
    """Proportion and leading semivariogram values of a training image,
    the targets the plausibility scorer measures deviation from."""

    target_proportion: float
    target_gamma_major: tuple
    target_gamma_minor: tuple


def ti_stats(ti: CategoricalGrid, positive: int = 1, max_lag: int = 10) -> TIStats:
    return TIStats(
        facies_proportion(ti, positive),
        directional_semivariogram(ti, positive, (0, 1), max_lag).gamma,
        directional_semivariogram(ti, positive, (1, 0), max_lag).gamma,
    )


def plausibility_score(g, stats: TIStats, positive: int = 1,
                       weight: float = 10.0, cutoff: float = 0.5) -> float:
    """Discriminator stand-in: logistic(-weight * dev) where dev combines
    the proportion gap and the mean absolute semivariogram gap over the
    stored lags. Equals 0.5 exactly when the grid matches the targets."""
    if isinstance(g, RealGrid):
        g = threshold_grid(g, cutoff)
    dev = abs(facies_proportion(g, positive) - stats.target_proportion)
    gaps = []
    for targets, direction in ((stats.target_gamma_major, (0, 1)),
                               (stats.target_gamma_minor, (1, 0))):
        if not targets:
            continue
        sv = directional_semivariogram(g, positive, direction, len(targets))
        if len(sv.gamma) != len(targets):
            raise ValueError("grid shape does not support the TI's lag range")
        gaps.extend(abs(a - b) for a, b in zip(sv.gamma, targets))
    if gaps:
        dev += sum(gaps) / len(gaps)
    return float(_sigmoid(-weight * dev))


class ProtocolError(RuntimeError):
    """External generator broke the wire protocol."""


class ExternalGenerator:
    """Adapter for a child-process generator speaking newline-delimited
    JSON over stdin/stdout. One request in flight at a time."""

    def __init__(self, command, timeout: float = 30.0):
        if isinstance(command, str):
            command = [command]
        self._proc = subprocess.Popen(
            list(command), stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            text=True, bufsize=1,
        )
        self._timeout = timeout
        self._selector = selectors.DefaultSelector()
        self._selector.register(self._proc.stdout, selectors.EVENT_READ)
        self.info = self._handshake()

    def _request(self, payload: dict) -> dict:
        if self._proc.poll() is not None:
            raise ProtocolError("external generator process has exited")
        try:
            self._proc.stdin.write(json.dumps(payload) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise ProtocolError(f"cannot write to external generator: {e}") from None
        deadline = time.monotonic() + self._timeout
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                self.close()
                raise ProtocolError(f"external generator timed out after {self._timeout}s")
            if not self._selector.select(timeout=remaining):
                continue
            line = self._proc.stdout.readline()
            if not line:
                raise ProtocolError("external generator closed its output")
            try:
                msg = json.loads(line)
            except json.JSONDecodeError:
                self.close()
                raise ProtocolError(f"malformed JSON from external generator: {line!r}") from None
            if not isinstance(msg, dict):
                self.close()
                raise ProtocolError("protocol messages must be JSON objects")
            if "error" in msg:
                raise ProtocolError(f"external generator error: {msg['error']}")
            return msg

    def _handshake(self) -> GeneratorInfo:
        msg = self._request({"op": "info"})
        try:
            return GeneratorInfo(
                int(msg["latent_dim"]), int(msg["n_rows"]), int(msg["n_cols"]),
                bool(msg["supports_discriminator"]), str(msg["name"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ProtocolError(f"bad info response: {e}") from None

    def generate(self, z) -> RealGrid:
        z = _check_latent(z, self.info.latent_dim)
        msg = self._request({"op": "generate", "z": z.tolist()})
        grid = msg.get("grid")
        nr, nc = self.info.n_rows, self.info.n_cols
        if not isinstance(grid, list) or len(grid) != nr * nc:
            raise ProtocolError(f"generate returned {type(grid).__name__} of wrong size")
        arr = np.asarray(grid, dtype=np.float64).reshape(nr, nc)
        if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
            raise ProtocolError("generated values must be finite and in [0, 1]")
        return RealGrid(arr)

    def discriminate(self, g: RealGrid) -> float:
        if not self.info.supports_discriminator:
            raise ProtocolError("external generator declares no discriminator")
        if g.shape != (self.info.n_rows, self.info.n_cols):
            raise ProtocolError("grid shape does not match generator declaration")
        msg = self._request({"op": "discriminate", "grid": g.cells.ravel().tolist()})
        score = msg.get("score")
        if not isinstance(score, (int, float)) or not (0.0 < float(score) < 1.0):
            raise ProtocolError(f"discriminator score out of (0, 1): {score!r}")
        return float(score)

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.write(json.dumps({"op": "shutdown"}) + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError):
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False
