#!/usr/bin/env python3
"""Reference external generator process.

Speaks the host wire protocol: one JSON object per line on stdin, one JSON
object per line on stdout, diagnostics to stderr only.

  {"op":"info"}                      -> {"latent_dim":..,"n_rows":..,"n_cols":..,
                                         "supports_discriminator":true,"name":..}
  {"op":"generate","z":[..]}         -> {"grid":[row-major values in [0,1]]}
  {"op":"discriminate","grid":[..]}  -> {"score": value in (0,1)}
  {"op":"shutdown"}                  -> exits 0

The model is a deliberately non-neural stand-in: a fixed random projection
(constant seed, identical across restarts) mixes the latent vector into
low-frequency sinusoidal basis patterns, squashed to [0,1]. The toy
discriminator scores smoothness: grids whose mean absolute neighbor step
is small (band-like, as this generator produces) score near 1.

Usage: python3 pygen_reference.py serve
"""

import json
import sys

import numpy as np

LATENT_DIM = 15
N_ROWS = 64
N_COLS = 64
N_BASIS = 12
PROJECTION_SEED = 20240601  # constant: identical state across restarts
NAME = "pygen-reference"


class ToyGenerator:
    def __init__(self):
        rng = np.random.default_rng(PROJECTION_SEED)
        # fixed projection: latent -> basis mixing weights
        self.projection = rng.standard_normal((N_BASIS, LATENT_DIM)) / np.sqrt(LATENT_DIM)
        rows = np.arange(N_ROWS) / N_ROWS
        cols = np.arange(N_COLS) / N_COLS
        basis = []
        for k in range(N_BASIS):
            fr = rng.integers(1, 4)
            fc = rng.integers(1, 4)
            pr = rng.uniform(0, 2 * np.pi)
            pc = rng.uniform(0, 2 * np.pi)
            basis.append(np.sin(2 * np.pi * fr * rows[:, None] + pr)
                         * np.sin(2 * np.pi * fc * cols[None, :] + pc))
        self.basis = np.stack(basis)

    def generate(self, z):
        z = np.asarray(z, dtype=np.float64)
        weights = self.projection @ z
        field = np.tensordot(weights, self.basis, axes=1)
        return 1.0 / (1.0 + np.exp(-field))

    @staticmethod
    def discriminate(grid):
        # smoothness statistic: mean absolute step to the right/down neighbor
        step = 0.5 * (np.abs(np.diff(grid, axis=0)).mean()
                      + np.abs(np.diff(grid, axis=1)).mean())
        # logistic in the statistic; strictly inside (0,1)
        score = 1.0 / (1.0 + np.exp(40.0 * (step - 0.1)))
        return float(min(max(score, 1e-9), 1.0 - 1e-9))


def handle(model, msg):
    if not isinstance(msg, dict) or "op" not in msg:
        return {"error": "request must be an object with an 'op' field"}
    op = msg["op"]
    if op == "info":
        return {"latent_dim": LATENT_DIM, "n_rows": N_ROWS, "n_cols": N_COLS,
                "supports_discriminator": True, "name": NAME}
    if op == "generate":
        z = msg.get("z")
        if not isinstance(z, list) or len(z) != LATENT_DIM:
            return {"error": "latent dimension mismatch"}
        if not all(isinstance(v, (int, float)) for v in z):
            return {"error": "latent values must be numbers"}
        grid = model.generate(z)
        return {"grid": grid.ravel().tolist()}
    if op == "discriminate":
        flat = msg.get("grid")
        if not isinstance(flat, list) or len(flat) != N_ROWS * N_COLS:
            return {"error": "grid size mismatch"}
        if not all(isinstance(v, (int, float)) for v in flat):
            return {"error": "grid values must be numbers"}
        grid = np.asarray(flat, dtype=np.float64).reshape(N_ROWS, N_COLS)
        return {"score": model.discriminate(grid)}
    return {"error": f"unknown op {op!r}"}


def serve() -> int:
    model = ToyGenerator()
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            print(json.dumps({"error": "malformed JSON"}), flush=True)
            continue
        if isinstance(msg, dict) and msg.get("op") == "shutdown":
            return 0
        print(json.dumps(handle(model, msg)), flush=True)
    return 0


def main(argv):
    if len(argv) != 2 or argv[1] != "serve":
        print("usage: pygen_reference.py serve", file=sys.stderr)
        return 2
    return serve()


if __name__ == "__main__":
    sys.exit(main(sys.argv))
