"""Antiderivative potentials sigma on the uniform grid over [0, pi].

sigma is the object the inverse problems actually recover; the underlying q
(possibly a distribution) is never materialized.  Values live on the grid
x_i = i*pi/n, i = 0..n, and every operation treats them as immutable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

MIN_GRID = 64
DEFAULT_GRID = 2048


@dataclass(frozen=True)
class Potential:
    """Samples of a real sigma on x_i = i*pi/n_grid plus the declared smoothness theta.

    theta is advisory metadata (the harness uses it to pick norms); the samples
    may represent a function rougher than theta claims, e.g. a step.
    """

    samples: np.ndarray
    n_grid: int
    theta: float = 1.0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1 or len(samples) != self.n_grid + 1:
            raise ValueError(
                f"expected {self.n_grid + 1} samples for n_grid={self.n_grid}, got {samples.shape}"
            )
        if self.n_grid < MIN_GRID:
            raise ValueError(f"n_grid must be >= {MIN_GRID}, got {self.n_grid}")
        if self.n_grid % 2:
            raise ValueError("n_grid must be even (step-halving needs paired cells)")
        if not np.all(np.isfinite(samples)):
            raise ValueError("potential samples must be finite")
        if self.theta < 0:
            raise ValueError(f"theta must be >= 0, got {self.theta}")
        samples.setflags(write=False)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, np.pi, self.n_grid + 1)

    @property
    def step(self) -> float:
        return np.pi / self.n_grid

    @classmethod
    def zero(cls, n_grid: int = DEFAULT_GRID, theta: float = 1.0) -> "Potential":
        return cls(np.zeros(n_grid + 1), n_grid, theta)

    @classmethod
    def from_function(
        cls, fn: Callable[[np.ndarray], np.ndarray], n_grid: int = DEFAULT_GRID, theta: float = 1.0
    ) -> "Potential":
        x = np.linspace(0.0, np.pi, n_grid + 1)
        return cls(np.asarray(fn(x), dtype=float), n_grid, theta)

    def with_samples(self, samples: np.ndarray) -> "Potential":
        return Potential(samples, self.n_grid, self.theta)

    def to_csv(self, path: str | Path) -> None:
        """Write `x,sigma` rows with full double precision."""
        x = self.x
        lines = ["x,sigma"]
        lines += [f"{xi:.17g},{si:.17g}" for xi, si in zip(x, self.samples)]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path: str | Path, theta: float = 1.0) -> "Potential":
        raw = Path(path).read_text().strip().splitlines()
        if not raw or raw[0].strip().lower() != "x,sigma":
            raise ValueError(f"{path}: expected header 'x,sigma'")
        vals = np.array([[float(t) for t in ln.split(",")] for ln in raw[1:]])
        n = len(vals) - 1
        x_expect = np.linspace(0.0, np.pi, n + 1)
        if not np.allclose(vals[:, 0], x_expect, atol=1e-9):
            raise ValueError(f"{path}: grid is not uniform over [0, pi]")
        return cls(vals[:, 1], n, theta)


def shift_potential(sigma: Potential, c: float) -> Potential:
    """Return sigma + c*(x - pi); both spectra of the result are shifted by c."""
    return sigma.with_samples(sigma.samples + c * (sigma.x - np.pi))


def sobolev_norm(sigma: Potential, theta: float, n_coeff: int | None = None) -> float:
    """Computational W^theta_2 norm: the extended-space norm of the sine-transform image.

    The norm is defined only up to equivalence; this fixes it as the l^theta
    norm (Borg-flavor extended space) of the linearized forward image, which
    the isomorphism theorem makes legitimate.  All stability constants are
    reported in this norm.
    """
    from .linearized import t_borg
    from .seqspace import Flavor, decompose, ext_norm

    if theta < 0:
        raise ValueError(f"theta must be >= 0, got {theta}")
    if n_coeff is None:
        n_coeff = 64
    coeffs = t_borg(sigma, n_coeff)
    return ext_norm(decompose(coeffs, theta, Flavor.B))
