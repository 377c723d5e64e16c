"""Cauchy solver for the quasi-derivative system defining s(x, lambda).

The operator acts through the quasi-derivative u = y^[1] = y' - sigma*y, so the
second-order problem becomes the first-order system

    y' = u + sigma*y,        u' = -sigma*u - (sigma^2 + lambda)*y,

which only ever evaluates sigma itself (q = sigma' never appears; sigma may be
non-smooth).  On each grid cell sigma is frozen at the endpoint average and the
frozen system is advanced by its exact propagator: the cell matrix

    M = [[sigma, 1], [-(sigma^2 + lambda), -sigma]]

has zero trace and determinant lambda, so exp(M h) = cos(w h) I + sin(w h)/w M
with w = sqrt(lambda).  The scheme is second order in the cell size with
constants that do not grow with lambda, is exact for sigma = 0, and admits
Richardson extrapolation of boundary values against the half-resolution grid
(the coarse cells reuse every other sample, so sigma is never interpolated).

Everything is vectorized over batches of lambda: cell propagators have shape
(L, n, 2, 2), full trajectories come from a doubling prefix scan, boundary
values from a pairwise product reduction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IntegrationOverflow, NonPositiveLambda
from .potential import Potential

OVERFLOW_LIMIT = 1e150


@dataclass(frozen=True)
class CauchySolution:
    """Trajectory (y, y^[1]) of one Cauchy problem: y(0) = 0, y^[1](0) = sqrt(lambda)."""

    lam: float
    x_grid: np.ndarray
    y: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        if self.y[0] != 0.0:
            raise ValueError("Cauchy solution must start at y(0) = 0")
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.u))):
            raise ValueError("non-finite trajectory")

    @property
    def y_prime(self) -> np.ndarray:
        """Classical derivative y' = u + sigma*y is potential-dependent; use ode helpers."""
        raise AttributeError("y' needs sigma; compute u + sigma.samples * y explicitly")


def _check_lambda(lams: np.ndarray) -> np.ndarray:
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    if np.any(lams <= 0.0):
        raise NonPositiveLambda(
            f"lambda must be > 0 (got min {lams.min()}); apply shift_potential / auto_shift first"
        )
    return lams


def _cell_propagators(samples: np.ndarray, lams: np.ndarray, h: float) -> np.ndarray:
    """Exact frozen-cell propagators, shape (L, n_cells, 2, 2)."""
    sm = 0.5 * (samples[:-1] + samples[1:])
    lam = lams[:, None]
    om = np.sqrt(lam)
    arg = om * h
    cos = np.broadcast_to(np.cos(arg), (len(lams), len(sm))).copy()
    # sin(w h)/w, stable as w -> 0
    snc = np.broadcast_to(h * np.sinc(arg / np.pi), (len(lams), len(sm)))
    P = np.empty((len(lams), len(sm), 2, 2))
    P[..., 0, 0] = cos + snc * sm
    P[..., 0, 1] = snc
    P[..., 1, 0] = -snc * (sm * sm + lam)
    P[..., 1, 1] = cos - snc * sm
    return P


def _product_reduce(P: np.ndarray) -> np.ndarray:
    """Ordered product P[n-1] @ ... @ P[0] by pairwise reduction, shape (L, 2, 2)."""
    while P.shape[1] > 1:
        if P.shape[1] % 2:
            tail = P[:, -1:]
            P = np.concatenate([np.matmul(P[:, 1:-1:2], P[:, 0:-1:2]), tail], axis=1)
        else:
            P = np.matmul(P[:, 1::2], P[:, 0::2])
    return P[:, 0]


def _prefix_scan(P: np.ndarray) -> np.ndarray:
    """Inclusive prefix products S_j = P[j] @ ... @ P[0] (doubling scan)."""
    S = P.copy()
    offset = 1
    n = S.shape[1]
    while offset < n:
        S[:, offset:] = np.matmul(S[:, offset:], S[:, :-offset])
        offset *= 2
    return S


def _invert_cells(P: np.ndarray) -> np.ndarray:
    """Inverses of unimodular 2x2 cells (adjugate)."""
    Q = np.empty_like(P)
    Q[..., 0, 0] = P[..., 1, 1]
    Q[..., 0, 1] = -P[..., 0, 1]
    Q[..., 1, 0] = -P[..., 1, 0]
    Q[..., 1, 1] = P[..., 0, 0]
    return Q


def _guard_overflow(*arrays: np.ndarray) -> None:
    for a in arrays:
        m = np.abs(a).max() if a.size else 0.0
        if not np.isfinite(m) or m > OVERFLOW_LIMIT:
            raise IntegrationOverflow(f"trajectory magnitude {m:.3e} exceeds {OVERFLOW_LIMIT:.0e}")


def trajectories(sigma: Potential, lams) -> tuple[np.ndarray, np.ndarray]:
    """Batched trajectories (y, u) on the potential grid, shapes (L, n_grid+1)."""
    lams = _check_lambda(lams)
    P = _cell_propagators(sigma.samples, lams, sigma.step)
    S = _prefix_scan(P)
    root = np.sqrt(lams)[:, None]
    y = np.concatenate([np.zeros((len(lams), 1)), S[:, :, 0, 1] * root], axis=1)
    u = np.concatenate([root, S[:, :, 1, 1] * root], axis=1)
    _guard_overflow(y, u)
    return y, u


def trajectories_backward(
    sigma: Potential, lams, terminal: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Solve the same system from x = pi down to 0 with given terminal states (L, 2)."""
    lams = _check_lambda(lams)
    terminal = np.atleast_2d(np.asarray(terminal, dtype=float))
    P = _cell_propagators(sigma.samples, lams, sigma.step)
    S = _prefix_scan(_invert_cells(P)[:, ::-1])
    states = np.einsum("lcij,lj->lci", S, terminal)
    n = sigma.n_grid
    y = np.empty((len(lams), n + 1))
    u = np.empty_like(y)
    y[:, n] = terminal[:, 0]
    u[:, n] = terminal[:, 1]
    y[:, n - 1 :: -1] = states[..., 0]
    u[:, n - 1 :: -1] = states[..., 1]
    _guard_overflow(y, u)
    return y, u


def boundary_values(
    sigma: Potential, lams, richardson: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """Batched (y(pi), u(pi)); Richardson-extrapolated against the half grid by default."""
    lams = _check_lambda(lams)
    root = np.sqrt(lams)
    Pf = _product_reduce(_cell_propagators(sigma.samples, lams, sigma.step))
    yf = Pf[:, 0, 1] * root
    uf = Pf[:, 1, 1] * root
    _guard_overflow(yf, uf)
    if not richardson:
        return yf, uf
    Pc = _product_reduce(_cell_propagators(sigma.samples[::2], lams, 2 * sigma.step))
    yc = Pc[:, 0, 1] * root
    uc = Pc[:, 1, 1] * root
    return yf + (yf - yc) / 3.0, uf + (uf - uc) / 3.0


def _cells_general(samples: np.ndarray, lams: np.ndarray, h: float) -> np.ndarray:
    """Frozen-cell propagators for arbitrary real lambda (cos/sinc continue to cosh/sinh)."""
    sm = 0.5 * (samples[:-1] + samples[1:])
    om = np.sqrt(lams.astype(complex))[:, None]
    arg = om * h
    cos = np.broadcast_to(np.cos(arg).real, (len(lams), len(sm))).copy()
    snc = np.broadcast_to((h * np.sinc(arg / np.pi)).real, (len(lams), len(sm)))
    lam = lams[:, None]
    P = np.empty((len(lams), len(sm), 2, 2))
    P[..., 0, 0] = cos + snc * sm
    P[..., 0, 1] = snc
    P[..., 1, 0] = -snc * (sm * sm + lam)
    P[..., 1, 1] = cos - snc * sm
    return P


def boundary_values_general(
    sigma: Potential, lams, richardson: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """Boundary pair for arbitrary real lambda, initial data (0, 1).

    Zero- and sign-equivalent to the sqrt(lambda)-normalized functionals for
    lambda > 0; used to locate eigenvalues of unshifted operators that may sit
    at or below zero.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    Pf = _product_reduce(_cells_general(sigma.samples, lams, sigma.step))
    yf, uf = Pf[:, 0, 1], Pf[:, 1, 1]
    # no magnitude guard here: deep below the spectrum the solutions grow like
    # cosh(sqrt(-lambda) pi) and only the signs are consumed
    if not richardson:
        return yf, uf
    Pc = _product_reduce(_cells_general(sigma.samples[::2], lams, 2 * sigma.step))
    return yf + (yf - Pc[:, 0, 1]) / 3.0, uf + (uf - Pc[:, 1, 1]) / 3.0


def integrate(sigma: Potential, lam: float) -> CauchySolution:
    """Trajectory of the Cauchy problem y(0) = 0, y^[1](0) = sqrt(lambda) for one lambda."""
    y, u = trajectories(sigma, [lam])
    return CauchySolution(float(lam), sigma.x, y[0], u[0])


def boundary_functionals(sigma: Potential, lam: float) -> tuple[float, float]:
    """(y(pi), u(pi)) for one lambda; their zeros in lambda are the two spectra."""
    y, u = boundary_values(sigma, [lam])
    return float(y[0]), float(u[0])
