"""Eigenvalues, norming constants, and regularized spectral data.

Dirichlet eigenvalues lambda_k are the zeros of lambda -> y(pi; lambda) and
Dirichlet-Neumann eigenvalues mu_k the zeros of u(pi; lambda), both located by
bracketed bisection inside first-order asymptotic windows around k^2 and
(k - 1/2)^2 (shifted by the mean of q estimated from the samples).  Failed
brackets are repaired by widening and scanning, picking the smallest candidate
above the previously found root of the same family.

Interlacing mu_1 < lambda_1 < mu_2 < ... is asserted on every Borg forward
solve; a violation raises rather than returning corrupt data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import brentq

from .errors import (
    BracketFailure,
    InterlacingViolation,
    NonPositiveLambda,
    ShiftTooNegative,
    ValidationError,
)
from .ode import boundary_values, boundary_values_general, trajectories
from .potential import Potential, shift_potential
from .seqspace import Flavor

BORG_FLOOR = 0.25  # mu_1 >= 1/4 defines the admissible potential set
DIRICHLET_FLOOR = 0.5  # lambda_1 >= 1/2 for the Dirichlet problem
PLAIN_BISECT = 14  # bracket narrowing on the un-extrapolated functional
SECANT_ITERS = 8  # safeguarded secant polish on the extrapolated functional
LAMBDA_MIN = 1e-12
SCAN_FLOOR = -4.2e4  # cosh(sqrt(-lambda) pi) must stay inside float64


@dataclass(frozen=True)
class EigenData:
    """Eigenvalues (and norming constants / second spectrum) up to truncation N.

    rho packs square roots in data order: rho_{2n-1} = sqrt(mu_n),
    rho_{2n} = sqrt(lambda_n) for Borg; Dirichlet stores sqrt(lambda_n) at the
    even slots and zeros at the odd ones.
    """

    flavor: Flavor
    lam: np.ndarray
    N: int
    mu: np.ndarray | None = None
    alpha: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "flavor", Flavor.parse(self.flavor))
        object.__setattr__(self, "lam", np.asarray(self.lam, dtype=float))
        if self.mu is not None:
            object.__setattr__(self, "mu", np.asarray(self.mu, dtype=float))
        if self.alpha is not None:
            object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=float))
        if len(self.lam) != self.N:
            raise ValidationError(f"expected {self.N} eigenvalues, got {len(self.lam)}")
        if np.any(np.diff(self.lam) <= 0):
            raise ValidationError("Dirichlet eigenvalues must be strictly increasing")
        if self.lam[0] <= 0:
            raise ValidationError("eigenvalues must be positive; pre-shift the operator")
        if self.flavor is Flavor.B:
            if self.mu is None or len(self.mu) != self.N:
                raise ValidationError("Borg data needs N Dirichlet-Neumann eigenvalues")
            if self.mu[0] <= 0:
                raise ValidationError("eigenvalues must be positive; pre-shift the operator")
            _assert_interlacing(self.mu, self.lam)
        else:
            if self.alpha is None or len(self.alpha) != self.N:
                raise ValidationError("Dirichlet data needs N norming constants")
            if np.any(self.alpha <= 0):
                raise ValidationError("norming constants must be positive")

    @property
    def rho(self) -> np.ndarray:
        out = np.zeros(2 * self.N)
        out[1::2] = np.sqrt(self.lam)
        if self.flavor is Flavor.B:
            out[0::2] = np.sqrt(self.mu)
        return out


@dataclass(frozen=True)
class RegularizedData:
    """Centered data vector s of length 2N feeding the sequence-space machinery."""

    s: np.ndarray
    flavor: Flavor
    N: int

    def __post_init__(self):
        object.__setattr__(self, "s", np.asarray(self.s, dtype=float))
        object.__setattr__(self, "flavor", Flavor.parse(self.flavor))
        if len(self.s) != 2 * self.N:
            raise ValidationError(f"expected 2N = {2 * self.N} entries, got {len(self.s)}")
        if not np.all(np.isfinite(self.s)):
            raise ValidationError("regularized data must be finite")


def _assert_interlacing(mu: np.ndarray, lam: np.ndarray) -> None:
    merged = np.empty(len(mu) + len(lam))
    merged[0::2] = mu
    merged[1::2] = lam
    bad = np.nonzero(np.diff(merged) <= 0)[0]
    if len(bad):
        raise InterlacingViolation(int(bad[0]) + 1)


def _component(sigma: Potential, lams: np.ndarray, comp: np.ndarray, richardson: bool = True) -> np.ndarray:
    y, u = boundary_values(sigma, lams, richardson=richardson)
    return np.where(comp == 0, y, u)


def _general_component(sigma: Potential, mesh: np.ndarray, comp: int, chunk: int = 256) -> np.ndarray:
    """Sign-equivalent functional on an arbitrary real-lambda mesh, chunked for memory."""
    out = np.empty(len(mesh))
    for i in range(0, len(mesh), chunk):
        y, u = boundary_values_general(sigma, mesh[i : i + chunk])
        out[i : i + chunk] = u if comp == 1 else y
    return out


def _assert_no_root_below(sigma: Potential, root0: float, comp: int, k_label: int = 1) -> None:
    """Raise if the enumeration missed an eigenvalue below the first computed root.

    Happens when the operator was not pre-shifted (lowest eigenvalue at or
    below zero, invisible to the sqrt(lambda)-normalized functionals).
    """
    floor = max(-float(np.max(sigma.samples**2)) - 1.0, SCAN_FLOOR)
    upper = root0 - max(1e-8, 1e-6 * abs(root0))
    if upper <= floor:
        return
    npts = int(min(2049, max(65, 8 * (upper - floor))))
    vals = _general_component(sigma, np.linspace(floor, upper, npts), comp)
    sign = np.sign(np.nan_to_num(vals))
    if np.any(sign[:-1] * sign[1:] < 0):
        raise BracketFailure(
            k_label,
            (floor, upper),
            "an eigenvalue lies below the first computed root; the operator is not "
            "pre-shifted (apply auto_shift / shift_potential first)",
        )


def _mean_q(sigma: Potential) -> float:
    return (sigma.samples[-1] - sigma.samples[0]) / np.pi


def _windows(ks: np.ndarray, offset: float, cbar: float, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """lambda-space windows around (k - offset)^2 + cbar with rho-halfwidth delta.

    When the rho lower edge clamps at zero the window opens down to the
    positivity floor: the mean-q shift estimate cbar is only first-order and
    must not fence the lowest roots out from below.
    """
    rho_lo = ks - offset - delta
    lo = np.where(rho_lo > 0, rho_lo**2 + cbar, LAMBDA_MIN)
    lo = np.maximum(lo, LAMBDA_MIN)
    hi = np.maximum((ks - offset + delta) ** 2 + cbar, lo + 1e-6)
    return lo, hi


def _repair_bracket(
    sigma: Potential,
    k: int,
    offset: float,
    cbar: float,
    comp: int,
    prev_root: float | None,
) -> float:
    """Widen + scan when the default window shows no edge sign change.

    The scan density follows the window width (root spacing is at least O(1)
    in lambda), so wide windows from large mean-q shifts stay resolvable.
    """
    center = (k - offset) ** 2 + cbar
    lo = hi = 0.0
    for delta in (0.65, 0.85, 1.1, 1.5, 2.5):
        lo, hi = _windows(np.array([float(k)]), offset, cbar, delta)
        lo, hi = float(lo[0]), float(hi[0])
        if prev_root is not None:
            lo = max(lo, prev_root * (1 + 1e-12) + 1e-10)
        if hi <= lo:
            continue
        npts = int(min(2049, max(65, 8 * (hi - lo))))
        mesh = np.linspace(lo, hi, npts)
        vals = _component(sigma, mesh, np.full(npts, comp))
        sign = np.sign(vals)
        hits = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
        if len(hits) == 0:
            continue
        # smallest candidate above the previous family root = next in enumeration
        i = hits[0] if prev_root is not None else hits[np.argmin(np.abs(mesh[hits] - center))]
        f = lambda l: float(_component(sigma, np.array([l]), np.array([comp]))[0])
        return brentq(f, mesh[i], mesh[i + 1], xtol=1e-13, maxiter=200)
    raise BracketFailure(k, (lo, hi))


def _refine(sigma: Potential, a, b, fa, fb, comps) -> np.ndarray:
    """Safeguarded vectorized secant inside validated brackets of the extrapolated functional."""
    x0, f0, x1, f1 = a.copy(), fa.copy(), b.copy(), fb.copy()
    for _ in range(SECANT_ITERS):
        denom = f1 - f0
        safe = denom != 0.0
        step = np.where(safe, f1 * (x1 - x0) / np.where(safe, denom, 1.0), 0.0)
        x2 = np.clip(x1 - step, a, b)
        stuck = (x2 == x1) | ~safe
        x2 = np.where(stuck, 0.5 * (a + b), x2)
        f2 = _component(sigma, x2, comps)
        left = fa * f2 < 0
        b = np.where(left, x2, b)
        fb = np.where(left, f2, fb)
        a = np.where(left, a, x2)
        fa = np.where(left, fa, f2)
        x0, f0, x1, f1 = x1, f1, x2, f2
    return np.where(np.abs(f1) <= np.abs(f0), x1, x0)


def _search(
    sigma: Potential, ks: np.ndarray, offset: float, comp: int
) -> np.ndarray:
    """All roots of one family (comp 0: y(pi), comp 1: u(pi)) in ascending order.

    Brackets are narrowed on the cheap un-extrapolated functional, re-anchored
    on the extrapolated one (the two roots differ by the extrapolation gain,
    far below the narrowed width), and polished by a safeguarded secant.
    """
    cbar = _mean_q(sigma)
    lo, hi = _windows(ks.astype(float), offset, cbar, 0.5)
    comps = np.full(len(ks), comp)
    flo = _component(sigma, lo, comps, richardson=False)
    fhi = _component(sigma, hi, comps, richardson=False)
    ok = np.sign(flo) * np.sign(fhi) < 0

    roots = np.full(len(ks), np.nan)
    if np.any(ok):
        a, b, fa = lo[ok].copy(), hi[ok].copy(), flo[ok].copy()
        sub = comps[ok]
        for _ in range(PLAIN_BISECT):
            mid = 0.5 * (a + b)
            fm = _component(sigma, mid, sub, richardson=False)
            left = fa * fm < 0
            b = np.where(left, mid, b)
            a = np.where(left, a, mid)
            fa = np.where(left, fa, fm)
        # re-anchor the narrowed bracket on the extrapolated functional
        width = b - a
        a2 = np.maximum(a - 2.0 * width, LAMBDA_MIN)
        b2 = b + 2.0 * width
        fa2 = _component(sigma, a2, sub)
        fb2 = _component(sigma, b2, sub)
        good = np.sign(fa2) * np.sign(fb2) < 0
        refined = _refine(sigma, a2[good], b2[good], fa2[good], fb2[good], sub[good])
        sol = np.full(len(a), np.nan)
        sol[good] = refined
        roots[ok] = sol
        ok_idx = np.nonzero(ok)[0]
        ok[ok_idx[~good]] = False

    if not np.all(ok):
        for i in np.nonzero(~ok)[0]:
            prev = roots[i - 1] if i > 0 and np.isfinite(roots[i - 1]) else None
            roots[i] = _repair_bracket(sigma, int(ks[i]), offset, cbar, comp, prev)

    _assert_no_root_below(sigma, float(roots[0]), comp)
    if np.any(np.diff(roots) <= 0):
        bad = int(np.nonzero(np.diff(roots) <= 0)[0][0]) + 1
        raise BracketFailure(bad, (float(roots[bad - 1]), float(roots[bad])),
                             f"eigenvalue enumeration not increasing at index {bad}")
    return roots


def dirichlet_spectrum(sigma: Potential, N: int) -> np.ndarray:
    """First N zeros of y(pi; lambda): the Dirichlet eigenvalues."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    return _search(sigma, np.arange(1, N + 1), 0.0, comp=0)


def dirichlet_neumann_spectrum(sigma: Potential, N: int) -> np.ndarray:
    """First N zeros of u(pi; lambda) = y^[1](pi; lambda): the mixed-condition eigenvalues."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    return _search(sigma, np.arange(1, N + 1), 0.5, comp=1)


def norming_constants(sigma: Potential, lam) -> np.ndarray:
    """alpha_k = integral of y(x, lambda_k)^2 under the y^[1](0) = sqrt(lambda) normalization.

    Step-halving extrapolation against the coarse grid removes the O(h^2)
    trajectory-plus-quadrature bias (the expansion is even in h).
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(lam <= 0):
        raise NonPositiveLambda("norming constants need lambda_k > 0 (pre-shift the operator)")
    y, _ = trajectories(sigma, lam)
    fine = trapezoid(y * y, dx=sigma.step, axis=1)
    half = sigma.n_grid // 2
    if half % 2:  # coarse grid must itself be valid
        return fine
    coarse_pot = Potential(sigma.samples[::2], half, sigma.theta)
    yc, _ = trajectories(coarse_pot, lam)
    coarse = trapezoid(yc * yc, dx=2 * sigma.step, axis=1)
    return fine + (fine - coarse) / 3.0


def eigendata(sigma: Potential, flavor: Flavor, N: int) -> EigenData:
    """Full forward eigen-solve for one flavor (interlacing asserted for Borg)."""
    flavor = Flavor.parse(flavor)
    lam = dirichlet_spectrum(sigma, N)
    if flavor is Flavor.B:
        mu = dirichlet_neumann_spectrum(sigma, N)
        return EigenData(flavor, lam, N, mu=mu)
    alpha = norming_constants(sigma, lam)
    return EigenData(flavor, lam, N, alpha=alpha)


def regularize(eigen: EigenData) -> RegularizedData:
    """Centered data: Borg s = {sqrt(mu_k) - (k - 1/2), sqrt(lambda_k) - k};
    Dirichlet s = {alpha_k - pi/2, sqrt(lambda_k) - k}."""
    N = eigen.N
    k = np.arange(1, N + 1, dtype=float)
    s = np.empty(2 * N)
    s[1::2] = np.sqrt(eigen.lam) - k
    if eigen.flavor is Flavor.B:
        s[0::2] = np.sqrt(eigen.mu) - (k - 0.5)
    else:
        s[0::2] = eigen.alpha - np.pi / 2.0
    return RegularizedData(s, eigen.flavor, N)


def forward_map(sigma: Potential, flavor: Flavor, N: int) -> tuple[EigenData, RegularizedData]:
    """F: potential -> regularized spectral data (plus the eigen-data it came from)."""
    eigen = eigendata(sigma, flavor, N)
    return eigen, regularize(eigen)


def shift_eigendata(eigen: EigenData, c: float) -> EigenData:
    """Shift both spectra by c; Dirichlet norming constants are kept (spec convention)."""
    if eigen.lam[0] + c <= 0 or (eigen.flavor is Flavor.B and eigen.mu[0] + c <= 0):
        raise ShiftTooNegative(f"shift c = {c} would push the lowest eigenvalue below zero")
    if eigen.flavor is Flavor.B:
        return EigenData(eigen.flavor, eigen.lam + c, eigen.N, mu=eigen.mu + c)
    return EigenData(eigen.flavor, eigen.lam + c, eigen.N, alpha=eigen.alpha)


def shift_dirichlet_full(eigen: EigenData, c: float) -> EigenData:
    """Exact data covariance of sigma -> sigma + c(x - pi): lambda += c and
    alpha_k *= (1 + c/lambda_k), which follows from y^[1](0) = sqrt(lambda)."""
    if eigen.flavor is not Flavor.D:
        raise ValidationError("full shift with alpha scaling is Dirichlet-only")
    if eigen.lam[0] + c <= 0:
        raise ShiftTooNegative(f"shift c = {c} would push lambda_1 below zero")
    return EigenData(
        eigen.flavor, eigen.lam + c, eigen.N, alpha=eigen.alpha * (1.0 + c / eigen.lam)
    )


def shift_data(data: RegularizedData, eigen: EigenData, c: float) -> RegularizedData:
    """Regularized data of the shifted spectra (Eq.-level recompute, not an approximation)."""
    return regularize(shift_eigendata(eigen, c))


def auto_shift(sigma: Potential, flavor: Flavor = Flavor.B, floor: float | None = None
               ) -> tuple[Potential, float]:
    """Add c(x - pi) so the lowest relevant eigenvalue reaches its admissibility floor.

    Borg: mu_1 >= 1/4; Dirichlet: lambda_1 >= 1/2.  c = 0 when already admissible.
    """
    flavor = Flavor.parse(flavor)
    if floor is None:
        floor = BORG_FLOOR if flavor is Flavor.B else DIRICHLET_FLOOR
    low = _lowest_eigenvalue(sigma, flavor)
    c = 0.0 if low >= floor - 1e-12 else floor - low
    return (sigma if c == 0.0 else shift_potential(sigma, c)), c


def _lowest_eigenvalue(sigma: Potential, flavor: Flavor) -> float:
    """mu_1 (Borg) or lambda_1 (Dirichlet); may be negative for unshifted potentials.

    Uses the sign-equivalent (0, 1)-normalized boundary functionals, which are
    defined for all real lambda, and scans upward from the rigorous quadratic
    form bound lambda_1, mu_1 >= -max(sigma^2).
    """
    comp = 1 if flavor is Flavor.B else 0
    offset = 0.5 if flavor is Flavor.B else 0.0
    cbar = _mean_q(sigma)

    lo = max(-float(np.max(sigma.samples**2)) - 1.0, SCAN_FLOOR)
    hi = (1.0 - offset + 0.6) ** 2 + max(cbar, 0.0)
    for _ in range(8):
        mesh = np.linspace(lo, hi, int(min(2049, max(513, 8 * (hi - lo)))))
        vals = _general_component(sigma, mesh, comp)
        sign = np.sign(np.nan_to_num(vals))
        hits = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
        if len(hits):
            i = hits[0]
            return brentq(
                lambda l: float(_general_component(sigma, np.array([l]), comp)[0]),
                mesh[i], mesh[i + 1], xtol=1e-13, maxiter=200,
            )
        hi = hi * 2.0 + 1.0
    raise BracketFailure(1, (float(lo), float(hi)), "could not locate the lowest eigenvalue")


def implied_floor_shift(data: RegularizedData, floor: float | None = None) -> float:
    """Shift c that the data itself needs to meet the admissibility floor (0 if none).

    A 1e-9 margin keeps the shifted first entry strictly on the admissible
    side of the boundary under roundoff.
    """
    if data.flavor is Flavor.B:
        floor = BORG_FLOOR if floor is None else floor
        mu1 = (data.s[0] + 0.5) ** 2 if data.s[0] + 0.5 > 0 else 0.0
        return 0.0 if mu1 >= floor else floor + 1e-9 - mu1
    floor = DIRICHLET_FLOOR if floor is None else floor
    lam1 = (data.s[1] + 1.0) ** 2 if data.s[1] + 1.0 > 0 else 0.0
    return 0.0 if lam1 >= floor else floor + 1e-9 - lam1


# ---------------------------------------------------------------------------
# JSON dataset serialization: {flavor, N, lambda[], mu[]?, alpha[]?, s[]}
# ---------------------------------------------------------------------------

def dataset_to_json(path: str | Path, eigen: EigenData | None, data: RegularizedData) -> None:
    doc: dict = {"flavor": data.flavor.value, "N": data.N, "s": data.s.tolist()}
    if eigen is not None:
        doc["lambda"] = eigen.lam.tolist()
        if eigen.mu is not None:
            doc["mu"] = eigen.mu.tolist()
        if eigen.alpha is not None:
            doc["alpha"] = eigen.alpha.tolist()
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")


def dataset_from_json(path: str | Path) -> tuple[EigenData | None, RegularizedData]:
    doc = json.loads(Path(path).read_text())
    flavor = Flavor.parse(doc["flavor"])
    N = int(doc["N"])
    data = RegularizedData(np.asarray(doc["s"], dtype=float), flavor, N)
    eigen = None
    if "lambda" in doc:
        eigen = EigenData(
            flavor,
            np.asarray(doc["lambda"], dtype=float),
            N,
            mu=np.asarray(doc["mu"], dtype=float) if "mu" in doc else None,
            alpha=np.asarray(doc["alpha"], dtype=float) if "alpha" in doc else None,
        )
    return eigen, data


def eigendata_from_regularized(data: RegularizedData, alpha: np.ndarray | None = None) -> EigenData:
    """Invert the regularization formulas back to eigenvalues (and alphas for D)."""
    N = data.N
    k = np.arange(1, N + 1, dtype=float)
    lam = (data.s[1::2] + k) ** 2
    if data.flavor is Flavor.B:
        mu = (data.s[0::2] + k - 0.5) ** 2
        return EigenData(data.flavor, lam, N, mu=mu)
    alpha = data.s[0::2] + np.pi / 2.0 if alpha is None else alpha
    return EigenData(data.flavor, lam, N, alpha=alpha)
