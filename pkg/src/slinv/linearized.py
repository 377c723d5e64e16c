"""Linearized forward maps, their inverses, and the biorthogonal Riesz systems.

The forward linearizations at sigma = 0 are plain sine/cosine moment maps;
they are evaluated with the same trapezoid rule as every other quadrature in
the package (fast path through DST-I/DCT-I, which are exactly the trapezoid
sums on this grid).  Their inverses split the data into special-sequence
coefficients plus a weighted-l2 tail: the tail inverts on a trigonometric
basis, the special part maps onto explicit polynomial preimages built by a
double-integration recursion.

At a general admissible sigma the derivative of the forward map has coordinate
functionals built from products of eigenfunctions; the biorthogonal system
(phi_k, psi_k) is assembled from forward and terminal-value solves.  The
normalization constants are fixed so that Gram(phi, psi) = I holds, which the
zero-potential closed forms and the general-sigma quadrature tests certify.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from scipy.fft import dct, dst
from scipy.integrate import trapezoid

from .errors import DegenerateDenominator, ValidationError
from .ode import trajectories, trajectories_backward
from .potential import DEFAULT_GRID, Potential
from .seqspace import ExtSeq, Flavor, decompose
from .spectra import EigenData

LAMBDA_FD_STEP = 1e-4  # relative step for d/dlambda central differences


# ---------------------------------------------------------------------------
# forward linear maps
# ---------------------------------------------------------------------------

def t_borg(sigma: Potential, N: int) -> np.ndarray:
    """(T_B sigma)_k = -(1/pi) * integral of sigma(t) sin(kt), k = 1..2N."""
    n = sigma.n_grid
    if 2 * N > n - 1:
        raise ValueError(f"need n_grid > 2N = {2 * N}, got {n}")
    sums = 0.5 * sigma.step * dst(sigma.samples[1:n], type=1)
    return -sums[: 2 * N] / np.pi


def t_dirichlet(sigma: Potential, N: int) -> np.ndarray:
    """Odd slots -(integral of (pi-t) sigma cos(2kt)), even slots -(1/pi)(integral of sigma sin(2kt))."""
    n = sigma.n_grid
    if 4 * N > n - 1:
        raise ValueError(f"need n_grid > 4N = {4 * N}, got {n}")
    out = np.empty(2 * N)
    sums = 0.5 * sigma.step * dst(sigma.samples[1:n], type=1)
    out[1::2] = -sums[1 : 4 * N : 2][:N] / np.pi
    g = (np.pi - sigma.x) * sigma.samples
    csums = 0.5 * sigma.step * dct(g, type=1)
    out[0::2] = -csums[2 : 4 * N + 1 : 2][:N]
    return out


def t_forward(sigma: Potential, N: int, flavor: Flavor) -> np.ndarray:
    return t_borg(sigma, N) if Flavor.parse(flavor) is Flavor.B else t_dirichlet(sigma, N)


# ---------------------------------------------------------------------------
# polynomial preimages of the special sequences
# ---------------------------------------------------------------------------

def _double_integral_zero_bc(p: Polynomial) -> Polynomial:
    """Twice-integrated polynomial with zeros at 0 and pi."""
    P = p.integ().integ()
    a = P(0.0)
    b = (P(np.pi) - a) / np.pi
    return P - Polynomial([a, b])


def _borg_preimages(count: int) -> list[Polynomial]:
    """Polynomials g_j with T_B(g_j) = e_j: g_1 = x - pi, g_2 = x, then
    g_{j+2} = double integral of -g_j with zero boundary values."""
    out = [Polynomial([-np.pi, 1.0]), Polynomial([0.0, 1.0])]
    while len(out) < count:
        out.append(_double_integral_zero_bc(-out[-2]))
    return out[:count]


def _dirichlet_preimages(count: int) -> list[Polynomial]:
    """Polynomials with T_D images equal to the hatted special sequences.

    Base pair (mod constants): g^_1 = x + (2/pi) x(x-pi), g^_2 = -x(x-pi)/pi^2.
    Ascent by the moment recursion: with p = doubleint(-g^_{2s}),
    g^_{2s+2} = p - pi p'(0) g^_2; with q = doubleint(-g^_{2s-1}),
    g^_{2s+1} = q - pi q'(0) g^_2 - 2 pi g^_{2s+2}.
    """
    xxp = Polynomial([0.0, -np.pi, 1.0])  # x(x - pi)
    g2 = -xxp / np.pi**2
    g1 = Polynomial([0.0, 1.0]) + (2.0 / np.pi) * xxp
    out = [g1, g2]
    s = 1
    while len(out) < count:
        p = _double_integral_zero_bc(-out[2 * s - 1])
        g_even = p - np.pi * p.deriv()(0.0) * g2
        q = _double_integral_zero_bc(-out[2 * s - 2])
        g_odd = q - np.pi * q.deriv()(0.0) * g2 - 2.0 * np.pi * g_even
        out.extend([g_odd, g_even])
        s += 1
    return out[:count]


def special_preimage(flavor: Flavor, j: int, x: np.ndarray) -> np.ndarray:
    """Samples of the sigma whose linearized image is the j-th special sequence."""
    polys = _borg_preimages(j) if Flavor.parse(flavor) is Flavor.B else _dirichlet_preimages(j)
    return polys[j - 1](x)


# ---------------------------------------------------------------------------
# inverse of the linear map on truncated data
# ---------------------------------------------------------------------------

_TD_CACHE: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}


def _dirichlet_tail_system(N: int, n_grid: int) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature-consistent matrix of T_D on the full sine basis {sin jx, j <= 2N}.

    Even j map diagonally onto the even slots; odd j feed only the odd slots
    through a well-conditioned Cauchy-like block.  The full sine family (not
    just the pi-periodic part) is essential: smooth non-periodic potentials
    have slowly converging pi-periodic expansions but fast sine expansions.
    """
    key = (N, n_grid)
    if key not in _TD_CACHE:
        x = np.linspace(0.0, np.pi, n_grid + 1)
        basis = np.stack([np.sin(j * x) for j in range(1, 2 * N + 1)], axis=0)
        cols = [t_dirichlet(Potential(row, n_grid, 0.0), N) for row in basis]
        _TD_CACHE[key] = (np.stack(cols, axis=1), basis)
    return _TD_CACHE[key]


def t_inverse(coeffs: ExtSeq, flavor: Flavor | None = None, n_grid: int = DEFAULT_GRID) -> Potential:
    """Truncated inverse of the linearized map.

    Special coefficients map onto their polynomial preimages; the tail inverts
    on sin(kx) (Borg: beta_k = -2 tail_k) or on the pi-periodic trig basis
    through the cached quadrature-consistent system (Dirichlet, mod constants,
    returned with zero mean).
    """
    flavor = coeffs.flavor if flavor is None else Flavor.parse(flavor)
    if flavor is not coeffs.flavor:
        raise ValidationError(f"flavor mismatch: {flavor} vs coefficient flavor {coeffs.flavor}")
    x = np.linspace(0.0, np.pi, n_grid + 1)
    N = coeffs.N
    out = np.zeros(n_grid + 1)
    for j, c in enumerate(coeffs.special, start=1):
        out += c * special_preimage(flavor, j, x)
    if flavor is Flavor.B:
        if 2 * N > n_grid - 1:
            raise ValueError(f"need n_grid > 2N = {2 * N}")
        ks = np.arange(1, 2 * N + 1)
        out += (-2.0 * coeffs.tail) @ np.sin(ks[:, None] * x[None, :])
    else:
        mat, basis = _dirichlet_tail_system(N, n_grid)
        beta = np.linalg.solve(mat, coeffs.tail)
        out += beta @ basis
        out -= trapezoid(out, dx=np.pi / n_grid) / np.pi
    return Potential(out, n_grid, coeffs.theta)


_SQ_CACHE: dict[tuple, tuple] = {}


def _square_system(flavor: Flavor, n_gen: int, N: int, n_grid: int):
    """Square generator-augmented system: polynomial rows spanning the
    special-sequence preimage directions plus sin(jx) for j <= 2N - n_gen.
    Exactly 2N unknowns for 2N data slots, so the truncated inverse problem
    has no null directions for the fixed point to drift along; the polynomial
    rows make finite sine series plus linear parts exactly representable.
    """
    key = (flavor, n_gen, N, n_grid)
    if key not in _SQ_CACHE:
        x = np.linspace(0.0, np.pi, n_grid + 1)
        if flavor is Flavor.B:
            rows = [special_preimage(flavor, j, x) for j in range(1, n_gen + 1)]
        else:
            rows = [x**j - np.pi**j / (j + 1.0) for j in range(1, n_gen + 1)]  # mod constants
        rows += [np.sin(j * x) for j in range(1, 2 * N - n_gen + 1)]
        basis = np.stack(rows, axis=0)
        mat = np.stack([t_forward(Potential(r, n_grid, 0.0), N, flavor) for r in basis], axis=1)
        _SQ_CACHE[key] = (np.linalg.inv(mat), basis)
    return _SQ_CACHE[key]


def t_solve(raw: np.ndarray, theta: float, flavor: Flavor, n_grid: int = DEFAULT_GRID) -> Potential:
    """Resolve a plain data vector into a potential through the square
    generator-augmented system (the workhorse inverse for reconstruction)."""
    flavor = Flavor.parse(flavor)
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 1 or len(raw) % 2:
        raise ValueError("data must be a flat vector of even length 2N")
    N = len(raw) // 2
    from .seqspace import n_special

    n_gen = n_special(theta, flavor)
    inv, basis = _square_system(flavor, n_gen, N, n_grid)
    out = (inv @ raw) @ basis
    if flavor is Flavor.D:
        out = out - trapezoid(out, dx=np.pi / n_grid) / np.pi
    return Potential(out, n_grid, theta)


# ---------------------------------------------------------------------------
# derivative functionals and biorthogonal systems at a general sigma
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BasisFunctions:
    """Sampled phi_k / psi_k rows (k = 1..2N), Gram-certified biorthogonal.

    deriv_rows are the coordinate functionals of F'(sigma): (deriv_rows_k, f)
    is the k-th derivative coordinate.  newton_rows assemble one update of the
    inverse derivative: sum_k s_k newton_rows_k.  gamma stores
    rho_k * ||y_k||_L2 under the unit-quasi-slope normalization (asymptotically
    constant); normalization tags which eigenfunction scaling the rows use.
    """

    flavor: Flavor
    phi: np.ndarray
    psi: np.ndarray
    gamma: np.ndarray
    rho: np.ndarray
    deriv_rows: np.ndarray
    newton_rows: np.ndarray
    normalization: str
    step: float

    @property
    def N(self) -> int:
        return self.phi.shape[0] // 2


def _borg_basis(sigma: Potential, eigen: EigenData) -> BasisFunctions:
    rho = eigen.rho
    lams = rho**2
    y, u = trajectories(sigma, lams)
    scale = 1.0 / np.sqrt(lams)[:, None]
    y, u = y * scale, u * scale  # y^[1](0) = 1
    I = trapezoid(y * y, dx=sigma.step, axis=1)
    if np.min(np.abs(I)) < 1e-12:
        raise DegenerateDenominator("(y_k^2, 1) below 1e-12")
    yp = u + sigma.samples[None, :] * y
    phi = (2.0 / np.pi) * yp * y

    terminal = np.zeros((len(rho), 2))
    endy, endu = y[:, -1], u[:, -1]
    if np.min(np.abs(endu[1::2])) < 1e-12 or np.min(np.abs(endy[0::2])) < 1e-12:
        raise DegenerateDenominator("eigenfunction boundary value below 1e-12")
    terminal[1::2, 0] = 1.0 / (I[1::2] * endu[1::2])  # Dirichlet rows: w^[1](pi) = 0
    terminal[0::2, 1] = -1.0 / (I[0::2] * endy[0::2])  # DN rows: w(pi) = 0
    wy, _ = trajectories_backward(sigma, lams, terminal)

    psi = 2.0 * np.pi * y * wy
    deriv = -(yp * y) / (rho * I)[:, None]
    newton = -(2.0 / np.pi) * (rho * I)[:, None] * psi
    return BasisFunctions(
        Flavor.B, phi, psi, rho * np.sqrt(I), rho, deriv, newton, "quasi_slope_unit", sigma.step
    )


def _dirichlet_basis(sigma: Potential, eigen: EigenData) -> BasisFunctions:
    lam = eigen.lam
    alpha = eigen.alpha
    N = eigen.N
    y, u = trajectories(sigma, lam)  # y^[1](0) = sqrt(lambda)
    yp = u + sigma.samples[None, :] * y
    dl = LAMBDA_FD_STEP * (1.0 + lam)

    yps, _ = trajectories(sigma, lam + dl)
    yms, _ = trajectories(sigma, lam - dl)
    dy2 = (yps**2 - yms**2) / (2.0 * dl)[:, None]

    def z_product(shift: np.ndarray) -> np.ndarray:
        ls = lam + shift
        zy, zu = trajectories_backward(sigma, ls, np.tile([0.0, -1.0], (N, 1)))
        nrm = trapezoid(zy * zy, dx=sigma.step, axis=1)
        a = 1.0 / np.sqrt(ls * nrm)  # enforce integral z^2 = 1/lambda
        zy, zu = zy * a[:, None], zu * a[:, None]
        return zy * (zu + sigma.samples[None, :] * zy)

    dzz = (z_product(dl) - z_product(-dl)) / (2.0 * dl)[:, None]

    n_pts = sigma.n_grid + 1
    phi = np.empty((2 * N, n_pts))
    psi = np.empty((2 * N, n_pts))
    phi[1::2] = -(yp * y) / (alpha * np.sqrt(lam))[:, None]
    phi[0::2] = (2.0 * alpha * lam)[:, None] * dzz
    psi[0::2] = (2.0 / alpha**2)[:, None] * (y * y)
    psi[1::2] = -(4.0 * np.sqrt(lam) / alpha)[:, None] * dy2
    # quotient space representatives: zero mean
    psi -= trapezoid(psi, dx=sigma.step, axis=1)[:, None] / np.pi

    rho = eigen.rho
    gamma = np.sqrt(np.repeat(alpha, 2))  # rho_k ||y_k/sqrt(lam)|| = sqrt(alpha_k)
    return BasisFunctions(
        Flavor.D, phi, psi, gamma, rho, phi.copy(), psi.copy(), "quasi_slope_sqrt_lambda", sigma.step
    )


def build_basis(sigma: Potential, eigen: EigenData, flavor: Flavor | None = None) -> BasisFunctions:
    """phi_k, psi_k, and derivative/Newton rows at sigma, for k = 1..2N."""
    flavor = eigen.flavor if flavor is None else Flavor.parse(flavor)
    if flavor is not eigen.flavor:
        raise ValidationError(f"flavor mismatch: {flavor} vs eigen-data flavor {eigen.flavor}")
    return _borg_basis(sigma, eigen) if flavor is Flavor.B else _dirichlet_basis(sigma, eigen)


def frechet_derivative(
    sigma: Potential, eigen: EigenData, basis: BasisFunctions, f: Potential
) -> np.ndarray:
    """Directional derivative coordinates [F'(sigma)] f by quadrature."""
    if f.n_grid != sigma.n_grid:
        raise ValidationError("direction must live on the potential grid")
    return trapezoid(basis.deriv_rows * f.samples[None, :], dx=basis.step, axis=1)


def gram_matrix(basis: BasisFunctions) -> np.ndarray:
    """Gram(phi, psi); the identity up to quadrature error when all is well."""
    return trapezoid(
        basis.phi[:, None, :] * basis.psi[None, :, :], dx=basis.step, axis=2
    )


def dump_basis_csv(basis: BasisFunctions, phi_path, psi_path) -> None:
    """Matrix CSV dumps: row k, columns = grid samples."""
    np.savetxt(phi_path, basis.phi, delimiter=",", fmt="%.17g")
    np.savetxt(psi_path, basis.psi, delimiter=",", fmt="%.17g")
