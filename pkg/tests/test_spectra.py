import json

import numpy as np
import pytest
from scipy.linalg import eigh_tridiagonal

from slinv import (
    BracketFailure,
    EigenData,
    Flavor,
    InterlacingViolation,
    Potential,
    RegularizedData,
    auto_shift,
    dataset_from_json,
    dataset_to_json,
    dirichlet_neumann_spectrum,
    dirichlet_spectrum,
    eigendata,
    forward_map,
    norming_constants,
    regularize,
    shift_data,
    shift_potential,
)
from slinv.spectra import eigendata_from_regularized, shift_dirichlet_full


def fd_matrix_eigs(q_fn, count, neumann_right=False, M=3000):
    """Independent dense finite-difference oracle with Richardson extrapolation."""

    def eigs(m):
        h = np.pi / m
        if neumann_right:
            x = np.linspace(h, np.pi, m)  # include the right endpoint
            d = 2.0 / h**2 + q_fn(x)
            e = -np.ones(m - 1) / h**2
            e[-1] = -np.sqrt(2.0) / h**2  # ghost-point symmetrization
        else:
            x = np.linspace(h, np.pi - h, m - 1)
            d = 2.0 / h**2 + q_fn(x)
            e = -np.ones(m - 2) / h**2
        return eigh_tridiagonal(d, e, select="i", select_range=(0, count - 1))[0]

    c, f = eigs(M), eigs(2 * M)
    return (4.0 * f - c) / 3.0


def test_zero_potential_spectra(zero_pot):
    k = np.arange(1, 21)
    assert np.abs(dirichlet_spectrum(zero_pot, 20) - k**2).max() <= 1e-8
    assert np.abs(dirichlet_neumann_spectrum(zero_pot, 20) - (k - 0.5) ** 2).max() <= 1e-8
    assert np.abs(norming_constants(zero_pot, k[:3] ** 2) - np.pi / 2).max() <= 1e-8


def test_shifted_potential_spectra():
    p = Potential.from_function(lambda x: 3.0 * (x - np.pi), 2048)
    assert np.abs(dirichlet_spectrum(p, 3) - [4.0, 7.0, 12.0]).max() <= 1e-7
    assert np.abs(dirichlet_neumann_spectrum(p, 2) - [3.25, 5.25]).max() <= 1e-7


def test_matrix_oracle_sin(sin_pot):
    # sigma = sin x means q = cos x and sigma(pi) = 0, so the DN condition is
    # plain Neumann; mu_1(sin x) < 0, so the DN solve runs in the shifted frame
    lam = dirichlet_spectrum(sin_pot, 3)
    assert np.abs(lam - fd_matrix_eigs(np.cos, 3)).max() <= 1e-5
    shifted, c = auto_shift(sin_pot, Flavor.B)
    mu = dirichlet_neumann_spectrum(shifted, 3) - c
    assert np.abs(mu - fd_matrix_eigs(np.cos, 3, neumann_right=True)).max() <= 1e-5


def test_norming_constants_shifted_oracle():
    # direct quadrature of the independently integrated eigenfunction
    from scipy.integrate import solve_ivp, trapezoid

    def alphas(n_grid):
        p = Potential.from_function(lambda x: 3.0 * (x - np.pi), n_grid)
        lam = dirichlet_spectrum(p, 3)
        return lam, norming_constants(p, lam)

    def oracle(lk):
        sol = solve_ivp(
            lambda x, v: [v[1], (3.0 - lk) * v[0]],  # q = sigma' = 3
            [0, np.pi], [0.0, np.sqrt(lk)], rtol=1e-12, atol=1e-13, dense_output=True,
        )
        xs = np.linspace(0, np.pi, 8001)
        return trapezoid(sol.sol(xs)[0] ** 2, xs)

    lam, coarse = alphas(2048)
    want = np.array([oracle(lk) for lk in lam])
    assert np.abs(coarse - want).max() <= 5e-5  # trajectory quadrature is O(h^2)
    _, fine = alphas(8192)
    assert np.abs(fine - want).max() <= 5e-6


def test_interlacing_asserted(zero_pot):
    eig = eigendata(zero_pot, Flavor.B, 8)
    merged = np.empty(16)
    merged[0::2], merged[1::2] = eig.mu, eig.lam
    assert np.all(np.diff(merged) > 0)
    with pytest.raises(InterlacingViolation):
        EigenData(Flavor.B, np.array([1.0, 4.0]), 2, mu=np.array([2.0, 6.0]))


def test_regularize_zero(zero_pot):
    for flavor in (Flavor.B, Flavor.D):
        _, data = forward_map(zero_pot, flavor, 8)
        assert np.abs(data.s).max() <= 1e-9


def test_regularize_closed_form():
    k = np.arange(1, 5)
    eig = EigenData(Flavor.D, (k**2 + 3.0), 4, alpha=np.full(4, np.pi / 2))
    s = regularize(eig).s
    assert s[1] == pytest.approx(1.0)  # s_2 = sqrt(4) - 1... slot for k = 1: sqrt(1+3)-1
    assert s[3] == pytest.approx(np.sqrt(7.0) - 2.0)
    assert np.abs(s[0::2]).max() == 0.0


def test_shift_data_closed_form(zero_pot):
    eig, data = forward_map(zero_pot, Flavor.B, 4)
    shifted = shift_data(data, eig, 3.0)
    assert shifted.s[0] == pytest.approx(np.sqrt(3.25) - 0.5, abs=1e-9)
    assert shifted.s[1] == pytest.approx(1.0, abs=1e-9)
    same = shift_data(data, eig, 0.0)
    assert np.array_equal(same.s, data.s)


def test_shift_data_consistency_borg(small_sin_pot):
    sig, c0 = auto_shift(small_sin_pot, Flavor.B)
    eig, data = forward_map(sig, Flavor.B, 8)
    shifted = shift_data(data, eig, 1.5)
    _, direct = forward_map(shift_potential(sig, 1.5), Flavor.B, 8)
    assert np.abs(shifted.s - direct.s).max() <= 1e-6


def test_shift_data_dirichlet_even_slots_and_alpha_covariance(small_sin_pot):
    eig, data = forward_map(small_sin_pot, Flavor.D, 8)
    shifted = shift_data(data, eig, 1.5)
    _, direct = forward_map(shift_potential(small_sin_pot, 1.5), Flavor.D, 8)
    # eigenvalue slots shift exactly; alphas are kept by convention, while the
    # true covariance rescales them by (1 + c/lambda)
    assert np.abs(shifted.s[1::2] - direct.s[1::2]).max() <= 1e-6
    full = shift_dirichlet_full(eig, 1.5)
    assert np.abs(full.alpha - (direct.s[0::2] + np.pi / 2)).max() <= 5e-5


def test_auto_shift_examples(zero_pot, sin_pot):
    _, c = auto_shift(zero_pot, Flavor.B)
    assert c == 0.0
    p = Potential.from_function(lambda x: -3.0 * (x - np.pi), 2048)
    shifted, c = auto_shift(p, Flavor.B)
    assert c == pytest.approx(3.0, abs=1e-8)
    assert dirichlet_neumann_spectrum(shifted, 1)[0] >= 0.25 - 1e-8
    shifted, c = auto_shift(sin_pot, Flavor.B)
    assert dirichlet_neumann_spectrum(shifted, 1)[0] >= 0.25 - 1e-8


def test_unshifted_operator_raises():
    p = Potential.from_function(lambda x: -3.0 * (x - np.pi), 2048)
    with pytest.raises(BracketFailure):
        dirichlet_spectrum(p, 3)


def test_forward_is_deterministic(small_sin_pot):
    sig, _ = auto_shift(small_sin_pot, Flavor.B)
    _, d1 = forward_map(sig, Flavor.B, 16)
    _, d2 = forward_map(sig, Flavor.B, 16)
    assert np.array_equal(d1.s, d2.s)


def test_tail_is_square_summable(small_sin_pot):
    sig, _ = auto_shift(small_sin_pot, Flavor.B)
    _, d32 = forward_map(sig, Flavor.B, 32)
    head = np.sum(d32.s[:32] ** 2)
    tail = np.sum(d32.s[32:] ** 2)
    assert tail <= 0.05 * head  # decreasing tail contribution as N grows


def test_dataset_json_round_trip(tmp_path, zero_pot):
    eig, data = forward_map(zero_pot, Flavor.D, 6)
    path = tmp_path / "d.json"
    dataset_to_json(path, eig, data)
    doc = json.loads(path.read_text())
    assert set(doc) == {"flavor", "N", "s", "lambda", "alpha"}
    eig2, data2 = dataset_from_json(path)
    assert np.array_equal(eig2.lam, eig.lam)
    assert np.array_equal(data2.s, data.s)


def test_eigendata_from_regularized_inverse(zero_pot):
    eig, data = forward_map(zero_pot, Flavor.B, 6)
    back = eigendata_from_regularized(data)
    assert np.abs(back.lam - eig.lam).max() <= 1e-8
    assert np.abs(back.mu - eig.mu).max() <= 1e-8


def test_validation_errors():
    with pytest.raises(Exception):
        EigenData(Flavor.D, np.array([4.0, 1.0]), 2, alpha=np.ones(2))  # not increasing
    with pytest.raises(Exception):
        EigenData(Flavor.D, np.array([1.0, 4.0]), 2, alpha=np.array([1.0, -2.0]))  # alpha <= 0
    with pytest.raises(Exception):
        RegularizedData(np.array([np.inf, 0.0]), Flavor.B, 1)
