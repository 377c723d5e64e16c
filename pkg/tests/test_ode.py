import numpy as np
import pytest

from slinv import IntegrationOverflow, NonPositiveLambda, Potential, boundary_functionals, integrate
from slinv.ode import boundary_values, boundary_values_general, trajectories, trajectories_backward


def test_zero_potential_explicit_solutions(zero_pot):
    sol = integrate(zero_pot, 1.0)
    assert abs(sol.y[-1]) <= 1e-12
    assert sol.u[-1] == pytest.approx(-1.0, abs=1e-12)
    # y(x) = sin(sqrt(lam) x) along the whole trajectory
    assert np.abs(sol.y - np.sin(zero_pot.x)).max() <= 5e-14

    sol = integrate(zero_pot, 2.25)
    assert sol.y[-1] == pytest.approx(-1.0, abs=1e-12)
    assert abs(sol.u[-1]) <= 1e-12


def test_boundary_functionals_quarter(zero_pot):
    y_pi, u_pi = boundary_functionals(zero_pot, 0.25)
    assert y_pi == pytest.approx(1.0, abs=1e-12)
    assert abs(u_pi) <= 1e-12


def test_initial_conditions(zero_pot, sin_pot):
    for pot, lam in ((zero_pot, 2.0), (sin_pot, 5.5)):
        sol = integrate(pot, lam)
        assert sol.y[0] == 0.0
        assert sol.u[0] == pytest.approx(np.sqrt(lam))


def test_second_order_convergence():
    # plain (un-extrapolated) boundary values converge at order 2 on smooth sigma
    ref = boundary_values(Potential.from_function(np.sin, 16384), [2.0], richardson=False)[0][0]
    errs = []
    for n in (512, 1024, 2048):
        val = boundary_values(Potential.from_function(np.sin, n), [2.0], richardson=False)[0][0]
        errs.append(abs(val - ref))
    assert errs[0] / errs[1] >= 3.5
    assert errs[1] / errs[2] >= 3.5


def test_step_halving_self_oracle(sin_pot):
    # extrapolated value must sit far inside the plain-solve error band
    plain = boundary_values(sin_pot, [1.0], richardson=False)[0][0]
    rich = boundary_values(sin_pot, [1.0], richardson=True)[0][0]
    ref = boundary_values(Potential.from_function(np.sin, 16384), [1.0])[0][0]
    assert abs(rich - ref) < 1e-2 * abs(plain - ref)


def test_wronskian_drift(zero_pot):
    sol = integrate(zero_pot, 4.0)
    h = zero_pot.step
    dy = np.gradient(sol.y, h)
    du = np.gradient(sol.u, h)
    w = sol.y * du - sol.u * dy
    interior = w[2:-2]
    assert np.abs(interior - interior[0]).max() <= 1e-3


def test_shift_covariance_normalized():
    # bf(sigma + c(x-pi), lam + c) equals bf(sigma, lam) after sqrt(lam) normalization
    sig = Potential.from_function(np.sin, 2048)
    c, lam = 3.0, 2.0
    shifted = Potential.from_function(lambda x: np.sin(x) + c * (x - np.pi), 2048)
    y1, u1 = boundary_functionals(sig, lam)
    y2, u2 = boundary_functionals(shifted, lam + c)
    s1, s2 = np.sqrt(lam), np.sqrt(lam + c)
    assert y2 / s2 == pytest.approx(y1 / s1, abs=1e-9)
    assert u2 / s2 == pytest.approx(u1 / s1, abs=1e-9)


def test_shift_pairing_at_eigenvalue():
    shifted = Potential.from_function(lambda x: 3.0 * (x - np.pi), 2048)
    y_pi, _ = boundary_functionals(shifted, 4.0)  # lambda_1 of the shifted operator
    assert abs(y_pi) <= 1e-7


def test_rejects_nonpositive_lambda(zero_pot):
    with pytest.raises(NonPositiveLambda):
        integrate(zero_pot, 0.0)
    with pytest.raises(NonPositiveLambda):
        boundary_functionals(zero_pot, -1.0)


@pytest.mark.filterwarnings("ignore:overflow:RuntimeWarning")
@pytest.mark.filterwarnings("ignore:invalid value:RuntimeWarning")
def test_integration_overflow():
    huge = Potential.from_function(lambda x: 1e80 * np.sin(x), 256)
    with pytest.raises(IntegrationOverflow):
        integrate(huge, 1.0)


def test_backward_solve_matches_forward(sin_pot):
    lam = np.array([3.3])
    y, u = trajectories(sin_pot, lam)
    yb, ub = trajectories_backward(sin_pot, lam, np.array([[y[0, -1], u[0, -1]]]))
    assert np.abs(yb - y).max() <= 1e-9
    assert np.abs(ub - u).max() <= 1e-9


def test_general_lambda_functional_signs(zero_pot):
    # zeros agree with the normalized functional for lam > 0 and extend below zero
    y, _u = boundary_values_general(zero_pot, [1.0])
    assert abs(y[0]) <= 1e-12
    y_neg, u_neg = boundary_values_general(zero_pot, [-1.0])
    assert y_neg[0] > 0 and u_neg[0] > 0  # sinh-type growth, no zeros below 0
