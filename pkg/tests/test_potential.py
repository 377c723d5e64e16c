import numpy as np
import pytest

from slinv import Potential, shift_potential, sobolev_norm


def test_zero_norm(zero_pot):
    assert sobolev_norm(zero_pot, 1.0) == 0.0


def test_sin2x_norms():
    # (T_B sin 2x)_k = -1/2 at k = 2 only, so the norm is |1/2| * 2^theta
    p = Potential.from_function(lambda x: np.sin(2 * x), 2048)
    assert sobolev_norm(p, 0.0) == pytest.approx(0.5, abs=1e-10)
    assert sobolev_norm(p, 1.0) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("a", [-3.7, -1.0, 0.25, 2.0, 11.0])
def test_absolute_homogeneity(a):
    rng = np.random.default_rng(5)
    x = np.linspace(0, np.pi, 2049)
    samples = sum(c * np.sin((j + 1) * x) for j, c in enumerate(rng.uniform(-1, 1, 6)))
    samples += 0.3 * (x - np.pi)
    p = Potential(samples, 2048)
    base = sobolev_norm(p, 1.0)
    scaled = sobolev_norm(p.with_samples(a * p.samples), 1.0)
    assert scaled == pytest.approx(abs(a) * base, rel=1e-10)


def test_theta_monotone_on_first_coefficient():
    # only the k = 1 coefficient is nonzero: weight 1^theta, norm flat in theta
    p = Potential.from_function(np.sin, 2048)
    n05, n1, n2 = (sobolev_norm(p, t) for t in (0.5, 1.0, 2.0))
    assert n05 <= n1 + 1e-12 and n1 <= n2 + 1e-12


def test_shift_round_trip_exact():
    # grid-pointwise up to one rounding of the shift term
    p = Potential.from_function(lambda x: np.sin(3 * x), 1024)
    q = shift_potential(shift_potential(p, 2.5), -2.5)
    assert np.abs(q.samples - p.samples).max() <= 1e-14


def test_shift_values():
    p = Potential.zero(1024)
    s = shift_potential(p, 3.0)
    x = p.x
    assert np.allclose(s.samples, 3.0 * (x - np.pi), atol=0, rtol=0)


def test_csv_round_trip(tmp_path):
    p = Potential.from_function(lambda x: np.sin(x) / 3 + 0.1 * (x - np.pi), 512)
    path = tmp_path / "sigma.csv"
    p.to_csv(path)
    assert path.read_text().splitlines()[0] == "x,sigma"
    q = Potential.from_csv(path)
    assert q.n_grid == 512
    assert np.array_equal(q.samples, p.samples)


def test_invariants_rejected():
    with pytest.raises(ValueError):
        Potential(np.zeros(33), 32)  # below the resolution floor
    with pytest.raises(ValueError):
        Potential(np.zeros(66), 65)  # odd cell count
    bad = np.zeros(1025)
    bad[3] = np.nan
    with pytest.raises(ValueError):
        Potential(bad, 1024)
    with pytest.raises(ValueError):
        Potential(np.zeros(1025), 1024, theta=-0.5)
    with pytest.raises(ValueError):
        Potential(np.zeros(100), 1024)  # length mismatch
