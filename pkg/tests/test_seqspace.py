import numpy as np
import pytest

import slinv.seqspace as seqspace
from slinv import (
    ExtSeq,
    Flavor,
    IllConditionedFit,
    RegularizedData,
    decompose,
    ext_norm,
    m_of_theta,
    omega_membership,
    special_sequence,
)


@pytest.mark.parametrize(
    "theta,flavor,want",
    [
        (0.25, Flavor.B, 0),
        (1.0, Flavor.B, 1),
        (1.0, Flavor.D, 1),
        (0.0, Flavor.B, 0),
        (0.0, Flavor.D, 0),
        (2.5, Flavor.B, 2),
        (0.49, Flavor.D, 0),
        (0.5, Flavor.D, 1),
        (2.0, Flavor.D, 2),
    ],
)
def test_m_of_theta(theta, flavor, want):
    assert m_of_theta(theta, flavor) == want


def test_special_sequences_printed_values():
    assert np.allclose(special_sequence(Flavor.B, 1, 4), [1, 1 / 2, 1 / 3, 1 / 4])
    assert np.allclose(special_sequence(Flavor.B, 2, 4), [-1, 1 / 2, -1 / 3, 1 / 4])
    assert np.allclose(special_sequence(Flavor.D, 1, 6), [0, 1 / 2, 0, 1 / 4, 0, 1 / 6])
    assert np.allclose(special_sequence(Flavor.D, 2, 5), [1 / 4, 0, 1 / 16, 0, 1 / 36])
    assert np.allclose(special_sequence(Flavor.B, 3, 3), [1, 1 / 8, 1 / 27])


def test_ext_norm_examples():
    one = ExtSeq(np.zeros(16), np.array([1.0, 0.0]), 1.0, Flavor.B, 8)
    assert ext_norm(one) == pytest.approx(1.0)
    tail = np.zeros(16)
    tail[1] = 1.0  # k = 2, weight 2^theta
    t = ExtSeq(tail, np.zeros(2), 1.0, Flavor.B, 8)
    assert ext_norm(t) == pytest.approx(2.0)
    mixed = ExtSeq(tail, np.array([1.0, 0.0]), 1.0, Flavor.B, 8)
    assert ext_norm(mixed) == pytest.approx(np.sqrt(5.0))


def test_norm_additivity_exact():
    rng = np.random.default_rng(0)
    tail = rng.normal(size=64)
    spec = rng.normal(size=2)
    x = ExtSeq(tail, spec, 1.0, Flavor.B, 32)
    k = np.arange(1, 65.0)
    assert ext_norm(x) ** 2 == pytest.approx(np.sum(tail**2 * k**2) + np.sum(spec**2), rel=1e-14)


def test_decompose_exact_member():
    raw = special_sequence(Flavor.B, 1, 128)
    out = decompose(raw, 1.0, Flavor.B)
    assert out.special == pytest.approx([1.0, 0.0], abs=1e-12)
    assert np.abs(out.tail).max() <= 1e-12
    assert np.array_equal(out.raw(), raw) or np.abs(out.raw() - raw).max() <= 1e-15


def test_decompose_m_zero_passthrough():
    raw = np.arange(1.0, 17.0) ** -2
    out = decompose(raw, 0.25, Flavor.B)
    assert out.special.size == 0
    assert np.array_equal(out.tail, raw)


def test_decompose_noisy_dirichlet():
    rng = np.random.default_rng(42)
    raw = 0.3 * special_sequence(Flavor.D, 1, 128)
    noise = 1e-4 * rng.normal(size=128) / np.arange(1, 129.0) ** 2
    out = decompose(raw + noise, 1.0, Flavor.D)
    assert out.special[0] == pytest.approx(0.3, abs=5e-3)


def test_decompose_is_projection():
    rng = np.random.default_rng(3)
    raw = rng.normal(size=128) / np.arange(1, 129.0) ** 2 + 0.7 * special_sequence(Flavor.B, 2, 128)
    first = decompose(raw, 1.0, Flavor.B)
    again = decompose(first.raw(), 1.0, Flavor.B)
    assert again.special == pytest.approx(first.special, abs=1e-12)
    assert np.abs(again.tail - first.tail).max() <= 1e-12


def test_embedding_norm_monotone_in_theta():
    raw = 0.5 * special_sequence(Flavor.B, 1, 128)
    raw[4] += 0.3  # plus an exact tail spike at k = 5
    norms = [ext_norm(decompose(raw, t, Flavor.B)) for t in (0.6, 1.0, 1.6)]
    assert norms[0] <= norms[1] + 1e-12 <= norms[2] + 1e-12


def test_decompose_validation():
    with pytest.raises(ValueError):
        decompose(np.zeros(7), 1.0, Flavor.B)  # odd length
    with pytest.raises(ValueError):
        decompose(np.zeros(6), 1.0, Flavor.B)  # too short for the fit window


def test_ill_conditioned_fit(monkeypatch):
    monkeypatch.setattr(seqspace, "COND_LIMIT", 1.0)
    with pytest.raises(IllConditionedFit):
        decompose(np.ones(64), 1.0, Flavor.B)


def _reg(s, flavor):
    return RegularizedData(np.asarray(s, dtype=float), flavor, len(s) // 2)


def test_omega_zero_data_borg():
    ok, diag = omega_membership(_reg(np.zeros(32), Flavor.B), 1.0, 0.1, theta=1.0)
    assert ok and diag.h_star == pytest.approx(0.5)


def test_omega_gap_violation_borg():
    s = np.zeros(32)
    s[0], s[1] = 0.2, -0.25
    ok, diag = omega_membership(_reg(s, Flavor.B), 1.0, 0.1, theta=0.0)
    assert not ok
    assert diag.binding_index == 1 and diag.binding_kind == "gap"
    assert diag.h_star == pytest.approx(0.05)


def test_omega_first_entry_borg():
    s = np.zeros(32)
    s[0] = -0.01
    ok, diag = omega_membership(_reg(s, Flavor.B), 1.0, 0.1, theta=0.0)
    assert not ok and diag.binding_kind == "first_entry"


def test_omega_alpha_margin_dirichlet():
    s = np.zeros(32)
    s[0] = -np.pi / 2 + 0.05
    ok, diag = omega_membership(_reg(s, Flavor.D), 1.0, 0.1, theta=0.0)
    assert not ok
    assert diag.binding_kind == "alpha_margin" and diag.binding_index == 1
    assert diag.h_star == pytest.approx(0.05)


def test_omega_norm_binding():
    s = np.zeros(32)
    s[3] = 0.2
    ok, diag = omega_membership(_reg(s, Flavor.B), 0.1, 0.1, theta=0.0)
    assert not ok and diag.binding_kind == "norm"
    assert diag.norm_value == pytest.approx(0.2)


def test_omega_h_validation():
    with pytest.raises(ValueError):
        omega_membership(_reg(np.zeros(32), Flavor.B), 1.0, 0.7)  # h >= 1/2 for Borg
    ok, _ = omega_membership(_reg(np.zeros(32), Flavor.D), 1.0, 0.7)  # fine for Dirichlet
    assert ok
