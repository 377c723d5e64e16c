"""Extended weighted sequence spaces for regularized spectral data.

The plain weighted space carries the norm ||x||_theta^2 = sum |x_k|^2 k^(2theta).
Regularized data of smooth potentials does not live there: it picks up finitely
many explicit slowly-decaying directions, so the space is extended by special
sequences (two families, one per problem flavor) and the norm is the orthogonal
sum of the weighted tail norm and the Euclidean norm of the special
coefficients.

A concrete finite vector does not decide its own splitting between tail and
special part; the convention here is a weighted least-squares fit of the
special coefficients over indices k > FIT_HEAD (the head is excluded so the
fit keys on decay rates, not low-index irregularities).  The split is exact on
exact finite combinations and is a projection by the normal equations.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import IllConditionedFit

if TYPE_CHECKING:
    from .spectra import RegularizedData

FIT_HEAD = 8
COND_LIMIT = 1e12


class Flavor(str, enum.Enum):
    """Which inverse problem the data belongs to."""

    B = "borg"
    D = "dirichlet"

    @classmethod
    def parse(cls, value) -> "Flavor":
        if isinstance(value, cls):
            return value
        v = str(value).strip().lower()
        if v in ("b", "borg"):
            return cls.B
        if v in ("d", "dirichlet"):
            return cls.D
        raise ValueError(f"unknown flavor {value!r}")


def m_of_theta(theta: float, flavor: Flavor) -> int:
    """Number index m of the special-subspace: floor(theta/2 + 3/4) for B,
    the unique m with m - 1/2 <= theta < m + 1/2 for D."""
    if theta < 0:
        raise ValueError(f"theta must be >= 0, got {theta}")
    if Flavor.parse(flavor) is Flavor.B:
        return int(math.floor(theta / 2.0 + 0.75))
    return int(math.floor(theta + 0.5))


def n_special(theta: float, flavor: Flavor) -> int:
    """Count of special sequences: 2m for B, m for D."""
    m = m_of_theta(theta, flavor)
    return 2 * m if Flavor.parse(flavor) is Flavor.B else m


def special_sequence(flavor: Flavor, j: int, length: int) -> np.ndarray:
    """First `length` entries of the j-th special sequence (1-based j and k).

    B: e_{2s-1} = {k^-(2s-1)},  e_{2s} = {(-1)^k k^-(2s-1)}.
    D: e^_{2s-1} = {0, 2^-(2s-1), 0, 4^-(2s-1), ...},
       e^_{2s}   = {2^-2s, 0, 4^-2s, 0, ...}.
    """
    if j < 1:
        raise ValueError(f"special sequence index must be >= 1, got {j}")
    k = np.arange(1, length + 1, dtype=float)
    s = (j + 1) // 2
    if Flavor.parse(flavor) is Flavor.B:
        base = k ** (-(2 * s - 1))
        return base if j % 2 else ((-1.0) ** np.arange(1, length + 1)) * base
    out = np.zeros(length)
    if j % 2:  # nonzero on even positions k = 2, 4, ...
        even = np.arange(2, length + 1, 2, dtype=float)
        out[1::2] = even ** (-(2 * s - 1))
    else:  # nonzero on odd positions, values 2^-2s, 4^-2s, ...
        vals = np.arange(2, length + 2, 2, dtype=float)[: (length + 1) // 2]
        out[0::2] = vals ** (-2 * s)
    return out


@dataclass(frozen=True)
class ExtSeq:
    """Element of an extended space: truncated weighted-l2 tail plus special coefficients."""

    tail: np.ndarray
    special: np.ndarray
    theta: float
    flavor: Flavor
    N: int

    def __post_init__(self):
        object.__setattr__(self, "tail", np.asarray(self.tail, dtype=float))
        object.__setattr__(self, "special", np.asarray(self.special, dtype=float))
        object.__setattr__(self, "flavor", Flavor.parse(self.flavor))
        if len(self.tail) != 2 * self.N:
            raise ValueError(f"tail length {len(self.tail)} != 2N = {2 * self.N}")
        want = n_special(self.theta, self.flavor)
        if len(self.special) != want:
            raise ValueError(
                f"special length {len(self.special)} != {want} for theta={self.theta}, {self.flavor}"
            )

    def raw(self) -> np.ndarray:
        """Flatten back to a plain coefficient vector (exact inverse of decompose)."""
        out = self.tail.copy()
        for j, c in enumerate(self.special, start=1):
            out += c * special_sequence(self.flavor, j, 2 * self.N)
        return out


def ext_norm(x: ExtSeq) -> float:
    """sqrt( sum tail_k^2 k^(2 theta) + sum special_j^2 )."""
    k = np.arange(1, 2 * x.N + 1, dtype=float)
    return float(np.sqrt(np.sum(x.tail**2 * k ** (2 * x.theta)) + np.sum(x.special**2)))


def decompose(raw: np.ndarray, theta: float, flavor: Flavor) -> ExtSeq:
    """Split a plain coefficient vector into special part + weighted-l2 tail.

    Least squares over indices k > FIT_HEAD under the weight k^(2 theta); the
    tail is the full-range remainder, so raw == result.raw() exactly.
    """
    flavor = Flavor.parse(flavor)
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 1 or len(raw) % 2:
        raise ValueError("raw data must be a flat vector of even length 2N")
    N2 = len(raw)
    nsp = n_special(theta, flavor)
    if nsp == 0:
        return ExtSeq(raw.copy(), np.zeros(0), theta, flavor, N2 // 2)
    if N2 < 8 * m_of_theta(theta, flavor) or N2 <= FIT_HEAD + nsp:
        raise ValueError(f"data length {N2} too short to fit {nsp} special sequences")
    E = np.stack([special_sequence(flavor, j, N2) for j in range(1, nsp + 1)], axis=1)
    k = np.arange(1, N2 + 1, dtype=float)
    w = k ** theta
    Ew = E[FIT_HEAD:] * w[FIT_HEAD:, None]
    bw = raw[FIT_HEAD:] * w[FIT_HEAD:]
    sv = np.linalg.svd(Ew, compute_uv=False)
    if sv[-1] == 0.0 or sv[0] / sv[-1] > COND_LIMIT:
        raise IllConditionedFit(
            f"special-sequence Gram condition {sv[0] / max(sv[-1], 1e-300):.2e} exceeds {COND_LIMIT:.0e}"
        )
    coeff, *_ = np.linalg.lstsq(Ew, bw, rcond=None)
    tail = raw - E @ coeff
    return ExtSeq(tail, coeff, theta, flavor, N2 // 2)


def seq_norm(raw: np.ndarray, theta: float, flavor: Flavor) -> float:
    """Extended-space norm of a plain vector (decompose, then ext_norm)."""
    return ext_norm(decompose(raw, theta, flavor))


@dataclass(frozen=True)
class OmegaResult:
    """Outcome of an admissible-set membership test."""

    is_member: bool
    h_star: float  # largest gap margin the data supports (<= cap), -inf if none
    norm_value: float
    binding_index: int  # 1-based index of the tightest constraint
    binding_kind: str  # 'first_entry' | 'gap' | 'alpha_margin' | 'norm'

    def as_dict(self) -> dict:
        return {
            "is_member": self.is_member,
            "h_star": self.h_star,
            "norm_value": self.norm_value,
            "binding_index": self.binding_index,
            "binding_kind": self.binding_kind,
        }


def omega_membership(
    data: "RegularizedData", r: float, h: float, theta: float = 1.0
) -> tuple[bool, OmegaResult]:
    """Test membership of regularized data in the admissible set Omega^theta(r, h).

    Borg: s_1 >= 0, s_k - s_{k+1} <= 1/2 - h, ||s||_theta <= r, h in (0, 1/2).
    Dirichlet: s_{2k} - s_{2k+2} <= 1 - h, s_{2k-1} >= -pi/2 + h, ||s||_theta <= r,
    h in (0, 1).  Diagnostics report the largest supportable h and the binding
    constraint.
    """
    flavor = Flavor.parse(data.flavor)
    s = np.asarray(data.s, dtype=float)
    cap = 0.5 if flavor is Flavor.B else 1.0
    if r <= 0:
        raise ValueError(f"r must be > 0, got {r}")
    if not (0.0 < h < cap):
        raise ValueError(f"h must lie in (0, {cap}) for {flavor.value}, got {h}")

    norm_value = seq_norm(s, theta, flavor)
    if flavor is Flavor.B:
        gaps = s[:-1] - s[1:]
        margins = 0.5 - gaps
        idx = int(np.argmin(margins))
        h_star = float(min(margins[idx], cap))
        binding_index, binding_kind = idx + 1, "gap"
        feasible = s[0] >= 0.0
        if not feasible:
            h_star, binding_index, binding_kind = float("-inf"), 1, "first_entry"
    else:
        even = s[1::2]
        odd = s[0::2]
        gap_margins = 1.0 - (even[:-1] - even[1:])
        alpha_margins = odd + np.pi / 2.0
        ig = int(np.argmin(gap_margins)) if len(gap_margins) else 0
        ia = int(np.argmin(alpha_margins))
        if len(gap_margins) and gap_margins[ig] <= alpha_margins[ia]:
            h_star = float(min(gap_margins[ig], cap))
            binding_index, binding_kind = ig + 1, "gap"
        else:
            h_star = float(min(alpha_margins[ia], cap))
            binding_index, binding_kind = ia + 1, "alpha_margin"
        feasible = True

    ok = feasible and (h <= h_star) and (norm_value <= r)
    if feasible and h <= h_star and norm_value > r:
        binding_index, binding_kind = 0, "norm"
    return ok, OmegaResult(ok, h_star, norm_value, binding_index, binding_kind)
