"""Empirical verification of the two-sided uniform stability estimates.

A sweep samples potential pairs in norm balls (forward direction) and data
pairs in the admissible sets (inverse direction, through full reconstruction)
and records the ratio ||sigma - sigma_1||_theta / ||s - s_1||_theta per pair.
Uniform stability predicts the ratios stay inside a fixed two-sided band per
(r, h) cell; the constants are reported as empirical quantiles only, never
asserted against theory.  Two stress families probe the known degradation
mechanisms: shrinking gap margins (eigenvalues pushed toward collision with
the explicit transform) and growing data norm.

Reports are deterministic: the generator is seeded per sample index, parallel
workers (capped by SLINV_THREADS) write into index slots, and the JSON/CSV
emission is canonical.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import SlinvError
from .inverse import ReconstructOptions, perturb_eigenvalue, reconstruct
from .linearized import t_forward
from .potential import Potential, sobolev_norm
from .seqspace import Flavor, omega_membership, seq_norm
from .spectra import BORG_FLOOR, DIRICHLET_FLOOR, auto_shift, eigendata, forward_map, regularize

ZERO_DIST = 1e-12


@dataclass(frozen=True)
class SweepCell:
    r: float
    h: float
    R: float | None = None  # forward-direction ball radius; defaults to r

    @property
    def ball_radius(self) -> float:
        return self.r if self.R is None else self.R


@dataclass(frozen=True)
class SweepConfig:
    flavor: Flavor = Flavor.B
    theta: float = 1.0
    N: int = 32
    n_grid: int = 1024
    seed: int = 20240
    samples: int = 50
    cells: tuple[SweepCell, ...] = (SweepCell(1.0, 0.1),)
    corpus_j: int = 16
    tol: float = 1e-6
    max_iter: int = 200
    include_families: bool = True

    def __post_init__(self):
        object.__setattr__(self, "flavor", Flavor.parse(self.flavor))
        if self.theta <= 0:
            raise ValueError("stability sweeps need theta > 0 (theta = 0 is excluded)")
        if not self.cells:
            raise ValueError("at least one (r, h) cell required")

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepConfig":
        doc = dict(doc)
        cells = tuple(SweepCell(**c) for c in doc.pop("cells", [{"r": 1.0, "h": 0.1}]))
        return cls(cells=cells, **doc)

    def canonical(self) -> dict:
        doc = asdict(self)
        doc["flavor"] = self.flavor.value
        doc["cells"] = [asdict(c) for c in self.cells]
        return doc


def config_hash(doc: dict) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class StabilityReport:
    flavor: Flavor
    theta: float
    N: int
    corpus_seed: int
    cells: list[dict]
    families: dict
    config: dict
    rows: list[dict] = field(default_factory=list)  # per-pair records for CSV

    def __post_init__(self):
        if not self.cells:
            raise ValueError("report must contain at least one cell")
        for c in self.cells:
            if not (c["ratio_min"] > 0 and np.isfinite(c["ratio_max"])):
                raise ValueError(f"degenerate ratio band in cell {c}")

    def to_dict(self) -> dict:
        return {
            "flavor": self.flavor.value,
            "theta": self.theta,
            "N": self.N,
            "corpus_seed": self.corpus_seed,
            "config": self.config,
            "config_hash": config_hash(self.config),
            "cells": self.cells,
            "families": self.families,
        }

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n")

    def to_csv(self, path: str | Path) -> None:
        header = "cell,r,h,direction,pair,sigma_dist,data_dist,ratio"
        lines = [header]
        for row in self.rows:
            lines.append(
                f"{row['cell']},{row['r']!r},{row['h']!r},{row['direction']},"
                f"{row['pair']},{row['sigma_dist']!r},{row['data_dist']!r},{row['ratio']!r}"
            )
        Path(path).write_text("\n".join(lines) + "\n")


def _workers() -> int:
    raw = os.environ.get("SLINV_THREADS", "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        return 1


def _map_indexed(fn: Callable[[int], object], count: int) -> list:
    """Deterministic map over sample indices; thread pool only widens throughput."""
    w = _workers()
    if w == 1 or count <= 1:
        return [fn(i) for i in range(count)]
    out = [None] * count
    with ThreadPoolExecutor(max_workers=min(w, count)) as pool:
        for i, res in zip(range(count), pool.map(fn, range(count))):
            out[i] = res
    return out


def sample_potential(
    rng: np.random.Generator,
    theta: float,
    target_norm: float,
    n_grid: int,
    J: int = 16,
    linear_weight: float = 0.4,
) -> Potential:
    """Random finite sine series plus a linear part, rescaled to an exact norm.

    Coefficients fall off like j^(-theta - 1/2) so the corpus fills the
    declared smoothness ball in both the tail and special-sequence directions.
    """
    x = np.linspace(0.0, np.pi, n_grid + 1)
    j = np.arange(1, J + 1)
    a = rng.uniform(-1.0, 1.0, J) * j ** (-theta - 0.5)
    b = linear_weight * rng.uniform(-1.0, 1.0)
    samples = a @ np.sin(j[:, None] * x[None, :]) + b * (x - np.pi)
    pot = Potential(samples, n_grid, theta)
    nrm = sobolev_norm(pot, theta)
    if nrm == 0.0:
        return pot
    return pot.with_samples(pot.samples * (target_norm / nrm))


def _sigma_dist(a: Potential, b: Potential, theta: float) -> float:
    return sobolev_norm(a.with_samples(a.samples - b.samples), theta)


def _pair_shift(a: Potential, b: Potential, flavor: Flavor) -> float:
    """Shared shift putting both members of a pair on the admissible side."""
    _, ca = auto_shift(a, flavor)
    _, cb = auto_shift(b, flavor)
    return max(ca, cb)


def _stats(ratios: list[float]) -> dict:
    arr = np.asarray(ratios)
    return {
        "count": len(ratios),
        "ratio_min": float(arr.min()),
        "ratio_max": float(arr.max()),
        "ratio_median": float(np.median(arr)),
    }


def stability_sweep(config: SweepConfig) -> StabilityReport:
    """Run the two-direction ratio experiment over the configured (r, h) cells."""
    flavor, theta, N = config.flavor, config.theta, config.N
    ss = np.random.SeedSequence(config.seed)
    cell_seeds = ss.spawn(len(config.cells) + 2)
    ropts = ReconstructOptions(tol=config.tol, max_iter=config.max_iter, n_grid=config.n_grid)

    rows: list[dict] = []
    cells_out: list[dict] = []
    for ci, cell in enumerate(config.cells):
        child = cell_seeds[ci].spawn(2 * config.samples + 4 * config.samples)
        R = cell.ball_radius

        def forward_pair(i: int) -> tuple | None:
            rng = np.random.default_rng(child[2 * i])
            rng2 = np.random.default_rng(child[2 * i + 1])
            a = sample_potential(rng, theta, 0.85 * R * rng.uniform(0.05, 1.0), config.n_grid, config.corpus_j)
            d = sample_potential(rng2, theta, 0.15 * R * rng2.uniform(0.05, 1.0), config.n_grid, config.corpus_j)
            b = a.with_samples(a.samples + d.samples)
            c = _pair_shift(a, b, flavor)
            from .potential import shift_potential

            _, da = forward_map(shift_potential(a, c), flavor, N)
            _, db = forward_map(shift_potential(b, c), flavor, N)
            sd = _sigma_dist(a, b, theta)
            dd = seq_norm(da.s - db.s, theta, flavor)
            if sd < ZERO_DIST or dd < ZERO_DIST:
                return None
            return sd, dd

        fwd = _map_indexed(forward_pair, config.samples)
        excluded = sum(1 for f in fwd if f is None)
        fw_ratios = []
        for pi, f in enumerate(fwd):
            if f is None:
                continue
            sd, dd = f
            fw_ratios.append(sd / dd)
            rows.append(
                {"cell": ci, "r": cell.r, "h": cell.h, "direction": "forward",
                 "pair": pi, "sigma_dist": sd, "data_dist": dd, "ratio": sd / dd}
            )

        # inverse direction: admissible data pairs, reconstructed
        inv_seeds = cell_seeds[ci].spawn(8 * config.samples + 1)[4 * config.samples:]

        def inverse_pair(i: int) -> tuple | None:
            rng = np.random.default_rng(inv_seeds[2 * i])
            rng2 = np.random.default_rng(inv_seeds[2 * i + 1])
            members = []
            for r_i, scale in ((rng, 0.85), (rng2, 0.15)):
                amp = scale * R * r_i.uniform(0.05, 1.0)
                for _ in range(4):  # shrink until the data sits inside the cell
                    pot = sample_potential(r_i, theta, amp, config.n_grid, config.corpus_j)
                    if members:
                        pot = pot.with_samples(pot.samples + members[0][0].samples)
                    shifted, _ = auto_shift(pot, flavor)
                    _, data = forward_map(shifted, flavor, N)
                    ok, _diag = omega_membership(data, cell.r, cell.h, theta)
                    if ok:
                        members.append((pot, data))
                        break
                    amp *= 0.5
                else:
                    return None
            (p1, d1), (p2, d2) = members
            dd = seq_norm(d1.s - d2.s, theta, flavor)
            if dd < ZERO_DIST:
                return None
            try:
                r1 = reconstruct(d1, theta, ropts)
                r2 = reconstruct(d2, theta, ropts)
            except SlinvError:
                return ("failed",)
            sd = _sigma_dist(r1.sigma, r2.sigma, theta)
            if sd < ZERO_DIST:
                return None
            return sd, dd

        inv = _map_indexed(inverse_pair, config.samples)
        inv_excluded = sum(1 for f in inv if f is None or (len(f) == 1))
        inv_ratios = []
        for pi, f in enumerate(inv):
            if f is None or len(f) == 1:
                continue
            sd, dd = f
            inv_ratios.append(sd / dd)
            rows.append(
                {"cell": ci, "r": cell.r, "h": cell.h, "direction": "inverse",
                 "pair": pi, "sigma_dist": sd, "data_dist": dd, "ratio": sd / dd}
            )

        all_ratios = fw_ratios + inv_ratios
        cells_out.append(
            {
                "r": cell.r, "h": cell.h, "R": R,
                "samples": len(all_ratios),
                "excluded": excluded + inv_excluded,
                **_stats(all_ratios),
                "forward": _stats(fw_ratios) if fw_ratios else {},
                "inverse": _stats(inv_ratios) if inv_ratios else {},
            }
        )

    families: dict = {}
    if config.include_families:
        families["near_zero"] = _near_zero_family(config, cell_seeds[-2], rows)
        families["near_collision"] = _near_collision_family(config, cell_seeds[-1], rows)

    return StabilityReport(
        flavor, theta, N, config.seed, cells_out, families, config.canonical(), rows
    )


def _near_zero_family(config: SweepConfig, seed: np.random.SeedSequence, rows: list) -> dict:
    """Small-amplitude pairs: ratios must hug the linearized value."""
    count = max(6, config.samples // 4)
    child = seed.spawn(2 * count)
    flavor, theta = config.flavor, config.theta
    out = []
    for i in range(count):
        rng = np.random.default_rng(child[2 * i])
        rng2 = np.random.default_rng(child[2 * i + 1])
        a = sample_potential(rng, theta, 0.08 * rng.uniform(0.2, 1.0), config.n_grid, config.corpus_j)
        d = sample_potential(rng2, theta, 0.02 * rng2.uniform(0.2, 1.0), config.n_grid, config.corpus_j)
        b = a.with_samples(a.samples + d.samples)
        c = _pair_shift(a, b, flavor)
        from .potential import shift_potential

        _, da = forward_map(shift_potential(a, c), flavor, config.N)
        _, db = forward_map(shift_potential(b, c), flavor, config.N)
        sd = _sigma_dist(a, b, theta)
        dd = seq_norm(da.s - db.s, theta, flavor)
        lin = seq_norm(t_forward(a.with_samples(a.samples - b.samples), config.N, flavor), theta, flavor)
        if min(sd, dd, lin) < ZERO_DIST:
            continue
        ratio = sd / dd
        out.append({"ratio": ratio, "linearized": sd / lin, "factor": ratio / (sd / lin)})
        rows.append({"cell": -1, "r": 0.0, "h": 0.0, "direction": "near_zero",
                     "pair": i, "sigma_dist": sd, "data_dist": dd, "ratio": ratio})
    factors = [o["factor"] for o in out]
    return {
        "count": len(out),
        "max_factor_vs_linearized": float(np.max(factors)),
        "min_factor_vs_linearized": float(np.min(factors)),
        **_stats([o["ratio"] for o in out]),
    }


def _near_collision_family(config: SweepConfig, seed: np.random.SeedSequence, rows: list) -> dict:
    """Pairs built by driving one eigenvalue toward its neighbor (h -> 0)."""
    rng = np.random.default_rng(seed)
    flavor, theta = config.flavor, config.theta
    base = sample_potential(rng, theta, 0.3, config.n_grid, config.corpus_j)
    base, _ = auto_shift(base, Flavor.D, floor=DIRICHLET_FLOOR)
    eig = eigendata(base, Flavor.D, max(4, min(config.N, 8)))
    gap = eig.lam[1] - eig.lam[0]
    pots = []
    c_shared = 0.0
    for frac in (0.3, 0.65, 0.85, 0.92):
        try:
            pot = perturb_eigenvalue(base, eig, 1, frac * gap)
            _, c = auto_shift(pot, flavor)
        except SlinvError:
            continue
        if c > 120.0:  # deeper members need frame shifts the solver cannot enumerate reliably
            break
        pots.append(pot)
        c_shared = max(c_shared, c)
    # one shared frame: data differences across members must be comparable
    members = []
    from .potential import shift_potential

    for pot in pots:
        try:
            _, data = forward_map(shift_potential(pot, c_shared), flavor, config.N)
        except SlinvError:
            continue
        members.append((pot, data))
    ratios = []
    h_stars = []
    for i in range(len(members) - 1):
        (p1, d1), (p2, d2) = members[i], members[i + 1]
        sd = _sigma_dist(p1, p2, theta)
        dd = seq_norm(d1.s - d2.s, theta, flavor)
        if min(sd, dd) < ZERO_DIST:
            continue
        ratios.append(sd / dd)
        _ok, diag = omega_membership(d2, 1e6, 1e-6 if flavor is Flavor.D else 1e-6, theta)
        h_stars.append(diag.h_star)
        rows.append({"cell": -2, "r": 0.0, "h": 0.0, "direction": "near_collision",
                     "pair": i, "sigma_dist": sd, "data_dist": dd, "ratio": sd / dd})
    return {
        "h_star_trend": h_stars,
        "spread": float(np.max(ratios) / np.min(ratios)),
        **_stats(ratios),
    }


# ---------------------------------------------------------------------------
# admissible-image checks
# ---------------------------------------------------------------------------

def omega_image_check(
    flavor: Flavor,
    theta: float = 1.0,
    radii: tuple[float, ...] = (0.5, 1.0, 2.0),
    samples: int = 30,
    N: int = 32,
    n_grid: int = 1024,
    seed: int = 7,
    reconstruct_count: int = 4,
    tol: float = 1e-6,
) -> dict:
    """Empirical forward image of norm balls: h*(R) = min gap margin, r*(R) = max data norm.

    Members outside the admissible potential set (first eigenvalue below the
    floor) are rejected and counted; the reverse direction reconstructs a few
    admissible data and reports the largest preimage norm.
    """
    flavor = Flavor.parse(flavor)
    if theta <= 0:
        raise ValueError("omega image checks need theta > 0")
    ss = np.random.SeedSequence(seed)
    radius_out = []
    kept_for_reverse = []
    for R, seed_r in zip(radii, ss.spawn(len(radii))):
        child = seed_r.spawn(4 * samples)
        h_min, r_max = np.inf, 0.0
        kept = rejected = 0
        i = 0
        floor = BORG_FLOOR if flavor is Flavor.B else DIRICHLET_FLOOR
        while kept < samples and i < len(child):
            rng = np.random.default_rng(child[i])
            i += 1
            pot = sample_potential(rng, theta, R * rng.uniform(0.1, 1.0), n_grid)
            _, c = auto_shift(pot, flavor, floor=floor)
            if c > 0.0:  # not in the admissible set; count and resample
                rejected += 1
                continue
            _, data = forward_map(pot, flavor, N)
            _ok, diag = omega_membership(data, 1e9, min(1e-6, 0.499), theta)
            h_min = min(h_min, diag.h_star)
            r_max = max(r_max, diag.norm_value)
            kept += 1
            if len(kept_for_reverse) < reconstruct_count:
                kept_for_reverse.append(data)
        radius_out.append(
            {"R": R, "samples": kept, "rejected": rejected,
             "h_star_min": float(h_min), "r_star_max": float(r_max),
             "all_h_positive": bool(h_min > 0.0)}
        )

    ropts = ReconstructOptions(tol=tol, n_grid=n_grid)
    R_max = 0.0
    rec_count = 0
    for data in kept_for_reverse:
        try:
            res = reconstruct(data, theta, ropts)
        except SlinvError:
            continue
        R_max = max(R_max, sobolev_norm(res.sigma, theta))
        rec_count += 1
    doc = {
        "flavor": flavor.value,
        "theta": theta,
        "N": N,
        "seed": seed,
        "radii": radius_out,
        "reverse": {"samples": rec_count, "R_max": float(R_max)},
    }
    doc["config_hash"] = config_hash(doc)
    return doc
