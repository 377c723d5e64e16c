"""Command-line interface: forward/inverse spectral runs and experiment drivers.

Exit codes: 0 success, 2 validation failure (admissibility violation,
interlacing break, bad inputs), 3 convergence failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import SlinvError
from .harness import SweepConfig, omega_image_check, stability_sweep
from .inverse import ReconstructOptions, build_from_data, perturb_eigenvalue, perturb_norming, reconstruct
from .linearized import build_basis, dump_basis_csv, gram_matrix
from .potential import Potential
from .seqspace import Flavor, omega_membership
from .spectra import RegularizedData, dataset_from_json, dataset_to_json, eigendata, forward_map


def _cmd_forward(args) -> int:
    sigma = Potential.from_csv(args.sigma)
    eigen, data = forward_map(sigma, Flavor.parse(args.flavor), args.n)
    dataset_to_json(args.out, eigen, data)
    print(f"wrote {args.out}: flavor={data.flavor.value} N={data.N} |s|_2={np.linalg.norm(data.s):.6g}")
    return 0


def _cmd_invert(args) -> int:
    _eigen, data = dataset_from_json(args.data)
    opts = ReconstructOptions(tol=args.tol, max_iter=args.max_iter, n_grid=args.n_grid)
    result = reconstruct(data, args.theta, opts)
    result.sigma.to_csv(args.out)
    print(
        f"wrote {args.out}: iterations={result.iterations} residual={result.residual_norm:.3e} "
        f"shift={result.shift_used:.6g}"
    )
    return 0


def _cmd_perturb(args) -> int:
    sigma = Potential.from_csv(args.sigma)
    eigen = eigendata(sigma, Flavor.D, args.n)
    if args.kind == "eigenvalue":
        out = perturb_eigenvalue(sigma, eigen, args.index, args.t)
    else:
        out = perturb_norming(sigma, eigen, args.index, args.t)
    out.to_csv(args.out)
    print(f"wrote {args.out}: {args.kind} #{args.index} moved by {args.t}")
    return 0


def _cmd_stability(args) -> int:
    config = SweepConfig.from_dict(json.loads(Path(args.config).read_text()))
    report = stability_sweep(config)
    report.to_json(args.out)
    csv_path = Path(args.out).with_suffix(".csv")
    report.to_csv(csv_path)
    worst = max(c["ratio_max"] / c["ratio_min"] for c in report.cells)
    print(f"wrote {args.out} and {csv_path}: {len(report.cells)} cells, worst band {worst:.3g}")
    return 0


def _cmd_basis_check(args) -> int:
    sigma = Potential.from_csv(args.sigma)
    eigen = eigendata(sigma, Flavor.parse(args.flavor), args.n)
    basis = build_basis(sigma, eigen)
    gram = gram_matrix(basis)
    np.savetxt(args.out, gram, delimiter=",", fmt="%.17g")
    if args.dump_dir:
        d = Path(args.dump_dir)
        d.mkdir(parents=True, exist_ok=True)
        dump_basis_csv(basis, d / "phi.csv", d / "psi.csv")
    dev = float(np.abs(gram - np.eye(len(gram))).max())
    print(f"wrote {args.out}: max |Gram - I| = {dev:.3e}")
    return 0


def _cmd_omega_check(args) -> int:
    _eigen, data = dataset_from_json(args.data)
    ok, diag = omega_membership(data, args.r, args.h, args.theta)
    print(
        f"member={ok} h*={diag.h_star:.6g} norm={diag.norm_value:.6g} "
        f"binding={diag.binding_kind}@{diag.binding_index}"
    )
    return 0 if ok else 2


def _cmd_omega_image(args) -> int:
    doc = omega_image_check(
        Flavor.parse(args.flavor), theta=args.theta, samples=args.samples, seed=args.seed
    )
    Path(args.out).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
    print(f"wrote {args.out}")
    return 0


def _cmd_build_from_data(args) -> int:
    doc = json.loads(Path(args.config).read_text())
    data = RegularizedData(np.asarray(doc["s"], dtype=float), Flavor.parse(doc["flavor"]), int(doc["N"]))
    opts = ReconstructOptions(
        tol=float(doc.get("tol", 1e-7)),
        max_iter=int(doc.get("max_iter", 200)),
        n_grid=int(doc.get("n_grid", 2048)),
    )
    result = build_from_data(data, float(doc["theta"]), opts)
    result.sigma.to_csv(args.out)
    print(f"wrote {args.out}: steps={result.iterations} residual={result.residual_norm:.3e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="slinv", description=__doc__)
    p.add_argument("--version", action="version", version=f"slinv {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("forward", help="spectra + regularized data of a potential")
    f.add_argument("--sigma", required=True)
    f.add_argument("--flavor", required=True, choices=["borg", "dirichlet"])
    f.add_argument("--n", type=int, default=64)
    f.add_argument("--out", required=True)
    f.set_defaults(func=_cmd_forward)

    i = sub.add_parser("invert", help="reconstruct sigma from regularized data")
    i.add_argument("--data", required=True)
    i.add_argument("--theta", type=float, default=1.0)
    i.add_argument("--tol", type=float, default=1e-7)
    i.add_argument("--max-iter", type=int, default=200)
    i.add_argument("--n-grid", type=int, default=2048)
    i.add_argument("--out", required=True)
    i.set_defaults(func=_cmd_invert)

    t = sub.add_parser("perturb", help="move one eigenvalue or norming constant")
    t.add_argument("--sigma", required=True)
    t.add_argument("--kind", required=True, choices=["eigenvalue", "norming"])
    t.add_argument("--index", type=int, required=True)
    t.add_argument("--t", type=float, required=True)
    t.add_argument("--n", type=int, default=16)
    t.add_argument("--out", required=True)
    t.set_defaults(func=_cmd_perturb)

    s = sub.add_parser("stability", help="two-sided stability ratio sweep")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_stability)

    b = sub.add_parser("basis-check", help="biorthogonality Gram matrix at a potential")
    b.add_argument("--sigma", required=True)
    b.add_argument("--flavor", required=True, choices=["borg", "dirichlet"])
    b.add_argument("--n", type=int, default=16)
    b.add_argument("--out", required=True)
    b.add_argument("--dump-dir", default="")
    b.set_defaults(func=_cmd_basis_check)

    o = sub.add_parser("omega-check", help="admissible-set membership of a data file")
    o.add_argument("--data", required=True)
    o.add_argument("--r", type=float, required=True)
    o.add_argument("--h", type=float, required=True)
    o.add_argument("--theta", type=float, default=1.0)
    o.set_defaults(func=_cmd_omega_check)

    m = sub.add_parser("omega-image", help="empirical image of norm balls in data space")
    m.add_argument("--flavor", required=True, choices=["borg", "dirichlet"])
    m.add_argument("--theta", type=float, default=1.0)
    m.add_argument("--samples", type=int, default=30)
    m.add_argument("--seed", type=int, default=7)
    m.add_argument("--out", required=True)
    m.set_defaults(func=_cmd_omega_image)

    d = sub.add_parser("build-from-data", help="marching constructor from a data config")
    d.add_argument("--config", required=True)
    d.add_argument("--out", required=True)
    d.set_defaults(func=_cmd_build_from_data)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SlinvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
