"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.  The worker
count for sweeps is read from ``SERRINSTAB_WORKERS``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import geometry as geo
from . import harnack
from . import movingplanes as mp
from . import pde
from . import stability as st
from .config import parse_angle, parse_config, parse_h, parse_values
from .errors import CertificateFailure, NumericalError, SerrinError, ValidationError
from .geometry import DomainSpec
from .report import _clean, load_records, report, sweep_payload, write_sweep

__all__ = ["main", "build_parser"]


def _domain_from_args(args) -> DomainSpec:
    given = [x for x in (args.domain, args.ellipse, args.disk) if x is not None]
    if len(given) != 1:
        raise ValidationError("give exactly one of --domain, --ellipse, --disk")
    if args.domain is not None:
        return DomainSpec.load(args.domain)
    if args.ellipse is not None:
        a, b = parse_values(args.ellipse)
        return DomainSpec.ellipse(a, b)
    return DomainSpec.disk(float(args.disk))


def _add_domain(p):
    p.add_argument("--domain", help="domain JSON file")
    p.add_argument("--ellipse", metavar="A,B", help="axis-aligned ellipse with semi-axes A, B")
    p.add_argument("--disk", metavar="R", help="disk of radius R at the origin")


def _emit(obj, out):
    text = json.dumps(_clean(obj), indent=1, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_solve(args) -> int:
    dom = _domain_from_args(args)
    grid = pde.discretize(dom, parse_h(args.h))
    f = pde.NonlinearitySpec.parse(args.f)
    field = pde.solve_semilinear(grid, f, tol=args.tol, newton=args.newton)
    bd = field.boundary
    info = {"nonlinearity": f.label, "h": grid.h, "nodes": grid.n, "u_max": field.u_max,
            "residual": field.residual, "iterations": field.iterations,
            "seminorm": pde.seminorm_unu(bd), "min_u_nu": float(bd.u_nu.min()),
            "max_u_nu": float(bd.u_nu.max()), "flagged_u_nu": int(bd.flagged.sum())}
    if args.out:
        pde.save_field(field, args.out)
        csv_path = Path(args.out).with_suffix(".boundary.csv")
        pde.write_boundary_csv(bd, csv_path)
        info["field_file"], info["boundary_csv"] = str(args.out), str(csv_path)
    _emit(info, None)
    return 0


def cmd_movingplanes(args) -> int:
    dom = _domain_from_args(args)
    ang = parse_angle(args.omega)
    cap = mp.critical_cap(dom, geo.unit(ang), tol=args.tol)
    rec = cap.to_dict()
    rec["omega_angle"] = ang
    _emit(rec, args.out)
    return 0


def cmd_ctheta(args) -> int:
    dom = _domain_from_args(args)
    if not 0 < args.t < 0.5:
        raise ValidationError(f"t must lie in (0, 1/2), got {args.t}")
    angles = ([parse_angle(args.omega)] if args.omega
              else list(2 * math.pi * np.arange(args.directions) / args.directions))
    g = geo.summary(dom)
    out = {"t": args.t, "theta_lower_bound": mp.theta_lower_bound(g.d_Omega, g.r_Omega, args.t),
           "certificates": [], "note": "certifies the sampled directions and vertices only"}
    status = 0
    for ang in angles:
        cap = mp.critical_cap(dom, geo.unit(ang))
        try:
            cert = mp.ctheta_check(dom, cap, args.t)
            out["certificates"].append({"omega_angle": ang, **cert.to_dict()})
        except CertificateFailure as exc:
            out["certificates"].append({"omega_angle": ang, "failure": str(exc),
                                        "violating_point": list(map(float, exc.violating_point))})
            status = 3
    _emit(out, args.out)
    return status


def cmd_harnack(args) -> int:
    theta = parse_angle(args.theta)
    H = harnack.harnack_constant_harmonic(args.a, args.N)
    gamma, beta = harnack.gamma_beta(args.a, theta, H)
    K = harnack.K_constant(args.a, theta, args.xi, H)
    bound = harnack.chain_length_bound(args.a, theta, args.r0, args.xi, H)
    axis = np.zeros(args.N)
    axis[-1] = 1.0
    cone = harnack.ConeSpec(np.zeros(args.N), axis, theta)
    chain = harnack.build_chain(cone, args.r0 * axis, args.xi * axis, args.a, H)
    rows = [("a", args.a), ("N", args.N), ("H_a", H), ("beta", beta), ("gamma", gamma),
            ("gamma_torsion", harnack.gamma_torsion(args.a, theta, args.N)), ("K", K),
            ("n", chain.n), ("bound", bound)]
    for k, v in rows:
        print(f"{k:<14}{v:.12g}" if isinstance(v, float) else f"{k:<14}{v}")
    return 0


def _family_from_args(args, cfg):
    if args.config:
        fam = cfg.family or st.FamilySpec("ellipse", (1.01, 1.02, 1.05, 1.1, 1.2))
        return st.FamilySpec(fam.kind, tuple(fam.values), fam.b, fam.a, tuple(fam.center))
    kind = args.family
    if kind == "eigen":
        values = parse_values(args.n)
    elif kind == "ball":
        values = parse_values(args.r)
    else:
        values = parse_values(args.a)
    return st.FamilySpec(kind, values, b=args.b, a=args.base_a)


def cmd_sweep(args) -> int:
    cfg = parse_config(args.config) if args.config else None
    family = _family_from_args(args, cfg)
    h = cfg.h if cfg else parse_h(args.h)
    seed = cfg.seed if cfg else args.seed
    t = cfg.t if cfg else args.t
    a = cfg.a if cfg else 0.5
    eta = cfg.eta if cfg else args.eta
    result = st.run_family(family, h, t=t, a=a, seed=seed)
    payload = sweep_payload(result, h, seed, eta)
    out = Path(args.out)
    if cfg and not out.is_absolute():
        out = Path(cfg.output_dir) / out
    out.parent.mkdir(parents=True, exist_ok=True)
    paths = write_sweep(payload, out, figure=None if args.no_plot else args.format)
    sys.stdout.write(Path(paths["summary"]).read_text())
    return 3 if any(r.excluded and any(f.startswith("pipeline_failed") for f in r.flags)
                    for r in result.records) else 0


def cmd_report(args) -> int:
    payload = load_records(args.records)
    out = Path(args.out) if args.out else Path(args.records).with_suffix("").with_suffix(".csv")
    paths = report(payload, out, figure=args.format)
    sys.stdout.write(Path(paths["summary"]).read_text())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="serrinstab",
                                description="Moving planes, Harnack chains and stability sweeps "
                                            "for the overdetermined torsion-type problem.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve Delta u + f(u) = 0 on a grid")
    _add_domain(s)
    s.add_argument("--f", default="torsion", help="torsion | linear:MU")
    s.add_argument("--h", default="1/128", help="grid spacing, e.g. 1/128")
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--newton", action="store_true")
    s.add_argument("--out", help="binary field file; a boundary CSV is written beside it")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("movingplanes", help="critical cap for one direction (JSON)")
    _add_domain(s)
    s.add_argument("--omega", required=True, help="direction angle, e.g. 30deg")
    s.add_argument("--tol", type=float, default=None, help="lambda tolerance (default 1e-6 d)")
    s.add_argument("--out")
    s.set_defaults(func=cmd_movingplanes)

    s = sub.add_parser("ctheta", help="cone certificate on maximal caps (JSON)")
    _add_domain(s)
    s.add_argument("--t", type=float, default=1 / 32)
    s.add_argument("--omega", help="single direction; default samples --directions angles")
    s.add_argument("--directions", type=int, default=16)
    s.add_argument("--out")
    s.set_defaults(func=cmd_ctheta)

    s = sub.add_parser("harnack", help="Harnack chain constants in a cone")
    s.add_argument("--theta", required=True, help="half-aperture, e.g. 30deg")
    s.add_argument("--a", type=float, default=0.5)
    s.add_argument("--r0", type=float, required=True, help="distance of x from the vertex")
    s.add_argument("--xi", type=float, required=True, help="distance of xi from the vertex")
    s.add_argument("--N", type=int, default=2)
    s.set_defaults(func=cmd_harnack)

    s = sub.add_parser("stability-sweep", help="run a domain family and fit the exponent")
    s.add_argument("--config", help="JSON run config (overrides family flags)")
    s.add_argument("--family", choices=["ellipse", "ball", "eigen"], default="ellipse")
    s.add_argument("--a", default="1.01,1.02,1.05,1.1,1.2", help="ellipse semi-axes: list or start:stop:count")
    s.add_argument("--b", type=float, default=1.0)
    s.add_argument("--r", default="0.8,0.9,1,1.1,1.2", help="ball radii")
    s.add_argument("--n", default="1,2,4,8", help="eigenfunction divisors")
    s.add_argument("--base-a", type=float, default=1.2, help="ellipse semi-axis for the eigen family")
    s.add_argument("--h", default="1/128")
    s.add_argument("--t", type=float, default=1 / 32)
    s.add_argument("--eta", type=float, default=0.1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="sweep.csv")
    s.add_argument("--format", default="png", choices=["png", "pdf", "svg"])
    s.add_argument("--no-plot", action="store_true")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("report", help="regenerate CSV, summary and figure from a records file")
    s.add_argument("--records", required=True)
    s.add_argument("--out", help="CSV path (default beside the records file)")
    s.add_argument("--format", default="png", choices=["png", "pdf", "svg"])
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except SerrinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
