"""Command-line frontend: ``mot1d <subcommand> ...``.

Exit codes: 0 success, 1 domain error (named on stderr), 2 usage error.
Measures are read from JSON ({"atoms": [{"x":..,"w":..}, ...]}) or, for
``.csv`` paths, from "x,w" lines.  Couplings use JSON or "x,y,mass" CSV.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bench as B
from . import couplings as C
from . import pointmass as P
from . import thresholds as T
from .errors import MotError, ParseError, PotentialsTouch
from .measures import DiscreteMeasure, fmt
from .motlp import Coupling, CostSpec, solve_mot, solve_mot_directional
from .order import convex_join, convex_order, stochastic_order


class UsageError(Exception):
    pass


# -- io -------------------------------------------------------------------------

def _read(path):
    try:
        return sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def read_measure(path):
    text = _read(path)
    if str(path).lower().endswith(".csv"):
        return DiscreteMeasure.from_csv(text)
    return DiscreteMeasure.from_json(text)


def read_coupling(path):
    text = _read(path)
    if str(path).lower().endswith(".csv"):
        return Coupling.from_csv(text)
    return Coupling.from_json(text)


def read_split(path):
    return C.DirectionalSplit.from_json(_read(path))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    return obj


class Emitter:
    def __init__(self, out):
        self.out = out

    def text(self, s):
        if not s.endswith("\n"):
            s += "\n"
        if self.out in (None, "-"):
            sys.stdout.write(s)
        else:
            Path(self.out).write_text(s)

    def json(self, obj):
        self.text(json.dumps(_jsonable(obj), indent=2))


def _emit_measure(em, args, eta):
    em.text(eta.to_csv() if args.format == "csv" else eta.to_json())


def _emit_coupling(em, args, pi):
    em.text(pi.to_csv() if args.format == "csv" else pi.to_json())


def _cost(args):
    if getattr(args, "phi", None):
        d = json.loads(_read(args.phi))
        try:
            return CostSpec.table(d["knots"], d["values"])
        except (KeyError, TypeError) as e:
            raise ParseError(f"bad cost table: {e}") from None
    if args.rho is None:
        raise UsageError("give --rho or --phi")
    return CostSpec.power(args.rho)


# -- subcommands ----------------------------------------------------------------

def cmd_check_order(args, em):
    mu, nu = read_measure(args.mu), read_measure(args.nu)
    fn = convex_order if args.kind == "convex" else stochastic_order
    rep = fn(mu, nu, tol=args.tol_feas)
    if args.format == "json":
        em.json(rep)
    else:
        word = "holds" if rep.holds else "fails"
        em.text(f"{word} worst_gap={fmt(rep.worst_gap)} witness={fmt(rep.witness)}")
    return 0


def cmd_join(args, em):
    _emit_measure(em, args, convex_join(read_measure(args.mu), read_measure(args.nu)))
    return 0


def _emit_report(em, args, rep):
    if args.format == "csv":
        em.text(rep.coupling.to_csv())
        sys.stderr.write(f"value={fmt(rep.value)}\n")
    else:
        em.json(rep)


def cmd_solve(args, em):
    mu, nu = read_measure(args.mu), read_measure(args.nu)
    rep = solve_mot(mu, nu, _cost(args), args.sense, args.tol_feas, args.tol_opt)
    _emit_report(em, args, rep)
    return 0


def cmd_solve_dir(args, em):
    mu, nu = read_measure(args.mu), read_measure(args.nu)
    rep = solve_mot_directional(mu, nu, read_split(args.split), _cost(args), args.sense,
                                args.tol_feas, args.tol_opt)
    _emit_report(em, args, rep)
    return 0


def cmd_hn(args, em):
    mu, nu = read_measure(args.mu), read_measure(args.nu)
    rep = solve_mot(mu, nu, CostSpec.power(1.0), "max", args.tol_feas, args.tol_opt)
    _emit_report(em, args, rep)
    return 0


def cmd_pi_up(args, em):
    pi = C.build_nested_pi_up(read_measure(args.mu), read_measure(args.nu))
    _emit_coupling(em, args, pi)
    return 0


def cmd_pi_down(args, em):
    pi = C.build_nested_pi_down(read_measure(args.mu), read_measure(args.nu))
    _emit_coupling(em, args, pi)
    return 0


def cmd_build_nd(args, em):
    mu, nu = read_measure(args.mu), read_measure(args.nu)
    split = read_split(args.split)
    if split.nu_0.mass > 0:
        pi = C.build_nondecreasing_with_diagonal(mu, nu, split)
    else:
        pi = C.build_nondecreasing(mu, nu, split.nu_l, split.nu_r)
    _emit_coupling(em, args, pi)
    return 0


def cmd_decompose(args, em):
    em.json(C.decompose(read_coupling(args.coupling)))
    return 0


def cmd_check_monotone(args, em):
    pi = read_coupling(args.coupling)
    out = {}
    if args.kind in ("nondecreasing", "both"):
        out["nondecreasing"] = C.is_nondecreasing(pi, exempt=tuple(args.exempt))
    if args.kind in ("nonincreasing", "both"):
        out["nonincreasing"] = C.is_nonincreasing(pi, exempt=tuple(args.exempt))
    if args.format == "json":
        em.json(out)
    else:
        em.text("\n".join(f"{k} {'yes' if v.ok else 'no'}"
                          + ("" if v.ok else f" condition={v.condition} witness={v.witness}")
                          for k, v in out.items()))
    return 0


def cmd_pm(args, em):
    mu, nu = read_measure(args.mu), read_measure(args.nu)
    xs = args.x if args.x else [float(a) for a in mu.atoms]
    out = []
    for x in xs:
        try:
            out.append(P.point_mass_profile(mu, nu, x, args.touch_tol).to_dict())
        except PotentialsTouch:
            out.append({"x": x, "touch": True, "inf_diag": P.diagonal_floor(mu, nu, x)})
    em.json(out)
    return 0


def cmd_x0(args, em):
    rows = P.x_zero_set(read_measure(args.mu), read_measure(args.nu), args.touch_tol)
    if args.format == "csv":
        em.text("x,forced_mass,reason\n" + "".join(f"{fmt(x)},{fmt(m)},{r}\n" for x, m, r in rows))
    else:
        em.json([{"x": x, "forced_mass": m, "reason": r} for x, m, r in rows])
    return 0


def cmd_alpha(args, em):
    res = [T.alpha_rho(r) for r in args.rho]
    if args.format == "json":
        em.json(res)
    else:
        em.text("\n".join(f"rho={fmt(a.rho)} alpha={fmt(a.alpha)} residual={fmt(a.residual)}"
                          for a in res))
    return 0


def cmd_sq_bound(args, em):
    _emit_measure(em, args, C.sq_upper_bound(read_measure(args.mu), read_measure(args.nu)))
    return 0


def cmd_gen(args, em):
    if args.family == "mhk":
        fam = T.gen_mhk(args.p, *args.points)
    elif args.family == "mstar":
        if args.rho is None:
            raise UsageError("gen mstar needs --rho")
        ym, yp, zm, zp, xm, xp = args.points
        fam = T.gen_mstar(args.p, ym, yp, zm, zp, xm, xp, args.rho, verify=not args.no_verify)
    else:
        rho, rho_p, y, m, z, beta, eps = args.params
        mu, nu = T.gen_diffcouplcr(rho, rho_p, y, m, z, beta, eps)
        fam = {"mu": mu, "nu": nu}
    em.json(fam)
    return 0


def cmd_bench(args, em):
    rhos = tuple(args.rhos) if args.rhos else B.DEFAULT_RHOS
    cfg = B.BenchConfig(pair=args.pair, n_mu=args.n_mu or args.n, n_nu=args.n_nu or args.n,
                        rhos=rhos, seed=args.seed, mode=args.mode, norm=args.norm,
                        workers=args.workers)
    table = B.run_bench(cfg)
    em.text(table.to_json() if args.json or args.format == "json" else table.to_csv())
    return 0


# -- parser -----------------------------------------------------------------------

def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-feas", type=float, default=1e-9, help="feasibility tolerance")
    common.add_argument("--tol-opt", type=float, default=1e-9, help="optimality tolerance")
    common.add_argument("-o", "--out", default=None, help="output path (default stdout)")
    common.add_argument("--format", choices=("json", "csv", "text"), default=None,
                        help="output format (default depends on the subcommand)")

    p = argparse.ArgumentParser(prog="mot1d", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", metavar="subcommand")
    sub.required = True

    def add(name, fn, help_, fmt_default="json"):
        sp = sub.add_parser(name, parents=[common], help=help_, description=help_)
        sp.set_defaults(func=fn, fmt_default=fmt_default)
        return sp

    def pair(sp):
        sp.add_argument("mu", help="source measure (JSON or .csv)")
        sp.add_argument("nu", help="target measure (JSON or .csv)")

    def cost(sp, need_sense=True):
        sp.add_argument("--rho", type=float, help="exponent of the cost |y-x|^rho")
        sp.add_argument("--phi", help="JSON file {knots, values}: concave piecewise-linear phi")
        if need_sense:
            sp.add_argument("--sense", choices=("max", "min"), default="max")

    sp = add("check-order", cmd_check_order, "test mu <=cx nu (or <=st)", "text")
    pair(sp)
    sp.add_argument("--kind", choices=("convex", "stochastic"), default="convex")

    sp = add("join", cmd_join, "convex-order join: potential = max(u_mu, u_nu)")
    pair(sp)

    sp = add("solve", cmd_solve, "optimal martingale coupling for phi(|y-x|)")
    pair(sp)
    cost(sp)

    sp = add("solve-dir", cmd_solve_dir, "optimize over couplings with a given (nu_l, nu_0, nu_r)")
    pair(sp)
    sp.add_argument("split", help="split JSON {nu_l, nu_0, nu_r}")
    cost(sp)

    sp = add("hn", cmd_hn, "maximizer of |y-x| (the HN coupling used by bench)")
    pair(sp)

    sp = add("pi-up", cmd_pi_up, "non-decreasing coupling under nested supports")
    pair(sp)

    sp = add("pi-down", cmd_pi_down, "non-increasing coupling under nested supports")
    pair(sp)

    sp = add("build-nd", cmd_build_nd, "non-decreasing coupling realizing a given split")
    pair(sp)
    sp.add_argument("split", help="split JSON {nu_l, nu_0, nu_r}")

    sp = add("decompose", cmd_decompose, "split the target of a coupling by sign of y-x")
    sp.add_argument("coupling", help="coupling JSON or .csv")

    sp = add("check-monotone", cmd_check_monotone, "test the non-decreasing / non-increasing "
             "conditions on a coupling's support", "text")
    sp.add_argument("coupling", help="coupling JSON or .csv")
    sp.add_argument("--kind", choices=("nondecreasing", "nonincreasing", "both"), default="both")
    sp.add_argument("--exempt", type=float, action="append", default=[],
                    help="ignore diagonal entries (x, x) at this point; repeatable")

    sp = add("pm", cmd_pm, "point-mass profiles p_-, p_+, q, eta_x at atoms of mu")
    pair(sp)
    sp.add_argument("--x", type=float, action="append", help="atom to profile; repeatable "
                    "(default: every atom of mu)")
    sp.add_argument("--touch-tol", type=float, default=P.TOUCH_TOL)

    sp = add("x0", cmd_x0, "atoms of mu with forced diagonal mass")
    pair(sp)
    sp.add_argument("--touch-tol", type=float, default=P.TOUCH_TOL)

    sp = add("alpha", cmd_alpha, "alpha_rho, the root of psi_rho in (0, 1/2)", "text")
    sp.add_argument("--rho", type=float, action="append", required=True,
                    help="rho > 1; repeatable")

    sp = add("sq-bound", cmd_sq_bound, "convex-order upper bound for sq#pi over martingale couplings")
    pair(sp)

    sp = add("gen", cmd_gen, "generate an example family")
    sp.add_argument("family", choices=("mhk", "mstar", "diffcouplcr"))
    sp.add_argument("--p", type=float, default=0.5, help="weight of x_- (mhk, mstar)")
    sp.add_argument("--points", type=_floats,
                    help="mhk: y-,y+,x-,x+,z-,z+   mstar: y-,y+,z-,z+,x-,x+")
    sp.add_argument("--rho", type=float, help="exponent (mstar)")
    sp.add_argument("--params", type=_floats, help="diffcouplcr: rho,rho',y,m,z,beta,eps")
    sp.add_argument("--no-verify", action="store_true", help="mstar: skip the LP verdicts")

    sp = add("bench", cmd_bench, "sample, join, solve across rho and compare with pi_HN", "csv")
    sp.add_argument("--pair", choices=sorted(B.PAIRS), default="normal")
    sp.add_argument("--n", type=int, default=100, help="sample size for both marginals")
    sp.add_argument("--n-mu", type=int, default=None)
    sp.add_argument("--n-nu", type=int, default=None)
    sp.add_argument("--rhos", type=_floats, default=None, help="comma-separated rho list")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--mode", choices=("sample", "exact_pmf"), default="sample")
    sp.add_argument("--norm", choices=("tv", "frobenius"), default="tv")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--json", action="store_true", help="emit the JSON mirror instead of CSV")
    return p


def _check_gen(args, parser):
    if args.cmd != "gen":
        return
    if args.family in ("mhk", "mstar") and (args.points is None or len(args.points) != 6):
        parser.error(f"gen {args.family} needs --points with six values")
    if args.family == "diffcouplcr" and (args.params is None or len(args.params) != 7):
        parser.error("gen diffcouplcr needs --params with seven values")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _check_gen(args, parser)
    if args.format is None:
        args.format = args.fmt_default
    em = Emitter(args.out)
    try:
        return args.func(args, em)
    except UsageError as e:
        sys.stderr.write(f"mot1d {args.cmd}: error: {e}\n")
        return 2
    except MotError as e:
        sys.stderr.write(f"mot1d {args.cmd}: {e}\n")
        return 1
    except json.JSONDecodeError as e:
        sys.stderr.write(f"mot1d {args.cmd}: ParseError: {e}\n")
        return 1


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
