"""Command-line interface: every computation as a CSV-emitting subcommand.

Exit codes: 0 ok, 2 usage, 3 input parse, 4 solver, 5 verification failed.
ROBINLAB_THREADS caps the BLAS/OpenMP thread pools.
"""
from __future__ import annotations

import os

if os.environ.get("ROBINLAB_THREADS"):
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, os.environ["ROBINLAB_THREADS"])

import argparse
import csv
import io
import logging
import math
import sys
import tempfile

import numpy as np

from . import annulus_rect as ar
from . import ball_spectrum as bs
from . import fem2d
from . import oracles
from . import weinberger_lab as wl

log = logging.getLogger("robinlab")

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_SOLVER, EXIT_VERIFY = 0, 2, 3, 4, 5

SOLVER_ERRORS = (
    bs.NoSolutionError, ar.NoNegativeEigenvalue, ar.OptimizationFailure, ar.BracketError,
    fem2d.MeshError, fem2d.SolverError, fem2d.BracketError,
    wl.QuadratureError, wl.RecenterError, ArithmeticError,
)


class UsageError(Exception):
    pass


class ParseError(Exception):
    pass


class VerificationFailed(Exception):
    pass


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x) + 0.0:.12g}"  # + 0.0 folds -0 into 0
    return str(x)


def write_csv(path, header, rows) -> None:
    """Header plus rows, 12 significant digits; atomic when writing to a file."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".robinlab-", suffix=".csv")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def alpha_grid(args, default=None):
    if args.alpha is not None:
        return np.array([args.alpha])
    lo = args.alpha_min if args.alpha_min is not None else (default[0] if default else None)
    hi = args.alpha_max if args.alpha_max is not None else (default[1] if default else None)
    if lo is None or hi is None:
        raise UsageError("give --alpha or both --alpha-min and --alpha-max")
    if not lo < hi:
        raise UsageError("empty alpha range: need --alpha-min < --alpha-max")
    if args.alpha_steps < 2:
        raise UsageError("--alpha-steps must be at least 2")
    return np.linspace(lo, hi, args.alpha_steps)


def load_domain(args):
    if not args.domain:
        raise UsageError("--domain is required for this command")
    if not args.mesh_h > 0:
        raise UsageError("--mesh-h must be positive")
    try:
        verts, name = fem2d.load_polygon(args.domain)
        verts = fem2d.validate_polygon(verts)
    except OSError as exc:
        raise ParseError(f"cannot read {args.domain}: {exc}") from exc
    except ValueError as exc:  # includes PolygonError
        raise ParseError(str(exc)) from exc
    return fem2d.mesh_polygon(verts, args.mesh_h, seed=args.seed, name=name)


# -- commands ---------------------------------------------------------------------

def cmd_spectrum(args):
    if args.domain:
        dom = load_domain(args)
        rows = []
        for a in alpha_grid(args):
            res = fem2d.robin_spectrum_fem(dom, float(a), args.count)
            rows += [(a, i + 1, lam, "", "", dom.mesh_h) for i, lam in enumerate(res.eigenvalues)]
    else:
        rows = []
        for a in alpha_grid(args):
            res = bs.spectrum(args.n, float(a), args.count)
            rows += [(a, i + 1, lam, b.kappa, b.m, "")
                     for i, (lam, b) in enumerate(zip(res.eigenvalues, res.branches))]
    write_csv(args.out, ["alpha", "index", "lambda", "kappa", "m", "mesh_h"], rows)


def cmd_curve(args):
    """Branch curves sampled in lambda and mapped to alpha, the way the disk figure is drawn."""
    lo, hi = args.alpha_min, args.alpha_max
    if lo is None or hi is None:
        raise UsageError("curve needs --alpha-min and --alpha-max")
    if not lo < hi:
        raise UsageError("empty alpha range: need --alpha-min < --alpha-max")
    if args.alpha_steps < 2:
        raise UsageError("--alpha-steps must be at least 2")
    kappas = args.kappa if args.kappa is not None else [0, 1]
    ms = args.branch_m if args.branch_m is not None else [0]
    rows = []
    for k in kappas:
        for m in ms:
            br = bs.BranchIndex(args.n, k, m)
            lam_lo = bs.eigenvalue_on_branch(br, lo)
            lam_hi = bs.eigenvalue_on_branch(br, hi)
            lams = set(np.linspace(lam_lo, lam_hi, args.alpha_steps)[1:-1].tolist())
            # keyed by lambda so the exact points are not repeated
            pts = {lam: bs.alpha_of_lambda(br, lam) for lam in lams if lam != 0.0}
            pts[lam_lo], pts[lam_hi] = lo, hi
            if lo < -k < hi and m == 0:
                pts[0.0] = -float(k)
            if lo < 0 < hi:
                pts[bs.eigenvalue_on_branch(br, 0.0)] = 0.0
            rows += [(pts[lam], k, m, lam) for lam in sorted(pts)]
    write_csv(args.out, ["alpha", "kappa", "m", "lambda"], rows)


def cmd_bounds(args):
    rows = []
    for a in alpha_grid(args, default=(-(args.n + 1) / args.n, 0.0)):
        a = float(a)
        lower, upper = bs.lambda2_bounds(args.n, a)
        lam = bs.lambda2(args.n, a)
        rows.append((a, lower, lam, upper, lower <= lam <= upper))
    write_csv(args.out, ["alpha", "lower", "lambda2", "upper", "within"], rows)
    if not all(r[-1] for r in rows):
        raise VerificationFailed("lambda_2 outside its bounds")


def cmd_eigenfunction(args):
    if args.alpha is None:
        raise UsageError("eigenfunction needs --alpha")
    kappa = (args.kappa or [1])[0]
    m = (args.branch_m or [0])[0]
    br = bs.BranchIndex(args.n, kappa, m)
    g = bs.radial_eigenfunction(br, args.alpha)
    r = np.linspace(0.0, args.r_max, args.points)
    val = g(r)
    write_csv(args.out, ["r", "g"], zip(r, val))


def cmd_verify(args):
    """Theorem check plus the trial-function chain for one polygon."""
    dom = load_domain(args)
    R = math.sqrt(dom.area / math.pi)
    grid = alpha_grid(args, default=bs.theorem_interval(2, R))
    rep = fem2d.verify_theorem(dom, grid, tolerance=args.tol)
    unit, t = wl.normalize_to_ball(dom)  # t = 1/R
    rows, ok = [], rep.passed
    for rec in rep.records:
        a_unit = rec.alpha / t
        if -1.5 - 1e-9 <= a_unit < -1.5:  # rounding at the end of the theorem range
            a_unit = -1.5
        chain, bound = "", math.nan
        if not rec.error and -1.5 <= a_unit <= 0:
            wb = wl.weinberger_bound(unit, a_unit)
            bound = wb.bound * t * t
            chain = wb.chain_holds
            ok = ok and chain
        rows.append((rec.alpha, rec.lambda2_fem, rec.lambda2_ball, rec.margin, rec.passed,
                     bound, chain, dom.mesh_h, rec.error))
    write_csv(args.out, ["alpha", "lambda2_fem", "lambda2_disk", "margin", "pass",
                         "weinberger_bound", "chain_ok", "mesh_h", "error"], rows)
    print(f"{dom.name}: {'PASS' if ok else 'FAIL'} min margin {rep.min_margin:.6g} "
          f"(h={dom.mesh_h:.4g}, {len(rows)} alpha values)", file=sys.stderr)
    if not ok:
        raise VerificationFailed(dom.name)


def cmd_transition(args):
    rows = []
    which = [args.which] if args.which else ["lambda1", "lambda2"]
    for w in which:
        res = ar.transition_search(args.n, args.volume, w, tol=args.tol)
        rows.append((args.n, w, res.alpha, res.bracket[0], res.bracket[1],
                     res.degenerate, res.method))
    write_csv(args.out, ["n", "which", "alpha_star", "bracket_lo", "bracket_hi",
                         "degenerate", "method"], rows)


def cmd_steklov(args):
    dom = load_domain(args)
    R = math.sqrt(dom.area / math.pi)
    sigma = fem2d.steklov_sigma1(dom, tol=args.tol)
    mu = float(fem2d.robin_spectrum_fem(dom, 0.0, 2).eigenvalues[1])
    mu_disk = bs.lambda2(2, 0.0) / R**2
    rows = [(dom.name, dom.area, sigma, 1.0 / R, sigma <= 1.0 / R + args.tol,
             mu, mu_disk, mu <= mu_disk, dom.mesh_h)]
    write_csv(args.out, ["domain", "area", "sigma1", "sigma1_disk", "sigma_ok",
                         "mu1", "mu1_disk", "mu_ok", "mesh_h"], rows)


def cmd_oracle(args):
    """Shell-minus-ball eigenvalue gaps from the Bessel determinant and a radial FD solve."""
    if args.alpha is None:
        raise UsageError("oracle needs --alpha")
    n, a = args.n, args.alpha
    which = ar.Which(args.which or "lambda2")
    vol = args.volume
    kappa = 1 if which is ar.Which.LAMBDA2 else 0
    R = (vol / bs.ball_volume(n)) ** (1.0 / n)  # equal-volume ball
    ball_det = bs.eigenvalue_on_branch(bs.BranchIndex(n, kappa, 0), R * a) / R**2
    ball_fd = oracles.radial_fd_eigenvalues(n, kappa, 0.0, R, a, points=args.points)[0]
    rows = []
    for r_in in args.r_in or [0.05, 0.1, 0.15, 0.2, 0.3, 0.4]:
        ann = ar.Annulus.with_volume(n, r_in, vol)
        det = ar.annulus_eigenvalue(ann, a, which)
        k0 = oracles.radial_fd_eigenvalues(n, 0, r_in, ann.r_out, a, k=2, points=args.points)
        if which is ar.Which.LAMBDA1:
            fd = k0[0]
        else:
            # kappa = 1 levels have multiplicity n >= 2
            k1 = oracles.radial_fd_eigenvalues(n, 1, r_in, ann.r_out, a, points=args.points)
            fd = min(k0[1], k1[0])
        rows.append((r_in, ann.r_out, det, fd, det - fd, det - ball_det, fd - ball_fd))
    write_csv(args.out, ["r_in", "r_out", "lambda_det", "lambda_fd", "det_minus_fd",
                         "advantage_det", "advantage_fd"], rows)


COMMANDS = {
    "spectrum": cmd_spectrum, "curve": cmd_curve, "bounds": cmd_bounds,
    "eigenfunction": cmd_eigenfunction, "verify": cmd_verify, "transition": cmd_transition,
    "steklov": cmd_steklov, "oracle": cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=2, help="dimension (default 2)")
    common.add_argument("--alpha", type=float)
    common.add_argument("--alpha-min", type=float)
    common.add_argument("--alpha-max", type=float)
    common.add_argument("--alpha-steps", type=int, default=10)
    common.add_argument("--kappa", type=int, nargs="+")
    common.add_argument("--branch-m", type=int, nargs="+")
    common.add_argument("--domain", help="polygon JSON file")
    common.add_argument("--mesh-h", type=float, default=0.03)
    common.add_argument("--seed", type=int, default=0, help="mesh seed (recorded)")
    common.add_argument("--out", help="output CSV (default stdout)")
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--which", choices=["lambda1", "lambda2"])
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="robinlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("spectrum", parents=[common], help="ball (or --domain FEM) eigenvalues")
    s.add_argument("--count", type=int, default=5)
    sub.add_parser("curve", parents=[common], help="branch curves lambda(alpha)")
    sub.add_parser("bounds", parents=[common], help="explicit bounds on lambda_2 of the ball")
    s = sub.add_parser("eigenfunction", parents=[common], help="radial profile g(r)")
    s.add_argument("--r-max", type=float, default=1.0)
    s.add_argument("--points", type=int, default=101)
    sub.add_parser("verify", parents=[common], help="lambda_2(polygon) <= lambda_2(disk) report")
    s = sub.add_parser("transition", parents=[common], help="ball/shell transition values")
    s.add_argument("--volume", type=float, default=1.0, help="common volume (default 1)")
    sub.add_parser("steklov", parents=[common], help="first Steklov eigenvalue of a polygon")
    s = sub.add_parser("oracle", parents=[common], help="determinant vs finite-difference shells")
    s.add_argument("--r-in", type=float, nargs="+", help="hole radii (default: a spread)")
    s.add_argument("--volume", type=float, default=1.0)
    s.add_argument("--points", type=int, default=20_000)
    return p


_DEFAULT_TOL = {"verify": 1e-2, "transition": 1e-4, "steklov": 1e-4}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.tol is None:
        args.tol = _DEFAULT_TOL.get(args.command, 1e-8)
    if args.n < 2 and args.command not in ("spectrum",):
        print("robinlab: --n must be at least 2", file=sys.stderr)
        return EXIT_USAGE
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"robinlab: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"robinlab: input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except VerificationFailed as exc:
        print(f"robinlab: verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except SOLVER_ERRORS as exc:
        print(f"robinlab: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"robinlab: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
