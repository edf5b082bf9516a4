"""Command-line driver.

Each subcommand writes one or more CSV files and a ``manifest.txt`` of
key=value lines into ``--out-dir``.  Exit codes: 0 success, 2 bad arguments
or parameters, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import datetime
import os
import sys
import warnings
from fractions import Fraction

import numpy as np

from . import __version__
from .errors import NumericalError, ParameterError
from .fokker_planck import FpGrid, fp_propagate
from .parrondo import GameSpec, PlaySchedule, long_run_rate
from .potential import RatchetParams, tilted_potential
from .rw_approx import FlashingSchedule, LatticeDistribution, ScaledWalkParams, propagate_flashing, to_density
from .sde_sim import EmConfig, em_ensemble, histogram_density
from .stats import (
    TABLE_COLUMNS,
    RatchetSetup,
    find_kappa0,
    sweep,
    table1,
    table2,
)

MAX_DENOMINATOR = 10 ** 6


class UsageError(ParameterError):
    pass


def rational(text: str) -> Fraction:
    """Exact rational from '1/4', '2.4' or '12/5'; denominators above 10^6 are refused."""
    try:
        q = Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")
    if q.denominator > MAX_DENOMINATOR:
        raise argparse.ArgumentTypeError(f"{text!r} needs a denominator above {MAX_DENOMINATOR}")
    return q


def grid(text: str) -> np.ndarray:
    """'a:b:k' -> k evenly spaced values from a to b; a plain list 'x,y,z' is taken as is."""
    try:
        if ":" in text:
            a, b, k = text.split(":")
            return np.linspace(float(a), float(b), int(k))
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}, expected a:b:k or a comma list")


# ------------------------------------------------------------------ output


class Run:
    def __init__(self, args, command: str):
        self.args = args
        self.command = command
        self.files: list[str] = []
        self.meta: dict[str, object] = {}
        os.makedirs(args.out_dir, exist_ok=True)

    def path(self, name: str) -> str:
        p = os.path.join(self.args.out_dir, name)
        if os.path.exists(p) and not self.args.force:
            raise UsageError(f"{p} exists; pass --force to overwrite")
        return p

    def csv(self, name: str, header: list[str], columns) -> None:
        data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
        with open(self.path(name), "w", newline="\n") as fh:
            np.savetxt(fh, data, fmt="%.17g", delimiter=",", header=",".join(header), comments="")
        self.files.append(name)

    def finish(self) -> None:
        lines = {
            "command": " ".join(["flashratchet", *self.args.argv]),
            "subcommand": self.command,
            "version": __version__,
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
            "seed": self.args.seed,
            **{f"param.{k}": v for k, v in sorted(vars(self.args).items())
               if k not in ("argv", "func", "out_dir", "force")},
            **self.meta,
            "files": ",".join(self.files),
        }
        path = self.path("manifest.txt")
        with open(path, "w", newline="\n") as fh:
            for k, v in lines.items():
                fh.write(f"{k}={v}\n")


# ------------------------------------------------------------------ parameters


def _ratchet(args, kappa: float | None = None) -> RatchetParams:
    L = args.L
    l = args.alpha * L
    if l.denominator != 1:
        raise ParameterError(f"alpha*L = {l} must be an integer")
    if kappa is None:
        kappa = _kappa(args)
    if args.gamma is not None:
        return RatchetParams(int(l), L, float(args.gamma), kappa)
    return RatchetParams.from_lambda(int(l), L, float(args.lam), kappa)


def _kappa(args) -> float:
    if args.kappa is not None:
        return float(args.kappa)
    return float(args.theta) * float(args.kappa0) / 2.0


def _sched(args) -> FlashingSchedule:
    return FlashingSchedule(args.tau1, args.tau2)


def _point_site(spec: str, n: int) -> int:
    x = rational(spec)
    if (x * n).denominator != 1:
        raise ParameterError(f"start point {spec} is not on the lattice of spacing 1/{n}")
    return int(x * n)


def _add_ratchet_args(p, tilt_required=False):
    p.add_argument("--alpha", type=rational, default=Fraction(1, 4))
    p.add_argument("--L", type=int, default=4)
    amp = p.add_mutually_exclusive_group()
    amp.add_argument("--lambda", dest="lam", type=rational, default=Fraction(5))
    amp.add_argument("--gamma", type=rational, default=None)
    tilt = p.add_mutually_exclusive_group()
    tilt.add_argument("--theta", type=rational, default=Fraction(0))
    tilt.add_argument("--kappa", type=rational, default=None)
    p.add_argument("--kappa0", type=rational, default=Fraction("0.2748"))
    p.add_argument("--tau1", type=rational, default=Fraction(12, 5))
    p.add_argument("--tau2", type=rational, default=Fraction(12, 5))
    p.add_argument("--n", type=int, default=100)


def _setup(args) -> RatchetSetup:
    rp = _ratchet(args, 0.0)
    return RatchetSetup(rp.l, rp.L, float(args.lam), args.tau1, args.tau2, args.n)


# ------------------------------------------------------------------ commands


def cmd_density(args) -> None:
    run = Run(args, "density")
    params = _ratchet(args)
    sched = _sched(args)
    n = args.n
    variant = "original" if args.method == "rw" else "improved"
    w = ScaledWalkParams(params, n, variant) if args.method != "fp" else None
    s1, s2 = sched.phase_steps(n)
    steps = s1 + s2 if args.steps is None else args.steps
    extra = 0
    curves = {}

    if args.start == "stationary":
        from .wrapped import build_period_matrix, lift_stationary, stationary_vector

        P = build_period_matrix(w or ScaledWalkParams(params, n, "improved"), sched, steps)
        start = lift_stationary(stationary_vector(P), params.l)
        extra = P.extra_steps
        run.meta["parity_fix_steps"] = extra
    else:
        start = LatticeDistribution.point_mass(n, _point_site(args.start.split(":", 1)[1], n))

    def lattice(total, extra_steps):
        if args.method == "fp":
            return fp_propagate(FpGrid(start), params, sched, total, extra_steps).values
        return propagate_flashing(start, w, sched, total, extra_steps)

    if args.method == "em":
        # the parity step only matters for the wrapped chain; EM runs the plain period
        cfg = EmConfig(params, n, steps, args.paths, args.seed, sched)
        samples = em_ensemble(start if args.start == "stationary" else start.mean(), cfg)
        curve = histogram_density(samples, args.bin_width)
        run.meta["em.paths"] = args.paths
        run.meta["em.stream"] = samples.stream
        run.meta["em.mean"] = repr(samples.mean())
        run.meta["em.stderr"] = repr(samples.stderr())
    else:
        end = lattice(steps, extra)
        curve = to_density(end)
        run.meta["truncated_mass"] = repr(end.truncated)
        run.meta["mean"] = repr(end.mean())
        if args.start == "stationary":
            curves["density_t0.csv"] = to_density(start)
            curves["density_tau1.csv"] = to_density(lattice(min(s1, steps), 0))
    run.meta["steps_used"] = steps + extra

    run.csv("density.csv", ["x", "density"], [curve.x, curve.density])
    for name, c in curves.items():
        run.csv(name, ["x", "density"], [c.x, c.density])
    x = np.linspace(np.floor(curve.x[0]), np.ceil(curve.x[-1]), 64 * int(np.ceil(curve.x[-1] - curve.x[0]) + 1) + 1)
    run.csv("potential.csv", ["x", "tilted_potential_over_L"], [x, np.asarray(tilted_potential(x, params)) / params.L])
    run.finish()


def cmd_table(args) -> None:
    run = Run(args, "table")
    setup = RatchetSetup(n=args.n)
    rows = (table1 if args.which == 1 else table2)(setup, float(args.kappa0))
    run.csv(f"table{args.which}.csv", list(TABLE_COLUMNS), [[r[c] for r in rows] for c in TABLE_COLUMNS])
    run.meta["steps_used"] = sum(setup.sched.phase_steps(setup.n)) + (1 if args.which == 2 else 0)
    run.finish()
    for r in rows:
        print(",".join(f"{r[c]:.6g}" for c in TABLE_COLUMNS))


def cmd_kappa0(args) -> None:
    run = Run(args, "kappa0")
    setup = _setup(args)
    k0 = find_kappa0(float(args.lam), args.n, setup, tol=args.tol)
    run.csv("kappa0.csv", ["lambda", "n", "kappa0"], [[float(args.lam)], [args.n], [k0]])
    run.finish()
    print(f"{k0:.10g}")


def cmd_sweep(args) -> None:
    run = Run(args, "sweep")
    g = sweep(args.lambdas, args.thetas, float(args.kappa0), _setup(args), workers=args.threads)
    header = ["lambda"] + [f"theta={t:.17g}" for t in g.theta_values]
    run.csv("sweep_mean.csv", header, [g.lambda_values, *g.mean_displacement.T])
    run.csv("sweep_skewness.csv", header, [g.lambda_values, *g.skewness.T])
    run.finish()


def cmd_parrondo(args) -> None:
    run = Run(args, "parrondo")
    spec = GameSpec.from_rho(float(args.rho), args.l, args.L, float(args.eps))
    schedules = [PlaySchedule.single("A"), PlaySchedule.single("B"), PlaySchedule.mixture(float(args.c))]
    schedules += [PlaySchedule.periodic(p) for p in args.pattern]
    rates = [long_run_rate(spec, s) for s in schedules]
    labels = ["A", "B", f"mixture c={float(args.c):g}"] + [f"pattern {p}" for p in args.pattern]
    for lab, r in zip(labels, rates):
        print(f"{lab}: {r:.10g}")
    # CSV: schedule index, rate; labels go into the manifest
    run.csv("parrondo.csv", ["schedule", "rate"], [np.arange(len(rates)), rates])
    run.meta["schedules"] = ";".join(labels)
    run.meta["probabilities"] = f"p={spec.p!r},p0={spec.p0!r},p1={spec.p1!r}"
    run.finish()


def cmd_stationary(args) -> None:
    from .wrapped import analytic_stationary, stationary_flashing_run

    run = Run(args, "stationary")
    params = _ratchet(args)
    if args.kind == "analytic":
        st = analytic_stationary(params)
        c = st.curve()
        run.meta["skewness"] = repr(st.skewness())
        run.meta["mean"] = repr(st.mean())
        run.csv("stationary.csv", ["x", "density"], [c.x, c.density])
    else:
        res = stationary_flashing_run(ScaledWalkParams(params, args.n), _sched(args))
        c = to_density(res.start)
        run.meta["steps_used"] = res.matrix.steps_used
        run.meta["parity_fix_steps"] = res.matrix.extra_steps
        run.meta["mean_displacement"] = repr(res.mean_displacement)
        run.csv("stationary.csv", ["x", "density"], [c.x, c.density])
    run.finish()


def cmd_verify(args) -> None:
    from .fokker_planck import equivalence_report

    run = Run(args, "verify")
    if args.kappa is not None:
        kappas = [float(args.kappa)]
    else:
        thetas = [args.theta] if args.theta is not None else [-1, 0, 2, 4]
        kappas = [float(t) * float(args.kappa0) / 2.0 for t in thetas]
    diffs = []
    for k in kappas:
        diffs.append(equivalence_report(_ratchet(args, k), _sched(args), args.n))
        print(f"kappa={k:.10g} max_abs_diff={diffs[-1]:.3e}")
    run.meta["max_abs_diff"] = repr(max(diffs))
    run.csv("fp_equivalence.csv", ["kappa", "max_abs_diff"], [kappas, diffs])
    run.finish()


# ------------------------------------------------------------------ parser


def _global_flags(p, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--out-dir", default=d("."), help="directory for CSV files and the manifest")
    p.add_argument("--force", action="store_true", default=d(False), help="overwrite existing output files")
    p.add_argument("--threads", type=int, default=d(1), help="worker threads for Monte Carlo and sweeps")
    p.add_argument("--seed", type=int, default=d(0), help="seed of the counter-based random stream")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="flashratchet", description=__doc__.splitlines()[0])
    _global_flags(ap, suppress=False)
    # the same flags are accepted after the subcommand too
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = ap.add_subparsers(dest="command", required=True)
    _add = sub.add_parser
    sub.add_parser = lambda *a, **kw: _add(*a, parents=[common], **kw)

    p = sub.add_parser("density", help="time-t density of the flashing ratchet")
    _add_ratchet_args(p)
    p.add_argument("--method", choices=["rw", "rw-improved", "fp", "em"], default="rw-improved")
    p.add_argument("--start", default="point:0", help="point:<x> or stationary")
    p.add_argument("--steps", type=int, default=None, help="walk steps (default one flashing period)")
    p.add_argument("--paths", type=int, default=10 ** 5)
    p.add_argument("--bin-width", type=float, default=0.05)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("table", help="peak, mean and skewness table over theta")
    p.add_argument("--which", type=int, choices=[1, 2], required=True)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--kappa0", type=rational, default=Fraction("0.2748"))
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("kappa0", help="tilt with zero mean displacement")
    _add_ratchet_args(p)
    p.add_argument("--tol", type=float, default=1e-12)
    p.set_defaults(func=cmd_kappa0)

    p = sub.add_parser("sweep", help="mean and skewness on a lambda x theta grid")
    _add_ratchet_args(p)
    p.add_argument("--lambdas", "--lambda-grid", dest="lambdas", type=grid, default=grid("1:5:9"))
    p.add_argument("--thetas", "--theta-grid", dest="thetas", type=grid, default=grid("-1:4:11"))
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("parrondo", help="long-run rates of the biased Parrondo games")
    p.add_argument("--rho", type=rational, default=Fraction(1, 3))
    p.add_argument("--l", type=int, default=1)
    p.add_argument("--L", type=int, default=3)
    p.add_argument("--eps", type=rational, default=Fraction(1, 200))
    p.add_argument("--c", type=rational, default=Fraction(1, 2))
    p.add_argument("--pattern", action="append", default=[], help="periodic pattern such as AABB (repeatable)")
    p.set_defaults(func=cmd_parrondo)

    p = sub.add_parser("stationary", help="stationary law of the wrapped process")
    _add_ratchet_args(p)
    p.add_argument("--kind", choices=["analytic", "flashing-empirical"], default="analytic")
    p.set_defaults(func=cmd_stationary)

    p = sub.add_parser("verify", help="cross-method checks")
    p.add_argument("check", choices=["fp-equivalence"])
    _add_ratchet_args(p)
    p.set_defaults(theta=None)
    p.set_defaults(func=cmd_verify)
    return ap


def _fix_sweep_grids(argv: list[str]) -> list[str]:
    # on `sweep`, --lambda / --theta take grids
    if "sweep" not in argv:
        return argv
    i = argv.index("sweep")
    tail, rest = [], iter(argv[i + 1:])
    for a in rest:
        if a in ("--lambda", "--theta"):
            # glued with '=' so that grids starting with '-' are not read as flags
            tail.append(f"{a}s={next(rest, '')}")
        else:
            tail.append(a)
    return argv[:i + 1] + tail


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(_fix_sweep_grids(argv))
    args.argv = argv
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    # numba falls back to another threading layer when the system TBB is old
    warnings.filterwarnings("ignore", message="The TBB threading layer")
    try:
        import numba

        numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
        args.func(args)
    except ParameterError as e:
        print(f"flashratchet: error: {e}", file=sys.stderr)
        return 2
    except NumericalError as e:
        print(f"flashratchet: numerical failure: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
