"""Command-line interface.

Every command accepts ``--config FILE`` (a flat ``key = value`` file whose
entries fill in defaults; explicit flags win) and ``--out DIR`` (a fresh
run directory receiving CSV artifacts, a manifest sufficient for bit-exact
re-runs, and the verdict JSON).  Verdicts are also printed to stdout.

Exit codes: 0 success, 1 failed verdict, 2 infinite critical rate,
64 usage error, 65 infeasible initial condition, 66 censored medians,
73 output directory already exists.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import experiments
from .analytics import InfiniteLambdaCError
from .artifacts import OutputDirExistsError, fresh_dir, write_json
from .simulator import ConfigurationError, InitialCondition
from .stats import CensoredMedianError

EX_USAGE = 64
EX_INFEASIBLE = 65
EX_CENSORED = 66
EX_EXISTS = 73


def _sniff(value: str):
    v = value.strip()
    low = v.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(v)
    except ValueError:
        pass
    try:
        return float(v)
    except ValueError:
        pass
    if "," in v:
        return [_sniff(part) for part in v.split(",")]
    return v


def load_config_file(path: str) -> dict:
    """Flat ``key = value`` config; '#' starts a comment; keys use '_' or '-'."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {line!r}")
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = _sniff(value)
    return out


def parse_init(spec: str, z0: float = 0.0) -> InitialCondition:
    """Initial-condition spec: on_ray:X | i_only:X | plus_i:I0 | explicit:S,I,J,K,L."""
    kind, _, arg = spec.partition(":")
    if kind == "on_ray":
        return InitialCondition.on_ray(float(arg or 1.0), z0=z0)
    if kind == "i_only":
        return InitialCondition.infected_singles_only(float(arg or 1.0), z0=z0)
    if kind == "plus_i":
        return InitialCondition.all_susceptible_plus(int(arg))
    if kind == "explicit":
        counts = tuple(int(c) for c in arg.split(","))
        if len(counts) != 5:
            raise ValueError("explicit initial condition needs S,I,J,K,L")
        return InitialCondition.explicit(*counts)
    raise ValueError(f"unknown initial condition {spec!r}")


def _float_list(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v != ""]


def _int_list(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(v) for v in str(text).split(",") if v != ""]


def _add_common(p: argparse.ArgumentParser, n_default=None):
    p.add_argument("--config", help="flat key=value config file (flags override)")
    p.add_argument("--r-plus", type=float, default=experiments.DEFAULT_R_PLUS)
    p.add_argument("--r-minus", type=float, default=experiments.DEFAULT_R_MINUS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="fresh output directory for artifacts")
    p.add_argument("--threads", type=int, default=0, help="replica parallelism (0 = auto)")
    if n_default is not None:
        p.add_argument("--n", type=int, default=n_default, help="population size N")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="partnersim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="print every derived constant at lambda_c")
    _add_common(p)

    p = sub.add_parser("simulate", help="one trajectory on a slow-time grid")
    _add_common(p, n_default=10_000)
    p.add_argument("--lam", type=float, default=None, help="transmission rate (default lambda_c)")
    p.add_argument("--init", default="on_ray:1.0")
    p.add_argument("--z0", type=float, default=0.0)
    p.add_argument("--t-max", type=float, default=2.0, help="horizon, slow time")
    p.add_argument("--grid", type=float, default=0.01, help="sampling grid, slow time")
    p.add_argument("--no-stop-extinction", action="store_true")
    p.add_argument("--h-floor", type=float, default=0.0)

    p = sub.add_parser("ensemble", help="replica ensemble with marginal sampling")
    _add_common(p, n_default=10_000)
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--init", default="on_ray:1.0")
    p.add_argument("--z0", type=float, default=0.0)
    p.add_argument("--replicas", type=int, default=8)
    p.add_argument("--t-max", type=float, default=2.0)
    p.add_argument("--grid", type=float, default=0.01)
    p.add_argument("--marginal-times", default="")
    p.add_argument("--dense-grid", action="store_true")
    p.add_argument("--no-stop-extinction", action="store_true")
    p.add_argument("--h-floor", type=float, default=0.0)

    p = sub.add_parser("collapse", help="state-space-collapse experiment")
    _add_common(p, n_default=100_000)
    p.add_argument("--replicas", type=int, default=200)
    p.add_argument("--x", type=float, default=1.0)
    p.add_argument("--threshold", type=float, default=0.05)
    p.add_argument("--t-max", type=float, default=4.0)
    p.add_argument("--grid", type=float, default=0.002)

    p = sub.add_parser("ou-check", help="singles-fluctuation (OU) experiment")
    _add_common(p, n_default=100_000)
    p.add_argument("--replicas", type=int, default=8)
    p.add_argument("--window", default="20,200", help="fast-time window for the z variance")
    p.add_argument("--chain-n", type=int, default=10_000)
    p.add_argument("--chain-replicas", type=int, default=2000)

    p = sub.add_parser("extinction-scaling", help="extinction-time scaling across N")
    _add_common(p)
    p.add_argument("--n-list", default="10000,40000,160000")
    p.add_argument("--replicas", type=int, default=400)
    p.add_argument("--t-max", type=float, default=12.0)
    p.add_argument("--x", type=float, default=1.0)

    p = sub.add_parser("diffusion-compare", help="i_N marginals and tau0 vs the limit diffusion")
    _add_common(p, n_default=100_000)
    p.add_argument("--replicas", type=int, default=1000)
    p.add_argument("--times", default="0.5,1.0")
    p.add_argument("--em-paths", type=int, default=10_000)
    p.add_argument("--em-dt", type=float, default=1e-4)
    p.add_argument("--t-max", type=float, default=20.0)
    p.add_argument("--x", type=float, default=1.0)

    p = sub.add_parser("mfcp", help="mean-field contact process vs its diffusion limit")
    _add_common(p, n_default=10_000)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--replicas", type=int, default=2000)
    p.add_argument("--em-paths", type=int, default=2000)
    p.add_argument("--t-max", type=float, default=40.0)
    p.add_argument("--marginal-time", type=float, default=1.0)

    p = sub.add_parser("ode-tracking", help="ensemble mean of y vs the singles ODE")
    _add_common(p, n_default=10_000)
    p.add_argument("--replicas", type=int, default=200)
    p.add_argument("--t-fast-max", type=float, default=5.0)
    p.add_argument("--grid-fast", type=float, default=0.025)

    p = sub.add_parser("averaging", help="drift-averaging integral across N")
    _add_common(p)
    p.add_argument("--n-list", default="10000,100000")
    p.add_argument("--replicas", type=int, default=200)
    p.add_argument("--t-max", type=float, default=1.0)

    return parser


def _apply_config_file(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        values = load_config_file(known.config)
        for action in parser._subparsers._group_actions[0].choices.values():  # noqa: SLF001
            valid = {a.dest for a in action._actions}  # noqa: SLF001
            action.set_defaults(**{k: v for k, v in values.items() if k in valid})


def _report(verdict: dict, out=sys.stdout) -> int:
    print(json.dumps(verdict, sort_keys=True, indent=2), file=out)
    return 0 if verdict.get("pass", True) else 1


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EX_USAGE if exc.code not in (0, None) else 0

    if getattr(args, "threads", 0):
        import numba

        numba.set_num_threads(args.threads)

    try:
        return _dispatch(args)
    except InfiniteLambdaCError as exc:
        print(f"error: lambda_c infinite ({exc})", file=sys.stderr)
        return 2
    except ConfigurationError as exc:
        print(f"error: infeasible configuration ({exc})", file=sys.stderr)
        return EX_INFEASIBLE
    except CensoredMedianError as exc:
        print(f"error: {exc}; raise --t-max", file=sys.stderr)
        return EX_CENSORED
    except OutputDirExistsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_EXISTS
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EX_USAGE


def _dispatch(args) -> int:
    cmd = args.command
    if cmd == "constants":
        if args.r_plus <= 0 or args.r_minus <= 0:
            print("usage error: rates must be positive", file=sys.stderr)
            return EX_USAGE
        payload = experiments.exp_constants(args.r_plus, args.r_minus)
        print(json.dumps(payload, sort_keys=True, indent=2))
        if args.out:
            out = fresh_dir(args.out)
            write_json(out / "constants.json", payload)
        return 0

    if cmd == "simulate":
        traj = experiments.exp_simulate(
            N=args.n,
            seed=args.seed,
            t_max_slow=args.t_max,
            grid_slow=args.grid,
            r_plus=args.r_plus,
            r_minus=args.r_minus,
            lam=args.lam,
            init=parse_init(args.init, args.z0),
            stop_on_extinction=not args.no_stop_extinction,
            h_floor=args.h_floor,
            out_dir=args.out,
        )
        print(
            json.dumps(
                {
                    "stop_reason": traj.terminal.stop_reason,
                    "tau0_slow": traj.terminal.tau0_slow,
                    "n_events": traj.terminal.n_events,
                },
                sort_keys=True,
            )
        )
        return 0

    if cmd == "ensemble":
        result = experiments.exp_ensemble(
            N=args.n,
            replicas=args.replicas,
            seed=args.seed,
            t_max_slow=args.t_max,
            marginal_times_slow=_float_list(args.marginal_times),
            grid_slow=args.grid,
            r_plus=args.r_plus,
            r_minus=args.r_minus,
            lam=args.lam,
            init=parse_init(args.init, args.z0),
            stop_on_extinction=not args.no_stop_extinction,
            h_floor=args.h_floor,
            dense_grid=args.dense_grid,
            out_dir=args.out,
        )
        print(
            json.dumps(
                {
                    "replicas": result.replicas,
                    "extinct": int((~result.censored).sum()),
                    "median_tau0_slow": float(np.nanmedian(result.tau0_slow))
                    if (~result.censored).any()
                    else None,
                    "n_events_total": int(result.n_events.sum()),
                },
                sort_keys=True,
            )
        )
        return 0

    if cmd == "collapse":
        return _report(
            experiments.exp_collapse(
                N=args.n, replicas=args.replicas, x=args.x, threshold=args.threshold,
                t_max_slow=args.t_max, grid_slow=args.grid, seed=args.seed,
                r_plus=args.r_plus, r_minus=args.r_minus, out_dir=args.out,
            )
        )
    if cmd == "ou-check":
        window = _float_list(args.window)
        return _report(
            experiments.exp_ou_check(
                N=args.n, replicas=args.replicas, window_fast=(window[0], window[1]),
                chain_N=args.chain_n, chain_replicas=args.chain_replicas,
                seed=args.seed, r_plus=args.r_plus, r_minus=args.r_minus,
                out_dir=args.out,
            )
        )
    if cmd == "extinction-scaling":
        return _report(
            experiments.exp_extinction_scaling(
                n_values=_int_list(args.n_list), replicas=args.replicas,
                t_max_slow=args.t_max, x=args.x, seed=args.seed,
                r_plus=args.r_plus, r_minus=args.r_minus, out_dir=args.out,
            )
        )
    if cmd == "diffusion-compare":
        return _report(
            experiments.exp_diffusion_compare(
                N=args.n, replicas=args.replicas, times_slow=_float_list(args.times),
                em_paths=args.em_paths, em_dt=args.em_dt, t_max_slow=args.t_max,
                x=args.x, seed=args.seed, r_plus=args.r_plus, r_minus=args.r_minus,
                out_dir=args.out,
            )
        )
    if cmd == "mfcp":
        return _report(
            experiments.exp_mfcp(
                N=args.n, beta=args.beta, replicas=args.replicas,
                em_paths=args.em_paths, t_max_slow=args.t_max,
                marginal_time=args.marginal_time, seed=args.seed, out_dir=args.out,
            )
        )
    if cmd == "ode-tracking":
        return _report(
            experiments.exp_ode_tracking(
                N=args.n, replicas=args.replicas, seed=args.seed,
                t_fast_max=args.t_fast_max, grid_fast=args.grid_fast,
                r_plus=args.r_plus, r_minus=args.r_minus, out_dir=args.out,
            )
        )
    if cmd == "averaging":
        return _report(
            experiments.exp_averaging(
                n_values=_int_list(args.n_list), replicas=args.replicas,
                t_max_slow=args.t_max, seed=args.seed,
                r_plus=args.r_plus, r_minus=args.r_minus, out_dir=args.out,
            )
        )
    raise ValueError(f"unknown command {cmd}")


if __name__ == "__main__":
    sys.exit(main())
