"""Command-line entry point: ``nhpt <command> [options]``."""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import scenarios, verify
from .dynamics import IntegrationConfig, IntegrationError, integrate, basis_state, transition_matrix
from .io import thread_count, write_csv
from .operators import GeneralOperator, HermitianOperator, eigendecompose, matrix_elements, read_operator
from .perturbation import first_order, weak_limit_compare
from .pulses import PulseKind, gaussian_pulse, modulated_pole_pulse, parse_pulse, pole_pulse
from .spectrum import numerical_spectrum


class UsageError(ValueError):
    pass


# options that a config file may set: name -> (type, default)
SHARED = {
    "system": (str, "ep2"),
    "h0": (str, None),
    "h1": (str, None),
    "pulse": (str, "pole:A=1,tp=0.5"),
    "init": (int, 1),
    "tmax": (float, 2000.0),
    "rtol": (float, 1e-10),
    "atol": (float, 1e-12),
    "out": (str, None),
}


def read_config(path) -> dict:
    """Flat ``key = value`` file; blank lines and ``#`` comments ignored."""
    out = {}
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file {path} not found")
    for i, raw in enumerate(p.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, val = line.partition("=")
        if not eq:
            raise UsageError(f"{path}:{i}: expected key=value")
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def resolve(args, parser_defaults: dict) -> argparse.Namespace:
    """Fill unset options from the config file, then from built-in defaults."""
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    unknown = set(cfg) - set(vars(args))
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key, default in parser_defaults.items():
        if getattr(args, key, None) is not None:
            continue
        if key in cfg:
            typ = SHARED.get(key, (str, None))[0]
            try:
                setattr(args, key, typ(cfg[key]))
            except ValueError:
                raise UsageError(f"config value for {key} is not a valid {typ.__name__}") from None
        else:
            setattr(args, key, default)
    return args


def integration_config(args) -> IntegrationConfig:
    try:
        return IntegrationConfig(t_start=-args.tmax, t_end=args.tmax, rel_tol=args.rtol, abs_tol=args.atol)
    except ValueError as e:
        raise UsageError(str(e)) from None


def load_system(args):
    """Return (name, h0, h1) from a builtin or from operator files."""
    if args.h0 or args.h1:
        if not (args.h0 and args.h1):
            raise UsageError("--h0 and --h1 must be given together")
        for f in (args.h0, args.h1):
            if not Path(f).is_file():
                raise UsageError(f"operator file {f} not found")
        h0, h1 = read_operator(args.h0), read_operator(args.h1)
        if h0.shape != h1.shape:
            raise UsageError("H0 and H1 dimensions differ")
        return "custom", HermitianOperator(h0), GeneralOperator(h1)
    if args.system not in scenarios.SYSTEMS:
        raise UsageError(f"unknown system {args.system!r}; choose from {', '.join(scenarios.SYSTEMS)}")
    h0, h1 = scenarios.SYSTEMS[args.system]()
    return args.system, h0, h1


def init_index(args, dim: int) -> int:
    if not 1 <= args.init <= dim:
        raise UsageError(f"--init must be in 1..{dim}")
    return args.init - 1


def _fmt_pops(P) -> str:
    return " ".join(f"|c{l + 1}|^2={x:.6g}" for l, x in enumerate(P))


def cmd_simulate(args) -> int:
    name, h0, h1 = load_system(args)
    p = parse_pulse(args.pulse)
    n = init_index(args, h0.dim)
    res = scenarios.run_scenario(name, p, n, integration_config(args), figure="simulate", h0=h0, h1=h1)
    if args.out:
        res.export(args.out)
    print(f"pulse {p.describe()}  initial state {n + 1}")
    print("final populations: " + _fmt_pops(res.final_populations))
    print(f"eps_trunc {res.convergence.eps_trunc:.3g}")
    print(f"verdict {res.verdict}")
    return 0


def cmd_reproduce(args) -> int:
    ids = list(scenarios.FIGURES) if args.figure == "all" else [args.figure]
    for f in ids:
        if f not in scenarios.FIGURES:
            raise UsageError(f"unknown figure {f!r}; choose from {', '.join(scenarios.FIGURES)} or all")
    cfg = integration_config(args)
    out = args.out or "figures"

    def run(fid):
        return scenarios.run_figure(fid, cfg, out)

    with ThreadPoolExecutor(max_workers=min(thread_count(), len(ids))) as ex:
        results = list(ex.map(run, ids))
    print(f"{'figure':<7} {'init':>4} {'winding':>7}  {'verdict':<14} final populations")
    for r in results:
        w = r.loop.winding if r.loop is not None else "-"
        print(f"{r.figure:<7} {r.init + 1:>4} {w!s:>7}  {str(r.verdict):<14} "
              + " ".join(f"{x:.6g}" for x in r.final_populations))
    print(f"artifacts in {out}/")
    return 0


def cmd_spectrum(args) -> int:
    p = parse_pulse(args.pulse)
    try:
        sg = numerical_spectrum(p, t_max=args.tmax, n_samples=args.samples, tail_correction=args.tail_correction)
    except ValueError as e:
        raise UsageError(str(e)) from None
    if args.out:
        sg.to_csv(Path(args.out) / "spectrum.csv")
    fb = sg.forbidden
    rel = ">" if fb.side == "above" else "<"
    print(f"pulse {p.describe()}  t_max {args.tmax:g}  samples {args.samples}")
    print(f"leakage(omega {rel} {fb.edge:g}) = {sg.leakage:.3e}")
    return 0


def cmd_transition_matrix(args) -> int:
    name, h0, h1 = load_system(args)
    p = parse_pulse(args.pulse)
    basis = eigendecompose(h0)
    M = matrix_elements(h1, basis)
    if args.scale is not None:
        rep = weak_limit_compare(basis, M, p, args.scale, integration_config(args))
        tm = rep.first_order if args.first_order else rep.numeric
        print(f"weak limit scale {args.scale:g}: max relative deviation {rep.max_rel_deviation:.3e} "
              f"over {rep.compared} entries")
    elif args.first_order:
        tm = first_order(basis, M, p)
    else:
        tm = transition_matrix(basis, M, p, integration_config(args))
    if args.out:
        tm.to_csv(Path(args.out) / "transition_matrix.csv")
    print(f"{tm.source} W[n][m] (row n = initial state, column m = final state)")
    for row in tm.W:
        print("  " + "  ".join(f"{x:12.6g}" for x in row))
    return 0


def cmd_verify(args) -> int:
    reports = verify.run_suites(args.suite, args.seed, args.trials)
    text = "\n".join(r.format() for r in reports)
    if args.out:
        path = Path(args.out) / f"verify_{args.suite}_{args.seed}.txt"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    print(text, end="")
    ok = all(r.passed for r in reports)
    print(f"overall {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def parse_range(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError("--range must be start:stop:step")
    try:
        a, b, h = map(float, parts)
    except ValueError:
        raise UsageError("--range values must be numbers") from None
    if h <= 0 or b < a:
        raise UsageError("--range needs step > 0 and stop >= start")
    n = int(np.floor((b - a) / h + 1e-9)) + 1
    return a + h * np.arange(n)


def _swept_pulse(base, param: str, v: float):
    if param == "A":
        if base.kind is PulseKind.GAUSSIAN_REAL:
            return gaussian_pulse(v, base.sigma)
        return replace(base, A=v)
    if param == "tp":
        if not base.is_pole:
            raise UsageError("sweeping tp needs a pole pulse")
        if v == 0:
            raise UsageError("tp = 0 puts the pole on the real axis")
        return replace(base, t_p=v)
    if not base.is_pole:
        raise UsageError("sweeping Omega needs a pole pulse")
    if v == 0:
        return pole_pulse(base.A, base.t_p)
    return modulated_pole_pulse(base.A, base.t_p, v)


def cmd_sweep(args) -> int:
    name, h0, h1 = load_system(args)
    spec = args.pulse
    if args.param == "Omega" and spec.startswith("modpole") and "omega" not in spec.lower():
        spec += ",Omega=0"  # the swept value supplies it
    base = parse_pulse(spec)
    values = parse_range(args.range)
    basis = eigendecompose(h0)
    M = matrix_elements(h1, basis)
    n = init_index(args, basis.dim)
    v0 = basis_state(n, basis.dim)
    cfg = integration_config(args)
    pulses = [_swept_pulse(base, args.param, float(v)) for v in values]

    def run(p):
        tr = integrate(basis, M, p, v0, cfg, times=np.array([]))
        return tr.final_populations

    with ThreadPoolExecutor(max_workers=thread_count()) as ex:
        finals = list(ex.map(run, pulses))
    rows = []
    print(f"{args.param:>10}  {'verdict':<14} final populations")
    for v, P in zip(values, finals):
        vd = scenarios.verdict(P, n)
        rows.append([v, *P, str(vd)])
        print(f"{v:>10.6g}  {str(vd):<14} " + " ".join(f"{x:.6g}" for x in P))
    if args.out:
        header = [args.param] + [f"pop_{l}" for l in range(1, basis.dim + 1)] + ["verdict"]
        write_csv(Path(args.out) / "sweep.csv", header, rows)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="nhpt", description="Non-Hermitian pulse dynamics toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    defaults = {}

    def add(name, func, help_, opts):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=func)
        sp.add_argument("--config", help="flat key=value file; command-line flags override it")
        d = {}
        for opt in opts:
            typ, default = SHARED[opt]
            flag = "--" + opt
            sp.add_argument(flag, type=typ, default=None, help=f"default: {default}")
            d[opt] = default
        defaults[name] = d
        return sp

    system = ["system", "h0", "h1"]
    integ = ["tmax", "rtol", "atol"]
    add("simulate", cmd_simulate, "integrate one initial state", system + ["pulse", "init"] + integ + ["out"])
    sp = add("reproduce", cmd_reproduce, "rerun a figure panel (or all)", integ + ["out"])
    sp.add_argument("figure", help="fig1a ... fig5b, or all")
    sp = add("spectrum", cmd_spectrum, "numerical Fourier spectrum of a pulse", ["pulse", "tmax", "out"])
    sp.add_argument("--samples", type=int, default=2**18)
    sp.add_argument("--tail-correction", action="store_true")
    sp = add("transition-matrix", cmd_transition_matrix, "full or first-order W", system + ["pulse"] + integ + ["out"])
    sp.add_argument("--first-order", action="store_true")
    sp.add_argument("--scale", type=float, help="weak-limit comparison at this pulse scale")
    sp = add("verify", cmd_verify, "randomized theorem suites", ["out"])
    sp.add_argument("--suite", choices=verify.SUITES, default="all")
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--trials", type=int, default=50)
    sp = add("sweep", cmd_sweep, "scan A, tp or Omega", system + ["pulse", "init"] + integ + ["out"])
    sp.add_argument("--param", choices=["A", "tp", "Omega"], required=True)
    sp.add_argument("--range", required=True, help="start:stop:step (stop included)")
    return parser, defaults


def main(argv=None) -> int:
    parser, defaults = build_parser()
    args = parser.parse_args(argv)
    try:
        resolve(args, defaults[args.command])
        return args.func(args)
    except (UsageError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except IntegrationError as e:
        print(f"integration failed: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
