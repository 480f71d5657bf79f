"""Command-line front end.

    jacobifdi run        [--scenario FILE] [--out FILE] [--seed N] [--no-noise] ...
    jacobifdi weights    --emit-weights KIND [--out FILE] [--ts S] [--order N] ...
    jacobifdi calibrate  [--scenario FILE] [--write]

Scenario files are JSON objects whose keys mirror :class:`jacobifdi.sim.Scenario`;
``params`` is an object with :class:`jacobifdi.dynamics.ScaraParams` keys and
``waypoints`` a list of ``[t, [q1, q2, q3]]`` pairs. Omitted keys take the
built-in defaults; unknown keys are rejected.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys

import numpy as np

from .dynamics import ScaraParams
from .jacobi import JacobiBasis
from .kernels import KernelSpec, WindowSpec, default_delay, fir_weights
from .sim import CHANNELS, Scenario, SimulationDiverged, run_scenario

EXIT_CONFIG = 2
EXIT_DIVERGED = 3

_TUPLE_FIELDS = {"fault_times", "fault_amplitudes", "sigma_y", "sigma_u", "threshold"}


class ConfigError(ValueError):
    pass


def scenario_from_dict(data):
    if not isinstance(data, dict):
        raise ConfigError("scenario file must contain a JSON object")
    known = {f.name for f in dataclasses.fields(Scenario)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown scenario keys: {', '.join(unknown)}")
    kw = dict(data)
    if "params" in kw:
        pknown = {f.name for f in dataclasses.fields(ScaraParams)}
        bad = sorted(set(kw["params"]) - pknown)
        if bad:
            raise ConfigError(f"unknown params keys: {', '.join(bad)}")
        kw["params"] = ScaraParams(**kw["params"])
    if "waypoints" in kw:
        kw["waypoints"] = tuple((float(t), tuple(float(v) for v in q)) for t, q in kw["waypoints"])
    for key in _TUPLE_FIELDS & set(kw):
        val = kw[key]
        kw[key] = tuple(float(v) for v in val) if isinstance(val, (list, tuple)) else val
    try:
        return Scenario(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def scenario_to_dict(sc):
    out = {}
    for f in dataclasses.fields(Scenario):
        val = getattr(sc, f.name)
        if f.name == "params":
            val = dataclasses.asdict(val)
        elif f.name == "waypoints":
            val = [[t, list(q)] for t, q in val]
        elif isinstance(val, tuple):
            val = list(val)
        out[f.name] = val
    return out


def load_scenario(path):
    if path is None:
        return Scenario()
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    try:
        return scenario_from_dict(data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scenario {path}: {exc}") from exc


def _apply_overrides(sc, args):
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.no_noise:
        kw["noise"] = False
    if args.no_fault:
        kw["faults"] = False
    if args.no_disturbance:
        kw["disturbance"] = False
    if args.ts is not None:
        # keep the window length T fixed
        T = sc.L * sc.Ts
        L = round(T / args.ts)
        if L < 1 or not math.isclose(L * args.ts, T, rel_tol=1e-9):
            raise ConfigError(f"--ts {args.ts} does not divide the window length {T}")
        kw["Ts"], kw["L"] = args.ts, L
    if args.order is not None:
        kw["N"] = args.order
    if args.alpha is not None:
        kw["alpha"] = args.alpha
    if args.beta is not None:
        kw["beta"] = args.beta
    if args.delay is not None:
        kw["t_d"] = args.delay
    try:
        sc = dataclasses.replace(sc, **kw)
        sc.config.window  # validates alpha/beta/delay combination
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return sc


def format_table(columns, names):
    """Whitespace-separated table with a header row, 17 significant digits."""
    lines = [" ".join(names)]
    for row in np.column_stack(columns):
        lines.append(" ".join(format(float(v), ".17g") for v in row))
    return "\n".join(lines) + "\n"


def _write(text, path):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def parse_kind(text):
    """``plain``, ``derivative:K``, ``coefficient:I[:K]`` or ``modified:I[:K]``."""
    parts = text.strip().lower().split(":")
    name, nums = parts[0], parts[1:]
    try:
        nums = [int(p) for p in nums]
    except ValueError as exc:
        raise ConfigError(f"bad kernel kind {text!r}") from exc
    if name == "plain" and not nums:
        return dict(kind="plain")
    if name == "derivative" and len(nums) == 1:
        return dict(kind="derivative", deriv=nums[0])
    if name in ("coefficient", "modified") and len(nums) in (1, 2):
        return dict(kind=name, index=nums[0], deriv=nums[1] if len(nums) == 2 else 0)
    raise ConfigError(
        f"bad kernel kind {text!r}; use plain, derivative:K, coefficient:I[:K] or modified:I[:K]"
    )


def kernel_spec_from_args(args, sc):
    kind = parse_kind(args.emit_weights)
    try:
        basis = JacobiBasis(sc.alpha, sc.beta)
        T = sc.L * sc.Ts
        t_d = default_delay(basis, sc.N, T) if sc.t_d is None else sc.t_d
        window = WindowSpec(sc.Ts, sc.L, t_d)
        N = kind["index"] if kind["kind"] == "coefficient" else sc.N
        return KernelSpec(basis, N, window, **kind)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_run(args):
    sc = _apply_overrides(load_scenario(args.scenario), args)
    rec = run_scenario(sc)
    _write(format_table([rec[c] for c in CHANNELS], CHANNELS), args.out)
    return 0


def cmd_weights(args):
    sc = _apply_overrides(load_scenario(args.scenario), args)
    filt = fir_weights(kernel_spec_from_args(args, sc))
    idx = np.arange(filt.L)
    _write(format_table([idx, filt.weights], ("index", "weight")), args.out)
    return 0


def calibration_floors(sc):
    """Peak ``|f_hat|`` after warm-up on fault-free pilots.

    Returns ``(floor, noise_floor)``: the first from a noise-free pilot, the
    second with the scenario's noise model (equal to ``floor`` when the
    scenario has noise disabled). The disturbance stays as configured.
    """
    def peak(s):
        rec = run_scenario(s)
        est = np.column_stack([rec["fest1"], rec["fest2"]])
        return np.nanmax(np.abs(est), axis=0)

    base = dataclasses.replace(sc, faults=False)
    floor = peak(dataclasses.replace(base, noise=False))
    noise_floor = peak(base) if sc.noise else floor
    return floor, noise_floor


def cmd_calibrate(args):
    sc = _apply_overrides(load_scenario(args.scenario), args)
    floor, noise_floor = calibration_floors(sc)
    threshold = 5.0 * np.maximum(floor, noise_floor)
    print("floor " + " ".join(format(v, ".17g") for v in floor))
    print("noise_floor " + " ".join(format(v, ".17g") for v in noise_floor))
    print("threshold " + " ".join(format(v, ".17g") for v in threshold))
    if args.write:
        if args.scenario is None:
            raise ConfigError("--write needs --scenario")
        with open(args.scenario, encoding="utf-8") as fh:
            data = json.load(fh)
        data["threshold"] = [float(v) for v in threshold]
        with open(args.scenario, "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=2)
            fh.write("\n")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="jacobifdi", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scenario", help="JSON scenario file (defaults reproduce the SCARA experiment)")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--seed", type=int)
        p.add_argument("--no-noise", action="store_true")
        p.add_argument("--no-fault", action="store_true")
        p.add_argument("--no-disturbance", action="store_true")
        p.add_argument("--ts", type=float, help="sampling period; the window length T is kept")
        p.add_argument("--order", type=int, help="approximation order N")
        p.add_argument("--alpha", type=float)
        p.add_argument("--beta", type=float)
        p.add_argument("--delay", type=float, help="evaluation delay t_d in seconds")
        return p

    common(sub.add_parser("run", help="simulate and write the run record table")).set_defaults(func=cmd_run)
    pw = common(sub.add_parser("weights", help="write FIR weights of one kernel"))
    pw.add_argument("--emit-weights", required=True, metavar="KIND",
                    help="plain | derivative:K | coefficient:I[:K] | modified:I[:K]")
    pw.set_defaults(func=cmd_weights)
    pc = common(sub.add_parser("calibrate", help="measure the residual floor and a detection threshold"))
    pc.add_argument("--write", action="store_true", help="store the threshold in the scenario file")
    pc.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: config: {exc}".replace("\n", " "), file=sys.stderr)
        return EXIT_CONFIG
    except SimulationDiverged as exc:
        print(f"error: diverged: {exc}".replace("\n", " "), file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
