"""Command-line front end: system-file ingestion, reports, trajectories.

System definitions are JSON files with row-major nested arrays:

    {"A": [[...]], "B": [[...]], "C": [[...]], "alpha": 0.5,
     "x0": [[...], ...],                      # optional, k vectors
     "control": {"type": "step", "value": [1.0]}}   # optional

Reports are pretty-printed JSON on stdout (or --out); trajectory, control
and plan tables are CSV.  Exit codes: 0 success, 2 input error, 3 numerical
failure, 4 internal test disagreement.  FRACSYS_SEED overrides --seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .analysis import min_energy_control, structural_report
from .errors import (
    FracsysError, HorizonExceeded, SystemDefinitionError, TestDisagreement,
)
from .fractional import (
    CaputoSystem, ControlSignal, EvolutionOperators, InitialData,
    constant_control, piecewise_constant_control, sine_control,
    solve_forced, solve_homogeneous_batch, zero_control,
)
from .minpoly import DEFAULT_RANK_TOL, minimal_expansion
from .quad import QuadratureSpec
from .sampling import (
    SamplingPlan, build_observation_operator, conditioning_search,
    forced_sample_adjust, max_eigenfrequency, propose_instants,
    reconstruct_x0, reduced_reconstruct,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_DISAGREEMENT = 4

FLOAT_FMT = "%.17g"   # exact float round trip through text


# ---------------------------------------------------------------------------
# system-definition loading

def _matrix_field(payload, name, rows=None, cols=None):
    if name not in payload:
        raise SystemDefinitionError(f"{name}: missing required field")
    try:
        arr = np.array(payload[name], dtype=float)
    except (TypeError, ValueError):
        raise SystemDefinitionError(f"{name}: not a rectangular numeric array") from None
    if arr.ndim != 2:
        raise SystemDefinitionError(f"{name}: expected a nested (2-D) array")
    if rows is not None and arr.shape[0] != rows:
        raise SystemDefinitionError(f"{name}: expected {rows} rows, found {arr.shape[0]}")
    if cols is not None and arr.shape[1] != cols:
        raise SystemDefinitionError(f"{name}: expected {cols} columns, found {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise SystemDefinitionError(f"{name}: contains non-finite entries")
    return arr


def _control_field(spec, m):
    if spec is None:
        return zero_control(m)
    if not isinstance(spec, dict) or "type" not in spec:
        raise SystemDefinitionError("control: expected an object with a 'type' field")
    kind = spec["type"]
    if kind == "zero":
        return zero_control(m)
    if kind == "step":
        value = np.atleast_1d(np.asarray(spec.get("value", [1.0] * m), dtype=float))
        if value.size != m:
            raise SystemDefinitionError(f"control.value: expected {m} entries, found {value.size}")
        return constant_control(value)
    if kind == "sine":
        amp = np.atleast_1d(np.asarray(spec.get("amplitude", [1.0] * m), dtype=float))
        if amp.size != m:
            raise SystemDefinitionError(f"control.amplitude: expected {m} entries, found {amp.size}")
        return sine_control(amp, float(spec.get("frequency", 1.0)), float(spec.get("phase", 0.0)))
    if kind == "table":
        times = spec.get("times")
        values = spec.get("values")
        if times is None or values is None:
            raise SystemDefinitionError("control: table needs 'times' and 'values'")
        values = np.atleast_2d(np.asarray(values, dtype=float))
        if values.shape[1] != m:
            raise SystemDefinitionError(
                f"control.values: expected {m} columns, found {values.shape[1]}")
        try:
            return piecewise_constant_control(times, values)
        except ValueError as exc:
            raise SystemDefinitionError(f"control: {exc}") from None
    raise SystemDefinitionError(f"control.type: unknown kind {kind!r}")


def load_system(path):
    """Parse a system-definition file into (system, initial data, control)."""
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise SystemDefinitionError(f"{path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise SystemDefinitionError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(payload, dict):
        raise SystemDefinitionError(f"{path}: top level must be an object")

    A = _matrix_field(payload, "A")
    n = A.shape[0]
    if A.shape[1] != n:
        raise SystemDefinitionError(f"A: expected square, found shape {A.shape}")
    B = _matrix_field(payload, "B", rows=n)
    C = _matrix_field(payload, "C", cols=n)
    if "alpha" not in payload:
        raise SystemDefinitionError("alpha: missing required field")
    try:
        alpha = float(payload["alpha"])
    except (TypeError, ValueError):
        raise SystemDefinitionError("alpha: not a number") from None
    if alpha <= 0:
        raise SystemDefinitionError("alpha: must be positive")

    try:
        system = CaputoSystem(A=A, B=B, C=C, alpha=alpha)
    except ValueError as exc:
        raise SystemDefinitionError(str(exc)) from None

    if "x0" in payload:
        x0_arr = np.atleast_2d(np.asarray(payload["x0"], dtype=float))
        if x0_arr.shape != (system.k, n):
            raise SystemDefinitionError(
                f"x0: expected {system.k} vectors of length {n}, found shape {x0_arr.shape}")
        x0 = InitialData(x0_arr)
    else:
        x0 = InitialData.zero(system.k, n)

    control = _control_field(payload.get("control"), system.m)
    return system, x0, control


# ---------------------------------------------------------------------------
# report and table emission

def _jsonify(obj):
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonify(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def emit_report(args, command, results, tolerances, started):
    report = {
        "command": command,
        "arguments": {k: _jsonify(v) for k, v in sorted(vars(args).items())
                      if k not in ("func",) and v is not None},
        "tolerances": _jsonify(tolerances),
        "results": _jsonify(results),
        # Wall-clock goes to stderr so seeded reruns stay byte-identical;
        # --timing opts into recording it here.
        "timing_s": round(time.perf_counter() - started, 6) if args.timing else None,
    }
    text = json.dumps(report, indent=2)
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")
    print(f"completed in {time.perf_counter() - started:.3f}s", file=sys.stderr)


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(FLOAT_FMT % v for v in row))
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _resolve_seed(args):
    env = os.environ.get("FRACSYS_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise SystemDefinitionError(f"FRACSYS_SEED: not an integer ({env!r})") from None
    return args.seed


# ---------------------------------------------------------------------------
# subcommands

def cmd_analyze(args):
    started = time.perf_counter()
    system, _, _ = load_system(args.system)
    report = structural_report(system, t=args.horizon, rank_tol=args.tol)
    emit_report(args, "analyze", report.to_dict(),
                {"rank_tol": args.tol, "gramian_eig_tol": 1e-8},
                started)
    return EXIT_OK


def cmd_simulate(args):
    started = time.perf_counter()
    system, x0, control = load_system(args.system)
    if args.t_end <= 0:
        raise SystemDefinitionError("--t-end must be positive")
    if args.steps < 1:
        raise SystemDefinitionError("--steps must be >= 1")
    ops = EvolutionOperators(system)
    grid = np.linspace(0.0, args.t_end, args.steps + 1)
    xs = solve_homogeneous_batch(ops, x0, grid)
    if control.description != "zero":
        quad = QuadratureSpec(tol=args.quad_tol)
        for i, t in enumerate(grid):
            if t > 0:
                xs[i] = solve_forced(ops, x0, control, float(t), quad)
    ys = xs @ system.C.T
    header = (["t"] + [f"x_{i+1}" for i in range(system.n)]
              + [f"y_{i+1}" for i in range(system.s)])
    rows = np.column_stack([grid, xs, ys])
    write_csv(args.out, header, rows)
    if args.out:
        print(f"wrote {rows.shape[0]} rows to {args.out}", file=sys.stderr)
    print(f"completed in {time.perf_counter() - started:.3f}s", file=sys.stderr)
    return EXIT_OK


def _read_csv(path):
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise SystemDefinitionError(f"{path}: empty CSV")
    header = [h.strip() for h in lines[0].split(",")]
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    return header, data


def _read_plan_csv(path):
    header, data = _read_csv(path)
    if "t" not in header:
        raise SystemDefinitionError(f"{path}: plan CSV needs a 't' column")
    return np.sort(data[:, header.index("t")])


def _samples_from_csv(path, system, instants):
    """Return (instants, samples matrix (N, s)) from a samples CSV.

    Accepts either the triple format (t, component_index, value) or a
    trajectory CSV from `simulate` (then `instants` must already be known
    and rows are matched on t).
    """
    header, data = _read_csv(path)
    if header[:3] == ["t", "component_index", "value"]:
        ts = data[:, 0]
        comps = data[:, 1].astype(int)
        vals = data[:, 2]
        uniq = np.unique(ts)
        if instants is None:
            instants = uniq
        Y = np.full((len(instants), system.s), np.nan)
        for t, c, v in zip(ts, comps, vals):
            idx = np.argmin(np.abs(instants - t))
            if abs(instants[idx] - t) > 1e-9 * max(1.0, abs(t)):
                continue   # sample outside the requested plan
            if not 1 <= c <= system.s:
                raise SystemDefinitionError(
                    f"component_index {c} outside 1..{system.s}")
            Y[idx, c - 1] = v
        return np.asarray(instants, dtype=float), Y
    if header[0] == "t" and any(h.startswith("y_") for h in header):
        if instants is None:
            raise SystemDefinitionError(
                "trajectory-format samples need --plan to select instants")
        ycols = [header.index(f"y_{i+1}") for i in range(system.s)]
        Y = np.full((len(instants), system.s), np.nan)
        for idx, t in enumerate(instants):
            row = np.argmin(np.abs(data[:, 0] - t))
            if abs(data[row, 0] - t) > 1e-9 * max(1.0, abs(t)):
                raise SystemDefinitionError(
                    f"plan instant {t!r} not found in trajectory grid")
            Y[idx] = data[row, ycols]
        return np.asarray(instants, dtype=float), Y
    raise SystemDefinitionError(
        f"{path}: unrecognized samples header {header[:4]}")


def cmd_reconstruct(args):
    started = time.perf_counter()
    system, _, control = load_system(args.system)
    ops = EvolutionOperators(system)
    instants = _read_plan_csv(args.plan) if args.plan else None
    instants, Y = _samples_from_csv(args.samples, system, instants)
    if np.any(instants <= 0):
        raise SystemDefinitionError("sampling instants must be strictly positive")

    forced = control.description != "zero"
    quad = QuadratureSpec(tol=args.quad_tol)
    if forced:
        for i, t in enumerate(instants):
            present = ~np.isnan(Y[i])
            if present.any():
                adjusted = forced_sample_adjust(ops, control, float(t),
                                                np.nan_to_num(Y[i]), quad)
                Y[i, present] = adjusted[present]

    kn = system.k * system.n
    if args.reduced:
        if args.counts:
            counts = tuple(int(c) for c in args.counts.split(","))
        else:
            base, extra = divmod(kn, system.s)
            counts = tuple(base + (1 if i < extra else 0) for i in range(system.s))
        pool = instants[:max(counts)]
        plan = SamplingPlan(instants=pool, eta=float(pool[0]),
                            omega=max_eigenfrequency(system.A),
                            window=float(pool[-1] - pool[0]) or 1.0,
                            per_component=counts)
        samples = []
        for i, ni in enumerate(counts):
            for j in range(ni):
                v = Y[j, i]
                if np.isnan(v):
                    raise SystemDefinitionError(
                        f"missing sample for component {i+1} at instant {instants[j]!r}")
                samples.append(v)
        result = reduced_reconstruct(ops, plan, np.asarray(samples))
        mode = "reduced"
    else:
        mask = ~np.isnan(Y).any(axis=1)
        if not mask.all():
            instants = instants[mask]
            Y = Y[mask]
        plan = SamplingPlan(instants=instants, eta=float(instants[0]),
                            omega=max_eigenfrequency(system.A),
                            window=float(instants[-1] - instants[0]) or 1.0)
        omega_op = build_observation_operator(ops, plan)
        result = reconstruct_x0(omega_op, Y.ravel(), rank_tol=args.tol)
        mode = "full"

    results = {
        "mode": mode,
        "x0_hat": result.x0_hat.reshape(system.k, system.n),
        "residual": result.residual,
        "condition_number": result.condition_number,
        "sample_count": result.sample_count,
        "forced_adjustment": forced,
        "instants": instants,
    }
    emit_report(args, "reconstruct", results,
                {"rank_tol": args.tol, "quad_tol": args.quad_tol}, started)
    return EXIT_OK


def cmd_control(args):
    started = time.perf_counter()
    system, x0, _ = load_system(args.system)
    target = np.asarray([float(v) for v in args.target.split(",")])
    if target.size != system.n:
        raise SystemDefinitionError(
            f"--target: expected {system.n} entries, found {target.size}")
    if args.t <= 0:
        raise SystemDefinitionError("--t must be positive")
    ops = EvolutionOperators(system)
    grid = np.linspace(0.0, args.t, args.grid + 1)
    plan = min_energy_control(ops, target, x0, args.t,
                              quad=QuadratureSpec(tol=args.quad_tol), grid=grid)
    # CSV only after the solve succeeded: a singular Gramian leaves no file.
    write_csv(args.out, ["t"] + [f"u_{i+1}" for i in range(system.m)],
              np.column_stack([plan.grid, plan.values]))
    results = {
        "target": target,
        "horizon": plan.horizon,
        "terminal_state": plan.terminal_state,
        "terminal_error": plan.terminal_error,
        "gramian_min_eigenvalue": plan.gramian_min_eigenvalue,
        "gain": plan.gain,
        "csv": args.out,
    }
    out_save, args.out = args.out, None   # report to stdout, CSV already written
    emit_report(args, "control", results, {"quad_tol": args.quad_tol}, started)
    args.out = out_save
    return EXIT_OK


def cmd_sample_plan(args):
    started = time.perf_counter()
    system, _, _ = load_system(args.system)
    ops = EvolutionOperators(system)
    seed = _resolve_seed(args)
    count = args.count if args.count else ops.mu * system.k
    omega_freq = max_eigenfrequency(system.A)
    if args.trials > 1:
        plan = conditioning_search(ops, trials=args.trials, seed=seed,
                                   eta=args.eta, count=count)
    else:
        plan = propose_instants(omega_freq, args.eta, count, seed=seed)
        op = build_observation_operator(ops, plan)
        sv = np.linalg.svd(op, compute_uv=False)
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
        plan = plan.with_condition(cond)
    results = {
        "instants": plan.instants,
        "count": plan.count,
        "eta": plan.eta,
        "omega": plan.omega if np.isfinite(plan.omega) else "inf",
        "window": plan.window,
        "condition_number": plan.condition_number,
        "seed": seed,
        "trials": args.trials,
    }
    if args.out and args.out.endswith(".csv"):
        write_csv(args.out, ["t"], plan.instants[:, None])
        out_save, args.out = args.out, None
        emit_report(args, "sample-plan", results, {}, started)
        args.out = out_save
    else:
        emit_report(args, "sample-plan", results, {}, started)
    return EXIT_OK


def cmd_coeffs(args):
    started = time.perf_counter()
    system, _, _ = load_system(args.system)
    exp = minimal_expansion(system.A, tol=args.tol)
    p = args.p if args.p is not None else exp.horizon
    if p > exp.horizon:
        raise HorizonExceeded(
            f"--p {p} beyond tabulated horizon {exp.horizon}")
    if p < exp.mu:
        raise SystemDefinitionError(f"--p must be >= mu ({exp.mu})")
    results = {
        "n": exp.n,
        "mu": exp.mu,
        "horizon": exp.horizon,
        "power_rows": {str(q): exp.coefficients(q) for q in range(exp.mu, p + 1)},
        "characteristic_row": exp.a_char,
        "reconstruction_residual": exp.reconstruction_residual,
    }
    emit_report(args, "coeffs", results, {"rank_tol": args.tol}, started)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="fracsys",
        description="Caputo fractional LTI systems: analysis, simulation, "
                    "sampling reconstruction, minimum-energy control.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("system", help="system-definition JSON file")
        p.add_argument("--out", help="write the report/table here instead of stdout")
        p.add_argument("--timing", action="store_true",
                       help="record wall-clock time in the JSON report")

    p = sub.add_parser("analyze", help="run the six structural tests")
    common(p)
    p.add_argument("--horizon", type=float, default=1.0, help="Gramian time horizon")
    p.add_argument("--tol", type=float, default=DEFAULT_RANK_TOL, help="rank tolerance")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="trajectory CSV on a uniform grid")
    common(p)
    p.add_argument("--t-end", type=float, required=True, dest="t_end")
    p.add_argument("--steps", type=int, default=100, help="number of grid intervals")
    p.add_argument("--quad-tol", type=float, default=1e-8, dest="quad_tol")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="recover initial data from samples")
    common(p)
    p.add_argument("--samples", required=True,
                   help="CSV of samples: 't,component_index,value' or simulate output")
    p.add_argument("--plan", help="CSV with a 't' column selecting the instants")
    p.add_argument("--reduced", action="store_true",
                   help="use the square per-component scheme")
    p.add_argument("--counts", help="per-component counts 'n1,n2,...' (reduced mode)")
    p.add_argument("--tol", type=float, default=DEFAULT_RANK_TOL)
    p.add_argument("--quad-tol", type=float, default=1e-8, dest="quad_tol")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("control", help="minimum-energy steering input")
    common(p)
    p.add_argument("--target", required=True, help="comma-separated target state")
    p.add_argument("--t", type=float, required=True, help="steering horizon")
    p.add_argument("--grid", type=int, default=100, help="number of output intervals")
    p.add_argument("--quad-tol", type=float, default=1e-10, dest="quad_tol")
    p.set_defaults(func=cmd_control)

    p = sub.add_parser("sample-plan", help="propose well-conditioned instants")
    common(p)
    p.add_argument("--count", type=int, help="instants to draw (default mu*k)")
    p.add_argument("--eta", type=float, default=0.1, help="window start (> 0)")
    p.add_argument("--trials", type=int, default=1,
                   help="candidate plans for the conditioning search")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sample_plan)

    p = sub.add_parser("coeffs", help="power-expansion coefficient tables")
    common(p)
    p.add_argument("--p", type=int, help="highest tabulated power to emit")
    p.add_argument("--tol", type=float, default=DEFAULT_RANK_TOL)
    p.set_defaults(func=cmd_coeffs)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TestDisagreement as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.details:
            print(json.dumps(_jsonify(exc.details), indent=2), file=sys.stderr)
        return EXIT_DISAGREEMENT
    except SystemDefinitionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FracsysError as exc:
        print(f"error: {exc.__class__.__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
