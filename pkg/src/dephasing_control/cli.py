"""Command-line entry point: ``dephasing-control <subcommand> ...``.

Every subcommand writes one table (CSV by default, ``--format json`` for an
array of objects with the same keys). Without ``--out`` the table goes to
``$DEPHASING_CONTROL_OUTDIR/<subcommand>.<format>`` when that variable is
set, otherwise to stdout. Summary lines go to stderr.

Exit codes: 0 success, 2 bad configuration or domain error, 3 infeasible
protocol.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from typing import Sequence

import numpy as np

from . import svg
from .bloch import BlochVector, GridSpec, coherence, flux_field, purity
from .control import (
    OptimizationResult,
    controlled_protocol,
    equator_pulse_angle,
    horizon_sensitivity,
    sweep,
)
from .errors import DephasingError, InfeasibleProtocolError
from .maps import ControlProtocol, Pulse, cp_audit, propagate_uncontrolled, trajectory
from .oracle import build_env, oracle_bloch, oracle_decoherence, oracle_phase
from .spectral import (
    DEFAULT_HORIZON,
    SpectralParams,
    decay_rate,
    decoherence_fn,
    horizon,
    kernel_table,
    phase_fn,
    rate_zero_crossings,
)

OUTDIR_ENV = "DEPHASING_CONTROL_OUTDIR"
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
SWEEP_FIELDS = [
    "s",
    "T",
    "t_tilde",
    "phi_in",
    "pulse_angle",
    "cbar_uncontrolled",
    "cbar_controlled",
    "cbar_controlled_microscopic",
    "feasible",
]


class UsageError(DephasingError):
    pass


def parse_angle(text: str) -> float:
    """Radians, optionally written as a multiple of pi: ``0.2pi``, ``pi/2``."""
    t = text.strip().lower().replace(" ", "")
    try:
        if "pi" in t:
            num, _, den = t.partition("/")
            coef = num.replace("*", "").replace("pi", "")
            value = (float(coef) if coef not in ("", "+", "-") else float(coef + "1")) * math.pi
            return value / float(den) if den else value
        return float(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an angle: {text!r}") from None


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _json_value(v):
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def render_table(rows: Sequence[dict], fieldnames: Sequence[str], fmt: str) -> str:
    if fmt == "json":
        data = [{k: _json_value(r.get(k)) for k in fieldnames} for r in rows]
        return json.dumps(data, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fieldnames)
    for r in rows:
        writer.writerow([_cell(r.get(k)) for k in fieldnames])
    return buf.getvalue()


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(args, rows: Sequence[dict], fieldnames: Sequence[str]) -> None:
    text = render_table(rows, fieldnames, args.format)
    out = args.out
    if out is None and os.environ.get(OUTDIR_ENV):
        out = os.path.join(os.environ[OUTDIR_ENV], f"{args.command}.{args.format}")
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        write_atomic(out, text)


def note(msg: str) -> None:
    print(msg, file=sys.stderr)


def _params(args) -> SpectralParams:
    return SpectralParams(args.s)


# --- subcommands -----------------------------------------------------------


def cmd_rate(args) -> int:
    params = _params(args)
    if args.steps < 1 or args.t_max <= 0:
        raise UsageError("need --steps >= 1 and --t-max > 0")
    grid = np.linspace(0.0, args.t_max, args.steps + 1)
    roots = [r for r in rate_zero_crossings(params) if r <= args.t_max]
    grid = np.unique(np.concatenate([grid, roots]))
    rows = [vars(k) for k in kernel_table(params, grid)]
    emit(args, rows, ["t", "gamma", "big_gamma", "tilde_gamma"])
    if args.svg:
        write_atomic(
            args.svg,
            svg.line_plot(
                [
                    svg.Series(grid, [r["gamma"] for r in rows], "red", "gamma(t)"),
                    svg.Series(grid, [r["big_gamma"] for r in rows], "blue", "Gamma(t)"),
                ],
                xlabel="t",
                title=f"s = {params.s:g}",
            ),
        )
    return 0


def cmd_flux_field(args) -> int:
    params = _params(args)
    samples = flux_field(GridSpec(args.extent, args.resolution), args.t, params)
    emit(args, [vars(p) for p in samples], ["rx", "rz", "flux"])
    note(f"gamma(t={args.t:g}) = {decay_rate(args.t, params):.6g}")
    if args.svg:
        write_atomic(
            args.svg,
            svg.flux_field([(p.rx, p.rz, p.flux) for p in samples], title=f"s = {params.s:g}, t = {args.t:g}"),
        )
    return 0


def _resolve_protocol(args, params):
    """Initial state and protocol from --phi-in/--pulse-* flags ('auto' fills gaps)."""
    if args.phi_in is None:
        phi_in, protocol = controlled_protocol(params, None, args.default_T)
        return phi_in, protocol
    phi_in = args.phi_in
    if args.no_pulse:
        return phi_in, ControlProtocol()
    t_pulse = args.pulse_time
    if t_pulse is None:
        roots = rate_zero_crossings(params)
        if not roots:
            raise InfeasibleProtocolError(f"no sign change of the rate for s={params.s}; give --pulse-time")
        t_pulse = roots[0]
    angle = args.pulse_angle
    if angle is None:
        before = propagate_uncontrolled(BlochVector.from_polar(phi_in), t_pulse, params)
        angle = equator_pulse_angle(before)
    return phi_in, ControlProtocol((Pulse(t_pulse, args.pulse_axis, angle),))


def _horizon_or_default(args, params) -> float:
    if args.t_max is not None:
        return args.t_max
    try:
        return horizon(params, args.default_T)[0]
    except DephasingError:
        return args.default_T


TRAJ_FIELDS = ["t", "rx", "ry", "rz", "purity", "coherence", "inside_ball"]


def _trajectory_rows(traj, mode=None):
    rows = []
    for (t, r), inside in zip(traj, traj.inside_ball):
        row = {
            "t": t,
            "rx": r.rx,
            "ry": r.ry,
            "rz": r.rz,
            "purity": purity(r),
            "coherence": coherence(r),
            "inside_ball": bool(inside),
        }
        if mode:
            row["mode"] = mode
        rows.append(row)
    return rows


def cmd_trajectory(args) -> int:
    params = _params(args)
    phi_in, protocol = _resolve_protocol(args, params)
    T = _horizon_or_default(args, params)
    grid = np.linspace(0.0, T, args.steps + 1)
    r0 = BlochVector.from_polar(phi_in)
    modes = ["fixed", "microscopic"] if args.mode == "both" else [args.mode]
    trajs = {m: trajectory(r0, protocol, grid, params, m) for m in modes}
    if args.mode == "both":
        rows = [row for m in modes for row in _trajectory_rows(trajs[m], m)]
        emit(args, rows, ["mode"] + TRAJ_FIELDS)
    else:
        emit(args, _trajectory_rows(trajs[args.mode]), TRAJ_FIELDS)
    for m, tr in trajs.items():
        note(f"{m}: max |r| = {tr.norms.max():.6f}, outside ball: {int((~tr.inside_ball).sum())} samples")
    if args.svg:
        base, ext = os.path.splitext(args.svg)
        for m, tr in trajs.items():
            legs = _legs(tr)
            path = args.svg if len(trajs) == 1 else f"{base}-{m}{ext or '.svg'}"
            write_atomic(path, svg.disc_trajectory(legs, title=f"{m}, s = {params.s:g}"))
    return 0


def _legs(tr):
    """Split a trajectory into before-pulse (red), jump (green) and after-pulse (blue) legs."""
    if not tr.pulse_times:
        return [(tr.states, "red")]
    tp = tr.pulse_times[0]
    pre_end = int(np.searchsorted(tr.times, tp, side="left")) + 1
    return [
        (tr.states[:pre_end], "red"),
        (tr.states[pre_end - 1 : pre_end + 1], "green"),
        (tr.states[pre_end:], "blue"),
    ]


def cmd_cp_audit(args) -> int:
    params = _params(args)
    _, protocol = _resolve_protocol(args, params)
    T = _horizon_or_default(args, params)
    report = cp_audit(protocol, params, T, args.steps, args.samples, mode=args.mode)
    emit(args, [vars(r) for r in report.rows], ["t", "min_choi_eig", "max_bloch_norm"])
    note(
        f"verdict: {report.verdict} (min Choi eigenvalue {report.min_choi_eigenvalue:.6g}, "
        f"max |r| {report.max_bloch_norm:.6g}, worst t {report.worst_time:.6g})"
    )
    return 0


def cmd_sweep(args) -> int:
    if args.s_steps < 1:
        raise UsageError("--s-steps must be >= 1")
    grid = np.linspace(args.s_min, args.s_max, args.s_steps)
    kept = [float(s) for s in grid if 2.0 < s <= 6.0]
    if len(kept) < len(grid):
        note(f"warning: dropped {len(grid) - len(kept)} grid points outside (2, 6]")
    if not kept:
        raise InfeasibleProtocolError("no Ohmicity values left in (2, 6]")
    results = sweep(kept, args.default_T, args.steps)
    emit(args, [r.as_row() for r in results], SWEEP_FIELDS)
    infeasible = [r.s for r in results if not r.feasible]
    if infeasible:
        note(f"warning: infeasible at s = {infeasible}")
    if args.svg:
        ok = [r for r in results if r.feasible]
        s_vals = [r.s for r in ok]
        write_atomic(
            args.svg,
            svg.line_plot(
                [
                    svg.Series(s_vals, [r.cbar_uncontrolled for r in ok], "black", "uncontrolled"),
                    svg.Series(s_vals, [r.cbar_controlled for r in ok], "red", "controlled"),
                ],
                xlabel="s",
                ylabel="average coherence",
            ),
        )
    return 0 if len(infeasible) < len(results) else EXIT_INFEASIBLE


def cmd_t_sensitivity(args) -> int:
    params = _params(args)
    results = horizon_sensitivity(params, args.T_values, args.steps)
    emit(args, [r.as_row() for r in results], OptimizationResult.csv_fields())
    return 0 if any(r.feasible for r in results) else EXIT_INFEASIBLE


ORACLE_FIELDS = ["t", "gamma_closed", "gamma_oracle", "abs_err", "phase_closed", "phase_oracle", "phase_err"]


def cmd_oracle_validate(args) -> int:
    params = _params(args)
    env = build_env(params, args.n_modes, args.omega_max)
    t_pulse = args.pulse_time
    if t_pulse is None:
        roots = rate_zero_crossings(params)
        t_pulse = roots[0] if roots else args.t_max / 2
    protocol = ControlProtocol((Pulse(t_pulse, "y", args.pulse_angle),))
    theta = args.phi_in
    r0 = BlochVector.from_polar(theta)
    grid = np.linspace(0.0, args.t_max, args.steps)
    G_c = np.asarray(decoherence_fn(grid, params))
    G_o = oracle_decoherence(env, grid)
    P_c = np.asarray(phase_fn(grid, params))
    P_o = oracle_phase(env, grid)
    closed = trajectory(r0, protocol, grid, params, "microscopic")
    rows, bloch_err = [], 0.0
    for i, t in enumerate(grid):
        if t >= t_pulse:
            ro = oracle_bloch(theta, 0.0, args.pulse_angle, t, t_pulse, env)
        else:
            ro = oracle_bloch(theta, 0.0, 0.0, t, t, env)
        rc = _closed_at(closed, t)
        bloch_err = max(bloch_err, float(np.abs(ro.as_array() - rc).max()))
        rows.append(
            {
                "t": float(t),
                "gamma_closed": float(G_c[i]),
                "gamma_oracle": float(G_o[i]),
                "abs_err": float(abs(G_c[i] - G_o[i])),
                "phase_closed": float(P_c[i]),
                "phase_oracle": float(P_o[i]),
                "phase_err": float(abs(P_c[i] - P_o[i])),
            }
        )
    emit(args, rows, ORACLE_FIELDS)
    status = "ok" if bloch_err < 1e-2 else "above 1e-2"
    note(
        f"max |Bloch closed - oracle| = {bloch_err:.3e} ({status}); "
        f"max |Gamma err| = {max(r['abs_err'] for r in rows):.3e}; "
        f"max |phase err| = {max(r['phase_err'] for r in rows):.3e}"
    )
    return 0


def _closed_at(traj, t: float) -> np.ndarray:
    """State at ``t`` taking the post-pulse sample when ``t`` is a pulse instant."""
    idx = int(np.searchsorted(traj.times, t, side="right")) - 1
    return traj.states[idx]


# --- parser ----------------------------------------------------------------


def _common(p, s_default=None):
    if s_default is None:
        p.add_argument("--s", type=float, required=True, help="Ohmicity (1 < s <= 8)")
    else:
        p.add_argument("--s", type=float, default=s_default, help="Ohmicity (1 < s <= 8)")
    p.add_argument("--out", default=None, help="output file ('-' for stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _protocol_flags(p):
    p.add_argument("--phi-in", type=parse_angle, default=None,
                   help="initial polar angle (rad or e.g. 0.2pi); default: boundary-constrained optimum")
    p.add_argument("--pulse-time", type=float, default=None, help="default: first sign change of the rate")
    p.add_argument("--pulse-axis", choices=("x", "y", "z"), default="y")
    p.add_argument("--pulse-angle", type=parse_angle, default=None, help="default: rotate onto the equator")
    p.add_argument("--no-pulse", action="store_true", help="free evolution only")
    p.add_argument("--t-max", type=float, default=None, help="default: protocol horizon")
    p.add_argument("--default-T", type=float, default=DEFAULT_HORIZON)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dephasing-control",
        description="Non-Markovian dephasing with instantaneous control pulses.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rate", help="decay rate, decoherence and phase functions")
    _common(p)
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--svg", default=None)
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("flux-field", help="purity flux on the x-z disc")
    _common(p)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--resolution", type=int, default=41)
    p.add_argument("--extent", type=float, default=1.0)
    p.add_argument("--svg", default=None)
    p.set_defaults(func=cmd_flux_field)

    p = sub.add_parser("trajectory", help="Bloch trajectory under a pulse protocol")
    _common(p)
    _protocol_flags(p)
    p.add_argument("--mode", choices=("fixed", "microscopic", "uncontrolled", "both"), default="both")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--svg", default=None)
    p.set_defaults(func=cmd_trajectory)

    p = sub.add_parser("cp-audit", help="complete-positivity scan of the controlled map")
    _common(p)
    _protocol_flags(p)
    p.add_argument("--mode", choices=("fixed", "microscopic"), default="fixed")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--samples", type=int, default=256)
    p.set_defaults(func=cmd_cp_audit)

    p = sub.add_parser("sweep", help="optimal average coherence versus Ohmicity")
    p.add_argument("--s-min", type=float, default=2.5)
    p.add_argument("--s-max", type=float, default=6.0)
    p.add_argument("--s-steps", type=int, default=8)
    p.add_argument("--default-T", type=float, default=DEFAULT_HORIZON)
    p.add_argument("--steps", type=int, default=10_000)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--svg", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("t-sensitivity", help="controlled protocol for several horizons")
    _common(p)
    p.add_argument("--T-values", type=float, nargs="+", default=[20.0, 30.0, 60.0])
    p.add_argument("--steps", type=int, default=10_000)
    p.set_defaults(func=cmd_t_sensitivity)

    p = sub.add_parser("oracle-validate", help="closed forms against the discretized bath")
    _common(p, s_default=3.0)
    p.add_argument("--n-modes", type=int, default=2000)
    p.add_argument("--omega-max", type=float, default=50.0)
    p.add_argument("--pulse-time", type=float, default=None)
    p.add_argument("--pulse-angle", type=parse_angle, default=math.pi / 2)
    p.add_argument("--phi-in", type=parse_angle, default=0.2 * math.pi)
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--steps", type=int, default=20)
    p.set_defaults(func=cmd_oracle_validate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleProtocolError as exc:
        note(f"error: {exc}")
        return EXIT_INFEASIBLE
    except (DephasingError, ValueError) as exc:
        note(f"error: {exc}")
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
