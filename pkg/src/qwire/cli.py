"""Command-line front end: ``qwire compile|simulate|diagram|verify``.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from .compiler import compile_mirror, compile_transport, transport_composites
from .core import (ChainConfig, PauliString, ScheduleError, parse_schedule, serialize_schedule,
                   validate_schedule)
from .pauli import spacetime_pattern

USAGE_ERROR = 2
VERIFY_FAILURE = 1


class UsageError(Exception):
    pass


def _config(args, n_logical: int) -> ChainConfig:
    if args.layout == "padded":
        return ChainConfig.padded(n_logical)
    return ChainConfig.dense(n_logical)


def _write(path: str | None, data: str | bytes) -> None:
    if isinstance(data, str):
        data = data.encode()
    if path in (None, "-"):
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        Path(path).write_bytes(data)


def _emit(args, schedule, manifest: dict) -> None:
    manifest = dict(manifest)
    manifest["ledger"] = {
        "pauli": None if schedule.ledger.pauli_frame is None else str(schedule.ledger.pauli_frame),
        "pending_z": [[s, a] for s, a in schedule.ledger.pending_z],
    }
    body = serialize_schedule(schedule)
    manifest["schedule_sha256"] = hashlib.sha256(body).hexdigest()
    _write(args.output, body)
    mpath = args.manifest
    if mpath is None and args.output not in (None, "-"):
        mpath = args.output + ".manifest.json"
    if mpath is not None:
        Path(mpath).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# compile
# ---------------------------------------------------------------------------

def cmd_compile(args) -> int:
    from . import scheduler

    what = args.what
    if what in ("transport", "mirror"):
        if args.sites is None or args.sites < 2:
            raise UsageError("--sites must be at least 2")
        n = args.sites
        if what == "transport":
            sched = compile_transport(n, defer_final_z=not args.no_defer)
            manifest = {"operation": "transport", "sites": n,
                        "composites": transport_composites(n)}
        else:
            sched = compile_mirror(n, lowered=args.lowered)
            manifest = {"operation": "mirror", "sites": n, "step_composites": n + 1,
                        "cycle_count": 1, "final_layout": list(range(n, 0, -1))}
        _emit(args, sched, manifest)
        return 0

    if what == "qft":
        if args.qubits is None or args.qubits < 2:
            raise UsageError("--qubits must be at least 2")
        if args.layout != "padded":
            raise UsageError("the QFT needs the padded layout")
        compiled = scheduler.compile_qft(args.qubits, _config(args, args.qubits), args.decoupling)
        _emit(args, compiled.schedule, compiled.manifest)
        return 0

    # gates
    if args.program:
        try:
            program = scheduler.GateProgram.from_text(Path(args.program).read_text())
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read program: {exc}") from None
    elif args.cphase:
        if args.qubits is None:
            raise UsageError("--cphase needs --qubits")
        c, t = args.cphase
        try:
            program = scheduler.GateProgram(args.qubits, (scheduler.CPhase(c, t, args.theta),))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    else:
        raise UsageError("compile gates needs --program FILE or --cphase C T")
    cfg = _config(args, program.n_logical)
    ops = program.ops
    try:
        if len(ops) == 1 and isinstance(ops[0], scheduler.CPhase) and args.net == "residual":
            op = ops[0]
            compiled = scheduler.schedule_cphase(op.control, op.target, op.theta, cfg,
                                                 mode=args.decoupling, net="residual",
                                                 emit=args.emit)
        else:
            compiled = scheduler.compile_program(program, cfg, args.decoupling)
    except (ValueError, scheduler.SchedulingError) as exc:
        raise UsageError(str(exc)) from None
    manifest = dict(compiled.manifest)
    manifest["program_sha256"] = hashlib.sha256(program.to_text().encode()).hexdigest()
    _emit(args, compiled.schedule, manifest)
    return 0


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    from .statevector import (CapExceeded, ChainState, fidelity, haar_qubit, materialize,
                              product_state, run_schedule)

    try:
        raw = Path(args.schedule).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read schedule: {exc}") from None
    try:
        sched = parse_schedule(raw)
    except ScheduleError as exc:
        raise UsageError(f"invalid schedule: {exc}") from None
    problems = validate_schedule(sched)
    if problems:
        raise UsageError("invalid schedule: " + "; ".join(problems))
    n = sched.sites
    rng = np.random.default_rng(args.seed)
    if args.input:
        try:
            psi = ChainState.from_text(Path(args.input).read_text())
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read input state: {exc}") from None
        vecs = None
    else:
        vecs = [haar_qubit(rng) for _ in range(n)]
        try:
            psi = product_state(vecs)
        except CapExceeded as exc:
            raise UsageError(str(exc)) from None
    try:
        out = run_schedule(psi, sched)
    except CapExceeded as exc:
        raise UsageError(str(exc)) from None
    if not args.no_ledger:
        out = materialize(out, sched.ledger)
    report = {"sites": n, "seed": args.seed, "layers": len(sched.layers),
              "schedule_sha256": hashlib.sha256(raw).hexdigest(),
              "ledger_applied": not args.no_ledger, "norm": out.norm(), "expect": args.expect}
    if args.expect == "identity":
        report["fidelity"] = fidelity(out, psi)
    elif args.expect == "mirror":
        if vecs is None:
            raise UsageError("--expect mirror needs a generated product input")
        report["fidelity"] = fidelity(out, product_state(vecs[::-1]))
    if args.state_out:
        Path(args.state_out).write_text(out.to_text())
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    _write(args.report, text)
    if "fidelity" in report and report["fidelity"] < 1 - args.tolerance:
        return VERIFY_FAILURE
    return 0


# ---------------------------------------------------------------------------
# diagram
# ---------------------------------------------------------------------------

def parse_op_spec(spec: str, n: int) -> PauliString:
    """``"X@5"`` or ``"X@5,Z@6"`` into a Pauli string on ``n`` sites."""
    p = PauliString.identity(n)
    try:
        for part in spec.split(","):
            letter, site = part.strip().split("@")
            letter = letter.strip().upper()
            site = int(site)
            if letter not in ("X", "Y", "Z") or not 1 <= site <= n:
                raise ValueError
            p = p * PauliString.single(n, site, letter)
    except ValueError:
        raise UsageError(f"invalid op spec {spec!r}; expected e.g. X@5 with 1 <= site <= {n}") \
            from None
    return p


def cmd_diagram(args) -> int:
    if args.sites is None or args.sites < 2:
        raise UsageError("--sites must be at least 2")
    steps = args.sites + 1 if args.steps is None else args.steps
    if steps < 0:
        raise UsageError("--steps must be non-negative")
    pat = spacetime_pattern(parse_op_spec(args.spec, args.sites), steps)
    _write(args.output, pat.to_svg() if args.format == "svg" else pat.to_ascii())
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args) -> int:
    from . import acceptance

    ids = args.claims
    known = acceptance.claim_ids()
    if not ids:
        raise UsageError("name at least one claim id or 'all'")
    if "all" in ids:
        results = acceptance.run_all()
    else:
        unknown = [c for c in ids if c not in known]
        if unknown:
            raise UsageError(f"unknown claim id(s): {', '.join(unknown)}; "
                             f"known: {', '.join(known)}")
        if acceptance.SUITE_ID in ids:
            results = [r for r in acceptance.run_all() if r.claim_id in ids]
        else:
            results = sorted((acceptance.run_claim(c) for c in ids), key=lambda r: r.number)
    for r in results:
        print(r.line())
    if args.json:
        Path(args.json).write_text(json.dumps(
            [{"number": r.number, "id": r.claim_id, "passed": r.passed, "summary": r.summary,
              "details": r.details} for r in results], indent=2, default=float) + "\n")
    return 0 if all(r.passed for r in results) else VERIFY_FAILURE


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qwire", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compile", help="compile a composite or gate program to a schedule")
    c.add_argument("what", choices=["transport", "mirror", "gates", "qft"])
    c.add_argument("--sites", type=int, help="chain length N (transport, mirror)")
    c.add_argument("--qubits", type=int, help="logical qubit count (gates, qft)")
    c.add_argument("--theta", type=float, default=math.pi,
                   help="controlled-phase angle for --cphase (default pi)")
    c.add_argument("--cphase", type=int, nargs=2, metavar=("C", "T"),
                   help="compile a single CZ[theta] with control C and target T")
    c.add_argument("--program", help="gate program file (see README)")
    c.add_argument("--net", choices=["residual", "clean"], default="residual",
                   help="single --cphase result: residual (default, keeps R_z^t((pi-theta)/4)) "
                        "or clean CZ[theta]")
    c.add_argument("--emit", choices=["ledger", "physical"], default="ledger",
                   help="residual target rotation in the ledger (default) or as pulses")
    c.add_argument("--decoupling", choices=["ideal", "pulsed"], default="ideal",
                   help="end-spin decoupling model (default ideal)")
    c.add_argument("--layout", choices=["padded", "dense"], default="padded",
                   help="data on odd sites with |+> buffers (default) or on every site")
    c.add_argument("--lowered", action="store_true",
                   help="mirror: emit bang-bang lowered steps instead of HBar/CZBar layers")
    c.add_argument("--no-defer", action="store_true",
                   help="transport: emit the final z-rotations instead of ledgering them")
    c.add_argument("--seed", type=int, default=0, help="unused; accepted for uniformity")
    c.add_argument("-o", "--output", help="schedule file (default stdout)")
    c.add_argument("--manifest", help="manifest path (default <output>.manifest.json)")
    c.set_defaults(func=cmd_compile)

    s = sub.add_parser("simulate", help="run a schedule on a seeded random product state")
    s.add_argument("schedule")
    s.add_argument("--seed", type=int, default=0, help="input state seed (default 0)")
    s.add_argument("--input", help="input chain-state file instead of a random product state")
    s.add_argument("--expect", choices=["none", "identity", "mirror"], default="none",
                   help="expected action used for the fidelity entry of the report")
    s.add_argument("--tolerance", type=float, default=1e-9,
                   help="fidelity tolerance for exit code 1 (default 1e-9)")
    s.add_argument("--no-ledger", action="store_true", help="skip ledger materialization")
    s.add_argument("--state-out", help="write the final chain state here")
    s.add_argument("--report", help="report path (default stdout)")
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("diagram", help="space-time pattern of a Pauli operator")
    d.add_argument("spec", help='operator such as "X@5" or "X@2,Z@3"')
    d.add_argument("--sites", type=int, required=True)
    d.add_argument("--steps", type=int, help="number of steps (default sites + 1)")
    d.add_argument("--format", choices=["ascii", "svg"], default="ascii")
    d.add_argument("-o", "--output", help="output path (default stdout)")
    d.set_defaults(func=cmd_diagram)

    v = sub.add_parser("verify", help="run acceptance checks")
    v.add_argument("claims", nargs="*", help="claim ids or 'all'")
    v.add_argument("--json", help="also write the results as JSON")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"qwire {args.command}: error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
