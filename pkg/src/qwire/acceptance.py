"""Acceptance checks, one per numbered criterion.

Each check returns a :class:`ClaimResult`.  The command line ``verify``
subcommand and ``tests/test_acceptance.py`` both run these functions, so
the printed pass/fail table is the same in both places.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import pauli
from .compiler import compile_czbar, compile_mirror, compile_step_bangbang, compile_transport
from .core import ChainConfig, PauliString
from .oracle import dft_matrix, equivalence_check, qft_network, reversal_permutation
from .scheduler import (CPhase, GateProgram, LocalU, MultiCPhase, QFT, compile_qft,
                        schedule_cphase, schedule_local_rotations, schedule_multi_target)
from .statevector import (H_GATE, X_GATE, Y_GATE, Z_GATE, _czbar_diag, apply_layer_array,
                          fidelity, haar_qubit, init_state, materialize, phase_aligned_distance,
                          product_state, run_schedule, schedule_unitary)

PI = math.pi
TOL = 1e-9


@dataclass
class ClaimResult:
    number: int
    claim_id: str
    passed: bool
    summary: str
    seconds: float = 0.0
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.number:2d} {self.claim_id:<20s} {self.summary} ({self.seconds:.2f}s)"


def _kron_all(mats):
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def _single(n: int, site: int, m: np.ndarray) -> np.ndarray:
    return _kron_all([m if a == site else np.eye(2) for a in range(1, n + 1)])


# ---------------------------------------------------------------------------
# 1, 2: composite identities
# ---------------------------------------------------------------------------

def check_czbar_identity() -> ClaimResult:
    worst = 0.0
    t0 = time.perf_counter()
    for n in range(2, 9):
        u = schedule_unitary(compile_czbar(n))
        worst = max(worst, phase_aligned_distance(u, np.diag(_czbar_diag(n))))
    secs = time.perf_counter() - t0
    ok = worst < TOL and secs < 10
    return ClaimResult(1, "czbar-identity", ok,
                       f"max distance {worst:.2e} over N=2..8 in {secs:.2f}s (limit 10s)",
                       details={"max_distance": worst})


def check_bangbang_step() -> ClaimResult:
    worst = 0.0
    for n in range(2, 9):
        u = schedule_unitary(compile_step_bangbang(n))
        want = _kron_all([H_GATE] * n) @ np.diag(_czbar_diag(n))
        worst = max(worst, phase_aligned_distance(u, want))
    return ClaimResult(2, "bangbang-step", worst < TOL,
                       f"max distance {worst:.2e} over N=2..8", details={"max_distance": worst})


# ---------------------------------------------------------------------------
# 3, 4: propagation and mirror
# ---------------------------------------------------------------------------

def check_propagation_rules() -> ClaimResult:
    letters = {"X": X_GATE, "Y": Y_GATE, "Z": Z_GATE}
    mismatches = 0
    compared = 0
    for n in range(2, 9):
        step = _kron_all([H_GATE] * n) @ np.diag(_czbar_diag(n))
        for site in range(1, n + 1):
            for letter, m in letters.items():
                op = _single(n, site, m)
                p = PauliString.single(n, site, letter)
                for k in range(n + 2):
                    compared += 1
                    if np.linalg.norm(op - p.to_matrix()) > 1e-9:
                        mismatches += 1
                    op = step @ op @ step.conj().T
                    p = pauli.step(p)
    example = pauli.steps(PauliString.single(7, 5, "X"), 2)
    example_ok = str(example) == "+IIXZXZX"
    ok = mismatches == 0 and example_ok
    return ClaimResult(3, "propagation-rules", ok,
                       f"{compared} images compared, {mismatches} mismatches; "
                       f"step^2 X5 at N=7 -> {example}",
                       details={"compared": compared, "mismatches": mismatches,
                                "example": str(example)})


def check_mirror_theorem(seed: int = 0, states: int = 105) -> ClaimResult:
    bad_tracker = []
    for n in range(2, 65):
        images, failures = pauli.mirror_map(n)
        wrong = [k for k, v in images.items() if v != (n + 1 - k[0], k[1], 1)]
        if failures or wrong:
            bad_tracker.append(n)
    rng = np.random.default_rng(seed)
    worst = 1.0
    for i in range(states):
        n = 2 + i % 7
        vecs = [haar_qubit(rng) for _ in range(n)]  # data and junk alike
        out = run_schedule(product_state(vecs), compile_mirror(n))
        worst = min(worst, fidelity(out, product_state(vecs[::-1])))
    ok = not bad_tracker and worst >= 1 - TOL
    return ClaimResult(4, "mirror-theorem", ok,
                       f"tracker failures for N in {bad_tracker or 'none'} (N=2..64); "
                       f"min state fidelity {worst:.12f} over {states} random states",
                       details={"tracker_failures": bad_tracker, "min_fidelity": worst})


# ---------------------------------------------------------------------------
# 5: transport
# ---------------------------------------------------------------------------

def check_perfect_transport(seed: int = 1, per_size: int = 8) -> ClaimResult:
    rng = np.random.default_rng(seed)
    worst = 1.0
    plus = np.array([1, 1]) / math.sqrt(2)
    zero = np.array([1, 0])
    for n in range(2, 9):
        sched = compile_transport(n)
        for _ in range(per_size):
            q = haar_qubit(rng)
            rest = [plus if a % 2 == 0 else zero for a in range(2, n + 1)]
            out = materialize(run_schedule(product_state([q] + rest), sched), sched.ledger)
            rho = out.reduced_density(n)
            worst = min(worst, float(np.real(q.conj() @ rho @ q)))
    return ClaimResult(5, "perfect-transport", worst >= 1 - TOL,
                       f"min fidelity of q1 at site N {worst:.12f} (N=2..8, |+,0,+,...> junk)",
                       details={"min_fidelity": worst})


# ---------------------------------------------------------------------------
# 6-9: gate scheduler
# ---------------------------------------------------------------------------

def check_single_qubit_gates(seed: int = 2, sets: int = 100) -> ClaimResult:
    rng = np.random.default_rng(seed)
    worst = 1.0
    for i in range(sets):
        q = 2 + i % 2
        cfg = ChainConfig.padded(q)
        angles = {a: tuple(rng.uniform(-PI, PI, 3)) for a in range(q)}
        compiled = schedule_local_rotations(angles, cfg)
        prog = GateProgram(q, tuple(LocalU(a, *angles[a]) for a in range(q)))
        rep = equivalence_check(prog, compiled, cfg, trials=2, seed=i)
        worst = min(worst, rep.min_fidelity)
    return ClaimResult(6, "single-qubit-gates", worst >= 1 - TOL,
                       f"min fidelity {worst:.12f} over {sets} random angle sets (2-3 qubits)",
                       details={"min_fidelity": worst})


def check_trapped_cz(seed: int = 3) -> ClaimResult:
    rng = np.random.default_rng(seed)
    thetas = [0.0, PI / 4, PI / 2, PI] + list(rng.uniform(-2 * PI, 2 * PI, 20))
    cfg = ChainConfig.padded(3)
    worst = 1.0
    mode_gap = 0.0
    pairs = [(a, b) for a in range(3) for b in range(3) if a != b]
    for i, theta in enumerate(thetas):
        c, t = pairs[int(rng.integers(len(pairs)))]
        prog = GateProgram(3, (CPhase(c, t, theta), LocalU(t, (PI - theta) / 4, 0.0, 0.0)))
        units = []
        for mode in ("ideal", "pulsed"):
            compiled = schedule_cphase(c, t, theta, cfg, mode=mode, net="residual")
            rep = equivalence_check(prog, compiled, cfg, trials=4, seed=i)
            worst = min(worst, rep.min_fidelity)
            units.append(schedule_unitary(compiled.schedule, with_ledger=True))
        mode_gap = max(mode_gap, phase_aligned_distance(units[0], units[1]))
    ok = worst >= 1 - TOL and mode_gap < TOL
    return ClaimResult(7, "trapped-cz", ok,
                       f"min fidelity vs R_z^t((pi-theta)/4) CZ[theta] {worst:.12f} over "
                       f"{len(thetas)} angles; ideal/pulsed gap {mode_gap:.2e}",
                       details={"min_fidelity": worst, "mode_gap": mode_gap})


def check_multi_target(seed: int = 4) -> ClaimResult:
    rng = np.random.default_rng(seed)
    rows = []
    worst = 1.0
    all_fit = True
    cases = [(2, 0, [1]), (2, 1, [0])] + [(3, c, [t for t in range(3) if t != c]) for c in range(3)]
    for q, c, ts in cases:
        cfg = ChainConfig.padded(q)
        targets = [(t, float(rng.uniform(-PI, PI))) for t in ts]
        compiled = schedule_multi_target(c, targets, cfg)
        rep = equivalence_check(GateProgram(q, (MultiCPhase(c, tuple(targets)),)),
                                compiled, cfg, trials=4)
        worst = min(worst, rep.min_fidelity)
        ticks = compiled.manifest["ticks"]
        fits = ticks <= cfg.n_sites + 1
        all_fit &= fits
        rows.append({"qubits": q, "control": c, "targets": ts, "ticks": ticks,
                     "budget": cfg.n_sites + 1,
                     "forward_ticks": compiled.manifest["forward_ticks"]})
    ok = worst >= 1 - TOL and all_fit
    over = [f"q{r['control']}->{r['targets']}:{r['ticks']}/{r['budget']}" for r in rows
            if r["ticks"] > r["budget"]]
    return ClaimResult(8, "multi-target-cycle", ok,
                       f"oracle min fidelity {worst:.12f}; ticks over one cycle: "
                       f"{', '.join(over) or 'none'}",
                       details={"min_fidelity": worst, "cases": rows})


def check_qft() -> ClaimResult:
    rows = []
    ok = True
    for n in (2, 3, 4):
        cfg = ChainConfig.padded(n)
        compiled = compile_qft(n, cfg)
        rep = equivalence_check(GateProgram(n, (QFT(),)), compiled, cfg, trials=8)
        net_gap = phase_aligned_distance(qft_network(n), reversal_permutation(n) @ dft_matrix(n))
        cycles = compiled.manifest["cycle_count"]
        good = rep.min_fidelity >= 1 - TOL and net_gap < TOL and cycles == n - 1
        ok &= good
        rows.append({"n": n, "min_fidelity": rep.min_fidelity, "cycle_count": cycles,
                     "expected_cycles": n - 1, "ticks": compiled.manifest["ticks"],
                     "cphase_counts": compiled.manifest["cphase_counts"]})
    summary = "; ".join(f"n={r['n']}: fidelity {r['min_fidelity']:.12f}, "
                        f"cycles {r['cycle_count']} (want {r['expected_cycles']})" for r in rows)
    return ClaimResult(9, "qft", ok, summary, details={"cases": rows})


# ---------------------------------------------------------------------------
# 10, 11: performance
# ---------------------------------------------------------------------------

def _random_pauli(n: int, rng: np.random.Generator) -> PauliString:
    return PauliString(rng.integers(0, 2, n, dtype=np.uint8), rng.integers(0, 2, n, dtype=np.uint8), 0)


def time_steps(n: int, count: int, seed: int = 0, repeats: int = 3) -> float:
    """Best wall time of ``count`` tracker steps on ``n`` sites."""
    p = _random_pauli(n, np.random.default_rng(seed))
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        pauli.steps(p, count)
        best = min(best, time.perf_counter() - t0)
    return best


def check_performance() -> ClaimResult:
    one = time_steps(10_000, 1)
    mirror = time_steps(10_000, 10_001, repeats=1)
    # interleave the two sizes so clock-speed drift hits both alike
    per_a = per_b = math.inf
    for i in range(7):
        per_a = min(per_a, time_steps(10_000, 2000, seed=i, repeats=1) / 2000)
        per_b = min(per_b, time_steps(20_000, 2000, seed=i, repeats=1) / 2000)
    ratio = per_b / per_a
    ok = one < 0.1 and mirror < 30 and ratio <= 2.5
    return ClaimResult(10, "performance", ok,
                       f"one step at 1e4: {one * 1e3:.3f} ms (limit 100 ms); mirror at 1e4: "
                       f"{mirror:.2f}s (limit 30s); per-step ratio 2e4/1e4: {ratio:.2f} (limit 2.5)",
                       details={"one_step_s": one, "mirror_s": mirror, "ratio": ratio})


CLAIMS: dict[str, tuple[int, Callable[[], ClaimResult]]] = {
    "czbar-identity": (1, check_czbar_identity),
    "bangbang-step": (2, check_bangbang_step),
    "propagation-rules": (3, check_propagation_rules),
    "mirror-theorem": (4, check_mirror_theorem),
    "perfect-transport": (5, check_perfect_transport),
    "single-qubit-gates": (6, check_single_qubit_gates),
    "trapped-cz": (7, check_trapped_cz),
    "multi-target-cycle": (8, check_multi_target),
    "qft": (9, check_qft),
    "performance": (10, check_performance),
}
SUITE_ID = "verify-runtime"
SUITE_LIMIT_S = 120.0


def run_claim(claim_id: str) -> ClaimResult:
    _, fn = CLAIMS[claim_id]
    t0 = time.perf_counter()
    res = fn()
    res.seconds = time.perf_counter() - t0
    return res


def run_all() -> list[ClaimResult]:
    """Run criteria 1-10, then report the total runtime as criterion 11."""
    t0 = time.perf_counter()
    results = [run_claim(cid) for cid in CLAIMS]
    total = time.perf_counter() - t0
    results.append(ClaimResult(11, SUITE_ID, total < SUITE_LIMIT_S,
                               f"suite runtime {total:.1f}s (limit {SUITE_LIMIT_S:.0f}s)",
                               seconds=total, details={"total_s": total}))
    return results


def claim_ids() -> list[str]:
    return list(CLAIMS) + [SUITE_ID]
