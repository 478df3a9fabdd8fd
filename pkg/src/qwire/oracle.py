"""Dense logical reference for compiled programs.

The oracle knows nothing about pulses.  It builds the logical unitary of a
:class:`~qwire.scheduler.GateProgram` directly from its gate list, embeds it
into the chain with the data layout and |+> buffers, and compares it with
the state-vector execution of a compiled schedule.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .core import ChainConfig, PulseSchedule, serialize_schedule
from .scheduler import (CPhase, GateProgram, LocalU, MultiCPhase, QFT, H_MATRIX,
                        qft_structure, u_matrix)
from .statevector import (PLUS, UNITARY_CAP, ledger_array, apply_layer_array,
                          phase_aligned_distance)


def _on_qubit(u: np.ndarray, q: int, n: int) -> np.ndarray:
    return np.kron(np.kron(np.eye(2 ** q), u), np.eye(2 ** (n - q - 1)))


def cphase_matrix(c: int, t: int, theta: float, n: int) -> np.ndarray:
    """``CZ[theta] = exp(i theta/4 (1 - Z_c)(1 - Z_t))`` on n logical qubits."""
    idx = np.arange(2 ** n)
    bc = (idx >> (n - 1 - c)) & 1
    bt = (idx >> (n - 1 - t)) & 1
    return np.diag(np.exp(1j * theta * (bc & bt))).astype(complex)


def qft_network(n: int) -> np.ndarray:
    """Hadamard and controlled-phase network; equals the DFT followed by a
    reversal of the qubit order."""
    u = np.eye(2 ** n, dtype=complex)
    for x, targets in qft_structure(n):
        u = _on_qubit(H_MATRIX, x, n) @ u
        for t, th in targets:
            u = cphase_matrix(x, t, th, n) @ u
    return u


def dft_matrix(n: int) -> np.ndarray:
    d = 2 ** n
    j = np.arange(d)
    return np.exp(2j * math.pi * np.outer(j, j) / d) / math.sqrt(d)


def reversal_permutation(n: int) -> np.ndarray:
    d = 2 ** n
    p = np.zeros((d, d))
    for i in range(d):
        r = int(format(i, f"0{n}b")[::-1], 2) if n else 0
        p[r, i] = 1
    return p


def op_matrix(op, n: int) -> np.ndarray:
    if isinstance(op, LocalU):
        return _on_qubit(u_matrix(op.alpha, op.beta, op.gamma), op.qubit, n)
    if isinstance(op, CPhase):
        return cphase_matrix(op.control, op.target, op.theta, n)
    if isinstance(op, MultiCPhase):
        u = np.eye(2 ** n, dtype=complex)
        for t, th in op.targets:
            u = cphase_matrix(op.control, t, th, n) @ u
        return u
    if isinstance(op, QFT):
        return qft_network(n)
    raise TypeError(op)


def logical_unitary(program: GateProgram) -> np.ndarray:
    n = program.n_logical
    u = np.eye(2 ** n, dtype=complex)
    for op in program.ops:
        u = op_matrix(op, n) @ u
    return u


def embed_state(psi: np.ndarray, cfg: ChainConfig, layout=None) -> np.ndarray:
    """Chain amplitudes with logical state ``psi`` on ``layout`` and |+> elsewhere."""
    layout = list(cfg.layout if layout is None else layout)
    n, q = cfg.n_sites, len(layout)
    pads = [s for s in range(1, n + 1) if s not in layout]
    full = np.asarray(psi, dtype=complex).reshape(-1)
    for _ in pads:
        full = np.kron(full, PLUS)
    # axes currently ordered as layout + pads; move them to site order
    order = layout + pads
    t = full.reshape([2] * n)
    perm = np.argsort(np.array(order) - 1)
    return np.transpose(t, perm).reshape(-1)


def embedding_matrix(cfg: ChainConfig, layout=None) -> np.ndarray:
    q = len(cfg.layout if layout is None else layout)
    return np.stack([embed_state(e, cfg, layout) for e in np.eye(2 ** q)], axis=1)


def haar_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def run_on(sched: PulseSchedule, psi: np.ndarray, with_ledger: bool = True) -> np.ndarray:
    """Execute ``sched`` on a batch of chain states (columns of ``psi``)."""
    psi = psi.reshape(2 ** sched.sites, -1)
    for layer in sched.layers:
        psi = apply_layer_array(psi, sched.sites, layer)
    if with_ledger:
        psi = ledger_array(psi, sched.sites, sched.ledger)
    return psi


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


@dataclass
class EquivalenceReport:
    passed: bool
    min_fidelity: float
    mean_fidelity: float
    trials: int
    seed: int
    tolerance: float
    schedule_sha256: str
    program_sha256: str
    operator_distance: float | None = None
    counterexample: list | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed, "min_fidelity": self.min_fidelity,
            "mean_fidelity": self.mean_fidelity, "trials": self.trials, "seed": self.seed,
            "tolerance": self.tolerance, "schedule_sha256": self.schedule_sha256,
            "program_sha256": self.program_sha256, "operator_distance": self.operator_distance,
            "counterexample": self.counterexample, "notes": self.notes,
        }


def equivalence_check(program: GateProgram, compiled, cfg: ChainConfig,
                      trials: int = 32, seed: int = 0, tol: float = 1e-9,
                      final_layout=None) -> EquivalenceReport:
    """Compare a compiled schedule with the logical unitary of ``program``.

    Random logical states (Haar over the full logical register, so
    entanglement is covered) are embedded, run through the schedule and its
    ledger, and compared against the embedded oracle output on the final
    layout.  For chains within the unitary cap the phase-aligned operator
    distance on the data subspace is reported too.
    """
    sched = compiled.schedule if hasattr(compiled, "schedule") else compiled
    if final_layout is None and hasattr(compiled, "manifest"):
        final_layout = compiled.manifest.get("final_layout")
    final_layout = list(cfg.layout if final_layout is None else final_layout)
    u = logical_unitary(program)
    q = program.n_logical
    rng = np.random.default_rng(seed)
    inputs = np.stack([haar_state(2 ** q, rng) for _ in range(trials)], axis=1)
    chain_in = np.stack([embed_state(inputs[:, i], cfg) for i in range(trials)], axis=1)
    got = run_on(sched, chain_in)
    want = np.stack([embed_state(u @ inputs[:, i], cfg, final_layout) for i in range(trials)],
                    axis=1)
    fids = np.abs(np.einsum("ij,ij->j", want.conj(), got)) ** 2
    worst = int(np.argmin(fids))
    dist = None
    if sched.sites <= UNITARY_CAP:
        e_in = embedding_matrix(cfg)
        e_out = embedding_matrix(cfg, final_layout)
        dist = phase_aligned_distance(run_on(sched, e_in), e_out @ u)
    passed = bool(fids.min() >= 1 - tol and (dist is None or dist < 1e-6))
    report = EquivalenceReport(
        passed=passed,
        min_fidelity=float(fids.min()),
        mean_fidelity=float(fids.mean()),
        trials=trials,
        seed=seed,
        tolerance=tol,
        schedule_sha256=hashlib.sha256(serialize_schedule(sched)).hexdigest(),
        program_sha256=sha256_text(program.to_text()),
        operator_distance=dist,
    )
    if not passed:
        v = inputs[:, worst]
        report.counterexample = [[float(a.real), float(a.imag)] for a in v]
    return report
