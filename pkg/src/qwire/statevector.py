"""Dense state-vector execution of pulse schedules.

Basis ordering: site 1 is the most significant bit of the basis index, so a
product state is ``kron(psi_1, psi_2, ..., psi_N)``.
"""
from __future__ import annotations

import math
from functools import lru_cache
from typing import Sequence

import numpy as np

from .core import ChainConfig, FrameLedger, PulseLayer, PulseSchedule, layer_violations

STATE_CAP = 14
UNITARY_CAP = 10

SQ2 = 1 / math.sqrt(2)
H_GATE = np.array([[SQ2, SQ2], [SQ2, -SQ2]], dtype=complex)
X_GATE = np.array([[0, 1], [1, 0]], dtype=complex)
Y_GATE = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z_GATE = np.diag([1, -1]).astype(complex)
PLUS = np.array([SQ2, SQ2], dtype=complex)
ZERO = np.array([1, 0], dtype=complex)


def rz(t: float) -> np.ndarray:
    """exp(-i t Z)"""
    return np.diag([np.exp(-1j * t), np.exp(1j * t)])


def rx(t: float) -> np.ndarray:
    """exp(-i t X)"""
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, -1j * s], [-1j * s, c]])


def ry(t: float) -> np.ndarray:
    """exp(-i t Y)"""
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, -s], [s, c]], dtype=complex)


class CapExceeded(ValueError):
    pass


class ChainState:
    """Normalized amplitude vector over ``n`` sites."""

    __slots__ = ("n", "amplitudes")

    def __init__(self, n: int, amplitudes, cap: int = STATE_CAP):
        if n > cap:
            raise CapExceeded(f"{n} sites exceeds the state-vector cap {cap}")
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != 2 ** n:
            raise ValueError("amplitude vector has the wrong length")
        self.n = n
        self.amplitudes = amps

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "ChainState":
        return ChainState(self.n, self.amplitudes.copy(), cap=max(self.n, STATE_CAP))

    def to_text(self, tol: float = 0.0) -> str:
        lines = [f"chain-state {self.n}"]
        for i, a in enumerate(self.amplitudes):
            if abs(a) > tol:
                lines.append(f"{i} {float(a.real)!r} {float(a.imag)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ChainState":
        lines = text.strip().splitlines()
        n = int(lines[0].split()[1])
        amps = np.zeros(2 ** n, dtype=complex)
        for ln in lines[1:]:
            i, re_, im_ = ln.split()
            amps[int(i)] = complex(float(re_), float(im_))
        return cls(n, amps)

    def reduced_density(self, site: int) -> np.ndarray:
        psi = self.amplitudes.reshape(2 ** (site - 1), 2, 2 ** (self.n - site))
        return np.einsum("aib,ajb->ij", psi, psi.conj())


def product_state(vectors: Sequence[np.ndarray]) -> ChainState:
    out = np.array([1.0 + 0j])
    for v in vectors:
        v = np.asarray(v, dtype=complex)
        out = np.kron(out, v / np.linalg.norm(v))
    return ChainState(len(vectors), out)


def haar_qubit(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return v / np.linalg.norm(v)


def init_state(cfg: ChainConfig, data="random", junk_mode: str = "plus",
               seed: int | None = None) -> ChainState:
    """Product state with ``data`` on the layout sites and junk elsewhere.

    ``data`` is a list of single-qubit vectors (one per logical qubit) or the
    string ``"random"`` for seeded Haar-random states.  ``junk_mode`` is one
    of ``plus``, ``zero`` or ``random``.
    """
    rng = np.random.default_rng(seed)
    if isinstance(data, str):
        if data != "random":
            raise ValueError("data must be a list of states or 'random'")
        data = [haar_qubit(rng) for _ in cfg.layout]
    if len(data) != cfg.n_logical:
        raise ValueError("one data state per logical qubit required")
    vecs: list[np.ndarray | None] = [None] * cfg.n_sites
    for site, v in zip(cfg.layout, data):
        vecs[site - 1] = np.asarray(v, dtype=complex)
    for i in range(cfg.n_sites):
        if vecs[i] is None:
            if junk_mode == "plus":
                vecs[i] = PLUS
            elif junk_mode == "zero":
                vecs[i] = ZERO
            elif junk_mode == "random":
                vecs[i] = haar_qubit(rng)
            else:
                raise ValueError(f"unknown junk mode {junk_mode!r}")
    return product_state(vecs)


# ---------------------------------------------------------------------------
# kernels on arrays of shape (2**n, batch)
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def _spins(n: int) -> np.ndarray:
    """(2**n, n) array of z eigenvalues (+1 for |0>, -1 for |1>)."""
    idx = np.arange(2 ** n)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    return (1 - 2 * bits).astype(np.int8)


def _bonds(n: int, decoupled: Sequence[int]) -> list[tuple[int, int]]:
    d = set(decoupled)
    return [(a, a + 1) for a in range(1, n) if a not in d and a + 1 not in d]


def _ising_diag(n: int, angle: float, decoupled: Sequence[int]) -> np.ndarray:
    s = _spins(n).astype(np.int64)
    total = np.zeros(2 ** n, dtype=np.int64)
    for a, b in _bonds(n, decoupled):
        total += s[:, a - 1] * s[:, b - 1]
    return np.exp(-1j * angle * total)


@lru_cache(maxsize=32)
def _czbar_diag(n: int) -> np.ndarray:
    s = _spins(n)
    bits = (1 - s) // 2
    par = np.zeros(2 ** n, dtype=np.int64)
    for a in range(n - 1):
        par += bits[:, a] * bits[:, a + 1]
    return np.where(par % 2 == 0, 1.0, -1.0).astype(complex)


def _apply_1q(psi: np.ndarray, n: int, site: int, u: np.ndarray) -> np.ndarray:
    batch = psi.shape[1]
    t = psi.reshape(2 ** (site - 1), 2, (2 ** (n - site)) * batch)
    t = np.einsum("ij,ajb->aib", u, t)
    return t.reshape(2 ** n, batch)


def _apply_all(psi: np.ndarray, n: int, u: np.ndarray, skip: Sequence[int] = ()) -> np.ndarray:
    for site in range(1, n + 1):
        if site not in skip:
            psi = _apply_1q(psi, n, site, u)
    return psi


def apply_layer_array(psi: np.ndarray, n: int, layer: PulseLayer) -> np.ndarray:
    """Apply ``layer`` to the columns of ``psi`` (shape ``(2**n, batch)``)."""
    problems = layer_violations(layer, n)
    if problems:
        raise ValueError(f"invalid layer {layer}: {problems[0]}")
    k = layer.kind
    if k == "HBar":
        return _apply_all(psi, n, H_GATE, layer.decoupled_sites)
    if k == "HyBar":
        return _apply_all(psi, n, rx(math.pi / 4), layer.decoupled_sites)
    if k == "CZBar":
        return psi * _czbar_diag(n)[:, None]
    if k == "IsingEvolve":
        return psi * _ising_diag(n, layer.angle, layer.decoupled_sites)[:, None]
    if k == "GlobalRz":
        z = _spins(n).astype(np.int64).sum(axis=1)
        return psi * np.exp(-1j * layer.angle * z)[:, None]
    if k == "GlobalRy":
        return _apply_all(psi, n, ry(layer.angle))
    if k == "LocalRz" or k == "EdgeRz":
        return _apply_1q(psi, n, layer.target_site(n), rz(layer.angle))
    if k == "LocalRx":
        return _apply_1q(psi, n, layer.site, rx(layer.angle))
    raise ValueError(f"unsupported layer kind {k}")


def apply_layer(s: ChainState, layer: PulseLayer) -> ChainState:
    psi = apply_layer_array(s.amplitudes.reshape(-1, 1), s.n, layer)
    return ChainState(s.n, psi[:, 0], cap=max(s.n, STATE_CAP))


def run_schedule(s: ChainState, sched: PulseSchedule) -> ChainState:
    """Apply the layers left to right.  The ledger is not applied."""
    if sched.sites != s.n:
        raise ValueError("schedule and state sizes differ")
    psi = s.amplitudes.reshape(-1, 1)
    for layer in sched.layers:
        psi = apply_layer_array(psi, s.n, layer)
    return ChainState(s.n, psi[:, 0], cap=max(s.n, STATE_CAP))


def ledger_array(psi: np.ndarray, n: int, ledger: FrameLedger) -> np.ndarray:
    for site, angle in ledger.pending_z:
        psi = _apply_1q(psi, n, site, rz(angle))
    p = ledger.pauli_frame
    if p is not None and p.weight:
        for site, c in enumerate(p.letters, start=1):
            if c != "I":
                psi = _apply_1q(psi, n, site, {"X": X_GATE, "Y": Y_GATE, "Z": Z_GATE}[c])
    return psi


def materialize(s: ChainState, ledger: FrameLedger) -> ChainState:
    """Apply the ledger corrections (z-rotations first, then the Pauli frame)."""
    psi = ledger_array(s.amplitudes.reshape(-1, 1), s.n, ledger)
    return ChainState(s.n, psi[:, 0], cap=max(s.n, STATE_CAP))


def fidelity(a: ChainState, b: ChainState) -> float:
    if a.n != b.n:
        raise ValueError("size mismatch")
    return float(min(1.0, abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2))


def schedule_unitary(sched: PulseSchedule, with_ledger: bool = False,
                     cap: int = UNITARY_CAP) -> np.ndarray:
    """Full matrix of the schedule (optionally followed by its ledger)."""
    n = sched.sites
    if n > cap:
        raise CapExceeded(f"{n} sites exceeds the unitary cap {cap}")
    psi = np.eye(2 ** n, dtype=complex)
    for layer in sched.layers:
        psi = apply_layer_array(psi, n, layer)
    if with_ledger:
        psi = ledger_array(psi, n, sched.ledger)
    return psi


def phase_aligned_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Frobenius distance after removing the best global phase."""
    ip = np.vdot(v, u)
    ph = ip / abs(ip) if abs(ip) > 1e-300 else 1.0
    return float(np.linalg.norm(u - ph * v))


def unitarity_defect(u: np.ndarray) -> float:
    return float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0])))
