"""Lowering of logical gate programs to pulse schedules.

Two mechanisms are used.

* Single-qubit rotations ride on full mirror cycles: an edge R_z inserted at
  an impact point acts as an R_z on one data qubit after the cycle, and a
  global HyBar between cycles turns the middle rotation into an R_y.
* Controlled phases use a trapped sweep.  The sweep runs full steps until
  the control's logical Z sits on an end spin, decouples that end, keeps
  stepping the shortened wire until a target's logical Z sits next to it,
  applies an end-bond Ising window there, and finally replays every
  Clifford layer of the sweep in reverse.  All timing comes from an exact
  Clifford frame (:class:`qwire.frame.LogicalFrame`).

Accounting: a *tick* is one CZBar-type composite (CZBar, decoupled CZBar or
its inverse).  An interaction window runs the Ising coupling for two CZBar
durations and counts as two ticks.  A mirror cycle is ``N + 1`` ticks.
"""
from __future__ import annotations

import cmath
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .compiler import czd_layers, inverse_layers, mirror_with_insertions
from .core import (ChainConfig, CZBar, EdgeRz, FrameLedger, GlobalRz, HBar, HyBar, IsingEvolve,
                   LocalRx, LocalRz, PauliString, PulseLayer, PulseSchedule)
from .frame import LogicalFrame
from .pauli import find_impact_points

PI = math.pi


class SchedulingError(RuntimeError):
    """A structural failure: no valid timing exists within the search window."""


# ---------------------------------------------------------------------------
# programs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LocalU:
    """``R_z(alpha) R_y(beta) R_z(gamma)`` on one qubit."""
    qubit: int
    alpha: float
    beta: float
    gamma: float


@dataclass(frozen=True)
class CPhase:
    control: int
    target: int
    theta: float


@dataclass(frozen=True)
class MultiCPhase:
    control: int
    targets: tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class QFT:
    """Hadamard / controlled-phase network; output qubit order is reversed."""


Op = LocalU | CPhase | MultiCPhase | QFT


@dataclass(frozen=True)
class GateProgram:
    n_logical: int
    ops: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        for op in self.ops:
            qubits = []
            if isinstance(op, LocalU):
                qubits = [op.qubit]
                angles = [op.alpha, op.beta, op.gamma]
            elif isinstance(op, CPhase):
                qubits = [op.control, op.target]
                angles = [op.theta]
                if op.control == op.target:
                    raise ValueError("control equals target")
            elif isinstance(op, MultiCPhase):
                qubits = [op.control] + [t for t, _ in op.targets]
                angles = [th for _, th in op.targets]
                if len(set(qubits)) != len(qubits):
                    raise ValueError("targets must be distinct and differ from the control")
            elif isinstance(op, QFT):
                angles = []
            else:
                raise TypeError(f"unknown op {op!r}")
            if any(not 0 <= q < self.n_logical for q in qubits):
                raise ValueError("qubit index out of range")
            if any(not math.isfinite(a) for a in angles):
                raise ValueError("angle not finite")

    def to_text(self) -> str:
        lines = [f"program {self.n_logical}"]
        for op in self.ops:
            if isinstance(op, LocalU):
                lines.append(f"localu {op.qubit} {float(op.alpha)!r} {float(op.beta)!r} "
                             f"{float(op.gamma)!r}")
            elif isinstance(op, CPhase):
                lines.append(f"cphase {op.control} {op.target} {float(op.theta)!r}")
            elif isinstance(op, MultiCPhase):
                tg = " ".join(f"{t}:{float(th)!r}" for t, th in op.targets)
                lines.append(f"multicphase {op.control} {tg}")
            else:
                lines.append("qft")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "GateProgram":
        lines = [ln.split("#")[0].strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln]
        if not lines or not lines[0].startswith("program "):
            raise ValueError("program text must start with 'program <n_logical>'")
        n = int(lines[0].split()[1])
        ops: list = []
        for ln in lines[1:]:
            tok = ln.split()
            if tok[0] == "localu" and len(tok) == 5:
                ops.append(LocalU(int(tok[1]), float(tok[2]), float(tok[3]), float(tok[4])))
            elif tok[0] == "cphase" and len(tok) == 4:
                ops.append(CPhase(int(tok[1]), int(tok[2]), float(tok[3])))
            elif tok[0] == "multicphase" and len(tok) >= 3:
                tg = tuple((int(a), float(b)) for a, b in (t.split(":") for t in tok[2:]))
                ops.append(MultiCPhase(int(tok[1]), tg))
            elif tok == ["qft"]:
                ops.append(QFT())
            else:
                raise ValueError(f"cannot parse program line {ln!r}")
        return cls(n, tuple(ops))


@dataclass
class CompiledProgram:
    schedule: PulseSchedule
    manifest: dict = field(default_factory=dict)

    def manifest_json(self) -> str:
        return json.dumps(self.manifest, indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True)
class TrapPlan:
    """Timing of one trapped sweep, in steps (a half step sits between the
    CZBar and the HBar of a step)."""

    trap_edge: str
    engage_step: float
    interact_steps: tuple[float, ...]
    release_step: float
    targets: tuple[tuple[int, float], ...]
    ticks: int
    control_x_impact: float | None = None
    correction_layers: int = 0


# ---------------------------------------------------------------------------
# single-qubit helpers
# ---------------------------------------------------------------------------

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
}


def rz(t: float) -> np.ndarray:
    return np.diag([cmath.exp(-1j * t), cmath.exp(1j * t)])


def ry(t: float) -> np.ndarray:
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, -s], [s, c]], dtype=complex)


def u_matrix(alpha: float, beta: float, gamma: float) -> np.ndarray:
    return rz(alpha) @ ry(beta) @ rz(gamma)


def zyz_angles(v: np.ndarray) -> tuple[float, float, float]:
    """Angles with ``v = phase * R_z(a) R_y(b) R_z(c)``."""
    v = v / cmath.sqrt(np.linalg.det(v))
    b = math.atan2(abs(v[1, 0]), abs(v[0, 0]))
    if abs(v[0, 0]) < 1e-12:
        s, d = 0.0, cmath.phase(v[1, 0])
    elif abs(v[1, 0]) < 1e-12:
        s, d = -cmath.phase(v[0, 0]), 0.0
    else:
        s, d = -cmath.phase(v[0, 0]), cmath.phase(v[1, 0])
    return (s + d) / 2, b, (s - d) / 2


def _clifford_1q() -> list[np.ndarray]:
    h = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    s = np.diag([1, 1j])
    found: list[np.ndarray] = [np.eye(2, dtype=complex)]
    frontier = list(found)
    while frontier:
        nxt = []
        for c in frontier:
            for g in (h, s):
                m = g @ c
                if not any(abs(abs(np.vdot(m, f)) - 2) < 1e-9 for f in found):
                    found.append(m)
                    nxt.append(m)
        frontier = nxt
    return found


_CLIFFORDS = _clifford_1q()


def _clifford_for(z_img: tuple[str, int], x_img: tuple[str, int]) -> np.ndarray:
    """Single-qubit Clifford C with ``C Z C^+ = s_z L_z`` and ``C X C^+ = s_x L_x``."""
    tz = z_img[1] * _PAULI[z_img[0]]
    tx = x_img[1] * _PAULI[x_img[0]]
    for c in _CLIFFORDS:
        if (np.allclose(c @ _PAULI["Z"] @ c.conj().T, tz)
                and np.allclose(c @ _PAULI["X"] @ c.conj().T, tx)):
            return c
    raise ValueError("images do not define a Clifford")


def site_unitary_layers(site: int, v: np.ndarray, tol: float = 1e-12) -> list[PulseLayer]:
    """End-site layers realizing the 2x2 unitary ``v`` (up to phase)."""
    a, b, c = zyz_angles(v)
    # R_y(b) = R_z(pi/4) R_x(b) R_z(-pi/4)
    out = []
    for kind, ang in (("z", c - PI / 4), ("x", b), ("z", a + PI / 4)):
        ang = math.remainder(ang, 2 * PI)
        if abs(ang) > tol:
            out.append(LocalRz(site, ang) if kind == "z" else LocalRx(site, ang))
    return out


def edge_rotation_layers(site: int, letter: str, angle: float) -> list[PulseLayer]:
    """``exp(-i angle P)`` for a single-site Pauli letter on an end site."""
    if letter == "Z":
        return [LocalRz(site, angle)]
    if letter == "X":
        return [LocalRx(site, angle)]
    if letter == "Y":
        return [LocalRz(site, -PI / 4), LocalRx(site, angle), LocalRz(site, PI / 4)]
    raise ValueError(letter)


def mirrored(cfg: ChainConfig) -> ChainConfig:
    n = cfg.n_sites
    return ChainConfig(n, tuple(n + 1 - s for s in cfg.layout), cfg.padding)


def _require_buffered(cfg: ChainConfig) -> None:
    if cfg.padding != "plus":
        raise ValueError("the gate scheduler requires |+> padding")


# ---------------------------------------------------------------------------
# single-qubit gates: three mirror cycles
# ---------------------------------------------------------------------------

def _cycle_insertions(cfg: ChainConfig, angles: dict[int, float]
                      ) -> dict[tuple[int, bool], list[PulseLayer]]:
    """Edge insertions giving ``R_z(angles[q])`` on each logical qubit after
    one mirror cycle started in layout ``cfg``."""
    n = cfg.n_sites
    used: set[tuple[int, bool, str]] = set()
    out: dict[tuple[int, bool], list[PulseLayer]] = {}
    for q, ang in sorted(angles.items()):
        if abs(math.remainder(ang, 2 * PI)) < 1e-15:
            continue
        site = cfg.layout[q]
        points = find_impact_points(site, n, cfg, half_steps=True)
        points.sort(key=lambda p: (p.half, p.step))  # whole steps first
        for pt in points:
            key = (pt.step, pt.half, pt.edge)
            if key in used:
                continue
            used.add(key)
            out.setdefault((pt.step, pt.half), []).append(EdgeRz(pt.edge, pt.sign * ang))
            break
        else:
            raise SchedulingError(f"overlapping edge insertions for qubit {q}")
    return out


def schedule_local_rotations(assignments, cfg: ChainConfig, restore: bool = False,
                             correction: str = "ledger") -> CompiledProgram:
    """Arbitrary ``U(alpha, beta, gamma)`` on every listed qubit in three cycles.

    ``assignments`` maps logical qubit to ``(alpha, beta, gamma)``.  Cycle 1
    inserts ``R_z(gamma)``, then HyBar, cycle 2 inserts ``R_z(beta)``, HyBar,
    cycle 3 inserts ``R_z(-alpha)``.  With ``HyBar = exp(-i pi/4 X)`` the
    three cycles give ``X U`` on every data qubit and ``X`` on every buffer;
    the X layer is either ledgered (``correction="ledger"``) or emitted as
    two more HyBar layers (``"physical"``).  ``restore`` appends a fourth
    cycle so the register ends in its original order.
    """
    _require_buffered(cfg)
    if not isinstance(assignments, dict):
        assignments = dict(enumerate(assignments))
    n = cfg.n_sites
    layers: list[PulseLayer] = []
    layout = cfg
    for c, pick in enumerate((lambda u: u[2], lambda u: u[1], lambda u: -u[0])):
        if c:
            layers.append(HyBar())
        ins = _cycle_insertions(layout, {q: pick(u) for q, u in assignments.items()})
        layers += mirror_with_insertions(n, ins)
        layout = mirrored(layout)
    cycles = 3
    if restore:
        layers += mirror_with_insertions(n, {})
        layout = mirrored(layout)
        cycles += 1
    if correction == "physical":
        layers += [HyBar(), HyBar()]
        ledger = FrameLedger()
    elif correction == "ledger":
        ledger = FrameLedger(PauliString.from_letters("X" * n))
    else:
        raise ValueError("correction must be 'ledger' or 'physical'")
    manifest = {
        "operation": "local_rotations",
        "initial_layout": list(cfg.layout),
        "final_layout": list(layout.layout),
        "cycle_count": cycles,
        "ticks": cycles * (n + 1),
        "order_reversed": layout.layout != cfg.layout,
    }
    return CompiledProgram(PulseSchedule(n, tuple(layers), ledger), manifest)


# ---------------------------------------------------------------------------
# trapped sweeps
# ---------------------------------------------------------------------------

@dataclass
class _Entry:
    kind: str                 # "cz", "h" (Clifford steps) or "pulse"
    layers: list[PulseLayer]
    trap: int | None = None


class Sweep:
    """Forward sweep with inserted pulses; :meth:`finish` appends the reverse.

    The net operation is ``F^dagger P_m F_m ... P_1 F_1``: every inserted
    pulse acts as the logical operation it represents in the frame at its
    insertion point, and the Clifford part cancels.
    """

    def __init__(self, cfg: ChainConfig, mode: str = "ideal"):
        self.cfg = cfg
        self.n = cfg.n_sites
        self.mode = mode
        self.frame = LogicalFrame(cfg)
        self.entries: list[_Entry] = []
        self.trap: int | None = None
        self.pos = 0
        self.windows = 0
        self.owed: dict[int, float] = {}  # extra logical z-rotations owed per target
        self.reverse_pulses: dict[int, list[PulseLayer]] = {}

    # steps ----------------------------------------------------------------
    def next_layers(self, ideal: bool = False) -> tuple[str, list[PulseLayer]]:
        mode = "ideal" if ideal else self.mode
        if self.pos % 2 == 0:
            if self.trap is None:
                return "cz", [CZBar()]
            return "cz", czd_layers(self.n, False, self.trap, mode)
        if self.trap is None:
            return "h", [HBar()]
        return "h", [HBar((self.trap,))]

    def half_step(self) -> None:
        kind, layers = self.next_layers()
        _, ideal_layers = self.next_layers(ideal=True)
        self.frame.apply(ideal_layers)
        self.entries.append(_Entry(kind, layers, self.trap))
        self.pos += 1

    def engage(self, end: int) -> None:
        self.trap = end

    def pulse(self, layers: Iterable[PulseLayer]) -> None:
        layers = list(layers)
        if layers:
            self.entries.append(_Entry("pulse", layers))

    @property
    def forward_ticks(self) -> int:
        return sum(1 for e in self.entries if e.kind == "cz")

    @property
    def ticks(self) -> int:
        return 2 * self.forward_ticks + 2 * self.windows

    def local(self, layers: Iterable[PulseLayer]) -> None:
        """Clifford single-site layers that are tracked and undone in reverse."""
        layers = list(layers)
        self.frame.apply(layers)
        self.entries.append(_Entry("loc", layers))

    def reverse_layers(self) -> list[PulseLayer]:
        """Inverse of the Clifford part; ``reverse_pulses[p]`` is emitted when
        the frame is back to what it was at position ``p`` before any local
        layers inserted there."""
        pos = self.pos
        out: list[PulseLayer] = []
        for e in reversed(self.entries):
            if e.kind == "pulse":
                continue
            if e.kind == "loc":
                out += inverse_layers(e.layers, self.n)
                continue
            out += self.reverse_pulses.get(pos, ())
            if e.kind == "h":
                out += e.layers
            else:
                out += [CZBar()] if e.trap is None else czd_layers(self.n, True, e.trap, self.mode)
            pos -= 1
        out += self.reverse_pulses.get(pos, ())
        return out

    def finish(self) -> list[PulseLayer]:
        fwd = [layer for e in self.entries for layer in e.layers]
        return fwd + self.reverse_layers()

    # logical operations ---------------------------------------------------
    def interact(self, control: int, target: int, theta: float, end: int,
                 control_rotation: bool = True) -> int:
        """``CZ[theta] R_z^t(-theta/4)`` on (control, target) at the current point.

        The control's logical Z must sit on ``end`` and the target's on the
        neighbouring spin.  Returns the number of wrap layers used.
        """
        n = self.n
        nb = end - 1 if end == n else end + 1
        wrap = find_wrap(self.frame, control, target, end, nb)
        if wrap is None:
            raise SchedulingError("no wrap maps the interacting pair onto Z letters")
        w_layers, s_c, s_t = wrap
        delta = -s_c * s_t * theta / 4  # exp(-i delta Z_e Z_nb) = exp(i theta/4 Zc Zt)
        window, z_power = interaction_window(delta, end, n, self.mode)
        self.owed[target] = self.owed.get(target, 0.0) + z_power * PI / 2
        body = list(w_layers) + window
        if control_rotation:
            body.append(LocalRz(end, s_c * theta / 4))
        body += inverse_layers(w_layers, n)
        self.pulse(body)
        self.windows += 1
        return len(w_layers)

    def logical_rotation(self, qubit: int, angle: float, sites: Sequence[int]) -> bool:
        """Try to emit ``R_z(angle)`` on a logical qubit through an end spin."""
        for site in sites:
            hit = self.frame.locate(qubit, "Z", site)
            if hit is not None:
                letter, sign = hit
                self.pulse(edge_rotation_layers(site, letter, sign * angle))
                return True
        return False

    def logical_unitary(self, qubit: int, u: np.ndarray, sites: Sequence[int]) -> bool:
        """Try to emit an arbitrary 2x2 unitary on a fully localized qubit."""
        for site in sites:
            hz = self.frame.locate(qubit, "Z", site)
            hx = self.frame.locate(qubit, "X", site) if hz else None
            if hz and hx:
                c = _clifford_for(hz, hx)
                self.pulse(site_unitary_layers(site, c @ u @ c.conj().T))
                return True
        return False

    def free_edges(self) -> list[int]:
        return [s for s in (1, self.n) if s != self.trap]


def interaction_window(delta: float, end: int, n: int, mode: str
                       ) -> tuple[list[PulseLayer], int]:
    """Two-tick Ising window giving ``exp(-i delta Z_e Z_nb)`` on the end bond.

    Every bond evolves for a bond angle of pi/2 (two CZBar durations) except
    the end bond, which is coupled only for ``lift = delta mod pi/2``.  The
    shortened bonds leave ``prod (-i Z Z)``, proportional to
    ``Z_nb Z_far``; ``Z_far`` is cancelled on the far end spin and the
    ``Z_e`` from the ``pi/2`` part of ``delta`` on the trapped spin.  What
    remains is ``Z_nb`` raised to the returned power, a Pauli on the
    neighbouring spin that the caller folds into the target's z-rotation.
    """
    far = 1 if end == n else n
    quarter = PI / 2
    # m and lift must come from the same reduced angle: delta % PI can round
    # up to PI itself for tiny negative delta
    d = delta % PI
    if d >= PI:
        d -= PI
    m = 1 if d >= quarter else 0
    lift = d - m * quarter
    rest = quarter - lift
    if mode == "ideal":
        out = [IsingEvolve(lift), IsingEvolve(rest, (end,))]
    elif mode == "pulsed":
        out = [IsingEvolve(lift), IsingEvolve(rest / 2), LocalRx(end, PI / 2),
               IsingEvolve(rest / 2), LocalRx(end, PI / 2)]
    else:
        raise ValueError(f"unknown decoupling mode {mode!r}")
    out.append(LocalRz(far, quarter))
    if m:
        out.append(LocalRz(end, quarter))
    out = [layer for layer in out if layer.angle != 0.0]
    return out, (1 + m) % 2


def _wrap_generators(n: int, end: int) -> list[PulseLayer]:
    return [HBar((end,)), HBar(), LocalRz(end, PI / 4), GlobalRz(PI / 4)]


def find_wrap(frame: LogicalFrame, control: int, target: int, end: int, nb: int,
              depth: int = 4):
    """Shortest Clifford layer list after which control Z sits on ``end`` as
    a Z letter and target Z sits on ``nb`` as a Z letter."""
    gens = _wrap_generators(frame.n, end)
    for d in range(depth + 1):
        for seq in itertools.product(gens, repeat=d):
            f = frame.copy().apply(list(seq))
            hc = f.locate(control, "Z", end)
            ht = f.locate(target, "Z", nb)
            if hc and ht and hc[0] == "Z" and ht[0] == "Z":
                return list(seq), hc[1], ht[1]
    return None


def _neighbour(end: int, n: int) -> int:
    return end - 1 if end == n else end + 1


def _x_impact(cfg: ChainConfig, control: int) -> float | None:
    """First position where the control's logical X pattern touches an end."""
    f = LogicalFrame(cfg)
    sw = Sweep(cfg)
    sw.frame = f
    for p in range(2 * (cfg.n_sites + 1) + 1):
        x = f.logical(control, "X")
        red = f.reduce_to(x, [s for s in range(1, cfg.n_sites + 1)])
        if red is not None and (red.x[0] | red.z[0] | red.x[-1] | red.z[-1]):
            return p / 2
        sw.half_step()
    return None


@dataclass
class _Candidate:
    ticks: int
    k: int
    end: int
    hits: list  # (position, target, theta)
    extra: int  # trapped half steps after the last interaction


def _pass_ticks(last_pos: int, n_windows: int) -> int:
    """Ticks of a sweep whose forward part ends at half-step ``last_pos``."""
    return 2 * ((last_pos + 1) // 2) + 2 * n_windows


def plan_trap(cfg: ChainConfig, control: int, targets: Sequence[tuple[int, float]],
              max_cycles: int = 2) -> _Candidate:
    """Cheapest (engage point, edge) whose trapped sweep reaches every target.

    The trap may engage whenever the control's logical Z sits on an end
    spin.  A target can interact once its logical Z sits on the neighbour of
    the trapped spin.
    """
    n = cfg.n_sites
    limit = 2 * (n + 1) * max_cycles
    best: _Candidate | None = None
    pre = Sweep(cfg)
    for k in range(limit):
        if best is not None and _pass_ticks(k, len(targets)) > best.ticks:
            break
        for end in (1, n):
            if pre.frame.locate(control, "Z", end) is None:
                continue
            sw = Sweep(cfg)
            sw.frame = pre.frame.copy()
            sw.pos = pre.pos
            sw.engage(end)
            nb = _neighbour(end, n)
            pending = {t: th for t, th in targets}
            hits = []
            for j in range(limit):
                ticks = _pass_ticks(k + j, len(targets))
                if best is not None and ticks >= best.ticks:
                    break
                for t in sorted(pending):
                    if sw.frame.locate(t, "Z", nb) is not None and \
                            find_wrap(sw.frame, control, t, end, nb) is not None:
                        hits.append((k + j, t, pending.pop(t)))
                if not pending:
                    best = _Candidate(ticks, k, end, hits, j)
                    break
                sw.half_step()
        pre.half_step()
    if best is None:
        raise SchedulingError("trap engagement not found within the search window")
    return best


def _trapped_sweep(cfg: ChainConfig, control: int, targets: Sequence[tuple[int, float]],
                   mode: str, plan: _Candidate, hooks=None,
                   locals_at: dict[int, list[PulseLayer]] | None = None) -> Sweep:
    """Replay a plan into a Sweep, calling ``hooks(sweep, stage, pos)`` at each
    position (stage "pre" before the trap, "trap" after engagement)."""
    sw = Sweep(cfg, mode)
    for _ in range(plan.k):
        if hooks:
            hooks(sw, "pre", sw.pos)
        sw.half_step()
    sw.engage(plan.end)
    by_pos: dict[int, list] = {}
    for pos, t, th in plan.hits:
        by_pos.setdefault(pos, []).append((t, th))
    last = plan.k + plan.extra
    while True:
        for t, th in by_pos.get(sw.pos, []):
            sw.interact(control, t, th, plan.end)
        if hooks:
            hooks(sw, "trap", sw.pos)
        if sw.pos >= last:
            break
        if locals_at and sw.pos in locals_at:
            sw.local(locals_at[sw.pos])
        sw.half_step()
    return sw


def _trap_plan_record(plan: _Candidate, n: int, cfg: ChainConfig, control: int,
                      targets) -> TrapPlan:
    return TrapPlan(
        trap_edge="left" if plan.end == 1 else "right",
        engage_step=plan.k / 2,
        interact_steps=tuple(p / 2 for p, _, _ in plan.hits),
        release_step=(plan.k + plan.extra) / 2,
        targets=tuple((t, th) for _, t, th in plan.hits),
        ticks=plan.ticks,
        control_x_impact=_x_impact(cfg, control),
    )


def _plan_dict(tp: TrapPlan) -> dict:
    return {
        "trap_edge": tp.trap_edge, "engage_step": tp.engage_step,
        "interact_steps": list(tp.interact_steps), "release_step": tp.release_step,
        "targets": [[t, th] for t, th in tp.targets], "ticks": tp.ticks,
        "control_x_impact": tp.control_x_impact,
    }


def _target_corrections(sw_cfg: ChainConfig, amounts: dict[int, float]) -> tuple:
    return tuple((sw_cfg.layout[t], a) for t, a in sorted(amounts.items())
                 if abs(math.remainder(a, 2 * PI)) > 1e-15)


def schedule_multi_target(control: int, targets: Sequence[tuple[int, float]],
                          cfg: ChainConfig, mode: str = "ideal",
                          emit: str = "ledger") -> CompiledProgram:
    """``prod_i CZ[theta_i]`` on (control, target_i) in one trapped sweep.

    The physical result carries ``R_z(-theta_i/4)`` on each target; these
    known residuals are ledgered as pending z-rotations (``emit="ledger"``)
    or emitted through an end spin where the target's Z pattern touches one
    (``emit="physical"``).
    """
    targets = [(int(t), float(th)) for t, th in targets]
    if not targets:
        raise ValueError("at least one target required")
    if len({t for t, _ in targets} | {control}) != len(targets) + 1:
        raise ValueError("targets must be distinct and differ from the control")
    if cfg.n_sites < 3:
        raise ValueError("trapping needs a chain of at least 3 sites")
    return _compile_cphase_family(control, targets, cfg, mode, emit,
                                  {t: th / 4 for t, th in targets}, "multi_target")


def schedule_cphase(control: int, target: int, theta: float, cfg: ChainConfig,
                    mode: str = "ideal", net: str = "residual",
                    emit: str = "ledger") -> CompiledProgram:
    """Trapped controlled phase.

    ``net="residual"`` makes the materialized result
    ``R_z^t((pi - theta)/4) CZ[theta]``; ``net="clean"`` makes it
    ``CZ[theta]``.  The difference from the physical sweep is a z-rotation on
    the target, kept in the ledger or emitted physically (``emit``).
    """
    if control == target:
        raise ValueError("control equals target")
    if cfg.n_sites < 3:
        raise ValueError("trapping needs a chain of at least 3 sites")
    if net == "residual":
        corr = PI / 4
    elif net == "clean":
        corr = theta / 4
    else:
        raise ValueError("net must be 'residual' or 'clean'")
    out = _compile_cphase_family(control, [(target, theta)], cfg, mode, emit,
                                 {target: corr}, "cphase")
    out.manifest["net"] = net
    return out


def _compile_cphase_family(control, targets, cfg, mode, emit, corrections, name):
    n = cfg.n_sites
    if emit not in ("ledger", "physical"):
        raise ValueError("emit must be 'ledger' or 'physical'")
    plan = plan_trap(cfg, control, targets)
    # a dry run learns the Pauli residue each window leaves on its target
    probe = _trapped_sweep(cfg, control, targets, mode, plan)
    remaining = {t: corrections.get(t, 0.0) + probe.owed.get(t, 0.0) for t, _ in targets}
    if emit == "ledger":
        sw = probe
    else:
        def hooks(sw: Sweep, stage: str, pos: int):
            for t in sorted(remaining):
                if sw.logical_rotation(t, remaining[t], sw.free_edges()):
                    del remaining[t]

        sw = _trapped_sweep(cfg, control, targets, mode, plan, hooks)
    layers = sw.finish()
    correction_cycles = 0
    if emit == "physical" and remaining:
        # qubits whose pattern never touched a free end spin: two extra mirror
        # cycles, the first carrying the rotation at an impact point
        ins = _cycle_insertions(cfg, remaining)
        layers += mirror_with_insertions(n, ins) + mirror_with_insertions(n, {})
        remaining = {}
        correction_cycles = 2
    ledger = FrameLedger(None, _target_corrections(cfg, remaining))
    tp = _trap_plan_record(plan, n, cfg, control, targets)
    manifest = {
        "operation": name,
        "initial_layout": list(cfg.layout),
        "final_layout": list(cfg.layout),
        "ticks": sw.ticks,
        "forward_ticks": sw.forward_ticks + 2 * sw.windows,
        "cycle_budget_ticks": n + 1,
        "fits_one_cycle": sw.ticks <= n + 1,
        "cycle_count": math.ceil(sw.ticks / (n + 1)),
        "trap": _plan_dict(tp),
        "decoupling": mode,
        "emit": emit,
        "correction_cycles": correction_cycles,
    }
    return CompiledProgram(PulseSchedule(n, tuple(layers), ledger), manifest)


# ---------------------------------------------------------------------------
# QFT
# ---------------------------------------------------------------------------

H_MATRIX = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


def qft_structure(n_logical: int) -> list[tuple[int, list[tuple[int, float]]]]:
    """Passes ``(x, [(j, pi / 2**(j-x)) for j > x])``."""
    return [(x, [(j, PI / 2 ** (j - x)) for j in range(x + 1, n_logical)])
            for x in range(n_logical)]


def qft_cphase_counts(n_logical: int) -> dict:
    n = n_logical
    return {"closed_form": (n - 2) * (n - 1) // 2, "structural": n * (n - 1) // 2}


def _visits(frame: LogicalFrame, qubit: int) -> dict[str, tuple[int, str, int]]:
    """End spins on which a logical Z or X of ``qubit`` currently sits."""
    out = {}
    for letter in "ZXY":
        for site in (1, frame.n):
            hit = frame.locate(qubit, letter, site)
            if hit is not None:
                out[letter] = (site, hit[0], hit[1])
                break
    return out


# H ~ R_y(pi/4) R_z(pi/2) and H ~ R_z(pi/4) R_x(pi/4) R_z(pi/4), in time order
_HADAMARD_SPLITS = ((("Z", PI / 2), ("Y", PI / 4)),
                    (("Z", PI / 4), ("X", PI / 4), ("Z", PI / 4)))


def _match_axes(slots):
    """Earliest-finishing slots carrying the axis visits of a Hadamard split."""
    best = None
    for split in _HADAMARD_SPLITS:
        picks = []
        for idx, (where, visits) in enumerate(slots):
            while len(picks) < len(split) and split[len(picks)][0] in visits:
                axis, ang = split[len(picks)]
                picks.append((where, axis, visits[axis], ang))
            if len(picks) == len(split):
                if best is None or idx < best[0]:
                    best = (idx, picks)
                break
    return None if best is None else best[1]


@dataclass
class _PassPlan:
    cand: _Candidate
    picks: list | None
    hybar_at: int | None = None


def plan_qft_pass(cfg: ChainConfig, control: int, targets, nxt: int | None,
                  max_cycles: int = 3) -> _PassPlan:
    """Cheapest trapped pass that also leaves room for the Hadamard of ``nxt``.

    The Hadamard is split into three rotations about the logical Z, X and Z
    axes, each applied on an end spin at a point where that logical
    operator sits there.  Candidate points are the forward positions after
    the interaction with ``nxt`` followed by every position of the reverse
    sweep.  Interior qubits never bring their logical X onto an end spin
    under HBar/CZBar dynamics alone, so the search may insert one global
    HyBar after the interaction; the frame tracks it and the reverse sweep
    undoes it.
    """
    if nxt is None:
        return _PassPlan(plan_trap(cfg, control, targets), None)
    n = cfg.n_sites
    limit = 2 * (n + 1) * max_cycles
    best: _PassPlan | None = None
    pre = Sweep(cfg)
    pre_visits = []
    for k in range(limit):
        pre_visits.append(_visits(pre.frame, nxt))
        if best is not None and _pass_ticks(k, len(targets)) > best.cand.ticks:
            break
        for end in (1, n):
            if pre.frame.locate(control, "Z", end) is None:
                continue
            found = _search_pass(cfg, pre, pre_visits[:-1], control, targets, nxt, end,
                                 limit, best.cand.ticks if best else None)
            if found is not None and (best is None or found.cand.ticks < best.cand.ticks):
                best = found
        pre.half_step()
    if best is None:
        raise SchedulingError(f"no pass found that fits the Hadamard of qubit {nxt}")
    return best


def _search_pass(cfg, pre, pre_visits, control, targets, nxt, end, limit, bound):
    """Trapped continuation from ``pre`` engaged at ``end``; tries no HyBar
    first, then each HyBar insertion point after the interaction with
    ``nxt``."""
    n = cfg.n_sites
    nb = _neighbour(end, n)
    k = pre.pos
    best: _PassPlan | None = None

    def run(hybar_at):
        nonlocal bound
        sw = Sweep(cfg)
        sw.frame = pre.frame.copy()
        sw.pos = pre.pos
        sw.engage(end)
        pending = {t: th for t, th in targets}
        hits = []
        visits = list(pre_visits)
        p_int = None
        for j in range(limit):
            p = k + j
            ticks = _pass_ticks(p, len(targets))
            if bound is not None and ticks >= bound:
                return None, p_int
            visits.append(_visits(sw.frame, nxt))
            for t in sorted(pending):
                if sw.frame.locate(t, "Z", nb) is not None and \
                        find_wrap(sw.frame, control, t, end, nb) is not None:
                    hits.append((p, t, pending.pop(t)))
                    if t == nxt:
                        p_int = p
            if not pending:
                slots = [(("f", i), visits[i]) for i in range(p_int, p + 1)]
                slots += [(("r", i), visits[i]) for i in range(p, -1, -1)]
                picks = _match_axes(slots)
                if picks is not None:
                    return _PassPlan(_Candidate(ticks, k, end, hits, j), picks, hybar_at), p_int
            if hybar_at is not None and p == hybar_at:
                if p_int is None or p < p_int:
                    return None, p_int
                sw.local([HyBar()])
            sw.half_step()
        return None, p_int

    found, p_int = run(None)
    if found is not None:
        return found
    if p_int is None:
        return None
    for h in range(p_int, k + limit):
        if bound is not None and _pass_ticks(h + 1, len(targets)) >= bound:
            break
        found, _ = run(h)
        if found is not None:
            best = found
            bound = found.cand.ticks
    return best


def compile_qft(n_logical: int, cfg: ChainConfig | None = None,
                mode: str = "ideal", pending_in: dict[int, float] | None = None
                ) -> CompiledProgram:
    """QFT as one trapped pass per controlling qubit.

    Pass ``x`` applies every controlled phase controlled by qubit ``x``.
    The Hadamard of qubit ``x + 1`` is folded into pass ``x`` as three
    end-spin rotations about its logical Z, X and Z axes, placed after its
    controlled phase (see :func:`plan_qft_pass`).  The first and last
    Hadamards act on end spins at the pass boundaries.  Residual target
    z-rotations are folded into the following Hadamard; control rotations
    are applied on the trapped spin.
    """
    if n_logical < 2:
        raise ValueError("QFT needs at least 2 qubits")
    cfg = cfg or ChainConfig.padded(n_logical)
    _require_buffered(cfg)
    if cfg.n_logical != n_logical:
        raise ValueError("config does not match the qubit count")
    n = cfg.n_sites
    pending = {q: 0.0 for q in range(n_logical)}  # z-rotations owed before each H
    for q, a in (pending_in or {}).items():
        pending[q] += a
    layers: list[PulseLayer] = []
    passes = []
    start = Sweep(cfg, mode)
    if not start.logical_unitary(0, H_MATRIX @ rz(pending[0]), (1, n)):
        raise SchedulingError("qubit 0 is not on an end spin")
    layers += start.finish()
    last = n_logical - 1
    for x, targets in qft_structure(n_logical):
        if not targets:
            continue
        nxt = x + 1 if x + 1 < last else None
        pp = plan_qft_pass(cfg, x, targets, nxt)
        for t, th in targets:
            pending[t] += th / 4
        fwd_picks = {}
        rev_picks = {}
        for i, (where, axis, visit, ang) in enumerate(pp.picks or ()):
            book = fwd_picks if where[0] == "f" else rev_picks
            book.setdefault(where[1], []).append((i, visit, ang))

        def angle(i, ang, sw, nxt=nxt):
            return ang + (pending[nxt] + sw.owed.get(nxt, 0.0) if i == 0 else 0.0)

        def hooks(sw: Sweep, stage: str, pos: int, book=fwd_picks):
            for i, (site, letter, sign), ang in book.get(pos, ()):
                sw.pulse(edge_rotation_layers(site, letter, sign * angle(i, ang, sw)))

        locals_at = {pp.hybar_at: [HyBar()]} if pp.hybar_at is not None else None
        sw = _trapped_sweep(cfg, x, targets, mode, pp.cand, hooks if fwd_picks else None,
                            locals_at)
        for pos, items in rev_picks.items():
            for i, (site, letter, sign), ang in items:
                sw.reverse_pulses.setdefault(pos, []).extend(
                    edge_rotation_layers(site, letter, sign * angle(i, ang, sw)))
        for t, extra in sw.owed.items():
            pending[t] += extra
        if nxt is not None:
            pending[nxt] = 0.0
        layers += sw.finish()
        tp = _trap_plan_record(pp.cand, n, cfg, x, targets)
        passes.append({"control": x, "ticks": sw.ticks, "fits_one_cycle": sw.ticks <= n + 1,
                       "cycles": math.ceil(sw.ticks / (n + 1)),
                       "hadamard_points": [[w[0], w[1] / 2, a] for w, a, _, _ in (pp.picks or ())],
                       "hybar_step": None if pp.hybar_at is None else pp.hybar_at / 2,
                       "trap": _plan_dict(tp)})
    end_sweep = Sweep(cfg, mode)
    if not end_sweep.logical_unitary(last, H_MATRIX @ rz(pending[last]), (1, n)):
        raise SchedulingError("last qubit is not on an end spin")
    layers += end_sweep.finish()
    pending[last] = 0.0
    manifest = {
        "operation": "qft",
        "initial_layout": list(cfg.layout),
        "final_layout": list(cfg.layout),
        "qubit_order_reversed": True,
        "passes": passes,
        "pass_count": len(passes),
        "ticks": sum(p["ticks"] for p in passes),
        "cycle_budget_ticks": n + 1,
        "cycle_count": sum(p["cycles"] for p in passes),
        "cphase_counts": qft_cphase_counts(n_logical),
        "decoupling": mode,
    }
    return CompiledProgram(PulseSchedule(n, tuple(layers)), manifest)


# ---------------------------------------------------------------------------
# whole programs
# ---------------------------------------------------------------------------

def _merge_local_run(run: list[LocalU], pending: dict[int, float]) -> dict[int, tuple]:
    mats: dict[int, np.ndarray] = {}
    for op in run:
        m = mats.get(op.qubit)
        if m is None:
            m = rz(pending.pop(op.qubit, 0.0))
        mats[op.qubit] = u_matrix(op.alpha, op.beta, op.gamma) @ m
    return {q: zyz_angles(m) for q, m in mats.items()}


def compile_program(program: GateProgram, cfg: ChainConfig | None = None,
                    mode: str = "ideal") -> CompiledProgram:
    """Lower a whole program to one schedule.

    Runs of single-qubit gates share one three-cycle block (which leaves the
    register mirrored; the layout is tracked).  Controlled phases are
    compiled clean: the z-rotations they owe their targets are carried
    forward and folded into the next single-qubit gate or Hadamard on that
    qubit, and whatever is still owed at the end goes to the ledger.
    """
    cfg = cfg or ChainConfig.padded(program.n_logical)
    if cfg.n_logical != program.n_logical:
        raise ValueError("config does not match the program")
    start_cfg = cfg
    n = cfg.n_sites
    layers: list[PulseLayer] = []
    pending: dict[int, float] = {}
    parts = []
    ops = list(program.ops)
    i = 0
    while i < len(ops):
        op = ops[i]
        if isinstance(op, LocalU):
            run = []
            while i < len(ops) and isinstance(ops[i], LocalU):
                run.append(ops[i])
                i += 1
            part = schedule_local_rotations(_merge_local_run(run, pending), cfg,
                                            correction="physical")
            cfg = ChainConfig(n, tuple(part.manifest["final_layout"]), cfg.padding)
        else:
            i += 1
            if isinstance(op, QFT):
                part = compile_qft(program.n_logical, cfg, mode, pending)
                pending = {}
            else:
                if isinstance(op, CPhase):
                    control, targets = op.control, [(op.target, op.theta)]
                else:
                    control, targets = op.control, list(op.targets)
                part = _compile_cphase_family(control, targets, cfg, mode, "ledger",
                                              {t: th / 4 for t, th in targets}, "cphase")
                site_to_q = {s: q for q, s in enumerate(cfg.layout)}
                for site, ang in part.schedule.ledger.pending_z:
                    q = site_to_q[site]
                    pending[q] = pending.get(q, 0.0) + ang
        layers += part.schedule.layers
        parts.append({k: part.manifest.get(k) for k in ("operation", "ticks", "cycle_count")})
    ledger = FrameLedger(None, _target_corrections(cfg, pending))
    manifest = {
        "operation": "program",
        "initial_layout": list(start_cfg.layout),
        "final_layout": list(cfg.layout),
        "parts": parts,
        "ticks": sum(p["ticks"] or 0 for p in parts),
        "cycle_count": sum(p["cycle_count"] or 0 for p in parts),
        "decoupling": mode,
    }
    return CompiledProgram(PulseSchedule(n, tuple(layers), ledger), manifest)
