"""Shared domain types, angle conventions and the canonical schedule format.

Angle convention used throughout the package::

    R_z(t) = exp(-i t Z),   R_x(t) = exp(-i t X),   R_y(t) = exp(-i t Y)

Sites are numbered 1..N.  Global phases are never tracked.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

LETTERS = "IXZY"  # index = x + 2 z
_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_PHASE_TEXT = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_TEXT_PHASE = {"+": 0, "+i": 1, "-": 2, "-i": 3, "": 0, "i": 1}


class ScheduleError(ValueError):
    """Raised for malformed or invalid schedules."""


class ScheduleParseError(ScheduleError):
    """Parse failure; ``layer`` names the offending layer index when known."""

    def __init__(self, message: str, layer: int | None = None):
        self.layer = layer
        prefix = f"layer {layer}: " if layer is not None else ""
        super().__init__(prefix + message)


# ---------------------------------------------------------------------------
# Pauli strings
# ---------------------------------------------------------------------------

class PauliString:
    """Signed N-site Pauli operator in symplectic form.

    The operator is ``i**k * prod_a X_a**x[a] Z_a**z[a]`` with the site
    factors ordered left to right.  With ``Y = i X Z`` the displayed phase is
    ``i**(k - #Y)``.  Instances are treated as immutable: the bit arrays are
    flagged read-only.
    """

    __slots__ = ("x", "z", "k")

    def __init__(self, x, z, k: int = 0):
        x = np.array(x, dtype=np.uint8) & 1
        z = np.array(z, dtype=np.uint8) & 1
        if x.shape != z.shape or x.ndim != 1:
            raise ValueError("x and z must be 1-D arrays of equal length")
        x.flags.writeable = False
        z.flags.writeable = False
        self.x = x
        self.z = z
        self.k = int(k) % 4

    # construction -------------------------------------------------------
    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(np.zeros(n, np.uint8), np.zeros(n, np.uint8), 0)

    @classmethod
    def single(cls, n: int, site: int, letter: str, phase: int = 0) -> "PauliString":
        """``letter`` on ``site`` (1-based); ``phase`` is the displayed exponent of i."""
        if not 1 <= site <= n:
            raise ValueError("site out of range")
        return cls.from_letters("I" * (site - 1) + letter + "I" * (n - site), phase)

    @classmethod
    def from_letters(cls, letters: str, phase: int = 0) -> "PauliString":
        x = np.array([_LETTER_BITS[c][0] for c in letters], np.uint8)
        z = np.array([_LETTER_BITS[c][1] for c in letters], np.uint8)
        ny = int(np.count_nonzero(x & z))
        return cls(x, z, phase + ny)

    @classmethod
    def parse(cls, text: str) -> "PauliString":
        m = re.fullmatch(r"\s*([+-]?i?)([IXYZ]+)\s*", text)
        if not m:
            raise ValueError(f"bad Pauli string {text!r}")
        return cls.from_letters(m.group(2), _TEXT_PHASE[m.group(1)])

    # views ---------------------------------------------------------------
    @property
    def n(self) -> int:
        return int(self.x.shape[0])

    @property
    def letters(self) -> str:
        idx = self.x.astype(np.int64) + 2 * self.z.astype(np.int64)
        return "".join(LETTERS[i] for i in idx)

    @property
    def phase_exponent(self) -> int:
        """Displayed phase as an exponent of i (0: +1, 1: +i, 2: -1, 3: -i)."""
        return (self.k - int(np.count_nonzero(self.x & self.z))) % 4

    @property
    def phase(self) -> complex:
        return (1, 1j, -1, -1j)[self.phase_exponent]

    @property
    def weight(self) -> int:
        return int(np.count_nonzero(self.x | self.z))

    def support(self) -> list[int]:
        return [int(i) + 1 for i in np.nonzero(self.x | self.z)[0]]

    def letter(self, site: int) -> str:
        return LETTERS[int(self.x[site - 1]) + 2 * int(self.z[site - 1])]

    # algebra -------------------------------------------------------------
    def __mul__(self, other: "PauliString") -> "PauliString":
        if self.n != other.n:
            raise ValueError("length mismatch")
        # Z^z1 X^x2 = (-1)^{z1 x2} X^x2 Z^z1 on each site
        sign = 2 * int(np.count_nonzero(self.z & other.x))
        return PauliString(self.x ^ other.x, self.z ^ other.z, self.k + other.k + sign)

    def commutes(self, other: "PauliString") -> bool:
        s = np.count_nonzero(self.x & other.z) + np.count_nonzero(self.z & other.x)
        return s % 2 == 0

    def with_phase(self, exponent: int) -> "PauliString":
        """Copy with the displayed phase set to ``i**exponent``."""
        ny = int(np.count_nonzero(self.x & self.z))
        return PauliString(self.x, self.z, exponent + ny)

    def __eq__(self, other) -> bool:
        return (isinstance(other, PauliString) and self.n == other.n
                and self.k == other.k and np.array_equal(self.x, other.x)
                and np.array_equal(self.z, other.z))

    def __hash__(self) -> int:
        return hash((self.k, self.x.tobytes(), self.z.tobytes()))

    def __str__(self) -> str:
        return _PHASE_TEXT[self.phase_exponent] + self.letters

    def __repr__(self) -> str:
        return f"PauliString({str(self)!r})"

    def to_matrix(self) -> np.ndarray:
        """Dense matrix (small N only); site 1 is the most significant factor."""
        mats = {"I": np.eye(2), "X": np.array([[0, 1], [1, 0]]),
                "Y": np.array([[0, -1j], [1j, 0]]), "Z": np.diag([1, -1])}
        out = np.array([[1.0 + 0j]])
        for c in self.letters:
            out = np.kron(out, mats[c])
        return self.phase * out


# ---------------------------------------------------------------------------
# Pulse layers
# ---------------------------------------------------------------------------

#: layer kinds with the fields each one carries
LAYER_FIELDS = {
    "HBar": ("decoupled_sites",),
    "CZBar": (),
    "HyBar": ("decoupled_sites",),
    "IsingEvolve": ("angle", "decoupled_sites"),
    "LocalRz": ("site", "angle"),
    "LocalRx": ("site", "angle"),
    "GlobalRz": ("angle",),
    "GlobalRy": ("angle",),
    "EdgeRz": ("edge", "angle"),
}
FIELD_ORDER = ("kind", "site", "edge", "angle", "decoupled_sites")


@dataclass(frozen=True)
class PulseLayer:
    """One global or end-selective control event.

    ``HBar`` and ``HyBar`` may skip end sites listed in ``decoupled_sites``
    (used while an end spin is trapped).  ``HyBar`` is the quarter turn
    ``exp(-i pi/4 X)`` on every site.  ``IsingEvolve(angle, D)`` is
    ``exp(-i angle sum' Z_a Z_{a+1})`` where the sum omits bonds touching D.
    """

    kind: str
    site: int | None = None
    edge: str | None = None
    angle: float | None = None
    decoupled_sites: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in LAYER_FIELDS:
            raise ScheduleError(f"unknown layer kind {self.kind!r}")
        allowed = LAYER_FIELDS[self.kind]
        for name in ("site", "edge", "angle"):
            val = getattr(self, name)
            if name in allowed and val is None:
                raise ScheduleError(f"{self.kind} requires {name}")
            if name not in allowed and val is not None:
                raise ScheduleError(f"{self.kind} takes no {name}")
        if self.decoupled_sites and "decoupled_sites" not in allowed:
            raise ScheduleError(f"{self.kind} takes no decoupled_sites")
        object.__setattr__(self, "decoupled_sites", tuple(sorted(set(int(s) for s in self.decoupled_sites))))
        if self.angle is not None:
            object.__setattr__(self, "angle", float(self.angle))
        if self.site is not None:
            object.__setattr__(self, "site", int(self.site))
        if self.edge is not None and self.edge not in ("left", "right"):
            raise ScheduleError("edge must be left or right")

    def target_site(self, n: int) -> int | None:
        """Physical site addressed by a selective layer (EdgeRz resolved)."""
        if self.kind == "EdgeRz":
            return 1 if self.edge == "left" else n
        return self.site

    def __str__(self) -> str:
        return _layer_record(self)


def HBar(decoupled: Iterable[int] = ()) -> PulseLayer:
    return PulseLayer("HBar", decoupled_sites=tuple(decoupled))


def CZBar() -> PulseLayer:
    return PulseLayer("CZBar")


def HyBar(decoupled: Iterable[int] = ()) -> PulseLayer:
    return PulseLayer("HyBar", decoupled_sites=tuple(decoupled))


def IsingEvolve(angle: float, decoupled: Iterable[int] = ()) -> PulseLayer:
    return PulseLayer("IsingEvolve", angle=angle, decoupled_sites=tuple(decoupled))


def LocalRz(site: int, angle: float) -> PulseLayer:
    return PulseLayer("LocalRz", site=site, angle=angle)


def LocalRx(site: int, angle: float) -> PulseLayer:
    return PulseLayer("LocalRx", site=site, angle=angle)


def GlobalRz(angle: float) -> PulseLayer:
    return PulseLayer("GlobalRz", angle=angle)


def GlobalRy(angle: float) -> PulseLayer:
    return PulseLayer("GlobalRy", angle=angle)


def EdgeRz(edge: str, angle: float) -> PulseLayer:
    return PulseLayer("EdgeRz", edge=edge, angle=angle)


# ---------------------------------------------------------------------------
# Ledger, schedule, configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FrameLedger:
    """Known corrections that were not applied physically.

    Materialization order: first every ``pending_z`` rotation
    ``R_z(angle)`` on its site, then the Pauli ``pauli_frame``.
    """

    pauli_frame: PauliString | None = None
    pending_z: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "pending_z",
                           tuple((int(s), float(a)) for s, a in self.pending_z))

    def is_empty(self) -> bool:
        pauli_trivial = self.pauli_frame is None or self.pauli_frame.weight == 0
        return pauli_trivial and not self.pending_z

    def __eq__(self, other) -> bool:
        if not isinstance(other, FrameLedger):
            return NotImplemented
        def norm(p):
            return None if p is None or p.weight == 0 else str(p)
        return norm(self.pauli_frame) == norm(other.pauli_frame) and self.pending_z == other.pending_z

    def __hash__(self):
        return hash((str(self.pauli_frame), self.pending_z))


@dataclass(frozen=True)
class PulseSchedule:
    sites: int
    layers: tuple[PulseLayer, ...] = ()
    ledger: FrameLedger = field(default_factory=FrameLedger)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))

    def __len__(self) -> int:
        return len(self.layers)

    def __add__(self, other: "PulseSchedule") -> "PulseSchedule":
        """Concatenate layers; only the right operand may carry a ledger."""
        if self.sites != other.sites:
            raise ScheduleError("cannot concatenate schedules of different size")
        if not self.ledger.is_empty():
            raise ScheduleError("left operand of concatenation has a pending ledger")
        return PulseSchedule(self.sites, self.layers + other.layers, other.ledger)

    def with_ledger(self, ledger: FrameLedger) -> "PulseSchedule":
        return PulseSchedule(self.sites, self.layers, ledger)


@dataclass(frozen=True)
class ChainConfig:
    """Placement of the logical register on the chain.

    ``layout[k]`` is the physical (1-based) site of logical qubit ``k``.
    Non-data sites hold ``padding`` (only ``"plus"`` is supported by the
    gate scheduler).
    """

    n_sites: int
    layout: tuple[int, ...]
    padding: str = "plus"

    def __post_init__(self):
        object.__setattr__(self, "layout", tuple(int(s) for s in self.layout))
        if len(set(self.layout)) != len(self.layout):
            raise ValueError("layout collision")
        if any(not 1 <= s <= self.n_sites for s in self.layout):
            raise ValueError("layout does not fit the chain")

    @property
    def n_logical(self) -> int:
        return len(self.layout)

    @property
    def padding_sites(self) -> list[int]:
        used = set(self.layout)
        return [s for s in range(1, self.n_sites + 1) if s not in used]

    @classmethod
    def padded(cls, n_logical: int) -> "ChainConfig":
        """Data on odd sites 1, 3, ..., 2n-1 with |+> buffers between."""
        return cls(2 * n_logical - 1, tuple(2 * k + 1 for k in range(n_logical)))

    @classmethod
    def dense(cls, n_logical: int) -> "ChainConfig":
        return cls(n_logical, tuple(range(1, n_logical + 1)))

    def is_buffered(self) -> bool:
        """True when no two data sites are adjacent."""
        s = sorted(self.layout)
        return all(b - a >= 2 for a, b in zip(s, s[1:]))


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def layer_violations(layer: PulseLayer, n: int) -> list[str]:
    out = []
    if layer.site is not None:
        if not 1 <= layer.site <= n:
            out.append("site out of range")
        elif layer.kind in ("LocalRz", "LocalRx") and layer.site not in (1, n):
            out.append("selective pulse on interior site")
    if layer.decoupled_sites:
        if any(not 1 <= s <= n for s in layer.decoupled_sites):
            out.append("site out of range")
        elif any(s not in (1, n) for s in layer.decoupled_sites):
            out.append("only end sites decouplable")
    if layer.angle is not None and not math.isfinite(layer.angle):
        out.append("angle not finite")
    return out


def validate_schedule(s: PulseSchedule) -> list[str]:
    """Return a list of violations; empty iff the schedule is valid."""
    out = []
    if s.sites < 2:
        out.append(f"degenerate chain: N={s.sites} < 2")
    for i, layer in enumerate(s.layers):
        out.extend(f"layer {i}: {v}" for v in layer_violations(layer, max(s.sites, 1)))
    led = s.ledger
    if led.pauli_frame is not None and led.pauli_frame.n != s.sites:
        out.append("ledger: pauli frame length mismatch")
    for site, angle in led.pending_z:
        if not 1 <= site <= s.sites:
            out.append("ledger: site out of range")
        if not math.isfinite(angle):
            out.append("ledger: angle not finite")
    return out


# ---------------------------------------------------------------------------
# Canonical text format
# ---------------------------------------------------------------------------

HEADER = "qwire-schedule 1"


def _fmt_angle(a: float) -> str:
    return repr(float(a))  # shortest round-tripping decimal


def _layer_record(layer: PulseLayer) -> str:
    parts = [f"kind={layer.kind}"]
    if layer.site is not None:
        parts.append(f"site={layer.site}")
    if layer.edge is not None:
        parts.append(f"edge={layer.edge}")
    if layer.angle is not None:
        parts.append(f"angle={_fmt_angle(layer.angle)}")
    if layer.decoupled_sites:
        parts.append("decoupled_sites=" + ",".join(str(s) for s in layer.decoupled_sites))
    return " ".join(parts)


def serialize_schedule(s: PulseSchedule) -> bytes:
    lines = [HEADER, f"sites {s.sites}", f"layers {len(s.layers)}"]
    for i, layer in enumerate(s.layers):
        lines.append(f"layer {i} {_layer_record(layer)}")
    if s.ledger.pauli_frame is not None:
        lines.append(f"ledger pauli {s.ledger.pauli_frame}")
    for site, angle in s.ledger.pending_z:
        lines.append(f"ledger z site={site} angle={_fmt_angle(angle)}")
    lines.append("end")
    return ("\n".join(lines) + "\n").encode("ascii")


def _parse_layer(fields: Sequence[str], index: int, n: int) -> PulseLayer:
    kv = {}
    for f in fields:
        if "=" not in f:
            raise ScheduleParseError(f"malformed field {f!r}", index)
        key, val = f.split("=", 1)
        if key not in FIELD_ORDER or key in kv:
            raise ScheduleParseError(f"unexpected field {key!r}", index)
        kv[key] = val
    keys = list(kv)
    if keys != sorted(keys, key=FIELD_ORDER.index) or not keys or keys[0] != "kind":
        raise ScheduleParseError("fields out of canonical order", index)
    try:
        layer = PulseLayer(
            kind=kv["kind"],
            site=int(kv["site"]) if "site" in kv else None,
            edge=kv.get("edge"),
            angle=float(kv["angle"]) if "angle" in kv else None,
            decoupled_sites=tuple(int(t) for t in kv["decoupled_sites"].split(","))
            if "decoupled_sites" in kv else (),
        )
    except (ValueError, ScheduleError) as exc:
        raise ScheduleParseError(str(exc), index) from None
    problems = layer_violations(layer, n)
    if problems:
        raise ScheduleParseError(problems[0], index)
    return layer


def parse_schedule(b: bytes | str) -> PulseSchedule:
    text = b.decode("ascii") if isinstance(b, (bytes, bytearray)) else b
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != HEADER:
        raise ScheduleParseError("missing header")
    try:
        n = int(lines[1].split()[1]) if lines[1].startswith("sites ") else None
        count = int(lines[2].split()[1]) if lines[2].startswith("layers ") else None
    except (IndexError, ValueError):
        n = count = None
    if n is None or count is None:
        raise ScheduleParseError("missing sites/layers header")
    if n < 2:
        raise ScheduleParseError(f"degenerate chain: N={n} < 2")
    layers = []
    pauli = None
    pending = []
    body = lines[3:]
    if not body or body[-1].strip() != "end":
        raise ScheduleParseError("missing end marker")
    for ln in body[:-1]:
        tok = ln.split()
        if tok[0] == "layer":
            if len(tok) < 3 or tok[1] != str(len(layers)):
                raise ScheduleParseError("layer index out of sequence", len(layers))
            layers.append(_parse_layer(tok[2:], len(layers), n))
        elif tok[:2] == ["ledger", "pauli"] and len(tok) == 3:
            try:
                pauli = PauliString.parse(tok[2])
            except ValueError as exc:
                raise ScheduleParseError(f"ledger: {exc}") from None
            if pauli.n != n:
                raise ScheduleParseError("ledger: pauli frame length mismatch")
        elif tok[:2] == ["ledger", "z"] and len(tok) == 4:
            try:
                site = int(tok[2].removeprefix("site="))
                angle = float(tok[3].removeprefix("angle="))
            except ValueError:
                raise ScheduleParseError("ledger: malformed z record") from None
            if not 1 <= site <= n:
                raise ScheduleParseError("ledger: site out of range")
            pending.append((site, angle))
        else:
            raise ScheduleParseError(f"unrecognized record {ln!r}", len(layers))
    if len(layers) != count:
        raise ScheduleParseError(f"expected {count} layers, found {len(layers)}")
    return PulseSchedule(n, tuple(layers), FrameLedger(pauli, tuple(pending)))
