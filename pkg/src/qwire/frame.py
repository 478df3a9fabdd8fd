"""Exact Clifford frame for every layer kind at Clifford angles.

The gate scheduler needs more than HBar/CZBar: decoupled variants, Ising
evolution at multiples of pi/4, and end-site quarter turns.  A
:class:`PauliTable` holds many Pauli rows and conjugates all of them at once;
a :class:`LogicalFrame` tracks the images of the logical X and Z operators
plus the stabilizers of the |+> buffer sites, and answers localization
queries modulo that stabilizer group.
"""
from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .core import ChainConfig, PauliString, PulseLayer

QUARTER = math.pi / 4


class NonCliffordError(ValueError):
    pass


def quarter_turns(angle: float, tol: float = 1e-9) -> int:
    """Angle as an integer number of pi/4 quarter turns (mod 8)."""
    m = angle / QUARTER
    r = round(m)
    if abs(m - r) > tol:
        raise NonCliffordError(f"angle {angle!r} is not a multiple of pi/4")
    return int(r) % 8


class PauliTable:
    """Rows ``i**k[r] * prod X**x[r] Z**z[r]`` over ``n`` sites."""

    def __init__(self, x: np.ndarray, z: np.ndarray, k: np.ndarray):
        self.x = np.array(x, dtype=np.uint8, copy=True)
        self.z = np.array(z, dtype=np.uint8, copy=True)
        self.k = np.array(k, dtype=np.int64, copy=True) % 4

    @classmethod
    def from_strings(cls, rows: Sequence[PauliString]) -> "PauliTable":
        n = rows[0].n
        x = np.array([r.x for r in rows], dtype=np.uint8).reshape(len(rows), n)
        z = np.array([r.z for r in rows], dtype=np.uint8).reshape(len(rows), n)
        return cls(x, z, np.array([r.k for r in rows]))

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def row(self, r: int) -> PauliString:
        return PauliString(self.x[r], self.z[r], int(self.k[r]))

    def copy(self) -> "PauliTable":
        return PauliTable(self.x, self.z, self.k)

    # elementary Clifford conjugations (column indices are 0-based) ------------
    def hadamard(self, cols: Sequence[int]) -> None:
        cols = np.asarray(cols, dtype=np.int64)
        if cols.size == 0:
            return
        xs, zs = self.x[:, cols].copy(), self.z[:, cols]
        self.k += 2 * np.sum(xs & zs, axis=1, dtype=np.int64)
        self.x[:, cols] = zs
        self.z[:, cols] = xs

    def cz(self, a: int, b: int) -> None:
        self.k += 2 * (self.x[:, a] & self.x[:, b]).astype(np.int64)
        self.z[:, a] ^= self.x[:, b]
        self.z[:, b] ^= self.x[:, a]

    def quarter_rotation(self, col: int, letter: str, m: int) -> None:
        """Conjugate by ``exp(-i m pi/4 G)`` with ``G`` a single-site Pauli."""
        for _ in range(m % 4):
            if letter == "Z":
                anti = self.x[:, col].copy()
                self.z[:, col] ^= anti
                self.k += anti.astype(np.int64)
            elif letter == "X":
                anti = self.z[:, col].copy()
                # Q X = (-1)^z X^(x+1) Z^z on that site, times i
                self.k += anti.astype(np.int64) * (1 + 2 * self.z[:, col].astype(np.int64))
                self.x[:, col] ^= anti
            elif letter == "Y":
                anti = self.x[:, col] ^ self.z[:, col]
                # Q Y = i (-1)^z X^(x+1) Z^(z+1), times i
                self.k += anti.astype(np.int64) * (2 + 2 * self.z[:, col].astype(np.int64))
                self.x[:, col] ^= anti
                self.z[:, col] ^= anti
            else:
                raise ValueError(letter)

    def ising_quarter(self, a: int, b: int, m: int) -> None:
        """Conjugate by ``exp(-i m pi/4 Z_a Z_b)``."""
        for _ in range(m % 4):
            anti = self.x[:, a] ^ self.x[:, b]
            self.z[:, a] ^= anti
            self.z[:, b] ^= anti
            self.k += anti.astype(np.int64)

    def apply_layer(self, layer: PulseLayer) -> None:
        """Conjugate every row by ``layer``; raises for non-Clifford angles."""
        n = self.n
        kind = layer.kind
        skip = set(layer.decoupled_sites)
        live = [a for a in range(1, n + 1) if a not in skip]
        if kind == "HBar":
            self.hadamard([a - 1 for a in live])
        elif kind == "HyBar":
            for a in live:
                self.quarter_rotation(a - 1, "X", 1)
        elif kind == "CZBar":
            for a in range(n - 1):
                self.cz(a, a + 1)
        elif kind == "IsingEvolve":
            m = quarter_turns(layer.angle)
            for a in range(1, n):
                if a not in skip and a + 1 not in skip:
                    self.ising_quarter(a - 1, a, m)
        elif kind == "GlobalRz":
            m = quarter_turns(layer.angle)
            for a in range(n):
                self.quarter_rotation(a, "Z", m)
        elif kind == "GlobalRy":
            m = quarter_turns(layer.angle)
            for a in range(n):
                self.quarter_rotation(a, "Y", m)
        elif kind in ("LocalRz", "EdgeRz"):
            self.quarter_rotation(layer.target_site(n) - 1, "Z", quarter_turns(layer.angle))
        elif kind == "LocalRx":
            self.quarter_rotation(layer.site - 1, "X", quarter_turns(layer.angle))
        else:
            raise ValueError(f"unsupported layer kind {kind}")
        self.k %= 4

    def apply_layers(self, layers: Iterable[PulseLayer]) -> None:
        for layer in layers:
            self.apply_layer(layer)


def conjugate(p: PauliString, layers: Iterable[PulseLayer]) -> PauliString:
    """Image ``U p U^dagger`` of one string through Clifford ``layers``."""
    t = PauliTable.from_strings([p])
    t.apply_layers(layers)
    return t.row(0)


# ---------------------------------------------------------------------------
# GF(2) helpers
# ---------------------------------------------------------------------------

def _solve_gf2(a: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """Return some ``c`` with ``a @ c = b`` over GF(2), or None."""
    a = a.copy() & 1
    b = b.copy() & 1
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(a[r:, c])[0]
        if nz.size == 0:
            continue
        p = r + nz[0]
        if p != r:
            a[[r, p]] = a[[p, r]]
            b[[r, p]] = b[[p, r]]
        others = np.nonzero(a[:, c])[0]
        others = others[others != r]
        a[others] ^= a[r]
        b[others] ^= b[r]
        pivots.append(c)
        r += 1
    if np.any(b[r:]):
        return None
    sol = np.zeros(cols, dtype=np.uint8)
    for i, c in enumerate(pivots):
        sol[c] = b[i]
    return sol


class LogicalFrame:
    """Images of logical operators and buffer stabilizers under a Clifford.

    Row layout: ``Z_0..Z_{q-1}``, ``X_0..X_{q-1}``, then one row per buffer
    stabilizer (``X`` on each non-data site of the initial layout).
    """

    def __init__(self, cfg: ChainConfig, table: PauliTable | None = None):
        self.cfg = cfg
        n, q = cfg.n_sites, cfg.n_logical
        if table is None:
            rows = [PauliString.single(n, s, "Z") for s in cfg.layout]
            rows += [PauliString.single(n, s, "X") for s in cfg.layout]
            rows += [PauliString.single(n, s, "X") for s in cfg.padding_sites]
            table = PauliTable.from_strings(rows)
        self.table = table
        self.q = q

    def copy(self) -> "LogicalFrame":
        return LogicalFrame(self.cfg, self.table.copy())

    def apply(self, layers: Iterable[PulseLayer] | PulseLayer) -> "LogicalFrame":
        if isinstance(layers, PulseLayer):
            layers = [layers]
        self.table.apply_layers(layers)
        return self

    @property
    def n(self) -> int:
        return self.cfg.n_sites

    def logical(self, qubit: int, letter: str) -> PauliString:
        if letter == "Z":
            return self.table.row(qubit)
        if letter == "X":
            return self.table.row(self.q + qubit)
        if letter == "Y":  # Y = i X Z
            x, z = self.table.row(self.q + qubit), self.table.row(qubit)
            p = x * z
            return PauliString(p.x, p.z, p.k + 1)
        raise ValueError(letter)

    def stabilizers(self) -> list[PauliString]:
        return [self.table.row(r) for r in range(2 * self.q, self.table.x.shape[0])]

    def reduce_to(self, p: PauliString, sites: Sequence[int]) -> PauliString | None:
        """Some ``p * g`` (g a buffer stabilizer) supported inside ``sites``."""
        t = self.table
        g0 = 2 * self.q
        ng = t.x.shape[0] - g0
        keep = np.ones(self.n, dtype=bool)
        keep[[s - 1 for s in sites]] = False
        if ng == 0:
            return p if not np.any((p.x | p.z)[keep]) else None
        a = np.concatenate([t.x[g0:, keep], t.z[g0:, keep]], axis=1).T
        b = np.concatenate([p.x[keep], p.z[keep]])
        c = _solve_gf2(a, b)
        if c is None:
            return None
        out = p
        for i in np.nonzero(c)[0]:
            out = out * t.row(g0 + int(i))
        return out

    def locate(self, qubit: int, letter: str, site: int) -> tuple[str, int] | None:
        """If the logical operator equals ``sign * L_site`` modulo buffer
        stabilizers, return ``(L, sign)``."""
        r = self.reduce_to(self.logical(qubit, letter), [site])
        if r is None or r.weight != 1:
            return None
        pe = r.phase_exponent
        if pe not in (0, 2):
            return None
        return r.letter(site), 1 if pe == 0 else -1

    def where(self, qubit: int, letter: str) -> tuple[int, str, int] | None:
        for site in range(1, self.n + 1):
            hit = self.locate(qubit, letter, site)
            if hit is not None:
                return site, hit[0], hit[1]
        return None

    def final_layout(self) -> tuple[list[int], PauliString] | None:
        """If the frame is a relabelling of sites times a Pauli, return the
        new data layout and the Pauli correction that restores it exactly.

        Requires logical Z and X to map to single-site Z and X on the same
        site, and the buffer stabilizers to be generated by X on the
        remaining sites (up to sign).
        """
        n = self.n
        layout = []
        corr = PauliString.identity(n)
        for q in range(self.q):
            hz = self.where(q, "Z")
            if hz is None:
                return None
            site = hz[0]
            hx = self.locate(q, "X", site)
            if hz[1] != "Z" or hx is None or hx[0] != "X":
                return None
            layout.append(site)
            if hz[2] < 0:  # Z picked up a sign: an X correction flips it back
                corr = corr * PauliString.single(n, site, "X")
            if hx[1] < 0:
                corr = corr * PauliString.single(n, site, "Z")
        pads = [s for s in range(1, n + 1) if s not in layout]
        if len(pads) != len(self.stabilizers()):
            return None
        # buffers: each must again be stabilized by +-X
        for s in pads:
            # X_s must lie in the stabilizer group up to sign
            probe = PauliString.single(n, s, "X")
            r = self._stab_decompose(probe)
            if r is None:
                return None
            if r < 0:
                corr = corr * PauliString.single(n, s, "Z")
        return layout, corr.with_phase(0)

    def _stab_decompose(self, p: PauliString) -> int | None:
        """Sign s with ``s * p`` in the stabilizer group, else None."""
        t = self.table
        g0 = 2 * self.q
        a = np.concatenate([t.x[g0:], t.z[g0:]], axis=1).T
        b = np.concatenate([p.x, p.z])
        c = _solve_gf2(a, b)
        if c is None:
            return None
        prod = PauliString.identity(self.n)
        for i in np.nonzero(c)[0]:
            prod = prod * t.row(g0 + int(i))
        # prod = s * p
        pe = (prod.phase_exponent - p.phase_exponent) % 4
        if pe not in (0, 2):
            return None
        return 1 if pe == 0 else -1
