"""Heisenberg-picture propagation of Pauli strings through HBar and CZBar.

For a layer ``L`` the image of ``p`` is ``L p L^dagger`` so that
``L p = p' L``.  Propagation rules::

    CZBar:  Z_a -> Z_a,   X_a -> Z_{a-1} X_a Z_{a+1}  (truncated at the ends)
    HBar:   Z_a <-> X_a

One step is CZBar followed by HBar; the mirror is ``N + 1`` steps.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

import numpy as np

from . import kernels
from .core import ChainConfig, PauliString, PulseLayer

__all__ = [
    "ImpactPoint", "MirrorFailure", "SpacetimePattern", "conjugate_layer", "step",
    "steps", "propagate", "mirror_map", "spacetime_pattern", "find_impact_points",
]


def _mutable(p: PauliString) -> tuple[np.ndarray, np.ndarray]:
    return np.array(p.x, dtype=np.uint8, copy=True), np.array(p.z, dtype=np.uint8, copy=True)


def conjugate_layer(p: PauliString, layer: PulseLayer | str, n: int | None = None) -> PauliString:
    """Image of ``p`` under one HBar or CZBar layer."""
    kind = layer if isinstance(layer, str) else layer.kind
    if n is not None and n != p.n:
        raise ValueError("length mismatch between string and layer chain")
    if not isinstance(layer, str) and layer.decoupled_sites:
        raise ValueError("conjugate_layer handles only full HBar/CZBar layers")
    x, z = _mutable(p)
    if kind == "CZBar":
        dk = kernels.czbar_inplace(x, z)
    elif kind == "HBar":
        dk = kernels.hbar_inplace(x, z)
    else:
        raise ValueError(f"conjugate_layer supports HBar and CZBar, not {kind}")
    return PauliString(x, z, p.k + dk)


def steps(p: PauliString, count: int) -> PauliString:
    """Image after ``count`` applications of HBar . CZBar."""
    if count < 0:
        raise ValueError("count must be non-negative")
    x, z = _mutable(p)
    dk = kernels.steps_inplace(x, z, int(count))
    return PauliString(x, z, p.k + dk)


def step(p: PauliString) -> PauliString:
    return steps(p, 1)


def propagate(p: PauliString, layers: Iterable[PulseLayer | str]) -> PauliString:
    for layer in layers:
        p = conjugate_layer(p, layer)
    return p


# ---------------------------------------------------------------------------
# mirror theorem
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MirrorFailure:
    site: int
    letter: str
    image: str


def mirror_map(n: int):
    """Images of X_a and Z_a under the full mirror ``(HBar.CZBar)^(n+1)``.

    Returns ``(images, failures)``.  ``images[(a, letter)] = (site, letter, sign)``
    for every single-site image; anything else is listed in ``failures``.
    """
    if n < 2:
        raise ValueError("chain size must be at least 2")
    images = {}
    failures = []
    for a in range(1, n + 1):
        for letter in "XZ":
            img = steps(PauliString.single(n, a, letter), n + 1)
            sup = img.support()
            if len(sup) == 1 and img.phase_exponent in (0, 2):
                s = sup[0]
                images[(a, letter)] = (s, img.letter(s), 1 if img.phase_exponent == 0 else -1)
            else:
                failures.append(MirrorFailure(a, letter, str(img)))
    return images, failures


# ---------------------------------------------------------------------------
# space-time patterns
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpacetimePattern:
    """``grid[t][a-1]`` is the letter at site ``a`` after ``t`` steps."""

    grid: tuple[str, ...]
    signs: tuple[int, ...]

    @property
    def steps(self) -> int:
        return len(self.grid) - 1

    def to_ascii(self) -> str:
        return "\n".join(row.replace("I", ".") for row in self.grid) + "\n"

    def to_svg(self, cell: int = 18) -> str:
        colors = {"X": "#d62728", "Z": "#1f77b4", "Y": "#9467bd"}
        n = len(self.grid[0]) if self.grid else 0
        w, h = cell * (n + 2), cell * (len(self.grid) + 1)
        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
               f'viewBox="0 0 {w} {h}">',
               f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>']
        for t, row in enumerate(self.grid):
            y = cell * (t + 0.5)
            out.append(f'<text x="2" y="{y + cell * 0.7:.1f}" font-size="{cell * 0.6:.1f}">'
                       f'{t}</text>')
            for a, c in enumerate(row):
                x = cell * (a + 1.5)
                fill = colors.get(c, "#f4f4f4")
                out.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{cell}" height="{cell}" '
                           f'fill="{fill}" stroke="#999"/>')
                if c != "I":
                    out.append(f'<text x="{x + cell * 0.3:.1f}" y="{y + cell * 0.75:.1f}" '
                               f'font-size="{cell * 0.6:.1f}" fill="white">{escape(c)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"


def spacetime_pattern(initial: PauliString, n_steps: int) -> SpacetimePattern:
    if n_steps < 0:
        raise ValueError("steps must be non-negative")
    rows, signs = [initial.letters], [initial.phase_exponent]
    p = initial
    for _ in range(n_steps):
        p = step(p)
        rows.append(p.letters)
        signs.append(p.phase_exponent)
    return SpacetimePattern(tuple(rows), tuple(signs))


# ---------------------------------------------------------------------------
# impact points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ImpactPoint:
    """Edge z-rotation inserted after ``step`` steps of the mirror.

    ``R_z(g)`` at ``edge`` acts as ``R_z(sign * g)`` on the mirrored qubit.
    With ``half`` set the insertion sits inside step ``step + 1``, between
    its CZBar and its HBar.
    """

    step: int
    edge: str
    sign: int
    half: bool = False

    @property
    def position(self) -> float:
        return self.step + (0.5 if self.half else 0.0)


class NoImpactPoint(ValueError):
    pass


def _matches_z(img: PauliString, m: int, buffers: Sequence[int]) -> int | None:
    """Sign if ``img`` equals +-Z_m times X letters on buffer sites only."""
    if img.letter(m) != "Z":
        return None
    bufset = set(buffers)
    for s in img.support():
        if s == m:
            continue
        if s not in bufset or img.letter(s) != "X":
            return None
    pe = img.phase_exponent
    if pe not in (0, 2):
        return None
    return 1 if pe == 0 else -1


def find_impact_points(a: int, n: int, cfg: ChainConfig | None = None,
                       half_steps: bool = False) -> list[ImpactPoint]:
    """Insertion points where an edge R_z acts as R_z on qubit ``a`` after the mirror.

    Without ``cfg`` the remaining-evolution image of the edge Z must be a
    single-site Z at ``n - a + 1``.  With a padded ``cfg`` the image may also
    carry X letters on buffer sites, which hold |+> at the end of the cycle
    and therefore act trivially.
    """
    if not 1 <= a <= n:
        raise ValueError("site out of range")
    m = n - a + 1
    buffers: list[int] = []
    if cfg is not None:
        if cfg.n_sites != n:
            raise ValueError("config size mismatch")
        buffers = [n - s + 1 for s in cfg.padding_sites]  # buffers after the mirror
    out = []
    for t in range(n + 2):
        for edge, site in (("left", 1), ("right", n)):
            z_edge = PauliString.single(n, site, "Z")
            img = steps(z_edge, n + 1 - t)
            sign = _matches_z(img, m, buffers)
            if sign is not None:
                out.append(ImpactPoint(t, edge, sign))
            if half_steps and t <= n:
                img = steps(conjugate_layer(z_edge, "HBar"), n - t)
                sign = _matches_z(img, m, buffers)
                if sign is not None:
                    out.append(ImpactPoint(t, edge, sign, half=True))
    if not out:
        raise NoImpactPoint(f"no impact point for site {a} on a chain of {n}")
    return out
