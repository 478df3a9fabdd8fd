"""Lowering of named global composites into pulse schedules.

Conventions: ``R_z(t) = exp(-i t Z)``; schedules list layers in time order.
All composites below are exact up to a global phase.
"""
from __future__ import annotations

import math
from typing import Iterable, Mapping

from .core import (ChainConfig, CZBar, EdgeRz, FrameLedger, GlobalRy, GlobalRz, HBar, HyBar,
                   IsingEvolve, LocalRx, LocalRz, PauliString, PulseLayer, PulseSchedule)
from .pauli import find_impact_points

PI = math.pi
DECOUPLING_MODES = ("ideal", "pulsed")


def _check_n(n: int, minimum: int = 2) -> None:
    if n < minimum:
        raise ValueError(f"chain size must be at least {minimum}, got {n}")


def _other_end(n: int, end: int) -> int:
    return 1 if end == n else n


def czbar_layers(n: int) -> list[PulseLayer]:
    """Ising evolution plus homogeneous z-rotations with end corrections."""
    return [IsingEvolve(PI / 4), GlobalRz(-PI / 2), LocalRz(1, PI / 4), LocalRz(n, PI / 4)]


def compile_czbar(n: int) -> PulseSchedule:
    _check_n(n)
    return PulseSchedule(n, tuple(czbar_layers(n)))


def step_bangbang_layers(n: int) -> list[PulseLayer]:
    """HBar.CZBar as Ising evolution followed by bang-bang rotations.

    Uses ``-iH = exp(-i pi/2 X) exp(-i pi/4 Y)`` so that
    ``HBar.CZBar = i^N prod_a exp(i chi_a X_a) exp(-i pi/4 Y_a) U_Ising``
    with ``chi = -pi/4`` on the ends and ``0`` in the interior.
    """
    return [IsingEvolve(PI / 4), GlobalRy(PI / 4), LocalRx(1, PI / 4), LocalRx(n, PI / 4)]


def compile_step_bangbang(n: int) -> PulseSchedule:
    _check_n(n)
    return PulseSchedule(n, tuple(step_bangbang_layers(n)))


def bangbang_x_phases(n: int) -> list[float]:
    """The chi_a values realized by :func:`step_bangbang_layers`."""
    return [-PI / 4 if a in (1, n) else 0.0 for a in range(1, n + 1)]


def compile_transport(n: int, defer_final_z: bool = True) -> PulseSchedule:
    """CZBar.(HBar.CZBar)^(N-1): N CZBar and N-1 HBar composites.

    The N-1 leading steps use the bang-bang lowering.  The z-rotations of the
    last CZBar go to the ledger when ``defer_final_z`` is set.
    """
    _check_n(n)
    layers: list[PulseLayer] = []
    for _ in range(n - 1):
        layers += step_bangbang_layers(n)
    last = czbar_layers(n)
    if not defer_final_z:
        return PulseSchedule(n, tuple(layers + last))
    pending = {a: -PI / 2 for a in range(1, n + 1)}
    pending[1] += PI / 4
    pending[n] += PI / 4
    ledger = FrameLedger(None, tuple(sorted(pending.items())))
    return PulseSchedule(n, tuple(layers + last[:1]), ledger)


def transport_composites(n: int) -> list[str]:
    """Top-level composites of the transport in time order."""
    _check_n(n)
    return ["CZBar", "HBar"] * (n - 1) + ["CZBar"]


def compile_mirror(n: int, lowered: bool = False) -> PulseSchedule:
    """(HBar.CZBar)^(N+1), either as primitive layers or bang-bang lowered."""
    _check_n(n)
    one = step_bangbang_layers(n) if lowered else [CZBar(), HBar()]
    return PulseSchedule(n, tuple(one * (n + 1)))


# ---------------------------------------------------------------------------
# mirror cycles with edge insertions
# ---------------------------------------------------------------------------

def mirror_with_insertions(n: int, insertions: Mapping[tuple[int, bool], Iterable[PulseLayer]]
                           ) -> list[PulseLayer]:
    """One mirror cycle with extra layers at given positions.

    ``insertions[(t, False)]`` runs after ``t`` steps; ``insertions[(t, True)]``
    runs inside step ``t + 1`` between its CZBar and its HBar.
    """
    out: list[PulseLayer] = []
    for t in range(n + 2):
        out.extend(insertions.get((t, False), ()))
        if t == n + 1:
            break
        out.append(CZBar())
        out.extend(insertions.get((t, True), ()))
        out.append(HBar())
    return out


def compile_plus_prep(n: int) -> PulseSchedule:
    """Map the alternating ``|+,0,+,0,...>`` input to ``|+,+,...,+>``.

    Global HBar and CZBar alone cannot do this, so the composite uses one
    mirror cycle bracketed by HyBar layers.  Each ``|0>`` site is treated as
    a data qubit that receives ``R_y(pi/4)`` (which maps ``|0>`` to ``|+>``)
    through an edge R_z at one of its impact points; ``HyBar R_z(b) HyBar``
    equals ``-iX R_y(b)`` and X leaves ``|+>`` invariant.
    """
    _check_n(n)
    zero_sites = tuple(range(2, n + 1, 2))
    cfg = ChainConfig(n, zero_sites)
    used: set[tuple[int, bool, str]] = set()
    insertions: dict[tuple[int, bool], list[PulseLayer]] = {}
    for site in zero_sites:
        for pt in find_impact_points(site, n, cfg, half_steps=True):
            key = (pt.step, pt.half, pt.edge)
            if key not in used:
                used.add(key)
                insertions.setdefault((pt.step, pt.half), []).append(
                    EdgeRz(pt.edge, pt.sign * PI / 4))
                break
        else:  # pragma: no cover - buffered layouts always have free points
            raise RuntimeError(f"no free impact point for site {site}")
    layers = [HyBar()] + mirror_with_insertions(n, insertions) + [HyBar()]
    return PulseSchedule(n, tuple(layers))


# ---------------------------------------------------------------------------
# decoupled CZBar
# ---------------------------------------------------------------------------

def decoupled_ising(angle: float, end: int, n: int, mode: str = "ideal") -> list[PulseLayer]:
    """Ising evolution by ``angle`` with the bond to ``end`` switched off.

    ``pulsed`` realizes the decoupling with an R_x(pi/2) on the end spin in
    the middle of the evolution and a second one at the end (which returns
    the end spin to its frame); both modes give the same unitary.
    """
    if mode == "ideal":
        return [IsingEvolve(angle, (end,))]
    if mode == "pulsed":
        return [IsingEvolve(angle / 2), LocalRx(end, PI / 2), IsingEvolve(angle / 2),
                LocalRx(end, PI / 2)]
    raise ValueError(f"unknown decoupling mode {mode!r}")


def czd_layers(n: int, prime: bool = False, end: int | None = None,
               mode: str = "ideal") -> list[PulseLayer]:
    end = n if end is None else end
    if end not in (1, n):
        raise ValueError("only end sites decouplable")
    far = _other_end(n, end)
    if not prime:
        return decoupled_ising(PI / 4, end, n, mode) + [
            GlobalRz(-PI / 2), LocalRz(far, PI / 4), LocalRz(end, PI / 2)]
    return decoupled_ising(3 * PI / 4, end, n, mode) + [
        GlobalRz(PI / 2), LocalRz(far, -PI / 4), LocalRz(end, -PI / 2)]


def compile_czd(n: int, prime: bool = False, end: int | None = None,
                mode: str = "ideal") -> PulseSchedule:
    """CZBar with one end spin decoupled, or its inverse composite.

    The end spin is left untouched.  On the shortened wire the composite
    equals the product of CZ gates times an uncorrected rotation on the
    spin next to the decoupled end (see :func:`czd_unwanted_rotation`).
    """
    _check_n(n, 3)
    return PulseSchedule(n, tuple(czd_layers(n, prime, end, mode)))


def czd_unwanted_rotation(n: int, end: int | None = None) -> tuple[int, float]:
    """Site and angle of the rotation left over by the decoupled CZBar.

    The shortened-wire CZBar needs ``R_z(pi/4)`` on its new end spin; the
    decoupled composite omits it, leaving ``R_z(-pi/4)`` there under the
    ``exp(-i t Z)`` convention.
    """
    end = n if end is None else end
    return (end - 1 if end == n else 2), -PI / 4


def inverse_layers(layers: Iterable[PulseLayer], n: int) -> list[PulseLayer]:
    """Exact inverse (up to phase) of a list of layers."""
    out = []
    for layer in reversed(list(layers)):
        k = layer.kind
        if k in ("HBar", "CZBar"):
            out.append(layer)
        elif k == "HyBar":
            out.extend([layer, layer, layer])  # (exp(-i pi/4 X))^4 = -1
        elif k == "IsingEvolve":
            out.append(IsingEvolve(-layer.angle, layer.decoupled_sites))
        else:
            out.append(PulseLayer(k, layer.site, layer.edge, -layer.angle, layer.decoupled_sites))
    return out
