"""Brute-force Wick expansion of the shifted Kerr interaction.

Each vertex carries one of the four monomials of the Keldysh-rotated Kerr
action. Every field slot is then either a fluctuation (to be Wick
contracted) or replaced by one of the six external legs. All consistent
choices are enumerated explicitly, so multiplicities are discovered rather
than assumed.

The numeric prefactor of a term is ``(-i)^n / n!``; the factor ``U^n`` is
applied when the term is turned into an integrand, because the expansion is
independent of the physical parameters.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

from .errors import CapabilityError, ContractViolation
from .model import LegKind

__all__ = [
    "Flavor",
    "WickKind",
    "VertexField",
    "Pairing",
    "LegAssignment",
    "ContractionTerm",
    "KERR_MONOMIALS",
    "MAX_ORDER",
    "expand",
    "expand_cumulant",
    "connected_filter",
    "is_connected",
    "dagger_label",
    "plain_label",
]

MAX_ORDER = 2


class Flavor(enum.Enum):
    CL = "cl"
    Q = "q"
    CL_BAR = "clbar"
    Q_BAR = "qbar"

    @property
    def barred(self) -> bool:
        return self in (Flavor.CL_BAR, Flavor.Q_BAR)

    @property
    def quantum(self) -> bool:
        return self in (Flavor.Q, Flavor.Q_BAR)


class WickKind(enum.Enum):
    RETARDED = "R"
    ADVANCED = "A"
    KELDYSH = "K"
    LOOP = "L"


_CL, _Q, _CLB, _QB = Flavor.CL, Flavor.Q, Flavor.CL_BAR, Flavor.Q_BAR

# (phibar_cl phi_cl + phibar_q phi_q)(phibar_q phi_cl + phibar_cl phi_q), expanded.
KERR_MONOMIALS: tuple[tuple[Flavor, ...], ...] = (
    (_CLB, _CL, _QB, _CL),
    (_CLB, _CL, _CLB, _Q),
    (_QB, _Q, _QB, _CL),
    (_QB, _Q, _CLB, _Q),
)

# None stands for the fluctuation part of the shifted field.
_REPLACEMENTS = {
    _CL: (None, LegKind.SOURCE_PHOTON, LegKind.DETECTOR_ANTIPHOTON_K),
    _Q: (None, LegKind.DETECTOR_ANTIPHOTON),
    _CLB: (None, LegKind.SOURCE_ANTIPHOTON, LegKind.DETECTOR_PHOTON_K),
    _QB: (None, LegKind.DETECTOR_PHOTON),
}


@dataclass(frozen=True)
class VertexField:
    vertex_index: int
    slot_index: int
    flavor: Flavor


@dataclass(frozen=True)
class Pairing:
    unbarred: VertexField
    barred: VertexField
    kind: WickKind


@dataclass(frozen=True)
class LegAssignment:
    field: VertexField | None
    kind: LegKind
    label: str | None = None


@dataclass(frozen=True)
class ContractionTerm:
    vertex_count: int
    monomials: tuple[int, ...]
    legs: tuple[LegAssignment, ...]
    pairings: tuple[Pairing, ...]
    prefactor: complex

    @property
    def is_linear(self) -> bool:
        return self.vertex_count == 0

    def has_loop(self) -> bool:
        return any(p.kind is WickKind.LOOP for p in self.pairings)

    def detector_slots(self) -> int:
        return sum(1 for leg in self.legs if leg.kind.is_detector)


def dagger_label(i: int) -> str:
    return f"d{i}"


def plain_label(i: int) -> str:
    return f"p{i}"


def _wick_kind(u: VertexField, b: VertexField) -> WickKind | None:
    if u.vertex_index == b.vertex_index:
        if u.flavor is _CL and b.flavor is _CLB:
            return WickKind.LOOP
        return None
    if u.flavor is _CL and b.flavor is _QB:
        return WickKind.RETARDED
    if u.flavor is _Q and b.flavor is _CLB:
        return WickKind.ADVANCED
    if u.flavor is _CL and b.flavor is _CLB:
        return WickKind.KELDYSH
    return None


@lru_cache(maxsize=None)
def _local_configs():
    """All single-vertex slot configurations as (monomial, replacements)."""
    out = []
    for m, mono in enumerate(KERR_MONOMIALS):
        for combo in itertools.product(*(_REPLACEMENTS[fl] for fl in mono)):
            n_plain = sum(1 for r in combo if r is not None and r.is_photon_detector)
            n_dag = sum(1 for r in combo if r is not None and r.is_antiphoton_detector)
            out.append((m, combo, n_dag, n_plain))
    return tuple(out)


def _vertex_components(n: int, pairings) -> int:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p in pairings:
        a, b = find(p.unbarred.vertex_index), find(p.barred.vertex_index)
        if a != b:
            parent[a] = b
    return len({find(i) for i in range(n)})


def is_connected(term: ContractionTerm) -> bool:
    """Connectedness across vertices and detector legs."""
    if term.vertex_count == 0:
        return term.detector_slots() == 1
    return _vertex_components(term.vertex_count, term.pairings) == 1


def connected_filter(terms):
    return [t for t in terms if is_connected(t)]


def _wick_pairings(unbarred, barred, include_loops):
    if len(unbarred) != len(barred):
        return
    for perm in itertools.permutations(range(len(barred))):
        pairs = []
        for u, j in zip(unbarred, perm):
            kind = _wick_kind(u, barred[j])
            if kind is None or (kind is WickKind.LOOP and not include_loops):
                break
            pairs.append(Pairing(u, barred[j], kind))
        else:
            yield tuple(pairs)


def _label_assignments(legs, n_dagger, n_plain):
    """Expand unlabeled detector legs into all label bijections."""
    plain_idx = [i for i, leg in enumerate(legs) if leg.kind.is_photon_detector]
    dag_idx = [i for i, leg in enumerate(legs) if leg.kind.is_antiphoton_detector]
    for pp in itertools.permutations(range(n_plain)):
        for dp in itertools.permutations(range(n_dagger)):
            labeled = list(legs)
            for slot, lab in zip(plain_idx, pp):
                labeled[slot] = LegAssignment(legs[slot].field, legs[slot].kind, plain_label(lab))
            for slot, lab in zip(dag_idx, dp):
                labeled[slot] = LegAssignment(legs[slot].field, legs[slot].kind, dagger_label(lab))
            yield tuple(labeled)


@lru_cache(maxsize=64)
def expand(n_dagger: int, n_plain: int, order: int, *, connected_only: bool = True,
           include_loops: bool = True, allow_higher_orders: bool = False) -> tuple[ContractionTerm, ...]:
    """Enumerate labeled contraction terms for ``n_dagger`` b-dagger and ``n_plain`` b detectors.

    Parameters
    ----------
    n_dagger, n_plain : int
        Numbers of ``b_out^dagger`` and ``b_out`` operators in the cumulant.
    order : int
        Exact number of Kerr vertices.
    connected_only : bool
        Drop terms whose vertex graph is disconnected.
    include_loops : bool
        Keep same-vertex classical-classical contractions.
    allow_higher_orders : bool
        Permit ``order > 2``; no accuracy or runtime promise.

    Returns
    -------
    tuple of ContractionTerm
        Deterministically ordered raw terms. Detector labels ``d0, d1, ...``
        and ``p0, p1, ...`` index the b-dagger and b detectors.
    """
    if order < 0 or n_dagger < 0 or n_plain < 0:
        raise ContractViolation("order and detector counts must be non-negative")
    if order > MAX_ORDER and not allow_higher_orders:
        raise CapabilityError(f"order {order} exceeds the supported maximum {MAX_ORDER}")
    if order == 0:
        if n_dagger + n_plain != 1:
            return ()
        kind = LegKind.DETECTOR_PHOTON if n_plain else LegKind.DETECTOR_ANTIPHOTON
        label = plain_label(0) if n_plain else dagger_label(0)
        return (ContractionTerm(0, (), (LegAssignment(None, kind, label),), (), 1.0 + 0j),)

    prefactor = (-1j) ** order / math.factorial(order)
    configs = _local_configs()
    out = []
    for choice in itertools.product(configs, repeat=order):
        if sum(c[2] for c in choice) != n_dagger or sum(c[3] for c in choice) != n_plain:
            continue
        legs, unbarred, barred = [], [], []
        for v, (m, combo, _, _) in enumerate(choice):
            for s, (flavor, rep) in enumerate(zip(KERR_MONOMIALS[m], combo)):
                field = VertexField(v, s, flavor)
                if rep is None:
                    (barred if flavor.barred else unbarred).append(field)
                else:
                    legs.append(LegAssignment(field, rep))
        monomials = tuple(c[0] for c in choice)
        for pairs in _wick_pairings(unbarred, barred, include_loops):
            if connected_only and order > 1 and _vertex_components(order, pairs) != 1:
                continue
            for labeled in _label_assignments(legs, n_dagger, n_plain):
                out.append(ContractionTerm(order, monomials, labeled, pairs, prefactor))
    return tuple(out)


def expand_cumulant(request, *, connected_only: bool = True, n_b: float | None = None,
                    allow_higher_orders: bool = False) -> list[ContractionTerm]:
    """Raw terms for ``request`` at exactly ``request.order`` vertices.

    ``request`` needs ``dagger_times``, ``plain_times`` and ``order``; an
    optional ``mode`` whose ``loops`` attribute is False removes loop terms.
    Passing ``n_b = 0`` drops loop terms as well, since they vanish there.
    """
    for name in ("dagger_times", "plain_times"):
        times = list(getattr(request, name))
        if any(b < a for a, b in zip(times, times[1:])):
            raise ContractViolation(f"{name} must be nondecreasing, got {times}")
    mode = getattr(request, "mode", None)
    include_loops = getattr(mode, "loops", True) and not (n_b is not None and n_b == 0)
    return list(expand(len(request.dagger_times), len(request.plain_times), request.order,
                       connected_only=connected_only, include_loops=include_loops,
                       allow_higher_orders=allow_higher_orders))
