"""Diagram graphs: grouping of raw terms, canonical keys, validity rules,
rule-based multiplicities, rendering and JSON fixtures.

Edge direction runs from the barred end (outgoing arrow) to the unbarred end
(incoming arrow). For the three propagators the endpoint flavors are

    R: src qbar (dashed)  -> dst cl
    A: src clbar          -> dst q (dashed)
    K: src clbar          -> dst cl
    L: same-vertex clbar/cl pair (thermal loop)
"""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

from .contractions import ContractionTerm, Flavor, WickKind, _wick_kind, VertexField
from .errors import CapabilityError, ContractViolation
from .model import LegKind

__all__ = [
    "Edge",
    "Leg",
    "Diagram",
    "CanonicalForm",
    "ValidationReport",
    "from_term",
    "group_terms",
    "canonicalize",
    "validate",
    "multiplicity",
    "vertex_factor",
    "wick_reconnections",
    "automorphisms",
    "family_key",
    "k_coefficient",
    "reverse_arrows",
    "render",
    "to_json",
    "from_json",
    "SCHEMA",
]

SCHEMA = "kerrio.diagram/1"

_LEG_FLAVOR = {
    LegKind.SOURCE_PHOTON: Flavor.CL,
    LegKind.SOURCE_ANTIPHOTON: Flavor.CL_BAR,
    LegKind.DETECTOR_PHOTON: Flavor.Q_BAR,
    LegKind.DETECTOR_PHOTON_K: Flavor.CL_BAR,
    LegKind.DETECTOR_ANTIPHOTON: Flavor.Q,
    LegKind.DETECTOR_ANTIPHOTON_K: Flavor.CL,
}

_EDGE_ENDS = {  # (flavor at src, flavor at dst)
    WickKind.RETARDED: (Flavor.Q_BAR, Flavor.CL),
    WickKind.ADVANCED: (Flavor.CL_BAR, Flavor.Q),
    WickKind.KELDYSH: (Flavor.CL_BAR, Flavor.CL),
    WickKind.LOOP: (Flavor.CL_BAR, Flavor.CL),
}

_NAMES = {
    LegKind.SOURCE_PHOTON: "SourcePhoton",
    LegKind.SOURCE_ANTIPHOTON: "SourceAntiPhoton",
    LegKind.DETECTOR_PHOTON: "DetectorPhoton",
    LegKind.DETECTOR_ANTIPHOTON: "DetectorAntiPhoton",
    LegKind.DETECTOR_PHOTON_K: "DetectorPhotonK",
    LegKind.DETECTOR_ANTIPHOTON_K: "DetectorAntiPhotonK",
}


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    kind: WickKind

    def __post_init__(self):
        if (self.kind is WickKind.LOOP) != (self.src == self.dst):
            raise ContractViolation(f"self-edges must be loops and loops self-edges: {self}")

    def sort_key(self):
        return (self.src, self.dst, self.kind.value)


@dataclass(frozen=True)
class Leg:
    vertex: int | None
    kind: LegKind
    label: str | None = None

    def sort_key(self):
        return (-1 if self.vertex is None else self.vertex, self.kind.value, self.label or "")


@dataclass(frozen=True)
class Diagram:
    """Typed multigraph with external legs.

    ``multiplicity`` is the combinatorial weight used for evaluation. When
    omitted it is filled in from the counting rules; grouped enumeration
    results carry their measured group size instead.
    """

    n_vertices: int
    edges: tuple[Edge, ...] = ()
    legs: tuple[Leg, ...] = ()
    multiplicity: int | Fraction | None = None
    prefactor: complex = field(default=None)

    def __post_init__(self):
        edges = tuple(sorted(self.edges, key=Edge.sort_key))
        legs = tuple(sorted(self.legs, key=Leg.sort_key))
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "legs", legs)
        for e in edges:
            if not (0 <= e.src < self.n_vertices and 0 <= e.dst < self.n_vertices):
                raise ContractViolation(f"edge {e} references a missing vertex")
        for leg in legs:
            if leg.vertex is None:
                if self.n_vertices != 0:
                    raise ContractViolation("only order-0 diagrams may carry free legs")
            elif not 0 <= leg.vertex < self.n_vertices:
                raise ContractViolation(f"leg {leg} references a missing vertex")
        if self.prefactor is None:
            object.__setattr__(self, "prefactor", complex((-1j) ** self.n_vertices))
        if self.multiplicity is None:
            object.__setattr__(self, "multiplicity", multiplicity(self))
        elif isinstance(self.multiplicity, Fraction) and self.multiplicity.denominator == 1:
            object.__setattr__(self, "multiplicity", int(self.multiplicity))

    @property
    def order(self) -> int:
        return self.n_vertices

    @property
    def detector_legs(self) -> tuple[Leg, ...]:
        return tuple(leg for leg in self.legs if leg.kind.is_detector)

    @property
    def labeled(self) -> bool:
        return any(leg.label is not None for leg in self.detector_legs)

    def legs_at(self, v: int) -> list[Leg]:
        return [leg for leg in self.legs if leg.vertex == v]

    def has_loop(self) -> bool:
        return any(e.kind is WickKind.LOOP for e in self.edges)

    def with_multiplicity(self, m) -> "Diagram":
        return Diagram(self.n_vertices, self.edges, self.legs, m, self.prefactor)

    def unlabeled(self) -> "Diagram":
        legs = tuple(Leg(leg.vertex, leg.kind, None) for leg in self.legs)
        return Diagram(self.n_vertices, self.edges, legs, None, self.prefactor)


@dataclass(frozen=True)
class CanonicalForm:
    canonical_key: bytes

    def __str__(self) -> str:
        return self.canonical_key.decode()


@dataclass(frozen=True)
class ValidationReport:
    rule1: bool
    rule2: bool
    rule3: bool
    rule4: bool
    rule5a: bool
    rule5b: bool
    rule5c: bool
    rule6: bool
    messages: tuple[str, ...] = ()

    @property
    def structural_ok(self) -> bool:
        return self.rule1 and self.rule2 and self.rule3

    @property
    def rule5(self) -> bool:
        return self.rule5a and self.rule5b and self.rule5c

    @property
    def vanishes(self) -> bool:
        """Flagged by a cancellation rule (4, 5 or 6)."""
        return not (self.rule4 and self.rule5 and self.rule6)

    @property
    def vanishes_alone(self) -> bool:
        """Zero by itself, not only after summing with partners (rule 4)."""
        return not self.rule4

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("rule1", "rule2", "rule3", "rule4", "rule5a", "rule5b", "rule5c", "rule6")}


# -- construction -----------------------------------------------------------

def from_term(term: ContractionTerm) -> Diagram:
    legs = tuple(Leg(None if a.field is None else a.field.vertex_index, a.kind, a.label)
                 for a in term.legs)
    edges = tuple(Edge(p.barred.vertex_index, p.unbarred.vertex_index, p.kind) for p in term.pairings)
    return Diagram(term.vertex_count, edges, legs, Fraction(1, math.factorial(term.vertex_count)),
                   complex((-1j) ** term.vertex_count))


def group_terms(terms, labeled: bool = True) -> list[Diagram]:
    """Group raw terms into isomorphism classes, weighting each by count / n!."""
    counts: dict[bytes, Fraction] = defaultdict(Fraction)
    reps: dict[bytes, Diagram] = {}
    for term in terms:
        d = from_term(term)
        if not labeled:
            d = Diagram(d.n_vertices, d.edges, tuple(Leg(l.vertex, l.kind, None) for l in d.legs),
                        d.multiplicity, d.prefactor)
        key = canonicalize(d).canonical_key
        counts[key] += d.multiplicity
        reps.setdefault(key, d)
    return [reps[k].with_multiplicity(counts[k]) for k in sorted(counts)]


# -- canonical form ---------------------------------------------------------

def _raw(d: Diagram):
    legs = [(leg.vertex, leg.kind.value, leg.label or "") for leg in d.legs]
    edges = [(e.src, e.dst, e.kind.value) for e in d.edges]
    return d.n_vertices, legs, edges


def _canonical_raw(n: int, legs, edges) -> bytes:
    best = None
    for perm in itertools.permutations(range(n)):
        pl = sorted((-1 if v is None else perm[v], k, lab) for v, k, lab in legs)
        pe = sorted((perm[s], perm[t], k) for s, t, k in edges)
        cand = (pl, pe)
        if best is None or cand < best:
            best = cand
    if best is None:  # n == 0
        best = (sorted((-1, k, lab) for _, k, lab in legs), [])
    return json.dumps({"n": n, "legs": best[0], "edges": best[1]}, separators=(",", ":")).encode()


def canonicalize(d: Diagram) -> CanonicalForm:
    """Key invariant under vertex relabeling; detector labels are respected."""
    return CanonicalForm(_canonical_raw(*_raw(d)))


def family_key(d: Diagram, n_b: float) -> bytes:
    """Key of the cancellation family of ``d``.

    Detector legs lose their K/plain distinction (moving the dotted line);
    at zero temperature, edges between triply connected vertices also lose
    their propagator type.
    """
    n, legs, edges = _raw(d)
    plain = {LegKind.DETECTOR_PHOTON_K.value: LegKind.DETECTOR_PHOTON.value,
             LegKind.DETECTOR_ANTIPHOTON_K.value: LegKind.DETECTOR_ANTIPHOTON.value}
    legs = [(v, plain.get(k, k), lab) for v, k, lab in legs]
    if n_b == 0:
        pairs = Counter(frozenset((s, t)) for s, t, k in edges if s != t)
        edges = [(s, t, "X" if s != t and pairs[frozenset((s, t))] >= 3 else k) for s, t, k in edges]
    return _canonical_raw(n, legs, edges)


def k_coefficient(d: Diagram) -> tuple[int, int]:
    """(sign, power of F) relating K detector legs to the plain ones."""
    sign, power = 1, 0
    for leg in d.legs:
        if leg.kind is LegKind.DETECTOR_PHOTON_K:
            power += 1
        elif leg.kind is LegKind.DETECTOR_ANTIPHOTON_K:
            sign, power = -sign, power + 1
    return sign, power


# -- rules --------------------------------------------------------------------

def _endpoints(d: Diagram, v: int):
    """(flavor, block) of every line end at vertex ``v``."""
    ends = []
    for e in d.edges:
        fs, fd = _EDGE_ENDS[e.kind]
        if e.src == v:
            ends.append((fs, "line"))
        if e.dst == v:
            ends.append((fd, "line"))
    for leg in d.legs_at(v):
        ends.append((_LEG_FLAVOR[leg.kind], leg.kind.value))
    return ends


def _pair_edges(d: Diagram):
    pairs = defaultdict(list)
    for e in d.edges:
        if e.src != e.dst:
            pairs[frozenset((e.src, e.dst))].append(e)
    return pairs


def _dashed_end(e: Edge) -> int | None:
    if e.kind is WickKind.RETARDED:
        return e.src
    if e.kind is WickKind.ADVANCED:
        return e.dst
    return None


def validate(d: Diagram, n_b: float) -> ValidationReport:
    """Check the six diagram rules.

    Rules 1-3 are structural. Rules 4-6 mark diagrams whose contribution is
    zero on its own (4) or cancels within its family (5, and 6 at ``n_b = 0``).
    """
    if n_b < 0:
        raise ContractViolation("n_b must be non-negative")
    msgs = []
    r1 = r2 = r3 = True
    r5a = r5b = r5c = True
    if d.n_vertices == 0:
        if len(d.detector_legs) != 1 or len(d.legs) != 1 or d.edges:
            raise ContractViolation("order-0 diagrams consist of exactly one detector leg")
        return ValidationReport(True, True, True, True, True, True, True, True, ())
    for e in d.edges:
        if (e.src == e.dst) and e.kind is not WickKind.LOOP:
            r3 = False
            msgs.append(f"rule 3: self-loop of kind {e.kind.value} at vertex {e.src}")
    for v in range(d.n_vertices):
        ends = _endpoints(d, v)
        n_in = sum(1 for fl, _ in ends if not fl.barred)
        n_out = sum(1 for fl, _ in ends if fl.barred)
        if (n_in, n_out) != (2, 2):
            r1 = False
            msgs.append(f"rule 1: vertex {v} has {n_in} ingoing and {n_out} outgoing ends")
        dashed = sum(1 for fl, _ in ends if fl.quantum)
        if dashed not in (1, 3):
            r2 = False
            msgs.append(f"rule 2: vertex {v} has {dashed} dashed ends")
        det = [leg for leg in d.legs_at(v) if leg.kind.is_detector]
        det_dashed = sum(1 for leg in det if leg.kind.quantum)
        if len(det) == 2:
            n_ph = sum(1 for leg in det if leg.kind.is_photon_detector)
            if n_ph == 1 and det_dashed == 1:
                r5a = False
                msgs.append(f"rule 5a: vertex {v}")
        elif len(det) == 3:
            kinds = Counter(leg.kind for leg in det)
            if max(kinds.values()) >= 2 and det_dashed in (1, 2):
                r5b = False
                msgs.append(f"rule 5b: vertex {v}")
        elif len(det) == 4:
            r5c = False
            msgs.append(f"rule 5c: vertex {v}")
    r4 = r6 = True
    for pair, es in _pair_edges(d).items():
        if len(es) >= 2:
            dashed_at = {_dashed_end(e) for e in es} - {None}
            if len(dashed_at) > 1:
                r4 = False
                msgs.append(f"rule 4: vertices {sorted(pair)}")
        if len(es) >= 3 and n_b == 0:
            r6 = False
            msgs.append(f"rule 6: vertices {sorted(pair)}")
    return ValidationReport(r1, r2, r3, r4, r5a, r5b, r5c, r6, tuple(msgs))


def vertex_factor(d: Diagram, v: int) -> int:
    """2 when the four line ends at ``v`` are pairwise distinct and <3 are detectors."""
    ends = _endpoints(d, v)
    n_det = sum(1 for leg in d.legs_at(v) if leg.kind.is_detector)
    return 2 if len(set(ends)) == 4 and n_det < 3 else 1


def wick_reconnections(d: Diagram) -> int:
    """Number of ways to re-pair the cut fluctuation ends that reproduce ``d``."""
    unbarred, barred = [], []
    for e in d.edges:
        fs, fd = _EDGE_ENDS[e.kind]
        barred.append(VertexField(e.src, len(barred), fs))
        unbarred.append(VertexField(e.dst, len(unbarred), fd))
    target = Counter(e.sort_key() for e in d.edges)
    count = 0
    for perm in itertools.permutations(range(len(barred))):
        got = Counter()
        for u, j in zip(unbarred, perm):
            b = barred[j]
            kind = _wick_kind(u, b)
            if kind is None:
                break
            got[(b.vertex_index, u.vertex_index, kind.value)] += 1
        else:
            if got == target:
                count += 1
    return count


def automorphisms(d: Diagram) -> int:
    """Number of vertex permutations mapping ``d`` onto itself."""
    n, legs, edges = _raw(d)
    ref = (sorted(legs), sorted(edges))
    count = 0
    for perm in itertools.permutations(range(n)):
        pl = sorted((perm[v], k, lab) for v, k, lab in legs)
        pe = sorted((perm[s], perm[t], k) for s, t, k in edges)
        count += (pl, pe) == ref
    return max(count, 1)


def _label_orbit(d: Diagram) -> int:
    """Number of distinct classes reached by permuting labels within each detector type."""
    groups = {}
    for leg in d.detector_legs:
        groups.setdefault(leg.label[0], set()).add(leg.label)
    names = [sorted(v) for _, v in sorted(groups.items())]
    n, legs, edges = _raw(d)
    keys = set()
    for perms in itertools.product(*(itertools.permutations(g) for g in names)):
        swap = {a: b for g, p in zip(names, perms) for a, b in zip(g, p)}
        relabeled = [(v, k, swap.get(lab, lab)) for v, k, lab in legs]
        keys.add(_canonical_raw(n, relabeled, edges))
    return len(keys)


def multiplicity(d: Diagram) -> int:
    """Rule-based multiplicity (vertex factors, label factorials, Wick count).

    The label factorial overcounts diagrams with a vertex automorphism, so
    the product is divided by the automorphism count.
    """
    if d.n_vertices == 0:
        return 1
    det = d.detector_legs
    if any(leg.label is not None for leg in det):
        # label permutations split the unlabeled class into equally weighted copies
        total = multiplicity(d.unlabeled())
        orbit = _label_orbit(d)
        if total % orbit:
            raise ContractViolation("multiplicity is not divisible by the label orbit size")
        return total // orbit
    m = 1
    for v in range(d.n_vertices):
        m *= vertex_factor(d, v)
    m *= math.factorial(sum(1 for leg in det if leg.kind.is_photon_detector))
    m *= math.factorial(sum(1 for leg in det if leg.kind.is_antiphoton_detector))
    total = m * wick_reconnections(d)
    aut = automorphisms(d)
    if total % aut:
        raise ContractViolation("multiplicity is not divisible by the automorphism count")
    return total // aut


def reverse_arrows(d: Diagram) -> Diagram:
    """Reverse every arrow and swap filled/empty symbols."""
    leg_swap = {
        LegKind.SOURCE_PHOTON: LegKind.SOURCE_ANTIPHOTON,
        LegKind.SOURCE_ANTIPHOTON: LegKind.SOURCE_PHOTON,
        LegKind.DETECTOR_PHOTON: LegKind.DETECTOR_ANTIPHOTON,
        LegKind.DETECTOR_ANTIPHOTON: LegKind.DETECTOR_PHOTON,
        LegKind.DETECTOR_PHOTON_K: LegKind.DETECTOR_ANTIPHOTON_K,
        LegKind.DETECTOR_ANTIPHOTON_K: LegKind.DETECTOR_PHOTON_K,
    }
    edge_swap = {WickKind.RETARDED: WickKind.ADVANCED, WickKind.ADVANCED: WickKind.RETARDED,
                 WickKind.KELDYSH: WickKind.KELDYSH, WickKind.LOOP: WickKind.LOOP}

    def relabel(lab):
        if lab is None:
            return None
        return ("p" if lab[0] == "d" else "d") + lab[1:]

    legs = tuple(Leg(leg.vertex, leg_swap[leg.kind], relabel(leg.label)) for leg in d.legs)
    edges = tuple(Edge(e.dst, e.src, edge_swap[e.kind]) for e in d.edges)
    return Diagram(d.n_vertices, edges, legs, None)


# -- rendering --------------------------------------------------------------

_EDGE_TEXT = {WickKind.RETARDED: "G^R", WickKind.ADVANCED: "G^A", WickKind.KELDYSH: "G^K",
              WickKind.LOOP: "cl-cl loop"}
_EDGE_DOT = {WickKind.RETARDED: 'style=dashed, label="R"', WickKind.ADVANCED: 'style=dotted, label="A"',
             WickKind.KELDYSH: 'style=bold, label="K"', WickKind.LOOP: 'style=bold, label="loop"'}
_LEG_DOT = {
    LegKind.SOURCE_PHOTON: "shape=box, style=filled, fillcolor=black",
    LegKind.SOURCE_ANTIPHOTON: "shape=box",
    LegKind.DETECTOR_PHOTON: "shape=house",
    LegKind.DETECTOR_ANTIPHOTON: "shape=house, style=filled, fillcolor=black",
    LegKind.DETECTOR_PHOTON_K: "shape=invhouse",
    LegKind.DETECTOR_ANTIPHOTON_K: "shape=invhouse, style=filled, fillcolor=black",
}


def _leg_text(leg: Leg) -> str:
    return _NAMES[leg.kind] + (f"({leg.label})" if leg.label else "")


def render(d: Diagram, format: str = "text") -> str:
    if format == "text":
        lines = [f"order {d.n_vertices}, multiplicity {d.multiplicity}"]
        if d.n_vertices == 0:
            lines.append("detector " + ", ".join(_leg_text(leg) for leg in d.legs))
        for v in range(d.n_vertices):
            legs = ", ".join(_leg_text(leg) for leg in d.legs_at(v)) or "none"
            lines.append(f"vertex {v}: legs {legs}")
        for e in d.edges:
            if e.kind is WickKind.LOOP:
                lines.append(f"vertex {e.src}: {_EDGE_TEXT[e.kind]}")
            else:
                lines.append(f"edge {e.src} -> {e.dst}: {_EDGE_TEXT[e.kind]}")
        return "\n".join(lines)
    if format == "dot":
        out = ["digraph diagram {", "  rankdir=LR;"]
        for v in range(d.n_vertices):
            out.append(f'  v{v} [shape=circle, label="v{v}"];')
        for i, leg in enumerate(d.legs):
            name = f"leg{i}"
            out.append(f'  {name} [{_LEG_DOT[leg.kind]}, label="{leg.label or ""}"];')
            if leg.vertex is None:
                continue
            style = "dashed" if leg.kind.quantum else "solid"
            if leg.kind.barred:
                out.append(f"  v{leg.vertex} -> {name} [style={style}];")
            else:
                out.append(f"  {name} -> v{leg.vertex} [style={style}];")
        for e in d.edges:
            out.append(f"  v{e.src} -> v{e.dst} [{_EDGE_DOT[e.kind]}];")
        out.append("}")
        return "\n".join(out)
    raise CapabilityError(f"unsupported render format {format!r}")


# -- JSON -------------------------------------------------------------------

def to_json(d: Diagram) -> str:
    m = d.multiplicity
    doc = {
        "schema": SCHEMA,
        "n_vertices": d.n_vertices,
        "edges": [[e.src, e.dst, e.kind.value] for e in d.edges],
        "legs": [[leg.vertex, leg.kind.value, leg.label] for leg in d.legs],
        "multiplicity": str(m) if isinstance(m, Fraction) else m,
        "prefactor": [d.prefactor.real, d.prefactor.imag],
    }
    return json.dumps(doc, indent=None, separators=(", ", ": "))


def from_json(text: str) -> Diagram:
    doc = json.loads(text)
    if doc.get("schema") != SCHEMA:
        raise ContractViolation(f"unknown diagram schema {doc.get('schema')!r}")
    m = doc["multiplicity"]
    m = Fraction(m) if isinstance(m, str) else m
    return Diagram(
        doc["n_vertices"],
        tuple(Edge(s, t, WickKind(k)) for s, t, k in doc["edges"]),
        tuple(Leg(v, LegKind(k), lab) for v, k, lab in doc["legs"]),
        m,
        complex(*doc["prefactor"]),
    )
