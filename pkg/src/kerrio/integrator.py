"""Integration of causal exponential products over vertex times.

A diagram integrand is a constant times factors of three shapes, each
acting on a pair of time symbols (vertex indices or detector labels):

* causal     exp(rate (t_i - t_j)) theta(t_i - t_j)
* free       exp(rate (t_i - t_j))
* two-sided  exp(rate (t_i - t_j)) for t_i > t_j, exp(reverse (t_j - t_i)) otherwise

The analytic path enumerates the linear extensions of the precedence order
on {integration variables} plus {fixed times}. Along one extension the
exponent is linear in the gaps between neighbours. Each unbounded gap
contributes ``-1/s``, and each bounded stretch of length ``D`` containing
``m - 1`` free variables contributes the simplex integral, which is entry
``(0, m-1)`` of ``expm(D (diag(s) + superdiagonal))``.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Hashable

import numpy as np
from scipy import integrate as sp_integrate
from scipy.linalg import expm

from .contractions import WickKind
from .diagrams import Diagram
from .errors import AccuracyError, ContractViolation, DivergenceError
from .model import LegKind, ModelParams, leg_profile, linear_output_mean

__all__ = [
    "ExpFactor",
    "ExpProduct",
    "Amplitude",
    "AnalyticKernel",
    "to_integrand",
    "integrate_analytic",
    "integrate_quadrature",
    "linear_extensions",
    "evaluate_product",
]


@dataclass(frozen=True)
class ExpFactor:
    rate: complex
    upper: Hashable
    lower: Hashable
    causal: bool = True
    reverse: complex | None = None

    @property
    def two_sided(self) -> bool:
        return not self.causal and self.reverse is not None

    def value(self, ti: float, tj: float) -> complex:
        s = ti - tj
        if self.causal:
            return cmath.exp(self.rate * s) if s >= 0 else 0j
        if self.reverse is not None and s < 0:
            return cmath.exp(-self.reverse * s)
        return cmath.exp(self.rate * s)


@dataclass(frozen=True)
class ExpProduct:
    constant: complex
    factors: tuple[ExpFactor, ...]
    variables: tuple[Hashable, ...]
    externals: dict = field(default_factory=dict)

    def with_externals(self, externals: dict) -> "ExpProduct":
        return ExpProduct(self.constant, self.factors, self.variables, dict(externals))


@dataclass(frozen=True)
class Amplitude:
    value: complex
    method: str
    error_estimate: float | None = None


# -- to_integrand -----------------------------------------------------------

def to_integrand(d: Diagram, params: ModelParams, detector_times: dict) -> ExpProduct:
    """Build the integrand of one diagram.

    The constant collects multiplicity, ``(-iU)^n``, time-independent leg
    factors, propagator prefactors (1 for i G^R, -1 for i G^A, F for i G^K)
    and ``2 n_b`` for each thermal loop.
    """
    dressed = params.dressed
    labels = [leg.label for leg in d.detector_legs]
    for lab in labels:
        if lab is None:
            raise ContractViolation("detector legs must carry labels to be integrated")
        if lab not in detector_times:
            raise ContractViolation(f"detector label {lab!r} is unbound")
    externals = {lab: float(detector_times[lab]) for lab in labels}
    mult = complex(float(d.multiplicity))

    if d.n_vertices == 0:
        (leg,) = d.legs
        b0 = linear_output_mean(params, dressed)
        value = b0 if leg.kind.is_photon_detector else b0.conjugate()
        return ExpProduct(mult * value, (), (), externals)

    const = mult * (-1j * params.u) ** d.n_vertices
    factors = []
    for leg in d.legs:
        c, rate = leg_profile(leg.kind, params, dressed)
        const *= c
        if leg.kind.is_detector:
            factors.append(ExpFactor(rate, leg.label, leg.vertex))
    delta = params.effective_delta(dressed)
    fwd = complex(-0.5 * params.kappa, delta)
    bwd = complex(-0.5 * params.kappa, -delta)
    for e in d.edges:
        if e.kind is WickKind.LOOP:
            const *= 2.0 * params.n_b
        elif e.kind is WickKind.RETARDED:
            factors.append(ExpFactor(fwd, e.dst, e.src))
        elif e.kind is WickKind.ADVANCED:
            const *= -1.0
            factors.append(ExpFactor(bwd, e.src, e.dst))
        else:
            const *= params.F
            factors.append(ExpFactor(fwd, e.dst, e.src, causal=False, reverse=bwd))
    return ExpProduct(const, tuple(factors), tuple(range(d.n_vertices)), externals)


# -- analytic ---------------------------------------------------------------

def linear_extensions(elements, before: set, chain=()):
    """All total orders of ``elements`` respecting ``before`` (pairs (a, b): a precedes b)
    and keeping the items of ``chain`` in their given order."""
    elements = list(elements)
    preds = {x: {a for a, b in before if b == x} for x in elements}
    chain_pos = {x: i for i, x in enumerate(chain)}
    out = []

    def rec(placed, placed_set, next_chain):
        if len(placed) == len(elements):
            out.append(tuple(placed))
            return
        for x in elements:
            if x in placed_set or not preds[x] <= placed_set:
                continue
            if x in chain_pos and chain_pos[x] != next_chain:
                continue
            placed.append(x)
            placed_set.add(x)
            rec(placed, placed_set, next_chain + (x in chain_pos))
            placed.pop()
            placed_set.discard(x)

    rec([], set(), 0)
    return out


def _simplex(slopes, D: float) -> complex:
    m = len(slopes)
    if m == 1:
        return complex(np.exp(slopes[0] * D))
    if D == 0.0:
        return 0j
    if m == 2:
        x = (slopes[0] - slopes[1]) * D
        if abs(x) > 1e-2:
            return complex((np.exp(slopes[0] * D) - np.exp(slopes[1] * D)) / (slopes[0] - slopes[1]))
    J = np.diag(np.asarray(slopes, dtype=complex) * D) + np.diag(np.full(m - 1, D, dtype=complex), 1)
    return complex(expm(J)[0, m - 1])


@lru_cache(maxsize=4096)
def _plans(signature: tuple, variables: tuple, chain: tuple):
    """Linear extensions and gap incidences for one factor structure.

    Depends only on which symbols each factor couples, never on rates, so
    one enumeration serves any parameter point and any time values sharing
    the ordering pattern of the fixed times.
    """
    elements = list(variables) + list(chain)
    before = {(lower, upper) for upper, lower, causal, _ in signature if causal}
    fixed = set(chain)
    n_f = len(signature)
    plans = []
    for order in linear_extensions(elements, before, chain):
        pos = {x: i for i, x in enumerate(order)}
        gaps = len(order) - 1
        inc_f = np.zeros((gaps, n_f))
        inc_r = np.zeros((gaps, n_f))
        for k, (upper, lower, causal, two_sided) in enumerate(signature):
            pi, pj = pos[upper], pos[lower]
            if pi > pj:
                inc_f[pj:pi, k] = 1.0
            elif two_sided:
                inc_r[pi:pj, k] = 1.0
            else:
                inc_f[pi:pj, k] = -1.0
        fixed_pos = [i for i, x in enumerate(order) if x in fixed]
        outer = [k for k in range(gaps) if k < fixed_pos[0] or k >= fixed_pos[-1]]
        segments = [(a, b, order[a], order[b]) for a, b in zip(fixed_pos, fixed_pos[1:])]
        plans.append((inc_f, inc_r, tuple(outer), tuple(segments)))
    return tuple(plans)


class AnalyticKernel:
    """Exact integrator for one product, reusable across external-time values.

    Orderings are cached per factor structure and ordering pattern of the
    fixed times, so sweeping a delay or a parameter only re-evaluates
    exponentials.
    """

    def __init__(self, p: ExpProduct):
        self.p = p
        self.variables = tuple(p.variables)
        self.signature = tuple((f.upper, f.lower, f.causal, f.two_sided) for f in p.factors)
        self.rates = np.array([f.rate for f in p.factors], dtype=complex)
        self.reverse = np.array([f.reverse if f.two_sided else 0j for f in p.factors], dtype=complex)

    def value(self, externals: dict | None = None) -> complex:
        ext = self.p.externals if externals is None else externals
        if not self.variables:
            out = self.p.constant
            for fac in self.p.factors:
                out *= fac.value(ext[fac.upper], ext[fac.lower])
            return complex(out)
        if not ext:
            raise ContractViolation("analytic integration needs at least one fixed time")
        chain = tuple(sorted(ext, key=lambda k: (ext[k], str(k))))
        total = 0j
        for inc_f, inc_r, outer, segments in _plans(self.signature, self.variables, chain):
            slopes = inc_f @ self.rates + inc_r @ self.reverse
            term = 1.0 + 0j
            for k in outer:
                s = slopes[k]
                if s.real >= 0:
                    raise DivergenceError(f"gap slope {s} does not decay")
                term *= -1.0 / s
            for a, b, na, nb in segments:
                term *= _simplex(slopes[a:b], ext[nb] - ext[na])
                if term == 0:
                    break
            total += term
        return complex(self.p.constant * total)


def integrate_analytic(p: ExpProduct) -> Amplitude:
    return Amplitude(AnalyticKernel(p).value(), "analytic", None)


# -- quadrature -------------------------------------------------------------

def evaluate_product(p: ExpProduct, assignment: dict) -> complex:
    """Integrand value at concrete times (independent of the ordering logic)."""
    out = p.constant
    for fac in p.factors:
        out *= fac.value(assignment[fac.upper], assignment[fac.lower])
        if out == 0:
            return 0j
    return complex(out)


def integrate_quadrature(p: ExpProduct, window: float = 40.0, tol: float = 1e-10,
                         limit: int = 200) -> Amplitude:
    """Nested adaptive quadrature on ``[min(t_ext) - window, max(t_ext) + window]``.

    Every kink of the integrand (fixed times and outer variables) is passed
    to the inner integrator as a breakpoint. The error estimate adds the
    quadrature estimate to a tail bound scaled by ``exp(-window/2)`` in units
    of the slowest decay rate present.
    """
    if window < 0 or tol <= 0:
        raise ContractViolation("window must be >= 0 and tol > 0")
    ext = dict(p.externals)
    n = len(p.variables)
    if n == 0:
        return Amplitude(evaluate_product(p, ext), "quadrature", 0.0)
    if not ext:
        raise ContractViolation("quadrature needs at least one fixed time")
    decay = min((-fac.rate.real for fac in p.factors if fac.rate.real < 0), default=0.0)
    if decay <= 0:
        raise DivergenceError("integrand has no decaying factor")
    lo, hi = min(ext.values()) - window, max(ext.values()) + window
    tail = abs(p.constant) * n * (2.0 / decay) ** n * math.exp(-decay * window)
    if hi <= lo:
        return Amplitude(0j, "quadrature", tail)
    err_total = [0.0]
    inner_tol = tol / (4.0 * max(1, n))

    def level(k: int, assignment: dict) -> complex:
        var = p.variables[k]
        points = sorted({t for t in assignment.values() if lo < t < hi})

        memo = {}

        def integrand(t):
            # the real and imaginary passes revisit most nodes
            if t in memo:
                return memo[t]
            assignment[var] = t
            if k + 1 == n:
                val = evaluate_product(p, assignment)
            else:
                val = level(k + 1, assignment)
            del assignment[var]
            memo[t] = val
            return val

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", sp_integrate.IntegrationWarning)
            val, err = sp_integrate.quad(integrand, lo, hi, points=points or None, limit=limit,
                                         epsabs=inner_tol, epsrel=0.0, complex_func=True)
        if k == 0:
            err_total[0] += abs(err)
        return val

    value = level(0, dict(ext))
    error = err_total[0] + tail
    if error > max(10 * tol, tail * 1.01):
        raise AccuracyError(f"quadrature error {error:.3e} exceeds tolerance {tol:.1e}", best=value,
                            error=error)
    return Amplitude(complex(value), "quadrature", float(error))
