"""Output-field observables assembled from diagrammatic cumulants.

Perturbative quantities are carried as coefficient arrays indexed by the
number of Kerr vertices. Products of such series are truncated at the
requested order, so every composite observable is a strict order-n
expansion (this is what makes photon-flux conservation hold order by order).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .contractions import dagger_label, expand, plain_label
from .diagrams import Diagram, group_terms
from .errors import CapabilityError, ContractViolation, UndefinedReflectionError
from .integrator import AnalyticKernel, ExpFactor, ExpProduct, to_integrand
from .model import ModelParams, linear_output_mean
from .resum import Bare, SummationMode, dress, mean_field_steady_state

__all__ = [
    "CumulantRequest",
    "CumulantValue",
    "SpectrumCurve",
    "PFunction",
    "cumulant",
    "diagram_set",
    "reflection",
    "g1",
    "squeezing_spectrum",
    "g2",
    "g2_numerator",
    "p_function_linear",
    "linear_frequency_cumulants",
    "set_partitions",
    "series_product",
]


@dataclass(frozen=True)
class CumulantRequest:
    """Which cumulant to compute.

    ``dagger_times`` and ``plain_times`` are the (nondecreasing) times of the
    ``b_out^dagger`` and ``b_out`` operators.
    """

    dagger_times: tuple = ()
    plain_times: tuple = ()
    order: int = 0
    mode: SummationMode | None = None

    def __post_init__(self):
        object.__setattr__(self, "dagger_times", tuple(float(t) for t in self.dagger_times))
        object.__setattr__(self, "plain_times", tuple(float(t) for t in self.plain_times))
        for name in ("dagger_times", "plain_times"):
            ts = getattr(self, name)
            if any(b < a for a, b in zip(ts, ts[1:])):
                raise ContractViolation(f"{name} must be nondecreasing, got {ts}")
        if self.mode is None:
            object.__setattr__(self, "mode", Bare(self.order))

    @property
    def n_dagger(self) -> int:
        return len(self.dagger_times)

    @property
    def n_plain(self) -> int:
        return len(self.plain_times)


@dataclass(frozen=True)
class CumulantValue:
    """Per-order coefficients plus the coefficient of a singular ``delta(t - t')`` part."""

    orders: np.ndarray
    delta: float = 0.0

    @property
    def total(self) -> complex:
        return complex(np.sum(self.orders))


@dataclass
class SpectrumCurve:
    grid: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values)
        if self.grid.ndim != 1 or np.any(np.diff(self.grid) <= 0):
            raise ContractViolation("grid must be one-dimensional and strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ContractViolation("curve values must be finite")


@dataclass
class PFunction:
    alpha: np.ndarray
    values: np.ndarray
    mean: complex
    variance: float
    delta_at: complex | None = None


def series_product(a, b, order: int) -> np.ndarray:
    return np.convolve(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))[: order + 1]


# -- diagram evaluation -------------------------------------------------------

@lru_cache(maxsize=None)
def diagram_set(n_dagger: int, n_plain: int, order: int, loops: bool) -> tuple[Diagram, ...]:
    """Labeled diagram classes at exactly ``order`` vertices, sorted by canonical key."""
    return tuple(group_terms(expand(n_dagger, n_plain, order, include_loops=loops)))


def _labels(n_dagger: int, n_plain: int) -> dict:
    out = {dagger_label(i): 0.0 for i in range(n_dagger)}
    out.update({plain_label(i): 0.0 for i in range(n_plain)})
    return out


@lru_cache(maxsize=512)
def _kernels(params: ModelParams, n_dagger: int, n_plain: int, order: int, loops: bool):
    zero = _labels(n_dagger, n_plain)
    return tuple(AnalyticKernel(to_integrand(d, params, zero)) for d in diagram_set(n_dagger, n_plain, order, loops))


def _resolve(params: ModelParams, mode: SummationMode) -> tuple[ModelParams, bool]:
    p = dress(params) if mode.dressed else params.with_(dressed=False)
    return p, bool(mode.loops and params.n_b != 0)


def _mode(mode, order) -> SummationMode:
    if isinstance(mode, SummationMode):
        return mode
    if mode is None:
        return Bare(order)
    return SummationMode.parse(str(mode), order)


def cumulant(req: CumulantRequest, params: ModelParams) -> CumulantValue:
    """Normal- and time-ordered output cumulant through ``req.order``."""
    mode = req.mode
    if not mode.perturbative:
        if (req.n_dagger, req.n_plain) not in ((0, 1), (1, 0)):
            raise CapabilityError("mean field provides first moments only")
        a = mean_field_steady_state(params.with_(dressed=False)).a_mean
        b = params.f + math.sqrt(params.kappa) * a
        return CumulantValue(np.array([b if req.n_plain else b.conjugate()]), 0.0)
    p, loops = _resolve(params, mode)
    times = {dagger_label(i): t for i, t in enumerate(req.dagger_times)}
    times.update({plain_label(i): t for i, t in enumerate(req.plain_times)})
    orders = np.zeros(mode.order + 1, dtype=complex)
    for k in range(mode.order + 1):
        orders[k] = sum((kern.value(times) for kern in _kernels(p, req.n_dagger, req.n_plain, k, loops)), 0j)
    delta = params.n_b if (req.n_dagger, req.n_plain) == (1, 1) else 0.0
    return CumulantValue(orders, delta)


def _mean_series(params: ModelParams, mode: SummationMode) -> np.ndarray:
    return cumulant(CumulantRequest((), (0.0,), mode.order, mode), params).orders


# -- observables ------------------------------------------------------------

def reflection(params: ModelParams, mode=None, order: int | None = None, truncate: bool = True):
    """Reflection probability and phase, ``R = |<b_out>/f|^2``, ``theta = -arg(<b_out>/f)``.

    With ``truncate`` the perturbative ``R`` is the order-n truncation of the
    product ``<b_out^dag><b_out>``; otherwise the order-n mean is squared.
    """
    if params.f == 0:
        raise UndefinedReflectionError("reflection is undefined for f = 0")
    mode = _mode(mode, order)
    if not mode.perturbative:
        b = cumulant(CumulantRequest((), (0.0,), 0, mode), params).total
        return abs(b / params.f) ** 2, -cmath.phase(b / params.f)
    b = _mean_series(params, mode)
    ratio = b.sum() / params.f
    if truncate:
        R = series_product(np.conj(b), b, mode.order).sum().real / abs(params.f) ** 2
    else:
        R = abs(ratio) ** 2
    return float(R), -cmath.phase(ratio)


def _meta(params, mode, **extra) -> dict:
    meta = {"params": params.as_dict(), "mode": mode.label()}
    meta.update(extra)
    return meta


def g1(params: ModelParams, mode=None, order: int | None = None, tau_grid=(0.0,)) -> SpectrumCurve:
    """``G1(tau) = <<b^dag(tau) b(0)>>_regular + <b^dag><b>`` on ``tau_grid``."""
    mode = _mode(mode, order)
    if not mode.perturbative:
        raise CapabilityError("mean field provides first moments only")
    taus = np.asarray(tau_grid, dtype=float)
    if np.any(taus < 0):
        raise ContractViolation("tau_grid must be non-negative")
    b = _mean_series(params, mode)
    coherent = series_product(np.conj(b), b, mode.order)
    values = np.empty(len(taus), dtype=complex)
    for i, t in enumerate(taus):
        c = cumulant(CumulantRequest((t,), (0.0,), mode.order, mode), params)
        values[i] = (c.orders + coherent).sum()
    return SpectrumCurve(taus, values, _meta(params, mode, delta_at_zero=params.n_b,
                                             coherent_limit=float(coherent.sum().real)))


def _fourier(params: ModelParams, mode: SummationMode, n_dagger: int, n_plain: int,
             moving: str, fixed: str, omega: float) -> complex:
    """``int dtau exp(i omega tau) <<...>>`` with detector ``moving`` at tau, ``fixed`` at 0."""
    p, loops = _resolve(params, mode)
    total = 0j
    for k in range(1, mode.order + 1):
        for kern in _kernels(p, n_dagger, n_plain, k, loops):
            base = kern.p
            ext = {lab: 0.0 for lab in base.externals if lab != moving}
            prod = ExpProduct(base.constant,
                              base.factors + (ExpFactor(1j * omega, moving, fixed, causal=False),),
                              base.variables + (moving,), ext)
            total += AnalyticKernel(prod).value()
    return total


def squeezing_spectrum(params: ModelParams, mode=None, order: int | None = None, theta: float = 0.0,
                       omega_grid=(0.0,)) -> tuple[SpectrumCurve, SpectrumCurve]:
    """Normal-ordered quadrature spectra ``S_+`` and ``S_-``.

    With ``X_pm = (exp(-i theta/2) b +- exp(i theta/2) b^dag) / 2`` the
    spectra are ``(1/4)[e^{-i theta} B(w) + e^{i theta} conj(B(-w)) +- (N(w) + conj(N(-w)))]``
    where ``B`` and ``N`` are the transforms of ``<<b(tau) b(0)>>`` and
    ``<<b^dag(tau) b(0)>>``; the thermal delta adds ``+- n_b / 2``.
    """
    mode = _mode(mode, order)
    if not mode.perturbative:
        raise CapabilityError("mean field provides first moments only")
    omegas = np.asarray(omega_grid, dtype=float)
    plus = np.empty(len(omegas))
    minus = np.empty(len(omegas))
    ph = cmath.exp(-1j * theta)
    for i, w in enumerate(omegas):
        Bw = _fourier(params, mode, 0, 2, plain_label(1), plain_label(0), w)
        Bm = _fourier(params, mode, 0, 2, plain_label(1), plain_label(0), -w)
        Nw = _fourier(params, mode, 1, 1, dagger_label(0), plain_label(0), w)
        Nm = _fourier(params, mode, 1, 1, dagger_label(0), plain_label(0), -w)
        sq = 0.25 * (ph * Bw + (ph * Bm).conjugate())
        nn = 0.25 * (Nw + Nm.conjugate())
        plus[i] = (sq + nn).real + 0.5 * params.n_b
        minus[i] = (sq - nn).real - 0.5 * params.n_b
    meta = _meta(params, mode, theta=theta, delta_contribution=0.5 * params.n_b)
    return (SpectrumCurve(omegas, plus, dict(meta, quadrature="+")),
            SpectrumCurve(omegas, minus, dict(meta, quadrature="-")))


def set_partitions(items):
    """All set partitions of ``items`` (list of blocks, each a list)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


def g2_numerator(params: ModelParams, mode: SummationMode, tau: float) -> np.ndarray:
    """Order-resolved ``<b^dag(0) b^dag(tau) b(tau) b(0)>`` from the moment-cumulant sum.

    Delta-function parts of two-point blocks are dropped.
    """
    ops = [("d", 0.0), ("d", tau), ("p", tau), ("p", 0.0)]
    cache = {}
    total = np.zeros(mode.order + 1, dtype=complex)
    for part in set_partitions(range(4)):
        prod = np.zeros(mode.order + 1, dtype=complex)
        prod[0] = 1.0
        for block in part:
            dt = tuple(sorted(ops[i][1] for i in block if ops[i][0] == "d"))
            pt = tuple(sorted(ops[i][1] for i in block if ops[i][0] == "p"))
            key = (dt, pt)
            if key not in cache:
                cache[key] = cumulant(CumulantRequest(dt, pt, mode.order, mode), params).orders
            prod = series_product(prod, cache[key], mode.order)
        total += prod
    return total


def g2(params: ModelParams, mode=None, order: int | None = None, tau_grid=(0.0,)) -> SpectrumCurve:
    """Normalized second-order coherence with denominator ``|f|^4``."""
    if params.f == 0:
        raise UndefinedReflectionError("g2 is undefined for f = 0")
    mode = _mode(mode, order)
    if not mode.perturbative:
        raise CapabilityError("mean field provides first moments only")
    taus = np.asarray(tau_grid, dtype=float)
    if np.any(taus < 0):
        raise ContractViolation("tau_grid must be non-negative")
    den = abs(params.f) ** 4
    values = np.array([g2_numerator(params, mode, t).sum().real / den for t in taus])
    meta = _meta(params, mode, oracle="lindblad" if params.n_b == 0 else "none",
                 note="" if params.n_b == 0 else "finite temperature: delta parts dropped, no oracle")
    return SpectrumCurve(taus, values, meta)


def p_function_linear(params: ModelParams, alpha_grid, t: float = 0.0) -> PFunction:
    """Glauber P function of the single output mode of the linear cavity.

    For constant drive the displacement ``<b_out(t)>`` does not depend on ``t``.
    """
    if params.u != 0:
        raise CapabilityError("the Gaussian P function is only available for U = 0")
    alpha = np.asarray(alpha_grid, dtype=complex)
    mean = linear_output_mean(params.with_(dressed=False))
    n = params.n_b
    if n == 0:
        return PFunction(alpha, np.zeros(alpha.shape), mean, 0.0, delta_at=mean)
    vals = np.exp(-np.abs(alpha - mean) ** 2 / n) / (math.pi * n)
    return PFunction(alpha, vals, mean, n)


def linear_frequency_cumulants(params: ModelParams, omega: float):
    """Response of the linear cavity to a drive component ``f`` at frequency ``omega``.

    Returns ``(<b_out[w]>, <b_out^dag[-w]>, n_b)`` with
    ``G^R[w] = 1/(w + delta + i kappa / 2)`` and ``G^A = conj(G^R)``.
    """
    if params.u != 0:
        raise ContractViolation("linear_frequency_cumulants requires U = 0")
    k = params.kappa
    gr = 1.0 / (omega + params.delta + 0.5j * k)
    ga = 1.0 / (omega + params.delta - 0.5j * k)
    b = params.f * (1.0 - 1j * k * gr)
    bd = params.f.conjugate() * (1.0 + 1j * k * ga)
    return complex(b), complex(bd), params.n_b
