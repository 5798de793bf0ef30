"""Partial resummations: loop-dressed propagators and the thermal mean field."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, MultistabilityError
from .model import ModelParams

__all__ = [
    "SummationMode",
    "Bare",
    "LoopSummed",
    "MeanField",
    "MeanFieldState",
    "dress",
    "mean_field_steady_state",
    "mean_field_series",
    "mean_field_fixed_points",
]


@dataclass(frozen=True)
class SummationMode:
    kind: str
    order: int | None = None

    def __post_init__(self):
        if self.kind not in ("bare", "loop_summed", "mean_field"):
            raise ContractViolation(f"unknown summation mode {self.kind!r}")
        if self.kind != "mean_field" and (self.order is None or self.order < 0):
            raise ContractViolation("perturbative modes need a non-negative order")

    @property
    def loops(self) -> bool:
        """Whether loop-bearing diagrams are kept."""
        return self.kind == "bare"

    @property
    def dressed(self) -> bool:
        return self.kind == "loop_summed"

    @property
    def perturbative(self) -> bool:
        return self.kind != "mean_field"

    def label(self) -> str:
        return self.kind if self.order is None else f"{self.kind}({self.order})"

    @classmethod
    def parse(cls, text: str, order: int | None = None) -> "SummationMode":
        t = text.strip().lower().replace("-", "_")
        aliases = {"bare": "bare", "loop": "loop_summed", "loops": "loop_summed",
                   "loop_summed": "loop_summed", "loopsummed": "loop_summed", "dressed": "loop_summed",
                   "mean_field": "mean_field", "meanfield": "mean_field", "mf": "mean_field"}
        if t not in aliases:
            raise ContractViolation(f"unknown summation mode {text!r}")
        kind = aliases[t]
        return cls(kind, None if kind == "mean_field" else order)


def Bare(order: int) -> SummationMode:
    return SummationMode("bare", order)


def LoopSummed(order: int) -> SummationMode:
    return SummationMode("loop_summed", order)


def MeanField() -> SummationMode:
    return SummationMode("mean_field")


def dress(params: ModelParams) -> ModelParams:
    """Same physics, with Green functions and legs at detuning ``delta - 4 n_b u``."""
    return params.with_(dressed=True)


@dataclass(frozen=True)
class MeanFieldState:
    a_mean: complex
    residual: float


def _lin(params: ModelParams) -> complex:
    return 0.5 * params.kappa - 1j * params.delta


def _residual(a: complex, params: ModelParams, u: float) -> complex:
    return (-_lin(params) * a - math.sqrt(params.kappa) * params.f
            - 2j * u * (abs(a) ** 2 * a + 2 * params.n_b * a))


def _occupations(params: ModelParams, u: float) -> np.ndarray:
    """Real non-negative roots n = |a|^2 of the stationary cubic."""
    if params.f == 0:
        return np.array([0.0])
    c = params.delta - 4.0 * u * params.n_b
    k = params.kappa
    coeffs = [4 * u * u, -4 * u * c, 0.25 * k * k + c * c, -k * abs(params.f) ** 2]
    while coeffs and coeffs[0] == 0:
        coeffs = coeffs[1:]
    roots = np.roots(coeffs)
    scale = max(1.0, float(np.max(np.abs(roots))))
    real = sorted(r.real for r in roots if abs(r.imag) <= 1e-9 * scale and r.real >= 0)
    return np.array(real)


def _amplitude(n: float, params: ModelParams, u: float) -> complex:
    return -math.sqrt(params.kappa) * params.f / (_lin(params) + 2j * u * (n + 2 * params.n_b))


def mean_field_fixed_points(params: ModelParams) -> list[complex]:
    return [_amplitude(n, params, params.u) for n in _occupations(params, params.u)]


def _polish(a: complex, params: ModelParams, u: float, tol: float) -> complex:
    """Newton iteration on the real 2x2 form of the stationary equation."""
    for _ in range(50):
        r = _residual(a, params, u)
        if abs(r) <= tol:
            break
        # dR/da and dR/dabar for R(a, abar)
        da = -_lin(params) - 2j * u * (2 * abs(a) ** 2 + 2 * params.n_b)
        dab = -2j * u * a * a
        J = np.array([[da.real + dab.real, -da.imag + dab.imag],
                      [da.imag + dab.imag, da.real - dab.real]])
        step = np.linalg.solve(J, [-r.real, -r.imag])
        a = a + complex(step[0], step[1])
    return a


def mean_field_steady_state(params: ModelParams, steps: int = 40, damping: float = 0.5,
                            tol: float = 1e-13) -> MeanFieldState:
    """Fixed point continuously connected to the linear-cavity solution.

    The Kerr strength is ramped from 0 to ``params.u``; at every step a
    damped fixed-point iteration starts from the previous solution. The real
    roots of the stationary cubic in ``|a|^2`` are tracked alongside, and a
    fold (the tracked branch merging with another and disappearing) raises.
    """
    if params.f == 0:
        return MeanFieldState(0j, 0.0)
    a = _amplitude(0.0, params, 0.0)
    n_prev = abs(a) ** 2
    branch = _occupations(params, 0.0)
    for j in range(1, steps + 1):
        u = params.u * j / steps
        roots = _occupations(params, u)
        if len(roots) < len(branch):
            gone = _merged_pair(branch)
            if gone is not None and any(abs(branch[g] - n_prev) <= 1e-12 * max(1.0, n_prev) for g in gone):
                raise MultistabilityError(
                    f"mean-field branch folds before u = {params.u}; fixed points listed",
                    mean_field_fixed_points(params))
        for _ in range(2000):
            new = _amplitude(abs(a) ** 2, params, u)
            a_next = (1 - damping) * a + damping * new
            if abs(a_next - a) <= 1e-15 * max(1.0, abs(a)):
                a = a_next
                break
            a = a_next
        a = _polish(a, params, u, tol)
        n_prev = abs(a) ** 2
        # snap to the tracked cubic root for the fold test
        branch = roots
        if len(roots):
            n_prev = float(roots[np.argmin(np.abs(roots - n_prev))])
    res = abs(_residual(a, params, params.u))
    return MeanFieldState(complex(a), float(res))


def _merged_pair(roots: np.ndarray):
    if len(roots) < 2:
        return None
    gaps = np.diff(roots)
    i = int(np.argmin(gaps))
    return (i, i + 1)


def mean_field_series(params: ModelParams, order: int) -> list[complex]:
    """Coefficients ``<a>_0 ... <a>_n`` of the mean field in powers of U.

    Each coefficient carries its own power of U, so partial sums approximate
    ``mean_field_steady_state(params).a_mean`` directly.
    """
    if order < 0 or order > 6:
        raise ContractViolation("series order must lie in 0..6")
    lin = _lin(params)
    g_hat = -1j / lin
    a = [-math.sqrt(params.kappa) * params.f / lin]
    for n in range(1, order + 1):
        cubic = 0j
        for l in range(n):
            for k in range(n - l):
                p = n - 1 - l - k
                cubic += a[l] * a[k] * a[p].conjugate()
        a.append(2 * params.u * g_hat * (2 * params.n_b * a[n - 1] + cubic))
    return [complex(x) for x in a]
