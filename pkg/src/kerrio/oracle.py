"""Truncated-Fock Lindblad oracle for the driven Kerr cavity.

Master equation (rotating frame)::

    d rho/dt = -i [H, rho] + kappa n_b D[a^dag] rho + kappa (n_b + 1) D[a] rho
    H = -delta a^dag a + U a^dag a^dag a a - i sqrt(kappa) (f a^dag - conj(f) a)

Superoperators act on column-stacked density matrices:
``vec(A X B) = (B^T kron A) vec(X)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import CapabilityError, ContractViolation, TruncationError, UndefinedReflectionError
from .model import ModelParams

__all__ = [
    "FockConfig",
    "SteadyState",
    "liouvillian",
    "steady_state",
    "two_time",
    "output_map",
    "output_moment",
    "output_mean",
    "output_reflection",
    "output_g1",
    "output_g2",
    "operator",
]


@dataclass(frozen=True)
class FockConfig:
    """``n_max`` is the Hilbert-space dimension (Fock states 0 .. n_max-1)."""

    n_max: int = 30
    convergence_margin: float = 1e-6
    check_convergence: bool = True
    population_tol: float = 1e-10

    def __post_init__(self):
        if self.n_max < 2:
            raise ContractViolation("n_max must be at least 2")
        if self.convergence_margin <= 0:
            raise ContractViolation("convergence_margin must be positive")


@dataclass
class SteadyState:
    rho: np.ndarray
    trace_error: float
    params: ModelParams
    n_max: int
    method: str = "nullspace"
    margins: dict = field(default_factory=dict)

    def expect(self, op) -> complex:
        return complex(np.trace(op @ self.rho))

    @property
    def a_mean(self) -> complex:
        return self.expect(operator(self.n_max, 0, 1).toarray())

    @property
    def photon_number(self) -> float:
        return self.expect(operator(self.n_max, 1, 1).toarray()).real


@lru_cache(maxsize=32)
def _destroy(n: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, n, dtype=float)), 1, shape=(n, n), format="csr")


def operator(n: int, p: int, q: int) -> sp.csr_matrix:
    """Normally ordered monomial ``a^dag^p a^q`` on the truncated space."""
    a = _destroy(n)
    out = sp.identity(n, format="csr", dtype=complex)
    for _ in range(p):
        out = out @ a.T
    for _ in range(q):
        out = out @ a
    return out.tocsr()


def _parse_ops(ops) -> tuple[int, int]:
    if isinstance(ops, tuple) and len(ops) == 2 and all(isinstance(x, int) for x in ops):
        return ops
    if isinstance(ops, str):
        tokens = ops.replace("*", " ").split()
        p = q = 0
        for tok in tokens:
            if tok in ("ad", "adag", "a+", "a^dag"):
                if q:
                    raise ContractViolation(f"operator string {ops!r} is not normally ordered")
                p += 1
            elif tok == "a":
                q += 1
            elif tok in ("1", "I"):
                continue
            else:
                raise ContractViolation(f"unknown operator token {tok!r}")
        return p, q
    raise ContractViolation(f"cannot interpret operator spec {ops!r}")


def liouvillian(params: ModelParams, n_max: int) -> sp.csr_matrix:
    n = n_max
    a = _destroy(n).astype(complex)
    ad = a.T.tocsr()
    num = ad @ a
    eye = sp.identity(n, format="csr", dtype=complex)
    root = math.sqrt(params.kappa)
    H = (-params.delta * num + params.u * (ad @ ad @ a @ a)
         - 1j * root * (params.f * ad - params.f.conjugate() * a))

    def left(A):
        return sp.kron(eye, A, format="csr")

    def right(B):
        return sp.kron(B.T, eye, format="csr")

    L = -1j * (left(H) - right(H))

    def dissipator(c, rate):
        cd = c.conj().T.tocsr()
        cdc = cd @ c
        return rate * (sp.kron(c.conj(), c, format="csr") - 0.5 * left(cdc) - 0.5 * right(cdc))

    L = L + dissipator(a, params.kappa * (params.n_b + 1.0))
    if params.n_b > 0:
        L = L + dissipator(ad, params.kappa * params.n_b)
    return L.tocsr()


def _to_rho(x: np.ndarray, n: int) -> np.ndarray:
    rho = x.reshape((n, n), order="F")
    rho = rho / np.trace(rho)
    return 0.5 * (rho + rho.conj().T)


def _nullspace_rho(L: sp.csr_matrix, n: int, shift: float = 1e-7, iterations: int = 4) -> np.ndarray:
    lu = spla.splu((L - shift * sp.identity(L.shape[0], format="csc")).tocsc())
    x = np.eye(n, dtype=complex).reshape(-1, order="F") / n
    for _ in range(iterations):
        x = lu.solve(x)
        x = x / np.linalg.norm(x)
    return _to_rho(x, n)


def _evolved_rho(L: sp.csr_matrix, n: int, t_final: float) -> np.ndarray:
    x = np.zeros(n * n, dtype=complex)
    x[0] = 1.0
    x = spla.expm_multiply(L * t_final, x)
    for _ in range(10):  # continue until stationary
        y = spla.expm_multiply(L * t_final, x)
        if np.linalg.norm(y - x) <= 1e-13:
            x = y
            break
        x = y
    return _to_rho(x, n)


def _check_rho(rho: np.ndarray, L: sp.csr_matrix) -> bool:
    x = rho.reshape(-1, order="F")
    herm = np.max(np.abs(rho - rho.conj().T)) <= 1e-12
    evals = np.linalg.eigvalsh(rho)
    resid = np.linalg.norm(L @ x) <= 1e-10 * spla.norm(L, 1) * np.linalg.norm(x)
    return bool(herm and evals.min() >= -1e-10 and resid)


def _solve(params: ModelParams, n: int, method: str) -> tuple[np.ndarray, str]:
    L = liouvillian(params, n)
    if method in ("nullspace", "auto"):
        rho = _nullspace_rho(L, n)
        if method == "nullspace" or _check_rho(rho, L):
            return rho, "nullspace"
    return _evolved_rho(L, n, 50.0 / params.kappa), "evolve"


def _observables(rho: np.ndarray, n: int) -> dict:
    return {
        "<a>": complex(np.trace(operator(n, 0, 1).toarray() @ rho)),
        "<a^dag a>": complex(np.trace(operator(n, 1, 1).toarray() @ rho)),
        "<a^dag^2 a^2>": complex(np.trace(operator(n, 2, 2).toarray() @ rho)),
    }


@lru_cache(maxsize=256)
def _steady_state_cached(params: ModelParams, cfg: FockConfig, method: str) -> SteadyState:
    n = cfg.n_max
    rho, used = _solve(params, n, method)
    if abs(rho[n - 1, n - 1]) > cfg.population_tol:
        raise TruncationError(f"population {abs(rho[n - 1, n - 1]):.2e} at the truncation edge",
                              observable="population")
    margins = {}
    if cfg.check_convergence:
        rho2, _ = _solve(params, n + 5, method)
        o1, o2 = _observables(rho, n), _observables(rho2, n + 5)
        for name in o1:
            diff = abs(o1[name] - o2[name])
            rel = diff / max(abs(o2[name]), 1e-300)
            margins[name] = 0.0 if diff <= 1e-14 else rel
            if margins[name] > cfg.convergence_margin:
                raise TruncationError(f"{name} changes by {rel:.2e} under n_max -> n_max + 5",
                                      observable=name)
    return SteadyState(rho, abs(np.trace(rho) - 1.0), params, n, used, margins)


def steady_state(params: ModelParams, cfg: FockConfig = FockConfig(), method: str = "auto") -> SteadyState:
    """Stationary density matrix.

    ``method`` is ``"nullspace"`` (shifted inverse iteration), ``"evolve"``
    (long-time integration to 50/kappa) or ``"auto"`` (null space, with the
    integration fallback when the result fails its sanity checks).
    """
    if method not in ("auto", "nullspace", "evolve"):
        raise ContractViolation(f"unknown method {method!r}")
    return _steady_state_cached(params.with_(dressed=False), cfg, method)


def two_time(params: ModelParams, cfg: FockConfig, left_ops, right_ops, tau_grid,
             outer_ops=(0, 0), state: SteadyState | None = None) -> np.ndarray:
    """Quantum-regression correlator ``<C(0) A(tau) B(0)>`` for ``tau >= 0``.

    ``left_ops`` is A, ``right_ops`` is B and ``outer_ops`` is C. Each is a
    ``(p, q)`` pair for ``a^dag^p a^q`` or a string such as ``"ad a"``.
    Evaluated as ``Tr[A exp(L tau)(B rho C)]``.
    """
    taus = np.asarray(tau_grid, dtype=float)
    if np.any(taus < 0):
        raise ContractViolation("two_time requires tau >= 0")
    st = state or steady_state(params, cfg)
    n = st.n_max
    A = operator(n, *_parse_ops(left_ops))
    B = operator(n, *_parse_ops(right_ops)).toarray()
    C = operator(n, *_parse_ops(outer_ops)).toarray()
    L = liouvillian(params.with_(dressed=False), n)
    x = (B @ st.rho @ C).reshape(-1, order="F")
    # Tr[A X] = vec(A^T) . vec(X)
    probe = A.T.toarray().reshape(-1, order="F")
    order = np.argsort(taus, kind="stable")
    out = np.empty(len(taus), dtype=complex)
    t_prev = 0.0
    for idx in order:
        t = taus[idx]
        if t > t_prev:
            x = spla.expm_multiply(L * (t - t_prev), x)
            t_prev = t
        out[idx] = probe @ x
    return out


def output_map(params: ModelParams, intra, p0: int, p1: int, q1: int, q0: int):
    """Output correlator ``<b^dag(0)^p0 b^dag(tau)^p1 b(tau)^q1 b(0)^q0>`` from cavity correlators.

    ``intra(i, j, k, l)`` must return ``<a^dag(0)^i a^dag(tau)^j a(tau)^k a(0)^l>``
    (scalar or array over the delay grid). Inside normally and time-ordered
    products a coherent input contributes ``f``, so each output operator is
    replaced by ``f + sqrt(kappa) a`` (or its conjugate) and expanded.
    """
    if params.n_b != 0 and (p0 + p1 + q1 + q0) > 1:
        raise CapabilityError("multi-operator output correlators are only available at n_b = 0")
    f, fb, r = params.f, params.f.conjugate(), math.sqrt(params.kappa)
    total = 0
    for i in range(p0 + 1):
        for j in range(p1 + 1):
            for k in range(q1 + 1):
                for l in range(q0 + 1):
                    coef = (comb(p0, i) * comb(p1, j) * comb(q1, k) * comb(q0, l)
                            * fb ** (p0 - i + p1 - j) * f ** (q1 - k + q0 - l) * r ** (i + j + k + l))
                    total = total + coef * intra(i, j, k, l)
    return total


def output_moment(params: ModelParams, cfg: FockConfig, p0: int, p1: int, q1: int, q0: int,
                  tau_grid=(0.0,)) -> np.ndarray:
    st = steady_state(params, cfg)
    taus = np.asarray(tau_grid, dtype=float)
    cache = {}

    def intra(i, j, k, l):
        key = (i, j, k, l)
        if key not in cache:
            cache[key] = two_time(params, cfg, (j, k), (0, l), taus, outer_ops=(i, 0), state=st)
        return cache[key]

    return np.asarray(output_map(params, intra, p0, p1, q1, q0), dtype=complex) * np.ones(len(taus))


def output_mean(params: ModelParams, cfg: FockConfig = FockConfig()) -> complex:
    return params.f + math.sqrt(params.kappa) * steady_state(params, cfg).a_mean


def output_reflection(params: ModelParams, cfg: FockConfig = FockConfig()) -> tuple[float, float]:
    if params.f == 0:
        raise UndefinedReflectionError("reflection is undefined for f = 0")
    ratio = output_mean(params, cfg) / params.f
    return abs(ratio) ** 2, -float(np.angle(ratio))


def output_g1(params: ModelParams, cfg: FockConfig, tau_grid) -> np.ndarray:
    """``<b^dag(tau) b(0)>`` of the output field at zero temperature."""
    return output_moment(params, cfg, 0, 1, 0, 1, tau_grid)


def output_g2(params: ModelParams, cfg: FockConfig, tau_grid) -> np.ndarray:
    """Normalized ``g2(tau)`` of the output field at zero temperature."""
    num = output_moment(params, cfg, 1, 1, 1, 1, tau_grid)
    den = output_moment(params, cfg, 1, 0, 0, 1, (0.0,))[0]
    return (num / den ** 2).real
