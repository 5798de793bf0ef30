"""Physical parameters, Green functions and the external-leg dictionary.

Everything lives in the frame rotating at the drive frequency, so the cavity
frequency enters only through the detuning ``delta``. Time is measured in
units of ``1/kappa`` when ``kappa = 1`` (the default).

Conventions
-----------
The retarded, advanced and Keldysh functions are

    G^R(t) = -i theta(t)  exp(i D t) exp(-kappa t / 2)
    G^A(t) =  i theta(-t) exp(i D t) exp(+kappa t / 2)
    G^K(t) = -i F exp(i D t) exp(-kappa |t| / 2)

with ``D = delta`` for bare propagators and ``D = delta - 4 n_b U`` for the
loop-dressed ones, and ``F = 2 n_b + 1``. ``theta(0) = 1/2`` so that the
fluctuation-dissipation form also holds at ``t = 0``.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ContractViolation

__all__ = [
    "ModelParams",
    "PropagatorKind",
    "Propagator",
    "LegKind",
    "LoopConstants",
    "green",
    "leg_amplitude",
    "leg_profile",
    "source_constants",
    "linear_output_mean",
]


@dataclass(frozen=True)
class ModelParams:
    """Kerr cavity configuration.

    Parameters
    ----------
    delta : float
        Detuning of the drive from the cavity.
    kappa : float
        Decay rate, must be positive.
    u : float
        Kerr strength.
    f : complex
        Constant drive amplitude ``<b_in>``.
    n_b : float
        Thermal occupation of the bath, non-negative.
    dressed : bool
        Use loop-dressed propagators (detuning ``delta - 4 n_b u``).
    """

    delta: float = 0.0
    kappa: float = 1.0
    u: float = 0.0
    f: complex = 0.0
    n_b: float = 0.0
    dressed: bool = False

    def __post_init__(self):
        if callable(self.f):
            raise ContractViolation("time-dependent drives are not supported; f must be a constant")
        for name in ("delta", "kappa", "u", "n_b"):
            value = getattr(self, name)
            if isinstance(value, complex) or not math.isfinite(float(value)):
                raise ContractViolation(f"{name} must be a finite real number, got {value!r}")
            object.__setattr__(self, name, float(value))
        f = complex(self.f)
        if not (math.isfinite(f.real) and math.isfinite(f.imag)):
            raise ContractViolation(f"f must be finite, got {self.f!r}")
        object.__setattr__(self, "f", f)
        if self.kappa <= 0:
            raise ContractViolation(f"kappa must be positive, got {self.kappa}")
        if self.n_b < 0:
            raise ContractViolation(f"n_b must be non-negative, got {self.n_b}")

    @property
    def F(self) -> float:
        """Distribution function ``2 n_b + 1``."""
        return 2.0 * self.n_b + 1.0

    @property
    def delta_eff(self) -> float:
        return self.effective_delta(self.dressed)

    def effective_delta(self, dressed: bool = False) -> float:
        if dressed or self.dressed:
            return self.delta - 4.0 * self.n_b * self.u
        return self.delta

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {
            "delta": self.delta,
            "kappa": self.kappa,
            "u": self.u,
            "f": self.f,
            "n_b": self.n_b,
            "dressed": self.dressed,
        }


class PropagatorKind(enum.Enum):
    RETARDED = "R"
    ADVANCED = "A"
    KELDYSH = "K"


@dataclass(frozen=True)
class Propagator:
    kind: PropagatorKind
    dressed: bool = False

    def __call__(self, t, params: ModelParams):
        return green(self.kind, self.dressed, t, params)


class LegKind(enum.Enum):
    """External legs. The value is a short stable tag used in keys and JSON."""

    SOURCE_PHOTON = "src"
    SOURCE_ANTIPHOTON = "srcbar"
    DETECTOR_PHOTON = "b"
    DETECTOR_ANTIPHOTON = "bdag"
    DETECTOR_PHOTON_K = "bK"
    DETECTOR_ANTIPHOTON_K = "bdagK"

    @property
    def is_detector(self) -> bool:
        return self not in (LegKind.SOURCE_PHOTON, LegKind.SOURCE_ANTIPHOTON)

    @property
    def is_keldysh(self) -> bool:
        return self in (LegKind.DETECTOR_PHOTON_K, LegKind.DETECTOR_ANTIPHOTON_K)

    @property
    def is_photon_detector(self) -> bool:
        """True for legs created by a ``b_out`` derivative (half-circle, empty)."""
        return self in (LegKind.DETECTOR_PHOTON, LegKind.DETECTOR_PHOTON_K)

    @property
    def is_antiphoton_detector(self) -> bool:
        return self in (LegKind.DETECTOR_ANTIPHOTON, LegKind.DETECTOR_ANTIPHOTON_K)

    @property
    def barred(self) -> bool:
        """Whether the leg replaces a barred field slot (an outgoing line end)."""
        return self in (LegKind.SOURCE_ANTIPHOTON, LegKind.DETECTOR_PHOTON, LegKind.DETECTOR_PHOTON_K)

    @property
    def quantum(self) -> bool:
        """Whether the leg occupies a quantum (dashed) slot."""
        return self in (LegKind.DETECTOR_PHOTON, LegKind.DETECTOR_ANTIPHOTON)

    @property
    def picture(self) -> str:
        return _PICTURES[self]


_PICTURES = {
    LegKind.SOURCE_PHOTON: "filled square",
    LegKind.SOURCE_ANTIPHOTON: "empty square",
    LegKind.DETECTOR_PHOTON: "empty half-circle, dashed",
    LegKind.DETECTOR_ANTIPHOTON: "filled half-circle, dashed",
    LegKind.DETECTOR_PHOTON_K: "empty half-circle, K",
    LegKind.DETECTOR_ANTIPHOTON_K: "filled half-circle, K",
}


@dataclass(frozen=True)
class LoopConstants:
    """Equal-time self-contraction values (q-q loops are folded into cl-cl)."""

    cl_cl_loop: float
    mixed_loop: float = 0.0
    qq_loop: float = 0.0

    @classmethod
    def from_params(cls, params: ModelParams) -> "LoopConstants":
        return cls(cl_cl_loop=2.0 * params.n_b)


def _theta(t):
    t = np.asarray(t, dtype=float)
    return np.where(t > 0, 1.0, np.where(t < 0, 0.0, 0.5))


def green(kind: PropagatorKind, dressed: bool, t, params: ModelParams):
    """Evaluate a bare or dressed Green function at time(s) ``t``."""
    d = params.effective_delta(dressed)
    k = params.kappa
    t_arr = np.asarray(t, dtype=float)
    phase = np.exp(1j * d * t_arr)
    if kind is PropagatorKind.RETARDED:
        out = -1j * _theta(t_arr) * phase * np.exp(-0.5 * k * np.abs(t_arr))
    elif kind is PropagatorKind.ADVANCED:
        out = 1j * _theta(-t_arr) * phase * np.exp(-0.5 * k * np.abs(t_arr))
    elif kind is PropagatorKind.KELDYSH:
        out = -1j * params.F * phase * np.exp(-0.5 * k * np.abs(t_arr))
    else:
        raise ContractViolation(f"unknown propagator kind {kind!r}")
    return complex(out) if np.ndim(out) == 0 else out


def source_constants(params: ModelParams, dressed: bool = False) -> tuple[complex, complex]:
    """Steady classical-field averages ``(<phi_cl>, <phi_cl_bar>)``."""
    d = params.effective_delta(dressed)
    k = params.kappa
    phi = -math.sqrt(2.0 * k) * params.f / (0.5 * k - 1j * d)
    phibar = -math.sqrt(2.0 * k) * params.f.conjugate() / (0.5 * k + 1j * d)
    return phi, phibar


def leg_profile(kind: LegKind, params: ModelParams, dressed: bool = False) -> tuple[complex, complex]:
    """Return ``(c, rate)`` with amplitude ``c * theta(tau - t) * exp(rate * (tau - t))``.

    Source legs have ``rate = 0`` and no time dependence.
    """
    d = params.effective_delta(dressed)
    k = params.kappa
    root = math.sqrt(0.5 * k)
    F = params.F
    if kind is LegKind.SOURCE_PHOTON:
        return source_constants(params, dressed)[0], 0j
    if kind is LegKind.SOURCE_ANTIPHOTON:
        return source_constants(params, dressed)[1], 0j
    if kind is LegKind.DETECTOR_PHOTON:
        return complex(root), complex(-0.5 * k, d)
    if kind is LegKind.DETECTOR_PHOTON_K:
        return complex(F * root), complex(-0.5 * k, d)
    if kind is LegKind.DETECTOR_ANTIPHOTON:
        return complex(-root), complex(-0.5 * k, -d)
    if kind is LegKind.DETECTOR_ANTIPHOTON_K:
        return complex(F * root), complex(-0.5 * k, -d)
    raise ContractViolation(f"unknown leg kind {kind!r}")


def leg_amplitude(kind: LegKind, vertex_time: float, detector_time: float | None,
                  params: ModelParams, dressed: bool = False) -> complex:
    """Value of one external leg attached to a vertex at ``vertex_time``."""
    if kind.is_detector != (detector_time is not None):
        need = "requires" if kind.is_detector else "does not take"
        raise ContractViolation(f"leg {kind.name} {need} a detector time")
    c, rate = leg_profile(kind, params, dressed)
    if not kind.is_detector:
        return c
    s = float(detector_time) - float(vertex_time)
    if s < 0:
        return 0j
    weight = 0.5 if s == 0 else 1.0
    return weight * c * cmath.exp(rate * s)


def linear_output_mean(params: ModelParams, dressed: bool = False) -> complex:
    """Zeroth-order ``<b_out>``: reflected drive plus cavity emission."""
    d = params.effective_delta(dressed)
    k = params.kappa
    return params.f * (1.0 - k / (0.5 * k - 1j * d))
