import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from kerrio.errors import ContractViolation
from kerrio.model import (LegKind, LoopConstants, ModelParams, Propagator, PropagatorKind, green,
                          leg_amplitude, leg_profile, linear_output_mean)

R, A, K = PropagatorKind.RETARDED, PropagatorKind.ADVANCED, PropagatorKind.KELDYSH

params_st = st.builds(
    ModelParams,
    delta=st.floats(-2, 2),
    kappa=st.floats(0.2, 3),
    u=st.floats(-0.5, 0.5),
    f=st.complex_numbers(max_magnitude=1.0),
    n_b=st.floats(0, 2),
)


def test_params_validation():
    with pytest.raises(ContractViolation):
        ModelParams(kappa=0)
    with pytest.raises(ContractViolation):
        ModelParams(n_b=-0.1)
    with pytest.raises(ContractViolation):
        ModelParams(delta=float("nan"))
    with pytest.raises(ContractViolation):
        ModelParams(f=lambda t: 0.1)


def test_distribution_function_is_derived():
    p = ModelParams(n_b=0.25)
    assert p.F == 1.5
    assert p.with_(n_b=1.0).F == 3.0
    assert "F" not in p.as_dict()


def test_retarded_causal():
    p = ModelParams(delta=0.4, u=0.1, n_b=0.3)
    assert green(R, False, -1.0, p) == 0
    assert green(A, False, 1.0, p) == 0


def test_keldysh_equal_time_zero_temperature():
    assert green(K, False, 0.0, ModelParams()) == -1j


def test_dressed_equals_shifted_bare():
    p = ModelParams(delta=0.3, u=0.1, n_b=0.25)
    ts = np.linspace(-5, 5, 101)
    shifted = p.with_(delta=p.effective_delta(True))
    for kind in (R, A, K):
        a = green(kind, True, ts, p)
        b = green(kind, False, ts, shifted)
        assert np.allclose(a, b, rtol=1e-14, atol=0)


def test_propagator_object():
    p = ModelParams(delta=0.2)
    assert Propagator(R)(1.3, p) == green(R, False, 1.3, p)


@settings(max_examples=60, deadline=None)
@given(params_st, st.lists(st.floats(-30, 30), min_size=1, max_size=20), st.booleans())
def test_green_identities(p, ts, dressed):
    t = np.asarray(ts)
    gr = green(R, dressed, t, p)
    ga = green(A, dressed, t, p)
    gk = green(K, dressed, t, p)
    assert np.allclose(ga, np.conj(green(R, dressed, -t, p)), rtol=0, atol=1e-14)
    nz = t != 0
    assert np.allclose(gk[nz], p.F * (gr[nz] - ga[nz]), rtol=1e-14, atol=1e-14)


def test_retarded_bounded_and_decaying():
    p = ModelParams(delta=0.7, kappa=1.3)
    ts = np.logspace(-4, 2, 200)
    g = np.abs(green(R, False, ts, p))
    assert np.all(g <= 1.0)
    assert np.allclose(g, np.exp(-0.5 * p.kappa * ts), rtol=1e-13)


def test_loop_constants():
    assert LoopConstants.from_params(ModelParams(n_b=0.3)).cl_cl_loop == 0.6
    assert LoopConstants.from_params(ModelParams(n_b=0.0)).cl_cl_loop == 0.0


def test_source_photon_closed_form():
    f = 0.37
    for kappa in (0.5, 1.0, 2.0):
        p = ModelParams(kappa=kappa, f=f)
        expected = -2 * math.sqrt(2) * f / math.sqrt(kappa)
        assert abs(leg_amplitude(LegKind.SOURCE_PHOTON, 0.0, None, p) - expected) < 1e-14


def test_source_photon_matches_integral():
    # -i sqrt(2 kappa) f int_{-inf}^{t} G^R(t - t') dt'
    p = ModelParams(delta=0.4, kappa=1.2, f=0.3 - 0.1j)
    re = integrate.quad(lambda s: (green(R, False, s, p)).real, 0, 60)[0]
    im = integrate.quad(lambda s: (green(R, False, s, p)).imag, 0, 60)[0]
    val = -1j * math.sqrt(2 * p.kappa) * p.f * complex(re, im)
    assert abs(val - leg_amplitude(LegKind.SOURCE_PHOTON, 0.0, None, p)) < 1e-10
    bar = leg_amplitude(LegKind.SOURCE_ANTIPHOTON, 0.0, None, p)
    assert abs(bar - val.conjugate()) < 1e-10


def test_detector_time_contract():
    p = ModelParams()
    with pytest.raises(ContractViolation):
        leg_amplitude(LegKind.DETECTOR_PHOTON, 0.0, None, p)
    with pytest.raises(ContractViolation):
        leg_amplitude(LegKind.SOURCE_PHOTON, 0.0, 1.0, p)


@settings(max_examples=50, deadline=None)
@given(params_st, st.floats(-10, 10), st.floats(0.001, 10),
       st.sampled_from([k for k in LegKind if k.is_detector]))
def test_detector_causality(p, tau, gap, kind):
    assert leg_amplitude(kind, tau + gap, tau, p) == 0


def test_detector_amplitudes_follow_green_functions():
    p = ModelParams(delta=0.3, kappa=0.8, n_b=0.4)
    s = 1.7
    root = math.sqrt(p.kappa / 2)
    gr = green(R, False, s, p)
    ga = green(A, False, -s, p)
    assert abs(leg_amplitude(LegKind.DETECTOR_PHOTON, 0.0, s, p) - 1j * root * gr) < 1e-15
    assert abs(leg_amplitude(LegKind.DETECTOR_ANTIPHOTON, 0.0, s, p) - 1j * root * ga) < 1e-15


def test_k_detector_ratios():
    p = ModelParams(delta=0.3, n_b=0.4)
    ratio = (leg_amplitude(LegKind.DETECTOR_ANTIPHOTON_K, 0.0, 1.0, p)
             / leg_amplitude(LegKind.DETECTOR_ANTIPHOTON, 0.0, 1.0, p))
    assert abs(ratio + p.F) < 1e-14
    ratio = (leg_amplitude(LegKind.DETECTOR_PHOTON_K, 0.0, 1.0, p)
             / leg_amplitude(LegKind.DETECTOR_PHOTON, 0.0, 1.0, p))
    assert abs(ratio - p.F) < 1e-14
    cold = ModelParams(delta=0.3)
    assert leg_profile(LegKind.DETECTOR_PHOTON_K, cold) == leg_profile(LegKind.DETECTOR_PHOTON, cold)


def test_equal_time_detector_weight():
    p = ModelParams()
    full = leg_profile(LegKind.DETECTOR_PHOTON, p)[0]
    assert leg_amplitude(LegKind.DETECTOR_PHOTON, 1.0, 1.0, p) == pytest.approx(0.5 * full)


def test_six_leg_kinds_have_pictures():
    assert len(LegKind) == 6
    assert len({k.picture for k in LegKind}) == 6
    assert sum(k.is_detector for k in LegKind) == 4


@settings(max_examples=40, deadline=None)
@given(params_st)
def test_linear_output_mean_unit_modulus(p):
    if p.f == 0:
        return
    assert abs(abs(linear_output_mean(p) / p.f) - 1) < 1e-12


def test_linear_output_mean_resonance():
    p = ModelParams(delta=0.0, f=0.2 + 0.1j)
    assert abs(linear_output_mean(p) + p.f) < 1e-15
    assert cmath.isclose(linear_output_mean(p.with_(delta=1e9)), p.f, rel_tol=1e-8)
