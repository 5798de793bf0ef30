import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from kerrio.contractions import expand
from kerrio.diagrams import group_terms
from kerrio.errors import CapabilityError, ContractViolation, UndefinedReflectionError
from kerrio.integrator import integrate_analytic, to_integrand
from kerrio.model import ModelParams, PropagatorKind, green, linear_output_mean
from kerrio.observables import (CumulantRequest, SpectrumCurve, cumulant, diagram_set, g1, g2, g2_numerator,
                                linear_frequency_cumulants, p_function_linear, reflection, series_product,
                                set_partitions, squeezing_spectrum)
from kerrio.oracle import FockConfig, output_g1
from kerrio.resum import Bare, LoopSummed, MeanField

BASE = ModelParams(delta=0.3, u=0.1, f=0.2)
WARM = BASE.with_(n_b=0.25)


def test_linear_cumulants():
    p = ModelParams(delta=0.0, u=0.0, f=0.2 + 0.1j, n_b=0.3)
    mean = cumulant(CumulantRequest((), (0.0,), 2), p)
    assert abs(mean.total + p.f) < 1e-15
    pair = cumulant(CumulantRequest((0.4,), (0.0,), 2), p)
    assert pair.delta == p.n_b and np.all(pair.orders == 0)


def test_first_order_squeezing_cumulant_is_single_diagram():
    assert len(group_terms(expand(0, 2, 1, include_loops=False), labeled=False)) == 1
    times = {"p0": 0.0, "p1": 0.5}
    copies = [integrate_analytic(to_integrand(d, BASE, times)).value for d in diagram_set(0, 2, 1, False)]
    val = cumulant(CumulantRequest((), (0.0, 0.5), 1), BASE)
    assert len(copies) == 2 and abs(val.orders[1] - sum(copies)) < 1e-15


@pytest.mark.parametrize("p", [BASE, WARM])
def test_hermiticity(p):
    a = cumulant(CumulantRequest((), (0.0,), 2), p).orders
    b = cumulant(CumulantRequest((0.0,), (), 2), p).orders
    assert np.allclose(b, np.conj(a), rtol=0, atol=1e-16)


@pytest.mark.parametrize("p", [BASE, WARM, BASE.with_(delta=-0.4, f=0.1 - 0.2j)])
def test_flux_conservation(p):
    mean = cumulant(CumulantRequest((), (0.0,), 2), p).orders
    pair = cumulant(CumulantRequest((0.0,), (0.0,), 2), p).orders
    flux = pair + series_product(np.conj(mean), mean, 2)
    assert abs(flux[0] - abs(p.f) ** 2) < 1e-15
    assert abs(flux[1]) <= 1e-10 and abs(flux[2]) <= 1e-10


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 3), st.floats(-5, 5), st.sampled_from([(1, 1), (0, 2)]))
def test_time_translation_invariance(tau, shift, cum):
    def req(a, b):
        if cum == (1, 1):
            return CumulantRequest((a,), (b,), 2)
        return CumulantRequest((), tuple(sorted((a, b))), 2)

    x = cumulant(req(tau, 0.0), WARM).orders
    y = cumulant(req(tau + shift, shift), WARM).orders
    assert np.allclose(x, y, rtol=0, atol=1e-14)


def test_loop_summed_equals_bare_at_zero_temperature():
    for req in (CumulantRequest((), (0.0,), 2, LoopSummed(2)), CumulantRequest((0.7,), (0.0,), 2, LoopSummed(2))):
        a = cumulant(req, BASE).orders
        b = cumulant(CumulantRequest(req.dagger_times, req.plain_times, 2, Bare(2)), BASE).orders
        assert np.array_equal(a, b)


def test_reflection():
    for delta in np.linspace(-1, 1, 7):
        p = ModelParams(delta=delta, u=0.0, f=0.2, n_b=0.25)
        assert abs(reflection(p, order=2)[0] - 1) <= 1e-12
    assert reflection(ModelParams(delta=0.0, u=0.0, f=0.2), order=0)[1] == pytest.approx(-math.pi)
    R, _ = reflection(BASE, order=2)
    assert R < 1
    for delta in np.linspace(-1, 1, 9):
        for n_b in (0.0, 0.25):
            assert abs(reflection(BASE.with_(delta=delta, n_b=n_b), MeanField())[0] - 1) <= 1e-10
    with pytest.raises(UndefinedReflectionError):
        reflection(BASE.with_(f=0.0), order=1)


def test_g1_limits_and_shape():
    taus = np.linspace(0, 20, 41)
    for p in (BASE, BASE.with_(delta=0.0)):
        curve = g1(p, order=2, tau_grid=taus)
        assert abs(curve.values[0] - abs(p.f) ** 2) <= 1e-10
        assert abs(curve.values[-1] - curve.metadata["coherent_limit"]) <= 1e-4
    assert np.all(np.diff(g1(BASE.with_(delta=0.0), order=2, tau_grid=taus).values.real) <= 0)
    # off resonance the exact curve itself dips slightly below its long-time limit
    exact = output_g1(BASE, FockConfig(n_max=20), taus).real
    assert exact.min() < exact[-1]
    assert g1(WARM, order=1).metadata["delta_at_zero"] == 0.25
    with pytest.raises(ContractViolation):
        g1(BASE, order=1, tau_grid=[-1.0])
    with pytest.raises(CapabilityError):
        g1(BASE, MeanField())


def test_squeezing_linear_cavity():
    grid = np.linspace(-2, 2, 9)
    plus, minus = squeezing_spectrum(BASE.with_(u=0.0), order=2, theta=1.49, omega_grid=grid)
    assert np.max(np.abs(plus.values)) <= 1e-12 and np.max(np.abs(minus.values)) <= 1e-12
    plus, minus = squeezing_spectrum(WARM.with_(u=0.0), order=2, theta=0.3, omega_grid=grid)
    assert np.max(np.abs(plus.values - 0.125)) <= 1e-10
    assert np.max(np.abs(minus.values + 0.125)) <= 1e-10


def test_squeezing_kerr():
    plus, _ = squeezing_spectrum(BASE.with_(delta=0.0), order=2, theta=1.49, omega_grid=np.linspace(-2, 2, 21))
    assert plus.values.min() < 0
    assert plus.metadata["quadrature"] == "+"


def test_set_partitions_count():
    parts = list(set_partitions(range(4)))
    assert len(parts) == 15
    assert len({tuple(sorted(tuple(sorted(b)) for b in p)) for p in parts}) == 15


def test_g2():
    assert np.max(np.abs(g2(BASE.with_(u=0.0), order=2, tau_grid=[0.0, 1.0, 3.0]).values - 1)) <= 1e-12
    num = g2_numerator(BASE, Bare(2), 40.0)
    assert abs(num.sum() - abs(BASE.f) ** 4) <= 1e-10
    bunched = g2(BASE.with_(delta=-0.2), order=2).values[0]
    anti = g2(BASE.with_(delta=0.2), order=2).values[0]
    assert bunched > 1 > anti
    assert g2(WARM, order=1).metadata["oracle"] == "none"
    assert g2(BASE, order=1).metadata["oracle"] == "lindblad"
    with pytest.raises(UndefinedReflectionError):
        g2(BASE.with_(f=0.0), order=1)


def test_p_function():
    p = ModelParams(delta=0.4, u=0.0, f=0.3, n_b=0.05)
    xs = np.linspace(-2.0, 2.0, 401)
    grid = xs[None, :] + 1j * xs[:, None]
    pf = p_function_linear(p, grid)
    dA = (xs[1] - xs[0]) ** 2
    assert abs(pf.values.sum() * dA - 1) <= 1e-6
    mean = (pf.values * grid).sum() * dA
    assert abs(mean - linear_output_mean(p)) <= 1e-6
    var = (pf.values * np.abs(grid - mean) ** 2).sum() * dA
    assert abs(var - p.n_b) <= 1e-6
    peak = grid.flat[np.argmax(pf.values)]
    assert abs(peak - linear_output_mean(p)) <= xs[1] - xs[0]
    cold = p_function_linear(p.with_(n_b=0.0), grid)
    assert cold.delta_at == linear_output_mean(p) and cold.variance == 0
    with pytest.raises(CapabilityError):
        p_function_linear(p.with_(u=0.1), grid)


def test_linear_frequency_cumulants():
    p = ModelParams(delta=0.0, u=0.0, f=0.2)
    b, bd, noise = linear_frequency_cumulants(p, 0.0)
    assert abs(b / p.f + 1) < 1e-15
    q = ModelParams(delta=0.3, u=0.0, f=0.2, n_b=0.4)
    for w in (-1.0, 0.0, 0.7):
        b, bd, noise = linear_frequency_cumulants(q, w)
        assert abs(bd - b.conjugate()) < 1e-15 and noise == q.n_b
        assert abs(b - linear_output_mean(q.with_(delta=q.delta + w))) < 1e-12
        # transform of the time-domain response delta(t) - i kappa G^R(t)
        f = lambda t, part: part(cmath.exp(1j * w * t) * green(PropagatorKind.RETARDED, False, t, q))
        re = integrate.quad(f, 0, 80, args=(lambda z: z.real,), epsabs=1e-14, limit=400)[0]
        im = integrate.quad(f, 0, 80, args=(lambda z: z.imag,), epsabs=1e-14, limit=400)[0]
        assert abs(q.f * (1 - 1j * q.kappa * complex(re, im)) - b) <= 1e-12
    with pytest.raises(ContractViolation):
        linear_frequency_cumulants(q.with_(u=0.1), 0.0)


def test_contracts():
    with pytest.raises(ContractViolation):
        SpectrumCurve([0.0, 0.0], [1.0, 1.0])
    with pytest.raises(ContractViolation):
        SpectrumCurve([0.0, 1.0], [1.0, float("nan")])
    with pytest.raises(CapabilityError):
        cumulant(CumulantRequest((0.0,), (0.0,), 0, MeanField()), BASE)
    mf = cumulant(CumulantRequest((), (0.0,), 0, MeanField()), BASE).total
    assert abs(abs(mf) - abs(BASE.f)) < 1e-12
