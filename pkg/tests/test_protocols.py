import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvmdi import (
    Detection,
    DomainError,
    ProtocolParams,
    Reference,
    Scheme,
    direct_transmission_cm,
    lossy_tmsv_cm,
    mdi_conditional_cm,
    modulation_variance,
    mutual_info,
    point_key_rate,
    symplectic_eigenvalues,
    tmsv_cm,
)
from cvmdi.protocols import Mode, relay_theta

MDI = ProtocolParams()


def test_lossy_identity_channel():
    assert lossy_tmsv_cm(7.0, 1.0, 0.0) == tmsv_cm(7.0)


def test_lossy_full_loss():
    m = lossy_tmsv_cm(7.0, 0.0, 0.0)
    assert (m.a, m.b, m.c) == (7.0, 1.0, 0.0)


def test_lossy_worked_example():
    m = lossy_tmsv_cm(60.0, 0.5, 0.02)
    assert m.b == pytest.approx(30.52, abs=1e-12)
    assert m.c == pytest.approx(42.4206, abs=1e-4)
    first = lossy_tmsv_cm(60.0, 0.5, 0.02, Mode.FIRST)
    assert (first.a, first.b) == (m.b, m.a)


@pytest.mark.parametrize("tau", [-0.1, 1.1, float("nan")])
def test_lossy_rejects_bad_tau(tau):
    with pytest.raises(DomainError):
        lossy_tmsv_cm(5.0, tau, 0.0)


def test_relay_no_entanglement():
    m = mdi_conditional_cm(1.0, 0.3, 0.7, 0.05, 0.01)
    assert (m.a, m.b, m.c) == (1.0, 1.0, 0.0)


def test_relay_full_loss():
    m = mdi_conditional_cm(12.0, 0.0, 0.0, 0.02, 0.02)
    assert (m.a, m.b, m.c) == (12.0, 12.0, 0.0)


def test_relay_worked_example():
    m = mdi_conditional_cm(60.0, 1.0, 1.0, 0.0, 0.0)
    assert relay_theta(60.0, 1.0, 1.0, 0.0, 0.0) == 120.0
    assert m.a == pytest.approx(60 - 3599 / 120, rel=1e-15)
    assert m.a == pytest.approx(30.00833, abs=1e-5)
    assert m.c == pytest.approx(29.99167, abs=1e-5)
    assert m.c_minus == -m.c


@settings(max_examples=200)
@given(
    v=st.floats(1.0, 100.0),
    ta=st.floats(0.0, 1.0),
    tb=st.floats(0.0, 1.0),
    ea=st.floats(0.0, 0.1),
    eb=st.floats(0.0, 0.1),
)
def test_relay_state_physical_and_swap_symmetric(v, ta, tb, ea, eb):
    m = mdi_conditional_cm(v, ta, tb, ea, eb)
    assert symplectic_eigenvalues(m)[1] >= 1 - 1e-9
    s = mdi_conditional_cm(v, tb, ta, eb, ea)
    assert (s.a, s.b) == (m.b, m.a)
    assert s.c == pytest.approx(m.c, rel=1e-15, abs=0)


def test_relay_equal_legs_give_a_equal_b():
    m = mdi_conditional_cm(33.0, 0.4, 0.4, 0.03, 0.03)
    assert m.a == m.b


def test_direct_examples():
    assert direct_transmission_cm(60.0, 1.0, 0.0) == tmsv_cm(60.0)
    m = direct_transmission_cm(60.0, 0.0, 0.02)
    assert (m.b, m.c) == (1.02, 0.0)
    m = direct_transmission_cm(60.0, 0.25, 0.02)
    assert m.b == pytest.approx(15.77, abs=1e-12)
    assert m.c == pytest.approx(29.9958, abs=1e-4)


def test_protocol_params_validation():
    with pytest.raises(DomainError):
        ProtocolParams(v=0.5)
    with pytest.raises(DomainError):
        ProtocolParams(eps_a=-0.1)
    with pytest.raises(DomainError):
        ProtocolParams(xi=0.0)
    with pytest.raises(DomainError):
        ProtocolParams(scheme=Scheme.DIRECT, reference=Reference.ALICE)


def test_zero_transmission_gives_no_key():
    assert point_key_rate(MDI, 0.0, 0.0) <= 0


def test_no_entanglement_gives_zero_mutual_information():
    m = mdi_conditional_cm(1.0, 0.5, 0.5, 0.02, 0.02)
    assert mutual_info(m, Detection.HOMODYNE) == 0.0


@pytest.mark.parametrize("tau", [0.6, 0.8, 0.9, 1.0])
def test_homodyne_beats_heterodyne(tau):
    hom = point_key_rate(MDI, tau, tau)
    het = point_key_rate(replace(MDI, detection=Detection.HETERODYNE), tau, tau)
    assert hom > het


@pytest.mark.parametrize("det", list(Detection))
@pytest.mark.parametrize("tau_a, tau_b", [(1.0, 1.0), (0.9, 0.7), (0.5, 0.5), (0.2, 0.9)])
def test_direct_at_least_mdi(det, tau_a, tau_b):
    mdi = point_key_rate(replace(MDI, detection=det), tau_a, tau_b)
    direct = point_key_rate(replace(MDI, detection=det, scheme=Scheme.DIRECT, reference=Reference.BOB), tau_a, tau_b)
    assert direct >= mdi


def test_noise_monotone_degradation():
    eps = np.linspace(0.0, 0.1, 11)
    for det in Detection:
        rates = [point_key_rate(replace(MDI, detection=det, eps_a=e), 0.9, 0.8) for e in eps]
        assert np.all(np.diff(rates) <= 0)
        rates = [point_key_rate(replace(MDI, detection=det, eps_b=e), 0.9, 0.8) for e in eps]
        assert np.all(np.diff(rates) <= 0)


def test_point_key_rate_vectorizes():
    ta = np.array([0.9, 0.95, 1.0])
    vec = point_key_rate(MDI, ta, 0.97)
    assert np.array_equal(vec, [point_key_rate(MDI, t, 0.97) for t in ta])


def test_modulation_variance():
    for d in Detection:
        assert modulation_variance(1.0, d) == 0.0
    assert modulation_variance(5.05, Detection.HOMODYNE) == pytest.approx(4.85198, abs=1e-5)
    assert modulation_variance(61.0, Detection.HETERODYNE) == 60.0
    with pytest.raises(DomainError):
        modulation_variance(0.9, Detection.HOMODYNE)
