"""Post-channel and post-relay covariance matrices, and per-realization key rates.

Two schemes are modelled. In the measurement-device-independent (MDI) scheme
each ground station keeps one mode of a TMSV and sends the other to an
untrusted relay that performs a CV Bell measurement. In the direct-transmission
baseline a single TMSV mode is reflected by a trusted satellite, so the two
legs compose into one lossy channel.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .gaussian import Detection, Reference, TwoModeCM, key_rate_from_cm


class Scheme(enum.Enum):
    MDI = "mdi"
    DIRECT = "direct"


class Mode(enum.Enum):
    FIRST = 1
    SECOND = 2


@dataclass(frozen=True)
class ProtocolParams:
    v: float = 60.0
    eps_a: float = 0.02
    eps_b: float = 0.02
    detection: Detection = Detection.HOMODYNE
    reference: Reference = Reference.ALICE
    xi: float = 1.0
    scheme: Scheme = Scheme.MDI

    def __post_init__(self):
        if not self.v >= 1.0:
            raise DomainError(f"v must be >= 1, got {self.v}")
        if self.eps_a < 0 or self.eps_b < 0:
            raise DomainError("excess noise must be non-negative")
        if not 0.0 < self.xi <= 1.0:
            raise DomainError(f"xi must lie in (0, 1], got {self.xi}")
        if self.scheme is Scheme.DIRECT and self.reference is not Reference.BOB:
            raise DomainError("direct transmission is evaluated with reverse reconciliation only (reference=bob)")


def _check_tau(*taus):
    for t in taus:
        t = np.asarray(t)
        if np.any(t < 0.0) or np.any(t > 1.0) or np.any(np.isnan(t)):
            raise DomainError(f"transmissivity must lie in [0, 1], got {t!r}")


def _check_source(v, *eps):
    if not v >= 1.0:
        raise DomainError(f"v must be >= 1, got {v}")
    for e in eps:
        if np.any(np.asarray(e) < 0.0):
            raise DomainError("excess noise must be non-negative")


def lossy_tmsv_cm(v: float, tau: float, eps: float, transmitted: Mode = Mode.SECOND) -> TwoModeCM:
    """TMSV after one mode crossed a pure-loss channel plus additive excess noise ``eps``."""
    _check_source(v, eps)
    _check_tau(tau)
    kept = v
    sent = tau * v + (1.0 - tau) + eps
    c = np.sqrt(tau) * math.sqrt(v * v - 1.0)
    if transmitted is Mode.FIRST:
        return TwoModeCM(sent, kept, c, -c)
    return TwoModeCM(kept, sent, c, -c)


def relay_theta(v, tau_a, tau_b, eps_a, eps_b):
    """Half the variance sum at the relay; ``(v-1)`` is kept factored to avoid cancellation near v = 1."""
    return (v - 1.0) * (tau_a + tau_b) + (eps_a + eps_b) + 2.0


def mdi_conditional_cm(v: float, tau_a, tau_b, eps_a: float, eps_b: float) -> TwoModeCM:
    """Alice-Bob matrix after entanglement swapping at the relay, conditioned on the Bell outcome."""
    _check_source(v, eps_a, eps_b)
    _check_tau(tau_a, tau_b)
    theta = relay_theta(v, tau_a, tau_b, eps_a, eps_b)
    if np.any(theta <= 0):
        raise RuntimeError("relay variance theta must be positive")
    s = (v - 1.0) * (v + 1.0)
    a = v - s * tau_a / theta
    b = v - s * tau_b / theta
    c = s * np.sqrt(tau_a * tau_b) / theta
    return TwoModeCM(a, b, c, -c)


def direct_transmission_cm(v: float, tau_total, eps: float) -> TwoModeCM:
    """One-way lossy TMSV through the composed satellite channel; ``eps`` is Bob's receiver noise."""
    return lossy_tmsv_cm(v, tau_total, eps, Mode.SECOND)


def point_key_rate(p: ProtocolParams, tau_a, tau_b):
    """Unclipped key rate (bits/pulse) for one realization of the two channel transmissivities."""
    if p.scheme is Scheme.MDI:
        m = mdi_conditional_cm(p.v, tau_a, tau_b, p.eps_a, p.eps_b)
        return key_rate_from_cm(m, p.detection, p.reference, p.xi)
    m = direct_transmission_cm(p.v, np.asarray(tau_a) * np.asarray(tau_b), p.eps_b)
    return key_rate_from_cm(m, p.detection, Reference.BOB, p.xi)


def modulation_variance(v: float, detection: Detection) -> float:
    """Gaussian modulation variance of the prepare-and-measure scheme equivalent to a TMSV of variance ``v``.

    Squeezed states (homodyne) modulate one quadrature with ``v - 1/v``;
    coherent states (heterodyne) modulate each quadrature with ``v - 1``.
    """
    if not v >= 1.0:
        raise DomainError(f"v must be >= 1, got {v}")
    if detection is Detection.HOMODYNE:
        return v - 1.0 / v
    return v - 1.0
