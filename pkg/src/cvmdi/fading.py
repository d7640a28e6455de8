"""Beam-wander fading channels.

The transmission coefficient ``eta`` (square root of the power
transmissivity) of a beam wandering around the aperture centre follows a
log-negative Weibull law on ``(0, eta0]``. With
``x = (L^2 / 2 sigma_b^2) (2 ln(eta0/eta))^(2/gamma)`` the density becomes
exactly ``exp(-x) dx`` on ``[0, inf)``, which is what the quadrature uses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InfeasibleLossError
from .protocols import ProtocolParams, point_key_rate
from .quadrature import QuadratureRule, average_1d, average_2d
from .special import bessel_i0e, bessel_i1e


@dataclass(frozen=True)
class FadingParams:
    """Aperture radius ``beta``, beam-spot radius ``w`` and beam-wander deviation ``sigma_b``.

    Only ratios matter, so all three share one arbitrary length unit. The
    Weibull shape ``gamma_s``, scale ``l_scale`` and maximum ``eta0`` are
    derived on construction.
    """

    beta: float
    w: float
    sigma_b: float
    h: float = field(init=False)
    gamma_s: float = field(init=False)
    l_scale: float = field(init=False)
    eta0: float = field(init=False)

    def __post_init__(self):
        if not (self.beta > 0 and self.w > 0):
            raise DomainError("aperture and beam radii must be positive")
        if not self.sigma_b >= 0:
            raise DomainError(f"beam-wander deviation must be >= 0, got {self.sigma_b}")
        h = (self.beta / self.w) ** 2
        eta0_sq = -math.expm1(-2.0 * h)
        denom = 1.0 - bessel_i0e(4.0 * h)
        if denom <= 0:
            raise RuntimeError("degenerate Weibull denominator")
        log_term = math.log(2.0 * eta0_sq / denom)
        if log_term <= 0:
            raise RuntimeError("degenerate Weibull log term")
        gamma_s = 8.0 * h * bessel_i1e(4.0 * h) / denom / log_term
        set_ = object.__setattr__
        set_(self, "h", h)
        set_(self, "gamma_s", gamma_s)
        set_(self, "l_scale", self.beta * log_term ** (-1.0 / gamma_s))
        set_(self, "eta0", math.sqrt(eta0_sq))

    @property
    def degenerate(self) -> bool:
        return self.sigma_b == 0.0

    @property
    def x_scale(self) -> float:
        """Value of x at which eta has dropped to ``eta0 * exp(-1/2)``."""
        return self.l_scale**2 / (2.0 * self.sigma_b**2)

    def eta_from_x(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            return self.eta0 * np.exp(-0.5 * (x / self.x_scale) ** (0.5 * self.gamma_s))

    def eta_from_cdf(self, u):
        """Inverse CDF in the substituted variable: ``u = 1 - exp(-x)``."""
        with np.errstate(divide="ignore"):
            x = -np.log1p(-np.asarray(u, dtype=float))
        return self.eta_from_x(x)

    def floor_loss_db(self) -> float:
        """Mean loss of a channel without beam wander, ``-10 log10(eta0^2)``."""
        return -10.0 * math.log10(self.eta0**2)


def weibull_params(beta: float, w: float, sigma_b: float) -> FadingParams:
    return FadingParams(beta, w, sigma_b)


def fading_pdf(eta, p: FadingParams):
    """Density of the transmission coefficient; zero outside ``(0, eta0]``."""
    eta = np.asarray(eta, dtype=float)
    out = np.zeros_like(eta)
    inside = (eta > 0) & (eta <= p.eta0)
    if p.degenerate:
        out[eta == p.eta0] = np.inf
        return out if out.ndim else float(out)
    e = eta[inside]
    with np.errstate(all="ignore"):
        t = 2.0 * np.log(p.eta0 / e)
        g = p.gamma_s
        r = p.l_scale**2 / p.sigma_b**2
        val = (2.0 * r / (g * e)) * t ** (2.0 / g - 1.0) * np.exp(-0.5 * r * t ** (2.0 / g))
    # deep tail: exp underflows against a huge prefactor
    out[inside] = np.where(np.isnan(val), 0.0, val)
    return out if out.ndim else float(out)


def fading_cdf(eta, p: FadingParams):
    """``P(eta' <= eta)``; closed form that follows from the substitution."""
    eta = np.asarray(eta, dtype=float)
    out = np.where(eta >= p.eta0, 1.0, 0.0)
    inside = (eta > 0) & (eta < p.eta0)
    if not p.degenerate:
        t = 2.0 * np.log(p.eta0 / eta[inside])
        out[inside] = np.exp(-(p.l_scale**2 / (2 * p.sigma_b**2)) * t ** (2.0 / p.gamma_s))
    return out if out.ndim else float(out)


def expectation_over_fading(g, p: FadingParams, rule: QuadratureRule | None = None) -> float:
    """``E[g(eta)]`` under the beam-wander law; ``g`` must accept numpy arrays."""
    return average_1d(g, p, rule or QuadratureRule())


def mean_transmissivity(p: FadingParams, rule: QuadratureRule | None = None) -> float:
    return expectation_over_fading(lambda e: e * e, p, rule)


def mean_loss_db(p: FadingParams, rule: QuadratureRule | None = None) -> float:
    return -10.0 * math.log10(mean_transmissivity(p, rule))


def _bisect_log_sigma(excess, beta: float, tol_db: float) -> float:
    """Root of a loss excess that increases with ``log(sigma_b / beta)``."""
    lo, hi = math.log(1e-3), 0.0
    while excess(lo) > 0:
        lo -= 2.0
        if lo < math.log(1e-300):
            return 0.0
    while excess(hi) < 0:
        hi += 1.0
        if hi > 700:
            raise RuntimeError("could not bracket beam-wander deviation")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        e = excess(mid)
        if abs(e) <= tol_db or hi - lo < 1e-15:
            return beta * math.exp(mid)
        if e > 0:
            hi = mid
        else:
            lo = mid
    return beta * math.exp(0.5 * (lo + hi))


def solve_sigma_b(
    target_loss_db: float,
    beta: float = 1.0,
    w: float = 1.0,
    rule: QuadratureRule | None = None,
    tol_db: float = 1e-9,
    slack_db: float = 1e-9,
) -> float:
    """Beam-wander deviation that puts one channel's mean loss at ``target_loss_db``.

    Bisection on ``log(sigma_b)``. Targets within ``slack_db`` of the
    zero-wander floor return 0.
    """
    rule = rule or QuadratureRule()
    floor = FadingParams(beta, w, 0.0).floor_loss_db()
    if target_loss_db < floor - slack_db:
        raise InfeasibleLossError(target_loss_db, floor)
    if target_loss_db <= floor + slack_db:
        return 0.0

    def excess(log_s):
        return mean_loss_db(FadingParams(beta, w, beta * math.exp(log_s)), rule) - target_loss_db

    return _bisect_log_sigma(excess, beta, tol_db)


def solve_sigma_b_pair(
    total_loss_db: float,
    k: float,
    beta: float = 1.0,
    w: float = 1.0,
    rule: QuadratureRule | None = None,
    tol_db: float = 1e-9,
    slack_db: float = 1e-9,
) -> tuple[float, float]:
    """``(sigma_b_a, sigma_b_b)`` with ``sigma_b_a = k sigma_b_b`` whose mean losses add up to ``total_loss_db``."""
    rule = rule or QuadratureRule()
    asymmetry_ratio(k, 1.0)
    floor = 2.0 * FadingParams(beta, w, 0.0).floor_loss_db()
    if total_loss_db < floor - slack_db:
        raise InfeasibleLossError(total_loss_db, floor, what="total")
    if total_loss_db <= floor + slack_db:
        return 0.0, 0.0

    def excess(log_s):
        sb = beta * math.exp(log_s)
        la = mean_loss_db(FadingParams(beta, w, asymmetry_ratio(k, sb)), rule)
        return la + mean_loss_db(FadingParams(beta, w, sb), rule) - total_loss_db

    sb = _bisect_log_sigma(excess, beta, tol_db)
    return asymmetry_ratio(k, sb), sb


def asymmetry_ratio(k: float, sigma_b_b: float) -> float:
    """Alice's beam-wander deviation when it is ``k`` times Bob's."""
    if not k > 0:
        raise DomainError(f"asymmetry ratio must be positive, got {k}")
    return k * sigma_b_b


def averaged_key_rate(
    pp: ProtocolParams,
    fa: FadingParams,
    fb: FadingParams,
    rule: QuadratureRule | None = None,
    clip: bool = True,
) -> float:
    """Key rate averaged over two independent fading channels, floored at 0.

    With ``clip`` the integrand is ``max(K, 0)``: realizations with no key are
    discarded using real-time transmissivity monitoring.
    """
    rule = rule or QuadratureRule()

    def k(eta_a, eta_b):
        return point_key_rate(pp, eta_a * eta_a, eta_b * eta_b)

    return max(average_2d(k, fa, fb, rule, clip=clip), 0.0)


def fixed_channel_key_rate(pp: ProtocolParams, tau_a: float, tau_b: float) -> float:
    """Key rate over fixed-attenuation channels, floored at 0."""
    return max(float(point_key_rate(pp, tau_a, tau_b)), 0.0)


__all__ = [
    "FadingParams",
    "asymmetry_ratio",
    "averaged_key_rate",
    "expectation_over_fading",
    "fading_cdf",
    "fading_pdf",
    "fixed_channel_key_rate",
    "mean_loss_db",
    "mean_transmissivity",
    "solve_sigma_b",
    "solve_sigma_b_pair",
    "weibull_params",
]
