"""Oracle checks run by ``cvmdi validate``."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .gaussian import Detection, symplectic_eigenvalues
from .oracle import (
    RNG_ALGORITHM,
    Z_THRESHOLD,
    build_network_cm,
    compare_schemes,
    condition_on_bell,
    covariance_z_scores,
    regression_gain,
    residual_cm,
    simulate_eb_scheme,
    simulate_pm_scheme,
)
from .protocols import mdi_conditional_cm

BELL_TOL = 1e-10
RAW_COLUMNS = ["q1", "p1", "q4", "p4", "q_s", "p_t"]
_RAW_INDEX = [0, 1, 6, 7, 2, 5]


@dataclass(frozen=True)
class Check:
    name: str
    statistic: float
    threshold: float
    passed: bool

    def line(self) -> str:
        return f"{self.name} {self.statistic:.6g} {self.threshold:.6g} {'PASS' if self.passed else 'FAIL'}"


def _below(name, stat, thr) -> Check:
    return Check(name, float(stat), thr, bool(stat < thr))


def bell_conditioning_deviation(draws: int = 100, seed: int = 0) -> float:
    """Largest elementwise gap between brute-force conditioning and the closed form over random draws."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(draws):
        v = rng.uniform(1.0, 100.0)
        ta, tb = rng.uniform(0.0, 1.0, 2)
        ea, eb = rng.uniform(0.0, 0.1, 2)
        brute = condition_on_bell(build_network_cm(v, ta, tb, ea, eb)).matrix()
        closed = mdi_conditional_cm(v, ta, tb, ea, eb).matrix()
        worst = max(worst, float(np.max(np.abs(brute - closed))))
    return worst


def gain_z_score(batch) -> float:
    """Fitted q-gain against the analytic regression gain, in standard errors."""
    q4, qs = batch.columns["q4"], batch.columns["q_s"]
    p = batch.params
    g_true = regression_gain(p["v"], p["tau_a"], p["tau_b"], p["eps_a"], p["eps_b"])[0]
    resid = q4 + batch.gain[0] * qs
    se = math.sqrt(resid.var() / (len(qs) * qs.var()))
    return (batch.gain[0] - g_true) / se


def run_checks(cfg) -> list[Check]:
    pp = replace(cfg.protocol(), v=cfg.validate_v)
    ta, tb, n = cfg.validate_tau_a, cfg.validate_tau_b, cfg.samples
    checks = [_below("bell_conditioning_max_abs_dev", bell_conditioning_deviation(seed=cfg.seed), BELL_TOL)]

    eb = simulate_eb_scheme(pp, ta, tb, n, cfg.seed)
    net = build_network_cm(pp.v, ta, tb, pp.eps_a, pp.eps_b).m[np.ix_(_RAW_INDEX, _RAW_INDEX)]
    z_raw = covariance_z_scores(eb.matrix(RAW_COLUMNS), net)
    checks.append(_below("eb_raw_covariance_max_abs_z", np.max(np.abs(z_raw)), Z_THRESHOLD))
    cond = mdi_conditional_cm(pp.v, ta, tb, pp.eps_a, pp.eps_b).matrix()
    z_res = (residual_cm(eb) - cond) / np.sqrt((np.outer(np.diag(cond), np.diag(cond)) + cond**2) / n)
    checks.append(_below("eb_residual_covariance_max_abs_z", np.max(np.abs(z_res)), Z_THRESHOLD))
    checks.append(_below("eb_gain_fit_abs_z", abs(gain_z_score(eb)), Z_THRESHOLD))
    nu_min = symplectic_eigenvalues(mdi_conditional_cm(pp.v, ta, tb, pp.eps_a, pp.eps_b))[1]
    checks.append(Check("relay_cm_nu_minus", float(nu_min), 1.0 - 1e-9, bool(nu_min >= 1.0 - 1e-9)))

    for i, det in enumerate((Detection.HOMODYNE, Detection.HETERODYNE)):
        pd = replace(pp, detection=det)
        eb_d = simulate_eb_scheme(pd, ta, tb, n, cfg.seed)
        gain = (eb_d.gain[0] + cfg.gain_offset, eb_d.gain[1] + cfg.gain_offset)
        pm = simulate_pm_scheme(pd, ta, tb, n, cfg.seed + 1 + i, gain=gain)
        res = compare_schemes(pm, eb_d)
        checks.append(_below(f"pm_vs_eb_{det.value}_max_abs_z", res.max_abs_z, Z_THRESHOLD))
        if i == 0:
            bad = simulate_pm_scheme(pd, ta, tb, n, cfg.seed + 1, gain=(gain[0] + 0.5, gain[1] + 0.5))
            stat = compare_schemes(bad, eb_d).max_abs_z
            checks.append(Check("negative_control_gain_mismatch_max_abs_z", stat, Z_THRESHOLD, bool(stat >= Z_THRESHOLD)))
    return checks


__all__ = ["Check", "RNG_ALGORITHM", "bell_conditioning_deviation", "gain_z_score", "run_checks"]
