"""Loss sweeps behind the two figure reproductions.

The abscissa is the total mean loss, i.e. the sum of the two legs' mean
losses in dB. Symmetric sweeps give each leg half of it. Asymmetric sweeps
fix ``sigma_b_a = k sigma_b_b`` and solve for ``sigma_b_b``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .fading import (
    FadingParams,
    averaged_key_rate,
    fixed_channel_key_rate,
    mean_transmissivity,
    solve_sigma_b_pair,
)
from .gaussian import Detection, Reference
from .protocols import ProtocolParams, Scheme
from .quadrature import QuadratureRule

FIGURE2_XI = (1.0, 0.95, 0.8)
FIGURE1_CURVES = (
    ("mdi_homodyne", Scheme.MDI, Detection.HOMODYNE),
    ("mdi_heterodyne", Scheme.MDI, Detection.HETERODYNE),
    ("direct_homodyne", Scheme.DIRECT, Detection.HOMODYNE),
    ("direct_heterodyne", Scheme.DIRECT, Detection.HETERODYNE),
)


@dataclass(frozen=True)
class ChannelPair:
    total_loss_db: float
    fa: FadingParams
    fb: FadingParams
    tau_a: float
    tau_b: float


def split_loss(total_loss_db, k=1.0, beta=1.0, w=1.0, rule: QuadratureRule | None = None) -> ChannelPair:
    """Fading parameters of both legs for one total mean loss."""
    rule = rule or QuadratureRule()
    sa, sb = solve_sigma_b_pair(total_loss_db, k, beta, w, rule)
    fa, fb = FadingParams(beta, w, sa), FadingParams(beta, w, sb)
    return ChannelPair(total_loss_db, fa, fb, mean_transmissivity(fa, rule), mean_transmissivity(fb, rule))


def loss_grid(lo: float, hi: float, steps: int) -> np.ndarray:
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if steps == 1:
        return np.array([float(lo)])
    if not hi > lo:
        raise ValueError("loss_db_max must exceed loss_db_min")
    return np.linspace(lo, hi, steps)


@dataclass
class SweepResult:
    """Rows of a sweep; the first column is always ``loss_db``."""

    columns: list
    rows: list = field(default_factory=list)

    def column(self, name) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])


def _variant(base: ProtocolParams, scheme: Scheme, detection: Detection) -> ProtocolParams:
    ref = Reference.BOB if scheme is Scheme.DIRECT else base.reference
    return replace(base, scheme=scheme, detection=detection, reference=ref)


def figure1(base: ProtocolParams, losses, beta=1.0, w=1.0, rule=None, clip=True) -> tuple[SweepResult, SweepResult]:
    """Fading-averaged and matched fixed-attenuation rates for the four scheme/detection curves."""
    rule = rule or QuadratureRule()
    names = [n for n, _, _ in FIGURE1_CURVES]
    fading = SweepResult(["loss_db", "sigma_b_a", "sigma_b_b"] + names)
    fixed = SweepResult(["loss_db", "tau_a", "tau_b"] + names)
    for loss in losses:
        ch = split_loss(loss, 1.0, beta, w, rule)
        fad_row = [float(loss), ch.fa.sigma_b, ch.fb.sigma_b]
        fix_row = [float(loss), ch.tau_a, ch.tau_b]
        for _, scheme, det in FIGURE1_CURVES:
            pp = _variant(base, scheme, det)
            fad_row.append(averaged_key_rate(pp, ch.fa, ch.fb, rule, clip))
            fix_row.append(fixed_channel_key_rate(pp, ch.tau_a, ch.tau_b))
        fading.rows.append(fad_row)
        fixed.rows.append(fix_row)
    return fading, fixed


def _xi_label(xi: float) -> str:
    return format(xi, "g")


def figure2(base: ProtocolParams, losses, k=0.54, beta=1.0, w=1.0, rule=None, clip=True, xis=FIGURE2_XI) -> SweepResult:
    """Alice- and Bob-referenced MDI rates on asymmetric channels for several reconciliation efficiencies."""
    rule = rule or QuadratureRule()
    cols = ["loss_db", "sigma_b_a", "sigma_b_b"]
    for xi in xis:
        cols += [f"alice_ref_xi_{_xi_label(xi)}", f"bob_ref_xi_{_xi_label(xi)}"]
    out = SweepResult(cols)
    for loss in losses:
        ch = split_loss(loss, k, beta, w, rule)
        row = [float(loss), ch.fa.sigma_b, ch.fb.sigma_b]
        for xi in xis:
            for ref in (Reference.ALICE, Reference.BOB):
                pp = replace(base, scheme=Scheme.MDI, reference=ref, xi=xi)
                row.append(averaged_key_rate(pp, ch.fa, ch.fb, rule, clip))
        out.rows.append(row)
    return out
