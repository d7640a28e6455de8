"""Two-mode Gaussian covariance algebra and Gaussian key-rate formulas.

Units are shot-noise units with hbar = 2, so the vacuum quadrature variance
is 1. Every function here accepts either Python floats or numpy arrays for
the covariance entries; arrays broadcast elementwise, which is what the
fading quadrature relies on.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError, UnphysicalStateError

# symplectic eigenvalues in [1 - NU_TOL, 1) are rounding noise around a pure mode
NU_TOL = 1e-9
LOG_FLOOR = 1e-30
_LN2 = math.log(2.0)


class Detection(enum.Enum):
    HOMODYNE = "homodyne"
    HETERODYNE = "heterodyne"


class Reference(enum.Enum):
    """Whose data is the reference of reconciliation (direct = Alice, reverse = Bob)."""

    ALICE = "alice"
    BOB = "bob"


@dataclass(frozen=True)
class TwoModeCM:
    """Standard-form two-mode covariance matrix ``[[aI, C], [C, bI]]``, ``C = diag(c_plus, c_minus)``."""

    a: float
    b: float
    c_plus: float
    c_minus: float

    @property
    def c(self):
        """Correlation for matrices of the ``[[aI, cZ], [cZ, bI]]`` form."""
        return self.c_plus

    @property
    def det(self):
        return (self.a * self.b - self.c_plus**2) * (self.a * self.b - self.c_minus**2)

    def is_cz_form(self, atol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(np.asarray(self.c_plus) + np.asarray(self.c_minus)) <= atol))

    def matrix(self) -> np.ndarray:
        """Dense 4x4 matrix in quadrature order (q1, p1, q2, p2). Scalar entries only."""
        a, b, cp, cm = (float(x) for x in (self.a, self.b, self.c_plus, self.c_minus))
        return np.array(
            [
                [a, 0.0, cp, 0.0],
                [0.0, a, 0.0, cm],
                [cp, 0.0, b, 0.0],
                [0.0, cm, 0.0, b],
            ]
        )

    @classmethod
    def from_matrix(cls, m, atol: float = 1e-9) -> "TwoModeCM":
        """Read a 4x4 matrix that must already be in standard form."""
        m = np.asarray(m, dtype=float)
        if m.shape != (4, 4):
            raise ShapeError(f"expected a 4x4 matrix, got shape {m.shape}")
        a, b = m[0, 0], m[2, 2]
        expected = cls(a, b, m[0, 2], m[1, 3]).matrix()
        scale = max(1.0, float(np.max(np.abs(m))))
        if np.max(np.abs(m - expected)) > atol * scale:
            raise ShapeError("matrix is not in two-mode standard form")
        return cls(a, b, m[0, 2], m[1, 3])


def tmsv_cm(v: float) -> TwoModeCM:
    """Two-mode squeezed vacuum with quadrature variance ``v`` in each mode."""
    if v < 1.0:
        raise DomainError(f"TMSV variance must be >= 1, got {v}")
    c = math.sqrt(v * v - 1.0)
    return TwoModeCM(v, v, c, -c)


def squeezing_db_to_variance(db: float) -> float:
    """Quadrature variance ``cosh(2r)`` of a TMSV whose squeezing is ``db`` decibels (``e^{2r} = 10^{db/10}``)."""
    e2r = 10.0 ** (db / 10.0)
    return 0.5 * (e2r + 1.0 / e2r)


def _clamp_nu(x):
    """Clamp rounding-level dips below 1; raise on anything larger."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 1.0 - NU_TOL) or np.any(np.isnan(x)):
        bad = np.min(x) if x.size else x
        raise DomainError(f"entropy argument must be >= 1, got {bad!r}")
    return np.maximum(x, 1.0)


def _safe_log2(x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x >= LOG_FLOOR)):
        raise UnphysicalStateError("logarithm argument is not positive")
    return np.log2(x)


def entropy_f(x):
    """Von Neumann entropy (bits) of a thermal mode with symplectic eigenvalue ``x``.

    Written in terms of ``y = (x - 1)/2`` with ``log1p`` so that it stays
    accurate down to ``x = 1``, where ``y log y`` is taken as 0.
    """
    scalar = np.ndim(x) == 0
    y = 0.5 * (_clamp_nu(x) - 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ylogy = np.where(y > 0.0, y * np.log(np.where(y > 0.0, y, 1.0)), 0.0)
    out = ((1.0 + y) * np.log1p(y) - ylogy) / _LN2
    return float(out) if scalar else out


def symplectic_eigenvalues(m: TwoModeCM):
    """Return ``(nu_plus, nu_minus)`` of a standard-form two-mode matrix.

    Uses the general invariant ``Delta = a^2 + b^2 + 2 c_plus c_minus``.
    """
    a, b = np.asarray(m.a, dtype=float), np.asarray(m.b, dtype=float)
    cp, cm = np.asarray(m.c_plus, dtype=float), np.asarray(m.c_minus, dtype=float)
    delta = a * a + b * b + 2.0 * cp * cm
    det = (a * b - cp * cp) * (a * b - cm * cm)
    scale = np.maximum(delta * delta, 1.0)
    if np.any(det < -NU_TOL * scale):
        raise UnphysicalStateError("covariance matrix has negative determinant")
    det = np.maximum(det, 0.0)
    disc = delta * delta - 4.0 * det
    if np.any(disc < -NU_TOL * scale):
        raise UnphysicalStateError("negative symplectic discriminant")
    root = np.sqrt(np.maximum(disc, 0.0))
    nu_plus = np.sqrt(0.5 * (delta + root))
    # det = (nu+ nu-)^2 avoids cancellation in (delta - root) for nearly pure states
    with np.errstate(divide="ignore", invalid="ignore"):
        nu_minus = np.where(nu_plus > 0, np.sqrt(det) / nu_plus, 0.0)
    if np.ndim(nu_plus) == 0:
        return float(nu_plus), float(nu_minus)
    return nu_plus, nu_minus


def von_neumann_entropy(m: TwoModeCM):
    nu_p, nu_m = symplectic_eigenvalues(m)
    return entropy_f(nu_p) + entropy_f(nu_m)


def _require_cz(m: TwoModeCM):
    if not m.is_cz_form(atol=1e-9 * max(1.0, float(np.max(np.abs(m.a))))):
        raise ShapeError("key-rate formulas need a [[aI, cZ], [cZ, bI]] matrix (c_plus = -c_minus)")
    return np.asarray(m.a, dtype=float), np.asarray(m.b, dtype=float), np.asarray(m.c_plus, dtype=float)


def mutual_info(m: TwoModeCM, detection: Detection):
    """Alice-Bob mutual information in bits per use."""
    a, b, c = _require_cz(m)
    c2 = c * c
    if detection is Detection.HOMODYNE:
        den = a - c2 / b
        if np.any(den <= 0):
            raise UnphysicalStateError("a - c^2/b must be positive")
        out = 0.5 * _safe_log2(a / den)
    else:
        den = b + 1.0 - c2 / (a + 1.0)
        if np.any(den <= 0):
            raise UnphysicalStateError("b + 1 - c^2/(a + 1) must be positive")
        out = _safe_log2((b + 1.0) / den)
    return float(out) if np.ndim(out) == 0 else out


def conditional_nu(m: TwoModeCM, detection: Detection, reference: Reference):
    """Symplectic eigenvalue of Eve's state conditioned on the reference party's measurement."""
    a, b, c = _require_cz(m)
    c2 = c * c
    if detection is Detection.HOMODYNE:
        sq = b * (b - c2 / a) if reference is Reference.ALICE else a * (a - c2 / b)
        if np.any(sq < -NU_TOL):
            raise UnphysicalStateError("conditional eigenvalue squared is negative")
        nu = np.sqrt(np.maximum(sq, 0.0))
    elif reference is Reference.ALICE:
        nu = b - c2 / (a + 1.0)
    else:
        nu = a - c2 / (b + 1.0)
    if np.any(nu < 1.0 - NU_TOL):
        raise UnphysicalStateError("conditional symplectic eigenvalue below 1")
    return float(nu) if np.ndim(nu) == 0 else nu


def holevo_bound(m: TwoModeCM, detection: Detection, reference: Reference):
    """Eve's Holevo information on the reference party's data, ``S(AB) - f(nu_cond)``."""
    return von_neumann_entropy(m) - entropy_f(conditional_nu(m, detection, reference))


def key_rate_from_cm(m: TwoModeCM, detection: Detection, reference: Reference, xi: float = 1.0):
    """Asymptotic Gaussian key rate ``xi * I_AB - I_E`` in bits per pulse, not clipped."""
    if not 0.0 < xi <= 1.0:
        raise DomainError(f"reconciliation efficiency must lie in (0, 1], got {xi}")
    return xi * mutual_info(m, detection) - holevo_bound(m, detection, reference)
