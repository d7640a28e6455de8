"""Independent checks for the relay conditional state and the scheme equivalence.

Two routes that do not share code with :mod:`cvmdi.protocols`:

* a deterministic one that builds the full four-mode covariance matrix
  of the network and applies textbook Gaussian homodyne conditioning;
* a stochastic one that samples phase-space vectors through the same
  linear network, either with TMSV sources (entanglement-based, EB) or with
  classically modulated squeezed/coherent states (prepare-and-measure, PM).

Mode order is (1, 2, 3, 4) with quadratures (q, p) per mode. After the
relay beam splitter, positions 2 and 3 hold the output modes s and t.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .gaussian import Detection, TwoModeCM
from .protocols import ProtocolParams, modulation_variance

RNG_ALGORITHM = "PCG64"
MIN_SAMPLES = 10_000
Z_THRESHOLD = 5.0
_CHUNK = 1 << 18

KEPT = [0, 1, 6, 7]  # q1 p1 q4 p4
RELAY = [2, 3, 4, 5]  # q_s p_s q_t p_t
MEASURED = [0, 3]  # q_s and p_t within the relay block


def symplectic_form(modes: int) -> np.ndarray:
    return np.kron(np.eye(modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def symplectic_spectrum(m: np.ndarray) -> np.ndarray:
    """Symplectic eigenvalues (ascending) of an arbitrary covariance matrix."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0] // 2
    ev = np.sort(np.abs(np.linalg.eigvals(1j * symplectic_form(n) @ m)))
    return ev[::2]


@dataclass(frozen=True)
class FourModeCM:
    m: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        if m.shape != (8, 8):
            raise DomainError(f"four-mode matrix must be 8x8, got {m.shape}")
        if np.max(np.abs(m - m.T)) > 1e-12 * max(1.0, np.max(np.abs(m))):
            raise DomainError("covariance matrix is not symmetric")
        object.__setattr__(self, "m", m)

    def block(self, modes) -> np.ndarray:
        idx = [2 * (k - 1) + j for k in modes for j in (0, 1)]
        return self.m[np.ix_(idx, idx)]

    def symplectic_spectrum(self) -> np.ndarray:
        return symplectic_spectrum(self.m)


def _tmsv_block(v: float) -> np.ndarray:
    c = math.sqrt(v * v - 1.0)
    z = np.diag([1.0, -1.0])
    return np.block([[v * np.eye(2), c * z], [c * z, v * np.eye(2)]])


def _lossy(m: np.ndarray, mode: int, tau: float, eps: float) -> np.ndarray:
    """Beam splitter with vacuum (transmissivity ``tau``) and additive noise on one mode."""
    idx = [2 * (mode - 1), 2 * (mode - 1) + 1]
    x = np.eye(m.shape[0])
    y = np.zeros_like(m)
    x[idx, idx] = math.sqrt(tau)
    y[idx, idx] = 1.0 - tau + eps
    return x @ m @ x.T + y


def _balanced_beam_splitter(m: np.ndarray, i: int, j: int) -> np.ndarray:
    """Modes i, j -> s = (i - j)/sqrt(2), t = (i + j)/sqrt(2), both quadratures."""
    s = np.eye(m.shape[0])
    r = 1.0 / math.sqrt(2.0)
    for quad in (0, 1):
        a, b = 2 * (i - 1) + quad, 2 * (j - 1) + quad
        s[a, a], s[a, b] = r, -r
        s[b, a], s[b, b] = r, r
    return s @ m @ s.T


def build_network_cm(v, tau_a, tau_b, eps_a, eps_b, bell: bool = True) -> FourModeCM:
    """Covariance of modes (1, 2, 3, 4) after both channels and, with ``bell``, the relay beam splitter."""
    if not v >= 1.0:
        raise DomainError(f"v must be >= 1, got {v}")
    for t in (tau_a, tau_b):
        if not 0.0 <= t <= 1.0:
            raise DomainError(f"transmissivity must lie in [0, 1], got {t}")
    if eps_a < 0 or eps_b < 0:
        raise DomainError("excess noise must be non-negative")
    tm = _tmsv_block(v)
    m = np.zeros((8, 8))
    m[:4, :4] = tm
    m[4:, 4:] = tm
    m = _lossy(m, 2, tau_a, eps_a)
    m = _lossy(m, 3, tau_b, eps_b)
    if bell:
        m = _balanced_beam_splitter(m, 2, 3)
    return FourModeCM(0.5 * (m + m.T))


def condition_on_bell(net: FourModeCM) -> TwoModeCM:
    """Covariance of modes 1 and 4 given homodyne outcomes q_s and p_t."""
    m = net.m
    a = m[np.ix_(KEPT, KEPT)]
    b = m[np.ix_(RELAY, RELAY)]
    c = m[np.ix_(KEPT, RELAY)]
    proj = np.zeros((4, 4))
    proj[MEASURED, MEASURED] = 1.0
    cond = a - c @ np.linalg.pinv(proj @ b @ proj) @ c.T
    return TwoModeCM.from_matrix(0.5 * (cond + cond.T), atol=1e-9)


def regression_gain(v, tau_a, tau_b, eps_a, eps_b) -> tuple[float, float]:
    """Analytic gains that cancel Bob's linear dependence on the relay outcomes.

    ``(-Cov(q4, q_s)/Var(q_s), -Cov(p4, p_t)/Var(p_t))``.
    """
    m = build_network_cm(v, tau_a, tau_b, eps_a, eps_b).m
    return -m[6, 2] / m[2, 2], -m[7, 5] / m[5, 5]


@dataclass
class SampleBatch:
    """Samples of one scheme. ``columns`` hold equal-length float arrays."""

    scheme: str
    detection: Detection
    n: int
    seed: int
    params: dict
    columns: dict = field(default_factory=dict)
    gain: tuple = (0.0, 0.0)
    rng_algorithm: str = RNG_ALGORITHM

    def matrix(self, names) -> np.ndarray:
        return np.column_stack([self.columns[k] for k in names])


def _streams(seed: int, n: int):
    """Deterministic per-chunk generators; chunk i always uses child i of the seed sequence."""
    chunks = [(start, min(_CHUNK, n - start)) for start in range(0, n, _CHUNK)]
    children = np.random.SeedSequence(seed).spawn(len(chunks))
    for (start, size), child in zip(chunks, children):
        yield start, size, np.random.Generator(np.random.PCG64(child))


def _check_request(p: ProtocolParams, tau_a, tau_b, n):
    if n < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples for statistical checks, got {n}")
    build_network_cm(p.v, tau_a, tau_b, p.eps_a, p.eps_b)
    return p.v, p.eps_a, p.eps_b, p.detection


def _params(p: ProtocolParams, tau_a, tau_b) -> dict:
    return dict(v=p.v, tau_a=tau_a, tau_b=tau_b, eps_a=p.eps_a, eps_b=p.eps_b)


def _channel_and_relay(rng, size, mode2, mode3, tau_a, tau_b, eps_a, eps_b):
    """Push mode-2 and mode-3 quadratures through their channels and the Bell measurement."""

    def channel(q, p, tau, eps):
        vac = rng.standard_normal((2, size))
        noise = rng.standard_normal((2, size)) * math.sqrt(eps)
        r, l = math.sqrt(tau), math.sqrt(1.0 - tau)
        return r * q + l * vac[0] + noise[0], r * p + l * vac[1] + noise[1]

    q2, p2 = channel(*mode2, tau_a, eps_a)
    q3, p3 = channel(*mode3, tau_b, eps_b)
    r = 1.0 / math.sqrt(2.0)
    return r * (q2 - q3), r * (p2 + p3)


def _tmsv_samples(rng, size, v):
    """Two squeezed vacua on a balanced beam splitter: Var(q1 +/- q2)/2 = v +/- sqrt(v^2 - 1)."""
    c = math.sqrt(v * v - 1.0)
    hi, lo = math.sqrt(v + c), math.sqrt(max(v - c, 0.0))
    z = rng.standard_normal((4, size))
    q_plus, q_minus = hi * z[0], lo * z[1]
    p_plus, p_minus = lo * z[2], hi * z[3]
    r = 1.0 / math.sqrt(2.0)
    return (r * (q_plus + q_minus), r * (p_plus + p_minus), r * (q_plus - q_minus), r * (p_plus - p_minus))


def _fit_gain(y, x) -> float:
    """Least-squares gain g minimising the variance of ``y + g x``."""
    xc = x - x.mean()
    return -float(np.dot(y - y.mean(), xc) / np.dot(xc, xc))


def simulate_eb_scheme(p: ProtocolParams, tau_a, tau_b, n: int, seed: int, gain=None) -> SampleBatch:
    """Entanglement-based scheme: TMSV sources, lossy noisy channels, Bell measurement, Bob's displacement.

    Bob's displacement gain is fitted by least squares on the sample unless
    ``gain = (g_q, g_p)`` is given.
    """
    v, eps_a, eps_b, detection = _check_request(p, tau_a, tau_b, n)
    cols = {k: np.empty(n) for k in ("q1", "p1", "q4", "p4", "q_s", "p_t")}
    vac = np.empty((4, n))
    for start, size, rng in _streams(seed, n):
        q1, p1, q2, p2 = _tmsv_samples(rng, size, v)
        q4, p4, q3, p3 = _tmsv_samples(rng, size, v)
        q_s, p_t = _channel_and_relay(rng, size, (q2, p2), (q3, p3), tau_a, tau_b, eps_a, eps_b)
        sl = slice(start, start + size)
        for k, arr in zip(cols, (q1, p1, q4, p4, q_s, p_t)):
            cols[k][sl] = arr
        vac[:, sl] = rng.standard_normal((4, size))
    if gain is None:
        gain = (_fit_gain(cols["q4"], cols["q_s"]), _fit_gain(cols["p4"], cols["p_t"]))
    g_q, g_p = gain
    q4d = cols["q4"] + g_q * cols["q_s"]
    p4d = cols["p4"] + g_p * cols["p_t"]
    if detection is Detection.HOMODYNE:
        cols.update(alice_q=cols["q1"], alice_p=cols["p1"], bob_q=q4d, bob_p=p4d)
    else:
        r = 1.0 / math.sqrt(2.0)
        cols.update(
            alice_q=r * (cols["q1"] + vac[0]),
            alice_p=r * (cols["p1"] - vac[1]),
            bob_q=r * (q4d + vac[2]),
            bob_p=r * (p4d - vac[3]),
        )
    params = _params(p, tau_a, tau_b)
    return SampleBatch("eb", detection, n, seed, params, cols, (g_q, g_p))


def _prepare(rng, size, v, detection, basis):
    """PM source: returns (q, p) of the sent mode and the EB-equivalent (q, p) data of its owner.

    For homodyne only the entry for ``basis`` (0 = q, 1 = p) is meaningful.
    """
    vm = modulation_variance(v, detection)
    c = math.sqrt(v * v - 1.0)
    z = rng.standard_normal((4, size))
    if detection is Detection.HOMODYNE:
        x = math.sqrt(vm) * z[0]
        squeezed = x + z[1] / math.sqrt(v)
        anti = math.sqrt(v) * z[2]
        q = np.where(basis == 0, squeezed, anti)
        p = np.where(basis == 0, anti, squeezed)
        scale = v / c if c > 0 else 1.0
        # TMSV correlations are +c in q and -c in p
        data = np.where(basis == 0, scale * x, -scale * x)
        return q, p, data, data
    xq, xp = math.sqrt(vm) * z[0], math.sqrt(vm) * z[1]
    scale = (v + 1.0) / (math.sqrt(2.0) * c) if c > 0 else 1.0
    return xq + z[2], xp + z[3], scale * xq, -scale * xp


def simulate_pm_scheme(p: ProtocolParams, tau_a, tau_b, n: int, seed: int, gain=None) -> SampleBatch:
    """Prepare-and-measure scheme with classical Gaussian modulation.

    Squeezed states with a random squeezing basis for homodyne, coherent
    states for heterodyne. Encodings are expressed in the units of the
    equivalent EB measurement outcome so the two schemes can be compared
    moment by moment. Bob adds ``k * q_s`` (``k_p * p_t``) to his data;
    the default gain is the analytic regression gain.
    """
    v, eps_a, eps_b, detection = _check_request(p, tau_a, tau_b, n)
    if gain is None:
        gain = regression_gain(v, tau_a, tau_b, eps_a, eps_b)
    k_q, k_p = gain
    names = ("alice_q", "alice_p", "bob_q", "bob_p", "q_s", "p_t", "alice_basis", "bob_basis")
    cols = {k: np.empty(n) for k in names}
    het = detection is Detection.HETERODYNE
    shift = 1.0 / math.sqrt(2.0) if het else 1.0
    for start, size, rng in _streams(seed, n):
        if het:
            basis_a = basis_b = np.zeros(size, dtype=int)
        else:
            basis_a = rng.integers(0, 2, size)
            basis_b = rng.integers(0, 2, size)
        q2, p2, aq, ap = _prepare(rng, size, v, detection, basis_a)
        q3, p3, bq, bp = _prepare(rng, size, v, detection, basis_b)
        q_s, p_t = _channel_and_relay(rng, size, (q2, p2), (q3, p3), tau_a, tau_b, eps_a, eps_b)
        sl = slice(start, start + size)
        cols["alice_q"][sl] = aq
        cols["alice_p"][sl] = ap
        cols["bob_q"][sl] = bq + shift * k_q * q_s
        cols["bob_p"][sl] = bp + shift * k_p * p_t
        cols["q_s"][sl] = q_s
        cols["p_t"][sl] = p_t
        cols["alice_basis"][sl] = basis_a
        cols["bob_basis"][sl] = basis_b
    params = _params(p, tau_a, tau_b)
    return SampleBatch("pm", detection, n, seed, params, cols, (k_q, k_p))


def final_data(batch: SampleBatch) -> dict:
    """Final data sets ``(Alice, Bob, q_s, p_t)`` per measurement basis.

    Homodyne PM batches keep only rounds where both parties chose the same
    basis (sifting). Heterodyne data keeps both quadratures of both parties.
    """
    c = batch.columns
    if batch.detection is Detection.HETERODYNE:
        return {"het": batch.matrix(["alice_q", "alice_p", "bob_q", "bob_p", "q_s", "p_t"])}
    out = {}
    for basis, (a, b) in enumerate((("alice_q", "bob_q"), ("alice_p", "bob_p"))):
        rows = slice(None)
        if batch.scheme == "pm":
            rows = (c["alice_basis"] == basis) & (c["bob_basis"] == basis)
        out["qp"[basis]] = np.column_stack([c[a][rows], c[b][rows], c["q_s"][rows], c["p_t"][rows]])
    return out


@dataclass
class Comparison:
    names: list
    z: np.ndarray
    threshold: float = Z_THRESHOLD

    @property
    def max_abs_z(self) -> float:
        return float(np.max(np.abs(self.z))) if self.z.size else 0.0

    @property
    def passed(self) -> bool:
        return self.max_abs_z < self.threshold


def _moment_samples(x: np.ndarray):
    k = x.shape[1]
    names, cols = [], []
    for i in range(k):
        names.append(f"E[x{i}]")
        cols.append(x[:, i])
    for i in range(k):
        for j in range(i, k):
            names.append(f"E[x{i}x{j}]")
            cols.append(x[:, i] * x[:, j])
    return names, np.column_stack(cols)


def moment_z_scores(x1: np.ndarray, x2: np.ndarray):
    """Two-sample z-scores for all first and second raw moments of two data sets."""
    names, m1 = _moment_samples(x1)
    _, m2 = _moment_samples(x2)
    diff = m1.mean(axis=0) - m2.mean(axis=0)
    se = np.sqrt(m1.var(axis=0, ddof=1) / len(m1) + m2.var(axis=0, ddof=1) / len(m2))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, diff / np.where(se > 0, se, 1.0), np.where(diff == 0, 0.0, np.inf))
    return names, z


def compare_schemes(batch_pm: SampleBatch, batch_eb: SampleBatch) -> Comparison:
    """Compare the final-data moments of two batches; passes iff every ``|z| < 5``."""
    if batch_pm.detection is not batch_eb.detection or batch_pm.params != batch_eb.params:
        raise ValueError("batches were generated with different parameters")
    if batch_pm.n != batch_eb.n:
        raise ValueError("batches have different sizes")
    d1, d2 = final_data(batch_pm), final_data(batch_eb)
    names, zs = [], []
    for basis in d1:
        n, z = moment_z_scores(d1[basis], d2[basis])
        names += [f"{basis}:{x}" for x in n]
        zs.append(z)
    return Comparison(names, np.concatenate(zs))


def covariance_z_scores(samples: np.ndarray, analytic: np.ndarray) -> np.ndarray:
    """Elementwise z-scores of the empirical covariance against an analytic one (Gaussian standard errors)."""
    n = samples.shape[0]
    emp = np.cov(samples, rowvar=False)
    d = np.diag(analytic)
    se = np.sqrt((np.outer(d, d) + analytic**2) / n)
    return (emp - analytic) / se


def residual_cm(batch: SampleBatch) -> np.ndarray:
    """Empirical covariance of (q1, p1, q4, p4) after removing the linear dependence on (q_s, p_t)."""
    y = batch.matrix(["q1", "p1", "q4", "p4"])
    x = batch.matrix(["q_s", "p_t"])
    x = np.column_stack([np.ones(len(x)), x])
    coef, *_ = np.linalg.lstsq(x, y, rcond=None)
    return np.cov(y - x @ coef, rowvar=False)
