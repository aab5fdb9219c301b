"""Outage probability of the phase-quantized channel under Rayleigh fading.

The receiver knows the fading coefficient ``h``; the transmitter does not.
A policy decides which input is sent and hence which rate a realization
supports:

* ``FixedPSK(m, rotation)``: a fixed equiprobable m-PSK.  The channel phase
  rotates it relative to the quantizer sectors, and the supported rate is
  the mutual information of the rotated constellation at SNR ``rho |h|^2``.
* ``GenieCapacity()``: the capacity-achieving rotated PSK for every
  realization, i.e. the closed-form capacity at ``rho |h|^2``.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.stats import norm

from .errors import DomainError, InsufficientDataError, NumericError, UnattainableRateError
from .info import capacity_from_snr, entropy_bits, mutual_information, psk_input
from .montecarlo import DEFAULT_SEED, map_chunks
from .quantizer import TWO_PI, PhaseQuantizer, transition_matrix

log = logging.getLogger(__name__)

GAIN_MIN = 1e-6
# P(|h|^2 > 27.6) ~ 1e-12; draws above this are clamped onto the table edge
GAIN_TAIL = 27.6
TABLE_TOL = 1e-3


@dataclass(frozen=True)
class FixedPSK:
    m: int
    rotation: float = 0.0

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise DomainError(f"PSK order must be an integer >= 1, got {self.m!r}")

    def __str__(self):
        return f"fixed-psk:{self.m}:{self.rotation:.17g}"


@dataclass(frozen=True)
class GenieCapacity:
    def __str__(self):
        return "genie"


def parse_policy(text, bits=None):
    """Parse ``genie``, ``fixed-psk:M`` or ``fixed-psk:M:ROTATION``.

    Without an explicit rotation the constellation starts at ``pi / 2**bits``,
    the sector-0 bisector, which is the AWGN-optimal orientation of
    ``2**bits``-PSK.
    """
    text = text.strip().lower()
    if text == "genie":
        return GenieCapacity()
    parts = text.split(":")
    if parts[0] != "fixed-psk" or len(parts) not in (2, 3):
        raise DomainError(f"unknown policy {text!r}")
    try:
        m = int(parts[1])
        if len(parts) == 3:
            rotation = float(parts[2])
        else:
            rotation = math.pi / 2**bits if bits is not None else 0.0
    except ValueError as exc:
        raise DomainError(f"bad policy {text!r}: {exc}") from None
    return FixedPSK(m, rotation)


@dataclass(frozen=True)
class FadingScenario:
    bits: int
    avg_snr: float
    rate_target: float
    policy: object
    n_samples: int = 10**6
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        PhaseQuantizer(self.bits)
        if not (self.rate_target >= 0):
            raise DomainError("rate_target must be >= 0")
        if not (self.avg_snr >= 0) or not math.isfinite(self.avg_snr):
            raise DomainError("avg_snr must be finite and >= 0")
        if self.n_samples < 1:
            raise DomainError("n_samples must be >= 1")


@dataclass(frozen=True)
class OutageRow:
    snr_db: float
    rate_target: float
    policy: str
    p_out: float
    ci_low: float
    ci_high: float
    n_samples: int
    seed: int
    events: int = 0


@dataclass
class OutageCurve:
    rows: list
    fitted_slope: float = float("nan")
    window_db: tuple = None

    def snr_db(self):
        return np.array([r.snr_db for r in self.rows])

    def p_out(self):
        return np.array([r.p_out for r in self.rows])


@dataclass(frozen=True)
class ExponentFit:
    window_db: tuple
    slope: float
    stderr: float
    points_used: int

    def to_dict(self):
        return {
            "window_db": list(self.window_db),
            "slope": self.slope,
            "stderr": self.stderr,
            "points_used": self.points_used,
        }


def draw_channel(rng, size):
    """Rayleigh fading coefficients: circular complex Gaussian with ``E|h|^2 = 1``."""
    g = rng.standard_normal((2, size))
    return (g[0] + 1j * g[1]) * math.sqrt(0.5)


def instantaneous_rate(q, h, rho, policy):
    """Rate (bits) supported by one fading realization, evaluated by quadrature."""
    if rho < 0:
        raise DomainError("rho must be >= 0")
    gain = rho * abs(h) ** 2
    if gain == 0:
        return 0.0
    if isinstance(policy, GenieCapacity):
        return float(capacity_from_snr(gain, q.bits)[0])
    phase = math.atan2(complex(h).imag, complex(h).real)
    F = psk_input(policy.m, math.sqrt(gain), policy.rotation + phase)
    return mutual_information(q, F).mutual_information


def psk_rates(q, m, gains, offsets, batch=4096):
    """Mutual information of equiprobable m-PSK for arrays of SNRs and rotations."""
    gains = np.asarray(gains, float).ravel()
    offsets = np.asarray(offsets, float).ravel()
    gains, offsets = np.broadcast_arrays(gains, offsets)
    out = np.empty(gains.size)
    k = TWO_PI * np.arange(m) / m
    for s in range(0, gains.size, batch):
        g = gains[s : s + batch]
        t = offsets[s : s + batch]
        rows = transition_matrix(q, np.repeat(g, m), (t[:, None] + k[None, :]).ravel())
        rows = rows.reshape(g.size, m, q.sectors)
        out[s : s + batch] = entropy_bits(rows.mean(axis=1)) - entropy_bits(rows).mean(axis=1)
    return out


class RateTable:
    """Interpolated instantaneous rate as a function of ``(rho |h|^2, angle h)``.

    For the genie policy the rate depends on the gain only and the table is
    one-dimensional in ``log(gain)``.  For a fixed m-PSK the rate is periodic
    in the effective rotation with period ``P = 2 pi / lcm(m, 2**b)`` and
    symmetric about ``P/2``, so it is tabulated against the distance ``d`` to
    the nearest rotation at which a constellation point sits on a sector
    edge.  Near ``d = 0`` the rate varies on a scale ``1/sqrt(2 gain)``; the
    offset axis is stretched per gain row (``d = (P/2) sinh(c u) / sinh(c)``
    with ``c = asinh((P/2) sqrt(2 gain))``) so that scale is resolved at
    every SNR.  Values are interpolated bilinearly in ``(log gain, u)``.
    """

    def __init__(self, q, policy, gain_max, n_gain=256, n_offset=256, tol=TABLE_TOL, max_size=2048, seed=DEFAULT_SEED):
        self.q = q
        self.policy = policy
        self.gain_max = max(float(gain_max), 10 * GAIN_MIN)
        self.log_lo = math.log(GAIN_MIN)
        self.log_hi = math.log(self.gain_max)
        if isinstance(policy, FixedPSK):
            self.period = TWO_PI / math.lcm(policy.m, q.sectors)
        else:
            # one-dimensional and cheap: start fine
            n_gain = max(n_gain, 4096)
        rng = np.random.default_rng(seed)
        while True:
            self._build(n_gain, n_offset)
            self.validation_error = self._validate(rng)
            if self.validation_error < tol:
                break
            if max(n_gain, n_offset) >= max_size:
                log.warning("rate table stopped refining at %d x %d (error %.2e)", n_gain, n_offset, self.validation_error)
                break
            n_gain *= 2
            n_offset *= 2
        self.shape = (n_gain, n_offset)

    def _stretch(self, gain):
        half = 0.5 * self.period
        return np.maximum(np.arcsinh(half * np.sqrt(2.0 * gain)), 1e-3)

    def _offset_from_u(self, u, gain):
        half = 0.5 * self.period
        c = self._stretch(gain)
        return half * np.sinh(c * u) / np.sinh(c)

    def _u_from_offset(self, d, gain):
        half = 0.5 * self.period
        c = self._stretch(gain)
        return np.clip(np.arcsinh(d / half * np.sinh(c)) / c, 0.0, 1.0)

    def _exact(self, gain, d):
        if isinstance(self.policy, GenieCapacity):
            return capacity_from_snr(gain, self.q.bits)
        return psk_rates(self.q, self.policy.m, gain, d)

    def _build(self, n_gain, n_offset):
        self.log_gain = np.linspace(self.log_lo, self.log_hi, n_gain)
        gain = np.exp(self.log_gain)
        if isinstance(self.policy, GenieCapacity):
            self.values = capacity_from_snr(gain, self.q.bits)
            self._interp = None
            return
        self.u = np.linspace(0.0, 1.0, n_offset)
        d = self._offset_from_u(self.u[None, :], gain[:, None])
        g = np.broadcast_to(gain[:, None], d.shape)
        self.values = psk_rates(self.q, self.policy.m, g, d).reshape(n_gain, n_offset)
        self._interp = RegularGridInterpolator((self.log_gain, self.u), self.values)

    def _validate(self, rng, n=256):
        gain = np.exp(rng.uniform(self.log_lo, self.log_hi, n))
        if isinstance(self.policy, GenieCapacity):
            return float(np.max(np.abs(self._lookup(gain, None) - self._exact(gain, None))))
        half = 0.5 * self.period
        d = np.concatenate([rng.uniform(0.0, half, n // 2), self._offset_from_u(rng.uniform(0, 1, n - n // 2), gain[n // 2 :])])
        return float(np.max(np.abs(self._lookup(gain, d) - self._exact(gain, d))))

    def _lookup(self, gain, d):
        gain = np.asarray(gain, float)
        low = gain < GAIN_MIN
        g = np.clip(gain, GAIN_MIN, self.gain_max)
        lg = np.log(g)
        if self._interp is None:
            r = np.interp(lg, self.log_gain, self.values)
        else:
            r = self._interp(np.column_stack([lg, self._u_from_offset(d, g)]))
        # the rate vanishes linearly in the gain below the table
        return np.where(low, r * gain / GAIN_MIN, r)

    def rate(self, gain, phase=None):
        """Interpolated rate for arrays of gains ``rho |h|^2`` and channel phases."""
        gain = np.asarray(gain, float)
        if isinstance(self.policy, GenieCapacity):
            return self._lookup(gain, None)
        phi = np.mod(self.policy.rotation + np.asarray(phase, float), self.period)
        d = np.minimum(phi, self.period - phi)
        return self._lookup(gain, d)


def wilson_interval(k, n, confidence=0.95):
    """Wilson score interval for a binomial proportion."""
    z = norm.ppf(0.5 + 0.5 * confidence)
    p = k / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if k == 0 else max(0.0, center - half)
    hi = 1.0 if k == n else min(1.0, center + half)
    return lo, hi


def build_table(bits, policy, rho_max):
    return RateTable(PhaseQuantizer(bits), policy, rho_max * GAIN_TAIL)


def outage_counts(bits, policy, rho_grid, rate_target, n_samples, seed=DEFAULT_SEED, table=None, workers=1):
    """Outage event counts at each SNR in ``rho_grid`` (linear), sharing the draws."""
    rho_grid = np.asarray(rho_grid, float)
    if rate_target == 0:
        return np.zeros(rho_grid.size, dtype=np.int64)
    if rate_target > bits:
        return np.full(rho_grid.size, int(n_samples), dtype=np.int64)
    if table is None:
        table = build_table(bits, policy, float(rho_grid.max()))

    def chunk(rng, size):
        h = draw_channel(rng, size)
        g2 = np.abs(h) ** 2
        phase = np.angle(h)
        return np.array([np.count_nonzero(table.rate(rho * g2, phase) < rate_target) for rho in rho_grid])

    return np.sum(map_chunks(chunk, n_samples, seed, workers), axis=0)


def _row(snr_db, scenario_like, k, n, seed):
    lo, hi = wilson_interval(int(k), n)
    rate_target, policy = scenario_like
    return OutageRow(float(snr_db), float(rate_target), str(policy), k / n, lo, hi, int(n), int(seed), int(k))


def outage_mc(scenario, table=None, workers=1):
    """Monte Carlo outage probability for one scenario, with a Wilson 95% interval."""
    s = scenario
    k = outage_counts(s.bits, s.policy, [s.avg_snr], s.rate_target, s.n_samples, s.seed, table, workers)[0]
    if 0 < k < 10 or (k == 0 and s.rate_target > 0):
        log.warning("only %d outage events in %d draws; estimate is unreliable", k, s.n_samples)
    snr_db = 10 * math.log10(s.avg_snr) if s.avg_snr > 0 else -math.inf
    return _row(snr_db, (s.rate_target, s.policy), k, s.n_samples, s.seed)


def outage_curve(bits, policy, rate_target, snr_db_grid, n_samples=10**6, seed=DEFAULT_SEED, workers=1, table=None):
    """Outage probability across an SNR grid (dB); every point reuses the same draws."""
    snr_db = np.sort(np.asarray(snr_db_grid, float))
    rho = 10 ** (snr_db / 10)
    counts = outage_counts(bits, policy, rho, rate_target, n_samples, seed, table, workers)
    rows = [_row(s, (rate_target, policy), k, n_samples, seed) for s, k in zip(snr_db, counts)]
    for r in rows:
        if r.events < 10 and rate_target > 0:
            log.warning("%s at %.1f dB: only %d outage events; use more samples", r.policy, r.snr_db, r.events)
    return OutageCurve(rows)


def rate_threshold_gain(bits, rate, rtol=1e-12):
    """SNR at which the closed-form capacity equals ``rate`` (inverse of capacity)."""
    if rate < 0:
        raise DomainError("rate must be >= 0")
    if rate >= bits:
        raise UnattainableRateError(f"unattainable rate: {rate} >= {bits} bits")
    if rate == 0:
        return 0.0

    def cap(g):
        return float(capacity_from_snr(g, bits)[0])

    lo, hi = 0.0, 1.0
    while cap(hi) < rate:
        lo, hi = hi, 2.0 * hi
        if hi > 1e15:
            raise NumericError(f"capacity does not reach {rate} bits within floating-point range")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if cap(mid) < rate:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def outage_semianalytic(bits, avg_snr, rate):
    """Exact genie-policy outage: ``P(rho |h|^2 < gamma_th) = 1 - exp(-gamma_th / rho)``."""
    g = rate_threshold_gain(bits, rate)
    if avg_snr <= 0:
        return 1.0 if g > 0 else 0.0
    return float(-np.expm1(-g / avg_snr))


def outage_exponent_fit(curve, window_db):
    """Least-squares slope of ``log10 P_out`` against ``log10 rho`` inside ``window_db``."""
    lo, hi = min(window_db), max(window_db)
    rows = [r for r in curve.rows if lo - 1e-9 <= r.snr_db <= hi + 1e-9]
    if any(r.p_out == 0 for r in rows):
        raise InsufficientDataError(
            "zero outage events inside the fit window; increase n_samples (or use importance sampling)"
        )
    if len(rows) < 3:
        raise InsufficientDataError(f"need >= 3 points with p_out > 0 in window, got {len(rows)}")
    x = np.array([r.snr_db / 10.0 for r in rows])
    y = np.log10([r.p_out for r in rows])
    xm = x - x.mean()
    sxx = float(xm @ xm)
    slope = float(xm @ (y - y.mean()) / sxx)
    resid = y - y.mean() - slope * xm
    stderr = math.sqrt(float(resid @ resid) / (len(rows) - 2) / sxx) if len(rows) > 2 else float("nan")
    curve.fitted_slope = slope
    curve.window_db = (lo, hi)
    return ExponentFit((lo, hi), slope, stderr, len(rows))


@dataclass
class PolicyComparison:
    rows: list
    crossover: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)


def policy_compare(bits, snr_db_grid, rate_target, policies, n_samples=10**6, seed=DEFAULT_SEED, workers=1):
    """Outage of several policies on a common SNR grid and common draws.

    ``crossover`` maps each policy other than the reference fixed ``2**b``-PSK
    (and the genie) to the first SNR (dB) at which its outage confidence
    interval lies entirely below the reference's, or ``None``.
    """
    curves = {}
    for pol in policies:
        curves[str(pol)] = outage_curve(bits, pol, rate_target, snr_db_grid, n_samples, seed, workers)
    rows = [r for c in curves.values() for r in c.rows]
    rows.sort(key=lambda r: (r.snr_db, r.policy))
    ref = next((str(p) for p in policies if isinstance(p, FixedPSK) and p.m == 2**bits), None)
    crossover = {}
    if ref is not None:
        for pol in policies:
            name = str(pol)
            if name == ref or isinstance(pol, GenieCapacity):
                continue
            crossover[name] = None
            for a, b in zip(curves[name].rows, curves[ref].rows):
                if a.ci_high < b.ci_low:
                    crossover[name] = a.snr_db
                    break
    return PolicyComparison(rows, crossover, curves)
