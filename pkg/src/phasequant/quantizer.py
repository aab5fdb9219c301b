"""Phase quantizer geometry and channel transition probabilities.

The normalized channel is ``Y = Q_b(u + Z)`` where ``Z`` is circularly
symmetric complex Gaussian with total variance 1 (1/2 per component) and
``Q_b`` returns the index of the angular sector containing its argument.
With this normalization the SNR seen by an input ``u = sqrt(alpha) e^{j theta}``
is exactly ``alpha``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr

from . import quadrature
from .errors import DomainError
from .montecarlo import DEFAULT_SEED, map_chunks

TWO_PI = 2.0 * math.pi


def reduce_phase(theta):
    """Map angles to [0, 2*pi)."""
    r = np.mod(theta, TWO_PI)
    # np.mod can round tiny negatives up to exactly 2*pi
    r = np.where(r >= TWO_PI, 0.0, r)
    return float(r) if np.ndim(r) == 0 else r


@dataclass(frozen=True)
class PhaseQuantizer:
    """b-bit phase quantizer with ``2**b`` equal half-open angular sectors.

    Sector ``y`` is ``[2*pi*y/2**b, 2*pi*(y+1)/2**b)``.
    """

    bits: int

    def __post_init__(self):
        if int(self.bits) != self.bits or self.bits < 1:
            raise DomainError(f"bits must be an integer >= 1, got {self.bits!r}")

    @property
    def sectors(self):
        return 2**self.bits

    @property
    def width(self):
        return TWO_PI / self.sectors

    def edges(self):
        return self.width * np.arange(self.sectors + 1)

    def bisector(self, y):
        return self.width * (y + 0.5)

    def bisectors(self):
        return self.width * (np.arange(self.sectors) + 0.5)

    def reflect_bisector0(self, y):
        """Image of sector ``y`` under reflection about the sector-0 bisector."""
        return (-y) % self.sectors

    def reflect_zero(self, y):
        """Sector hit after reflecting about angle 0 (complex conjugation)."""
        return self.sectors - 1 - y

    def sector_of(self, z):
        return sector_of(z, self)


@dataclass(frozen=True)
class ComplexPoint:
    """Input symbol ``amplitude * exp(j*phase)``; ``phase`` is stored in [0, 2*pi)."""

    amplitude: float
    phase: float = 0.0

    def __post_init__(self):
        if not (self.amplitude >= 0) or not math.isfinite(self.amplitude):
            raise DomainError(f"amplitude must be finite and >= 0, got {self.amplitude!r}")
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "phase", reduce_phase(float(self.phase)))

    @classmethod
    def from_complex(cls, z):
        return cls(abs(z), math.atan2(z.imag, z.real))

    @classmethod
    def from_alpha(cls, alpha, theta=0.0):
        if alpha < 0:
            raise DomainError(f"alpha must be >= 0, got {alpha!r}")
        return cls(math.sqrt(alpha), theta)

    @property
    def alpha(self):
        return self.amplitude**2

    def __complex__(self):
        return complex(self.amplitude * math.cos(self.phase), self.amplitude * math.sin(self.phase))


@dataclass(frozen=True)
class ChannelParams:
    """Normalized SNR ``snr = |g_LoS|^2 P / sigma^2`` plus the physical scalings.

    ``los_gain`` and ``noise_scale`` are only needed to map a normalized
    input back to the physical one (see :func:`phasequant.info.denormalize`).
    """

    snr: float
    bits: int
    los_gain: complex = 1.0 + 0.0j
    noise_scale: float = 1.0

    def __post_init__(self):
        if not (self.snr >= 0) or not math.isfinite(self.snr):
            raise DomainError(f"snr must be finite and >= 0, got {self.snr!r}")
        if not (self.noise_scale > 0):
            raise DomainError(f"noise_scale must be > 0, got {self.noise_scale!r}")
        PhaseQuantizer(self.bits)

    @property
    def quantizer(self):
        return PhaseQuantizer(self.bits)

    @property
    def power(self):
        """Physical average power P implied by the normalized SNR."""
        g2 = abs(self.los_gain) ** 2
        if g2 == 0:
            raise DomainError("los_gain must be nonzero")
        return self.snr * self.noise_scale**2 / g2


def sector_of(z, q):
    """Index of the sector containing the nonzero complex number ``z``."""
    z = complex(z)
    if z == 0:
        raise DomainError("undefined phase: z = 0")
    arg = reduce_phase(math.atan2(z.imag, z.real))
    return min(int(math.floor(arg * q.sectors / TWO_PI)), q.sectors - 1)


def sectors_of(z, bits):
    """Vectorized :func:`sector_of`; ``z == 0`` falls in sector 0 (probability zero event)."""
    m = 2**bits
    arg = np.mod(np.angle(z), TWO_PI)
    y = np.floor(arg * (m / TWO_PI)).astype(np.int64)
    return np.minimum(y, m - 1)


def _phase_pdf(alpha, phi):
    alpha = np.asarray(alpha, float)
    c = np.cos(phi)
    s = np.sin(phi)
    tail = np.exp(-alpha * s * s + log_ndtr(np.sqrt(2.0 * alpha) * c))
    return np.exp(-alpha) / TWO_PI + np.sqrt(alpha / math.pi) * c * tail


def angular_phase_pdf(alpha, phi):
    """Density of ``arg(sqrt(alpha) + Z)`` at ``phi`` (radians, relative to the signal phase).

    Works elementwise on arrays.  The normal CDF factor is evaluated in log
    form so large ``alpha`` neither overflows nor loses the tail.
    """
    if np.any(np.asarray(alpha) < 0):
        raise DomainError("alpha must be >= 0")
    out = _phase_pdf(alpha, np.asarray(phi, float))
    return float(out) if np.ndim(out) == 0 else out


def _sector_intervals(q, alpha, theta):
    """Integration intervals for every (input, sector) pair, split at the density peak.

    Returns flat arrays (lo, hi, owner) where ``owner`` indexes the flattened
    ``(n_inputs, n_sectors)`` result.
    """
    m = q.sectors
    n = alpha.size
    edges = q.edges()
    # shift to coordinates relative to the signal phase, starting in [-pi, pi)
    lo = edges[None, :-1] - theta[:, None]
    lo = np.mod(lo + math.pi, TWO_PI) - math.pi
    hi = lo + q.width
    lo = lo.ravel()
    hi = hi.ravel()
    a_rep = np.repeat(alpha, m)

    # breakpoints at the peak (0 or 2*pi) and a few widths either side of it
    w = np.where(a_rep > 1.0, 1.0 / np.sqrt(2.0 * np.maximum(a_rep, 1.0)), np.inf)
    offsets = np.array([-8.0, -3.0, 0.0, 3.0, 8.0])
    cand = np.concatenate(
        [peak + offsets[None, :] * np.where(np.isfinite(w), w, 0.0)[:, None] for peak in (0.0, TWO_PI)],
        axis=1,
    )
    cand = np.where(np.isfinite(w)[:, None], cand, 0.0)
    cand = np.clip(cand, lo[:, None], hi[:, None])
    pts = np.sort(np.concatenate([lo[:, None], cand, hi[:, None]], axis=1), axis=1)
    sub_lo = pts[:, :-1].ravel()
    sub_hi = pts[:, 1:].ravel()
    owner = np.repeat(np.arange(n * m), pts.shape[1] - 1)
    keep = sub_hi > sub_lo
    return sub_lo[keep], sub_hi[keep], owner[keep], n * m


def _integrate_sectors(q, alpha, theta, rtol, atol):
    lo, hi, owner, size = _sector_intervals(q, alpha, theta)
    a_owner = np.repeat(alpha, q.sectors)[owner]

    def f(x, idx):
        return _phase_pdf(a_owner[idx][:, None], x)

    vals, _ = quadrature.integrate(f, lo, hi, rtol=rtol, atol=atol)
    out = np.zeros(size)
    np.add.at(out, owner, vals)
    return np.clip(out, 0.0, 1.0).reshape(alpha.size, q.sectors)


def transition_matrix(q, alpha, theta, use_symmetry=True, rtol=1e-10, atol=1e-15):
    """Rows ``W_y(alpha_i, theta_i)`` for arrays of inputs, shape ``(n, 2**b)``.

    With ``use_symmetry`` each phase is first reduced into ``[0, 2*pi/2**b)``
    and the row for the original phase is the reduced row cyclically
    shifted, which is exact for this quantizer; repeated (alpha, reduced
    phase) pairs are integrated only once.  ``use_symmetry=False``
    integrates every row directly, which is what the symmetry checks use.
    """
    alpha = np.atleast_1d(np.asarray(alpha, float)).ravel()
    theta = np.atleast_1d(np.asarray(theta, float)).ravel()
    alpha, theta = np.broadcast_arrays(alpha, theta)
    if np.any(alpha < 0) or not np.all(np.isfinite(alpha)):
        raise DomainError("alpha must be finite and >= 0")
    if not use_symmetry:
        return _integrate_sectors(q, alpha.astype(float), theta.astype(float), rtol, atol)
    theta = np.atleast_1d(reduce_phase(theta))
    shift = np.minimum(np.floor(theta / q.width).astype(np.int64), q.sectors - 1)
    base = theta - shift * q.width
    key = np.stack([alpha, np.round(base, 13)], axis=1)
    _, first, inverse = np.unique(key, axis=0, return_index=True, return_inverse=True)
    rows = _integrate_sectors(q, alpha[first], base[first], rtol, atol)[inverse.ravel()]
    # W_y(theta + k*width) = W_{y-k}(theta)
    cols = (np.arange(q.sectors)[None, :] - shift[:, None]) % q.sectors
    return np.take_along_axis(rows, cols, axis=1)


def transition_prob(q, alpha, theta, y):
    """``W_y(alpha, theta)``: probability the quantizer outputs ``y``."""
    if not 0 <= y < q.sectors:
        raise DomainError(f"sector index {y} out of range for {q.bits} bits")
    if alpha < 0:
        raise DomainError("alpha must be >= 0")
    return float(_integrate_sectors(q, np.array([float(alpha)]), np.array([float(theta)]), 1e-10, 1e-15)[0, y])


def transition_row(q, point):
    """Output distribution for a single :class:`ComplexPoint` input."""
    return transition_matrix(q, point.alpha, point.phase)[0]


def mc_transition_oracle(q, point, n_samples, seed=DEFAULT_SEED, workers=1):
    """Empirical sector frequencies of ``point + Z`` over ``n_samples`` draws."""
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    u = complex(point)
    m = q.sectors

    def chunk(rng, size):
        g = rng.standard_normal((2, size))
        z = u + (g[0] + 1j * g[1]) * math.sqrt(0.5)
        return np.bincount(sectors_of(z, q.bits), minlength=m)

    counts = np.sum(map_chunks(chunk, n_samples, seed, workers), axis=0)
    return counts / float(n_samples)
