"""Entropies, mutual information and the closed-form capacity.

All information quantities are in bits.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .quantizer import TWO_PI, ComplexPoint, PhaseQuantizer, reduce_phase, transition_matrix

PROB_TOL = 1e-12
MERGE_TOL = 1e-12
# entries below this are treated as exact zeros in entropy sums
TINY = 1e-300


def entropy_bits(p, axis=-1):
    """Shannon entropy in bits along ``axis`` with ``0 log 0 = 0``."""
    p = np.asarray(p, float)
    safe = np.where(p > TINY, p, 1.0)
    return -np.sum(np.where(p > TINY, p * np.log2(safe), 0.0), axis=axis)


def binary_entropy(p):
    return float(entropy_bits([p, 1.0 - p]))


@dataclass(frozen=True)
class MassPoint:
    point: ComplexPoint
    prob: float

    def __post_init__(self):
        if not 0.0 <= self.prob <= 1.0:
            raise DomainError(f"probability must lie in [0, 1], got {self.prob!r}")


def _merge(amplitudes, phases, probs):
    amplitudes = np.asarray(amplitudes, float)
    phases = np.where(amplitudes == 0.0, 0.0, np.asarray(phases, float))
    probs = np.asarray(probs, float)
    reps_a = np.empty(amplitudes.size)
    reps_t = np.empty(amplitudes.size)
    out_p = np.zeros(amplitudes.size)
    n = 0
    for a, t, p in zip(amplitudes, phases, probs):
        da = np.abs(reps_a[:n] - a) <= MERGE_TOL * np.maximum(np.maximum(reps_a[:n], a), 1.0)
        dt = np.abs(reps_t[:n] - t)
        hit = np.flatnonzero(da & (np.minimum(dt, TWO_PI - dt) <= MERGE_TOL))
        if hit.size:
            out_p[hit[0]] += p
        else:
            reps_a[n], reps_t[n], out_p[n] = a, t, p
            n += 1
    order = np.lexsort((reps_t[:n], reps_a[:n]))
    return reps_a[:n][order], reps_t[:n][order], out_p[:n][order]


class InputDistribution:
    """Finite discrete input law on the complex plane.

    Atoms that coincide (within 1e-12) are merged on construction, and all
    atoms at the origin collapse into one.  Internally the law is kept as
    three aligned arrays: ``amplitudes``, ``phases`` and ``probs``.
    """

    def __init__(self, atoms):
        atoms = list(atoms)
        if not atoms:
            raise DomainError("an input distribution needs at least one atom")
        self._set(
            [m.point.amplitude for m in atoms],
            [m.point.phase for m in atoms],
            [m.prob for m in atoms],
        )

    @classmethod
    def from_arrays(cls, amplitudes, phases, probs):
        amplitudes, phases, probs = np.broadcast_arrays(
            np.asarray(amplitudes, float), np.asarray(phases, float), np.asarray(probs, float)
        )
        if amplitudes.size == 0:
            raise DomainError("an input distribution needs at least one atom")
        if np.any(amplitudes < 0) or not np.all(np.isfinite(amplitudes)):
            raise DomainError("amplitudes must be finite and >= 0")
        if np.any(probs < 0) or np.any(probs > 1):
            raise DomainError("probabilities must lie in [0, 1]")
        obj = cls.__new__(cls)
        obj._set(amplitudes.ravel(), reduce_phase(phases.ravel()), probs.ravel())
        return obj

    def _set(self, amplitudes, phases, probs):
        total = float(np.sum(probs))
        if abs(total - 1.0) > PROB_TOL:
            raise DomainError(f"probabilities sum to {total!r}, not 1")
        self.amplitudes, self.phases, self.probs = _merge(amplitudes, np.atleast_1d(phases), probs)

    @property
    def atoms(self):
        return [
            MassPoint(ComplexPoint(a, t), float(p))
            for a, t, p in zip(self.amplitudes, self.phases, self.probs)
        ]

    @property
    def alphas(self):
        return self.amplitudes**2

    @property
    def power(self):
        return float(np.dot(self.probs, self.alphas))

    def __len__(self):
        return self.amplitudes.size

    def __repr__(self):
        return f"InputDistribution(n_atoms={len(self)}, power={self.power:.6g})"

    def same_atoms(self, other, tol=1e-9):
        """True when both laws have the same atoms and probabilities within ``tol``."""
        if len(self) != len(other):
            return False
        return all(
            np.allclose(x, y, atol=tol, rtol=0)
            for x, y in (
                (self.amplitudes, other.amplitudes),
                (self.phases, other.phases),
                (self.probs, other.probs),
            )
        )


@dataclass(frozen=True)
class RateReport:
    mutual_information: float
    output_entropy: float
    conditional_entropy: float


def cond_entropy_point(q, point):
    """``H(Y | U = point)`` in bits."""
    return float(entropy_bits(transition_matrix(q, point.alpha, point.phase)[0]))


def cond_entropy(q, alpha, theta, use_symmetry=True):
    """Vectorized ``H(Y | U = sqrt(alpha) e^{j theta})``."""
    return entropy_bits(transition_matrix(q, alpha, theta, use_symmetry=use_symmetry))


def mutual_information(q, F):
    """Mutual information between the input law ``F`` and the quantizer output."""
    rows = transition_matrix(q, F.alphas, F.phases)
    p_y = F.probs @ rows
    h_y = float(entropy_bits(p_y))
    h_y_u = float(F.probs @ entropy_bits(rows))
    return RateReport(h_y - h_y_u, h_y, h_y_u)


def capacity_from_snr(snr, bits):
    """Closed-form capacity at normalized SNR ``snr`` (linear) for ``bits``-bit quantization.

    Accepts an array of SNRs.
    """
    q = PhaseQuantizer(bits)
    snr = np.atleast_1d(np.asarray(snr, float))
    if np.any(snr < 0):
        raise DomainError("snr must be >= 0")
    rows = transition_matrix(q, snr, np.full(snr.shape, math.pi / q.sectors))
    c = np.maximum(bits - entropy_bits(rows), 0.0)
    return c


def capacity(params):
    """Capacity in bits of the phase-quantized AWGN channel described by ``params``.

    Evaluates ``b + sum_y W_y log2 W_y`` at the sector-0 bisector with
    full power ``P'``.
    """
    return float(capacity_from_snr(params.snr, params.bits)[0])


def psk_input(m, amplitude, rotation=0.0):
    """Equiprobable ``m``-PSK with phases ``rotation + 2*pi*k/m``."""
    if int(m) != m or m < 1:
        raise DomainError(f"m must be an integer >= 1, got {m!r}")
    if amplitude < 0:
        raise DomainError("amplitude must be >= 0")
    m = int(m)
    k = np.arange(m)
    return InputDistribution.from_arrays(np.full(m, float(amplitude)), rotation + TWO_PI * k / m, np.full(m, 1.0 / m))


def symmetrize(q, F):
    """Average ``F`` over the ``2**b`` rotations that permute the quantizer sectors."""
    m = q.sectors
    shifts = q.width * np.arange(m)
    amps = np.repeat(F.amplitudes, m)
    phases = (F.phases[:, None] + shifts[None, :]).ravel()
    probs = np.repeat(F.probs / m, m)
    return InputDistribution.from_arrays(amps, phases, probs)


def denormalize(F, params):
    """Map a normalized input ``U`` to the physical input ``X = sigma U / g_LoS``."""
    g = complex(params.los_gain)
    if g == 0:
        raise DomainError("los_gain must be nonzero to denormalize")
    scale = params.noise_scale / abs(g)
    return InputDistribution.from_arrays(F.amplitudes * scale, F.phases - math.atan2(g.imag, g.real), F.probs)


def kkt_gap(params, theta, use_symmetry=True):
    """Left-hand side of the capacity optimality condition at input phase ``theta``.

    ``C - b - sum_y W_y(P', theta) log2 W_y(P', theta)``; nonnegative for
    every ``theta`` and zero on the support of the optimal input.  ``theta``
    may be an array.
    """
    q = params.quantizer
    c = capacity(params)
    theta = np.asarray(theta, float)
    h = cond_entropy(q, np.full(theta.size, params.snr), theta.ravel(), use_symmetry=use_symmetry)
    gap = c - params.bits + h
    return float(gap[0]) if theta.ndim == 0 else gap.reshape(theta.shape)
