"""Numerical certificate suite: symmetry, monotonicity, optimality and oracle checks.

Every check returns a :class:`Check` carrying the measured quantity and the
threshold it was compared against, so a report shows margins rather than
bare pass/fail flags.
"""

import math
from dataclasses import dataclass

import numpy as np

from .info import (
    InputDistribution,
    entropy_bits,
    capacity,
    cond_entropy,
    kkt_gap,
    mutual_information,
    psk_input,
    symmetrize,
)
from .oracle import InputGrid, best_rotation, blahut_arimoto, rotation_period
from .quantizer import TWO_PI, ChannelParams, PhaseQuantizer, transition_matrix

CHECK_ALPHAS = (0.0, 0.5, 1.0, 4.0, 25.0)
MONO_GRID = np.arange(0.0, 25.0 + 1e-9, 0.25)
CONVEX_STEP = 1e-2
QUAD_RTOL = 1e-10


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    measured: float
    threshold: float
    detail: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        text = f"{status} {self.name}: measured={self.measured:.3e} threshold={self.threshold:.1e}"
        return text + (f" ({self.detail})" if self.detail else "")


def _direct(q, alpha, theta):
    return transition_matrix(q, alpha, theta, use_symmetry=False)


def symmetry_deviations(q, alphas=CHECK_ALPHAS, n_theta=32):
    """Largest violation of each of the three transition-probability identities."""
    m = q.sectors
    y = np.arange(m)
    a = np.repeat(np.asarray(alphas, float), n_theta)
    th = np.tile(TWO_PI * (np.arange(n_theta) + 0.37) / n_theta, len(alphas))
    base = _direct(q, a, th)
    shift_dev = 0.0
    for k in range(1, m + 1):
        shifted = _direct(q, a, th + TWO_PI * k / m)
        shift_dev = max(shift_dev, float(np.max(np.abs(shifted - base[:, (y - k) % m]))))
    half = m // 2
    al = np.asarray(alphas, float)
    at_bis = _direct(q, al, np.full(al.size, math.pi / m))
    at_zero = _direct(q, al, np.zeros(al.size))
    refl_bis = float(np.max(np.abs(at_bis[:, (half - y) % m] - at_bis[:, (half + y) % m])))
    refl_zero = float(np.max(np.abs(at_zero[:, (half - y) % m] - at_zero[:, (half - 1 + y) % m])))
    return shift_dev, refl_bis, refl_zero


def row_sum_deviation(q, alphas=CHECK_ALPHAS, n_theta=32):
    a = np.repeat(np.asarray(alphas, float), n_theta)
    th = np.tile(TWO_PI * np.arange(n_theta) / n_theta, len(alphas))
    return float(np.max(np.abs(_direct(q, a, th).sum(axis=1) - 1.0)))


def monotone_thetas(bits):
    return (0.0, math.pi / 2 ** (bits + 1), math.pi / 2**bits)


def entropy_steps(q, theta, grid=MONO_GRID, rtol=QUAD_RTOL, atol=1e-15):
    """Entropies on ``grid`` and their successive decrements ``H(a_k) - H(a_{k+1})``."""
    th = np.full(grid.size, theta)
    h = entropy_bits(transition_matrix(q, grid, th, use_symmetry=False, rtol=rtol, atol=atol))
    return h, h[:-1] - h[1:]


def monotonicity_margin(q, theta, grid=MONO_GRID):
    """Smallest decrement of ``H(Y|U)`` along ``grid``, net of numerical noise.

    The noise of each entropy value is estimated empirically as its change
    when the quadrature tolerance is tightened a thousandfold, plus a few
    ulps of rounding.  Returns ``(margin, noise, constant, min_decrement)``
    where ``margin`` is the smallest decrement minus the noise of its two
    endpoints and ``constant`` flags a series whose entropy does not move at
    all (input on a sector boundary with b = 1).
    """
    h, d = entropy_steps(q, theta, grid)
    h_fine, _ = entropy_steps(q, theta, grid, rtol=QUAD_RTOL * 1e-3, atol=1e-18)
    noise = np.abs(h - h_fine) + 8 * np.finfo(float).eps * np.maximum(h, 1.0)
    step_noise = noise[:-1] + noise[1:]
    constant = bool(np.ptp(h) <= 1e-12)
    margin = float(np.min(d - step_noise))
    return margin, float(np.max(step_noise)), constant, float(np.min(d))


def convexity_min_second_difference(q, theta, grid=MONO_GRID, step=CONVEX_STEP):
    a = grid[grid >= step]
    th = np.full(a.size, theta)
    h0 = cond_entropy(q, a, th, use_symmetry=False)
    hp = cond_entropy(q, a + step, th, use_symmetry=False)
    hm = cond_entropy(q, a - step, th, use_symmetry=False)
    return float(np.min(hp - 2 * h0 + hm))


def asymmetric_input(p_budget):
    """A lopsided two-atom input used to exercise symmetrization."""
    a1 = math.sqrt(0.5 * p_budget)
    a2 = math.sqrt(1.3 * p_budget)
    return InputDistribution.from_arrays([a1, a2], [0.1, 2.0], [0.4, 0.6])


def mass_near_optimum(result, grid, p_budget, bits):
    """Probability mass within one grid step of radius sqrt(P') and of a bisector."""
    r_ok = np.abs(result.amplitudes - math.sqrt(p_budget)) <= grid.radius_step * (1 + 1e-9)
    width = TWO_PI / 2**bits
    dist = np.abs(np.mod(result.phases, width) - width / 2)
    t_ok = dist <= grid.phase_step * (1 + 1e-9)
    return float(result.weights[r_ok & t_ok].sum())


def run_checks(bits=3, snr=10.0, inject_wrong_bisector=False, outage_probe=True, n_samples=10**6, seed=0x5EED):
    """Run the certificate suite at quantizer resolution ``bits`` and normalized SNR ``snr``."""
    q = PhaseQuantizer(bits)
    params = ChannelParams(snr, bits)
    checks = []

    checks.append(Check("row_stochastic", (d := row_sum_deviation(q)) <= 1e-9, d, 1e-9))
    shift, rb, rz = symmetry_deviations(q)
    checks.append(Check("rotation_shift_identity", shift <= 1e-9, shift, 1e-9))
    checks.append(Check("bisector_reflection_identity", rb <= 1e-9, rb, 1e-9))
    checks.append(Check("zero_reflection_identity", rz <= 1e-9, rz, 1e-9))

    for th in monotone_thetas(bits):
        margin, noise, constant, min_dec = monotonicity_margin(q, th)
        if constant:
            checks.append(Check(f"entropy_decreasing[theta={th:.4f}]", min_dec >= -1e-12, min_dec, -1e-12, "entropy constant in alpha"))
        else:
            checks.append(Check(f"entropy_decreasing[theta={th:.4f}]", margin > 0, min_dec, noise, "strict decrease"))
        sd = convexity_min_second_difference(q, th)
        checks.append(Check(f"entropy_convex[theta={th:.4f}]", sd >= -1e-6, sd, -1e-6))

    F = asymmetric_input(snr)
    before = mutual_information(q, F)
    after = mutual_information(q, symmetrize(q, F))
    gain = after.mutual_information - before.mutual_information
    checks.append(Check("symmetrization_gain", gain >= -1e-9, gain, -1e-9))
    checks.append(Check("symmetrized_output_entropy", abs(after.output_entropy - bits) <= 1e-9, abs(after.output_entropy - bits), 1e-9))

    amps2 = snr * np.arange(1, 65) / 64
    rates = [mutual_information(q, psk_input(2**bits, math.sqrt(a), math.pi / 2**bits)).mutual_information for a in amps2]
    best = int(np.argmax(rates))
    checks.append(Check("full_power_optimal", best == 63, float(amps2[best] / snr), 1.0, "argmax amplitude^2 / P'"))

    c = capacity(params)
    psk_mi = mutual_information(q, psk_input(2**bits, math.sqrt(snr), math.pi / 2**bits)).mutual_information
    checks.append(Check("bisector_psk_achieves_capacity", abs(c - psk_mi) <= 1e-9, abs(c - psk_mi), 1e-9))

    thetas = TWO_PI * np.arange(1024) / 1024
    gaps = kkt_gap(params, thetas, use_symmetry=False)
    checks.append(Check("kkt_nonnegative", gaps.min() >= -1e-8, float(gaps.min()), -1e-8))
    support = 0.0 if inject_wrong_bisector else math.pi / 2**bits
    eq = float(np.max(np.abs(kkt_gap(params, support + TWO_PI * np.arange(2**bits) / 2**bits))))
    checks.append(Check("kkt_equality_on_support", eq <= 1e-8, eq, 1e-8, f"support phase {support:.6f}"))

    theta_star, rot_rate = best_rotation(q, 2**bits, snr)
    period = rotation_period(2**bits, bits)
    dev = abs(np.mod(theta_star - math.pi / 2**bits + period / 2, period) - period / 2)
    checks.append(Check("best_rotation_at_bisector", dev <= 1e-6, dev, 1e-6))

    grid = InputGrid.polar(snr, bits)
    res = blahut_arimoto(q, grid, snr)
    diff = abs(res.rate - c)
    checks.append(Check("oracle_agreement", diff <= 1e-3, diff, 1e-3, f"converged={res.converged}"))
    mass = mass_near_optimum(res, grid, snr, bits)
    checks.append(Check("oracle_mass_near_bisector_psk", mass >= 0.99, mass, 0.99))
    D = res.distribution()
    d_sym = mutual_information(q, symmetrize(q, D)).mutual_information - mutual_information(q, D).mutual_information
    checks.append(Check("oracle_symmetrization_upward", d_sym >= -1e-9, d_sym, -1e-9))

    if outage_probe:
        checks.append(threshold_effect_probe(n_samples=n_samples, seed=seed))
    return checks


def threshold_effect_probe(bits=2, rates=(0.5, 1.9), window_db=(20.0, 40.0), n_samples=10**6, seed=0x5EED):
    """Compare outage exponents of fixed 2**b-PSK at a low and a high target rate."""
    from .outage import FixedPSK, outage_curve, outage_exponent_fit

    policy = FixedPSK(2**bits, math.pi / 2**bits)
    grid = np.arange(window_db[0], window_db[1] + 1e-9, 5.0)
    fits = []
    for r in rates:
        curve = outage_curve(bits, policy, r, grid, n_samples, seed)
        fits.append(outage_exponent_fit(curve, window_db))
    diff = abs(fits[0].slope - fits[1].slope)
    se = math.hypot(fits[0].stderr, fits[1].stderr)
    detail = ", ".join(f"R={r}: slope={f.slope:.3f}+-{f.stderr:.3f}" for r, f in zip(rates, fits))
    return Check("threshold_effect_exponent_shift", diff > 3 * se, diff, 3 * se, detail)
