"""Independent capacity checks: power-constrained Blahut-Arimoto and PSK rotation search."""

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NumericError
from .info import TINY, InputDistribution, capacity_from_snr, mutual_information, psk_input
from .montecarlo import ordered_map
from .quantizer import TWO_PI, angular_phase_pdf, transition_matrix

log = logging.getLogger(__name__)

LN2 = math.log(2.0)
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class InputGrid:
    """Polar grid of candidate input points.

    Every positive radius is paired with every phase; the origin, when
    present, is a single point.
    """

    radii: tuple
    phases: tuple
    includes_origin: bool = False

    def __post_init__(self):
        radii = tuple(sorted(float(r) for r in self.radii if r > 0))
        phases = tuple(sorted(float(np.mod(t, TWO_PI)) for t in self.phases))
        if not radii:
            raise DomainError("grid needs at least one positive radius")
        if not phases:
            raise DomainError("grid needs at least one phase")
        if len(set(radii)) != len(radii) or len(set(phases)) != len(phases):
            raise DomainError("grid points must be distinct")
        origin = self.includes_origin or any(r == 0 for r in self.radii)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "includes_origin", bool(origin))

    @classmethod
    def polar(cls, p_budget, bits, n_phases=24, n_radii=8, max_radius_factor=1.75):
        """Default oracle grid: radii ``k * step`` for ``k = 0..n_radii-1`` up to
        ``max_radius_factor * sqrt(p_budget)`` and ``n_phases`` uniform phases.

        The phase grid is offset by ``(pi / 2**b) mod (2*pi / n_phases)`` so that
        it is invariant under the quantizer's rotations and contains the
        sector bisectors whenever ``n_phases`` is a multiple of ``2**bits``.
        """
        step = max_radius_factor * math.sqrt(p_budget) / (n_radii - 1)
        radii = step * np.arange(n_radii)
        dphi = TWO_PI / n_phases
        offset = math.fmod(math.pi / 2**bits, dphi)
        return cls(tuple(radii), tuple(offset + dphi * np.arange(n_phases)), includes_origin=True)

    @property
    def radius_step(self):
        r = (0.0,) + self.radii if self.includes_origin else self.radii
        return float(np.min(np.diff(r))) if len(r) > 1 else float("inf")

    @property
    def phase_step(self):
        if len(self.phases) == 1:
            return TWO_PI
        t = np.array(self.phases)
        return float(np.min(np.diff(np.append(t, t[0] + TWO_PI))))

    def points(self):
        """Amplitudes and phases of all grid points (origin first when present)."""
        amps = np.repeat(self.radii, len(self.phases))
        phases = np.tile(self.phases, len(self.radii))
        if self.includes_origin:
            amps = np.concatenate([[0.0], amps])
            phases = np.concatenate([[0.0], phases])
        return amps, phases

    def __len__(self):
        return len(self.radii) * len(self.phases) + int(self.includes_origin)


@dataclass
class OracleResult:
    rate: float
    weights: np.ndarray
    multiplier: float
    iterations: int
    converged: bool
    power: float = float("nan")
    upper_bound: float = float("nan")
    feasible: bool = True
    amplitudes: np.ndarray = field(default=None, repr=False)
    phases: np.ndarray = field(default=None, repr=False)
    history: list = field(default_factory=list, repr=False)

    def distribution(self):
        keep = self.weights > 0
        w = self.weights[keep]
        return InputDistribution.from_arrays(self.amplitudes[keep], self.phases[keep], w / w.sum())

    def to_dict(self):
        d = asdict(self)
        for key in ("weights", "amplitudes", "phases"):
            d[key] = [float(v) for v in d[key]]
        d.pop("history")
        return d


def _ba_fixed_multiplier(W, cost, lam, p, tol, max_iter, history=None):
    """Blahut-Arimoto for ``max_p I(p) - lam * E_p[cost]`` (nats).

    Returns ``(p, lower, upper, iterations, converged)`` where ``lower`` is
    the objective at the returned ``p`` and ``upper`` the standard dual
    bound ``max_i D(W_i || q) - lam * cost_i``.
    """
    logW = np.where(W > 0, np.log(np.where(W > 0, W, 1.0)), 0.0)
    neg_entropy = np.sum(W * logW, axis=1)
    lower = upper = float("nan")
    for it in range(1, max_iter + 1):
        q = p @ W
        logq = np.log(np.where(q > 0, q, 1.0))
        c = neg_entropy - W @ logq - lam * cost
        lower = float(p @ c)
        upper = float(c.max())
        if not (math.isfinite(lower) and math.isfinite(upper)):
            raise NumericError("non-finite value in Blahut-Arimoto iteration")
        if history is not None:
            history.append(lower)
        if upper - lower < tol:
            return p, lower, upper, it, True
        p = p * np.exp(c - upper)
        p /= p.sum()
    return p, lower, upper, max_iter, False


def _rate_and_power(W, cost, p):
    q = p @ W
    logq = np.log(np.where(q > 0, q, 1.0))
    logW = np.where(W > 0, np.log(np.where(W > 0, W, 1.0)), 0.0)
    info = float(p @ np.sum(W * (logW - logq[None, :]), axis=1))
    return info, float(p @ cost)


def blahut_arimoto(q, grid, p_budget, tol=1e-6, max_iter=20000, record_history=False):
    """Capacity of the quantized channel restricted to inputs on ``grid``.

    Maximizes mutual information subject to ``E|U|^2 <= p_budget``.  The
    power constraint enters through a penalty ``exp(-lam * r^2)`` whose
    multiplier is found by bisection.  ``tol`` (bits) bounds the gap between
    the Blahut-Arimoto lower and upper bounds of every inner solve.
    """
    if p_budget <= 0:
        raise DomainError("p_budget must be > 0")
    if tol <= 0:
        raise DomainError("tol must be > 0")
    amps, phases = grid.points()
    cost = amps**2
    W = transition_matrix(q, cost, phases)
    n = W.shape[0]
    tol_nats = tol * LN2
    limit = p_budget * (1.0 + 1e-6)
    feasible = bool(cost.min() <= p_budget)
    if not feasible:
        log.warning("no grid point satisfies the power budget; result violates the constraint")

    history = [] if record_history else None
    total_iter = 0
    uniform = np.full(n, 1.0 / n)

    def solve(lam, p0):
        nonlocal total_iter
        hist = [] if history is not None else None
        p, _, hi, it, _ = _ba_fixed_multiplier(W, cost, lam, p0, 0.25 * tol_nats, max_iter, hist)
        total_iter += it
        if history is not None:
            history.append((lam, hist))
        info, power = _rate_and_power(W, cost, p)
        # any lam >= 0 gives the dual bound max_i c_i + lam * P on the constrained capacity
        return {"lam": lam, "p": p, "info": info, "power": power, "upper": hi + lam * p_budget}

    def done(sol):
        return sol["power"] <= limit and sol["upper"] - sol["info"] < tol_nats

    def warm(sol):
        return 0.999 * sol["p"] + 0.001 * uniform

    if not feasible:
        best = solve(0.0, uniform)
    else:
        lam_lo = 0.0
        best = solve(1.0 / p_budget, uniform)
        while best["power"] > limit:
            lam_lo = best["lam"]
            best = solve(2.0 * best["lam"], warm(best))
            if best["lam"] > 1e12:
                raise NumericError("power multiplier diverged")
        if not done(best) and lam_lo == 0.0:
            free = solve(0.0, warm(best))
            if free["power"] <= limit:
                best = free
        # bisect on the multiplier, keeping the feasible end
        for _ in range(80):
            if done(best) or best["lam"] - lam_lo <= 1e-12 * best["lam"]:
                break
            mid = solve(0.5 * (lam_lo + best["lam"]), warm(best))
            if mid["power"] <= limit:
                best = mid
            else:
                lam_lo = mid["lam"]
    info, power, lam = best["info"], best["power"], best["lam"]
    converged = bool(done(best)) or (not feasible and best["upper"] - best["info"] < tol_nats)
    p, upper = best["p"], best["upper"]
    return OracleResult(
        rate=info / LN2,
        weights=p,
        multiplier=lam / LN2,
        iterations=total_iter,
        converged=bool(converged),
        power=power,
        upper_bound=upper / LN2,
        feasible=feasible,
        amplitudes=amps,
        phases=phases,
        history=history if history is not None else [],
    )


def rotation_period(m, bits):
    """Period in theta of the m-PSK rate: ``2*pi / lcm(m, 2**bits)``."""
    return TWO_PI / math.lcm(int(m), 2**bits)


def psk_rate(q, m, p_budget, theta):
    return mutual_information(q, psk_input(m, math.sqrt(p_budget), theta)).mutual_information


def psk_rate_slope(q, m, p_budget, theta):
    """Derivative of the m-PSK rate with respect to the rotation ``theta`` (bits/rad).

    Uses ``dW_y/dtheta = f(e_y - theta) - f(e_{y+1} - theta)`` with ``f`` the
    phase density and ``e_y`` the sector edges, so no finite differences
    are involved.
    """
    phases = theta + TWO_PI * np.arange(m) / m
    alpha = np.full(m, float(p_budget))
    W = transition_matrix(q, alpha, phases)
    edges = q.edges()
    dens = angular_phase_pdf(alpha[:, None], edges[None, :] - phases[:, None])
    dW = dens[:, :-1] - dens[:, 1:]
    logW = np.where(W > TINY, np.log2(np.where(W > TINY, W, 1.0)), 0.0)
    p_y = W.mean(axis=0)
    dp = dW.mean(axis=0)
    log_p = np.where(p_y > TINY, np.log2(np.where(p_y > TINY, p_y, 1.0)), 0.0)
    return float(-dp @ log_p + np.mean(np.sum(dW * logW, axis=1)))


def best_rotation(q, m, p_budget, n_scan=64, xtol=1e-8):
    """Rotation of equiprobable m-PSK (power ``p_budget``) maximizing the rate.

    A coarse scan over one period of the objective is refined by
    golden-section search around the best scan point, then polished by
    root-finding on the analytic slope where the rate is too flat for value
    comparisons to resolve.  Returns ``(theta_star, rate)`` with
    ``theta_star`` reduced into the period.
    """
    if int(m) != m or m < 2:
        raise DomainError("m must be an integer >= 2")
    m = int(m)
    period = rotation_period(m, q.bits)
    thetas = period * np.arange(n_scan) / n_scan
    rates = np.array([psk_rate(q, m, p_budget, t) for t in thetas])
    i = int(np.argmax(rates))
    step = period / n_scan

    def f(t):
        return psk_rate(q, m, p_budget, t)

    a, b = thetas[i] - step, thetas[i] + step
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > xtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    best_t, best_r = (c, fc) if fc >= fd else (d, fd)
    if rates[i] > best_r:
        best_t, best_r = thetas[i], rates[i]

    lo, hi = best_t - 0.25 * step, best_t + 0.25 * step
    g_lo, g_hi = psk_rate_slope(q, m, p_budget, lo), psk_rate_slope(q, m, p_budget, hi)
    if g_lo > 0 > g_hi:
        root = brentq(lambda t: psk_rate_slope(q, m, p_budget, t), lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
        r = f(root)
        if r >= best_r - 1e-13:
            best_t, best_r = root, max(r, best_r)
    return float(np.mod(best_t, period)), float(best_r)


def gaussian_input(p_budget, n_radii=32, n_phases=32):
    """Circular complex Gaussian of power ``p_budget`` on a radius x phase grid.

    Radii come from ``n_radii`` equiprobable bins of the exponential law of
    ``|U|^2``; each bin is represented by its conditional mean power, so the
    discretized input keeps the exact average power.
    """
    k = np.arange(n_radii + 1)
    with np.errstate(divide="ignore"):
        edges = -p_budget * np.log1p(-k / n_radii)
    a, b = edges[:-1], edges[1:]
    ea = (a + p_budget) * np.exp(-a / p_budget)
    eb = np.where(np.isfinite(b), (b + p_budget) * np.exp(-np.where(np.isfinite(b), b, 0.0) / p_budget), 0.0)
    mean_power = (ea - eb) * n_radii
    amps = np.repeat(np.sqrt(mean_power), n_phases)
    phases = np.tile(TWO_PI * np.arange(n_phases) / n_phases, n_radii)
    probs = np.full(amps.size, 1.0 / amps.size)
    return InputDistribution.from_arrays(amps, phases, probs)


DEFAULT_FAMILIES = ("psk:4", "psk:8", "psk:16", "psk:256", "gaussian", "capacity")


def family_rate(q, family, p_budget):
    """Rate (bits) and rotation for one named input family at linear SNR ``p_budget``."""
    if family == "capacity":
        return float(capacity_from_snr(p_budget, q.bits)[0]), float("nan")
    if family == "gaussian":
        return mutual_information(q, gaussian_input(p_budget)).mutual_information, float("nan")
    if family.startswith("psk:"):
        theta, rate = best_rotation(q, int(family.split(":", 1)[1]), p_budget)
        return rate, theta
    raise DomainError(f"unknown input family {family!r}")


def rate_sweep(q, families=DEFAULT_FAMILIES, snr_grid_db=tuple(range(-10, 31)), workers=1):
    """Rates of several input families across an SNR grid (dB).

    Returns a list of row dicts ``snr_db, family, rate_bits, theta_star``
    ordered by SNR then family.
    """
    jobs = [(float(s), fam) for s in snr_grid_db for fam in families]
    for s, _ in jobs:
        if not math.isfinite(s):
            raise DomainError("SNR grid must be finite")

    def run(job):
        s, fam = job
        rate, theta = family_rate(q, fam, 10 ** (s / 10))
        return {"snr_db": s, "family": fam, "rate_bits": rate, "theta_star": theta}

    return ordered_map(run, jobs, workers)
