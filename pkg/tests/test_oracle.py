import math

import numpy as np
import pytest

from phasequant import (
    DomainError,
    InputGrid,
    PhaseQuantizer,
    best_rotation,
    blahut_arimoto,
    capacity_from_snr,
    gaussian_input,
    mutual_information,
    rate_sweep,
    symmetrize,
)
from phasequant.oracle import family_rate, psk_rate, rotation_period
from phasequant.verify import mass_near_optimum

TWO_PI = 2 * math.pi


class TestInputGrid:
    def test_polar_layout(self):
        g = InputGrid.polar(4.0, 3)
        assert g.includes_origin
        assert len(g) == 7 * 24 + 1
        assert g.radii[-1] == pytest.approx(1.75 * 2.0)
        assert g.radius_step == pytest.approx(0.25 * 2.0)
        assert g.phase_step == pytest.approx(TWO_PI / 24)
        # the grid contains every sector bisector
        for t in PhaseQuantizer(3).bisectors():
            assert np.min(np.abs(np.array(g.phases) - t)) < 1e-12

    def test_points(self):
        g = InputGrid((1.0, 2.0), (0.0, 1.0), includes_origin=True)
        amps, phases = g.points()
        assert list(amps) == [0.0, 1.0, 1.0, 2.0, 2.0]
        assert list(phases) == [0.0, 0.0, 1.0, 0.0, 1.0]

    def test_validation(self):
        with pytest.raises(DomainError):
            InputGrid((0.0,), (0.0,))
        with pytest.raises(DomainError):
            InputGrid((1.0, 1.0), (0.0,))
        with pytest.raises(DomainError):
            InputGrid((1.0,), ())
        assert InputGrid((0.0, 1.0), (0.5,)).includes_origin


class TestBlahutArimoto:
    def test_single_orbit_grid(self):
        q = PhaseQuantizer(2)
        p = 2.0
        grid = InputGrid((math.sqrt(p),), tuple(q.bisectors()))
        res = blahut_arimoto(q, grid, p)
        assert res.converged
        np.testing.assert_allclose(res.weights, 0.25, atol=1e-9)
        assert res.rate == pytest.approx(capacity_from_snr(p, 2)[0], abs=1e-6)

    def test_reference_case(self):
        q = PhaseQuantizer(2)
        grid = InputGrid.polar(1.0, 2)
        res = blahut_arimoto(q, grid, 1.0)
        assert res.converged
        assert abs(res.rate - capacity_from_snr(1.0, 2)[0]) <= 1e-3
        assert mass_near_optimum(res, grid, 1.0, 2) >= 0.99
        assert abs(res.weights.sum() - 1) <= 1e-10
        assert res.power <= 1.0 * (1 + 1e-6)
        assert res.multiplier >= 0
        assert res.rate <= res.upper_bound + 1e-12

    def test_more_iterations_do_not_move_a_converged_result(self):
        q = PhaseQuantizer(1)
        grid = InputGrid.polar(4.0, 1)
        a = blahut_arimoto(q, grid, 4.0, max_iter=20000)
        b = blahut_arimoto(q, grid, 4.0, max_iter=40000)
        assert a.converged and b.converged
        assert abs(a.rate - b.rate) < 1e-6

    def test_lower_bound_monotone(self):
        q = PhaseQuantizer(2)
        res = blahut_arimoto(q, InputGrid.polar(1.0, 2), 1.0, record_history=True)
        assert res.history
        for _, hist in res.history:
            h = np.array(hist)
            assert np.all(np.diff(h) >= -1e-13 * np.maximum(1.0, np.abs(h[1:])))

    def test_iteration_cap_reports_not_converged(self):
        res = blahut_arimoto(PhaseQuantizer(2), InputGrid.polar(1.0, 2), 1.0, max_iter=3)
        assert not res.converged

    def test_infeasible_grid_is_flagged(self):
        grid = InputGrid((3.0,), (0.0, math.pi))
        res = blahut_arimoto(PhaseQuantizer(1), grid, 1.0)
        assert not res.feasible
        assert res.power > 1.0

    def test_symmetrizing_the_optimum_does_not_lose(self):
        q = PhaseQuantizer(3)
        res = blahut_arimoto(q, InputGrid.polar(4.0, 3), 4.0)
        D = res.distribution()
        gain = mutual_information(q, symmetrize(q, D)).mutual_information - mutual_information(q, D).mutual_information
        assert gain >= -1e-9

    @pytest.mark.parametrize("kwargs", [{"p_budget": 0.0}, {"p_budget": 1.0, "tol": 0.0}])
    def test_bad_arguments(self, kwargs):
        with pytest.raises(DomainError):
            blahut_arimoto(PhaseQuantizer(1), InputGrid.polar(1.0, 1), **kwargs)

    def test_to_dict(self):
        res = blahut_arimoto(PhaseQuantizer(1), InputGrid.polar(1.0, 1), 1.0)
        d = res.to_dict()
        assert set(d) >= {"rate", "weights", "multiplier", "iterations", "converged"}
        assert isinstance(d["weights"][0], float)


class TestRotation:
    def test_period(self):
        assert rotation_period(8, 3) == pytest.approx(TWO_PI / 8)
        assert rotation_period(16, 3) == pytest.approx(TWO_PI / 16)
        assert rotation_period(4, 3) == pytest.approx(TWO_PI / 8)

    @pytest.mark.parametrize("bits", [1, 2, 3])
    @pytest.mark.parametrize("p", [0.5, 1.0, 4.0, 10.0])
    def test_recovers_bisector(self, bits, p):
        q = PhaseQuantizer(bits)
        theta, rate = best_rotation(q, 2**bits, p)
        width = TWO_PI / 2**bits
        dev = abs(np.mod(theta - width / 2 + width / 2, width) - width / 2)
        assert dev <= 1e-6
        assert rate == pytest.approx(capacity_from_snr(p, bits)[0], abs=1e-9)

    @pytest.mark.parametrize("snr_db", [-10, 0, 10, 20, 30])
    def test_finer_psk_is_strictly_worse(self, snr_db):
        q = PhaseQuantizer(3)
        p = 10 ** (snr_db / 10)
        _, rate = best_rotation(q, 16, p)
        c = capacity_from_snr(p, 3)[0]
        if 3.0 - c > 1e-12:
            assert rate < c
        else:
            # both rates round to 3 bits in double precision
            assert rate <= c

    def test_objective_period(self):
        q = PhaseQuantizer(2)
        for t in (0.1, 0.5, 1.3):
            assert psk_rate(q, 8, 2.0, t + TWO_PI / 4) == pytest.approx(psk_rate(q, 8, 2.0, t), abs=1e-12)


def test_gaussian_input_keeps_power():
    F = gaussian_input(3.0)
    assert len(F) == 32 * 32
    assert F.power == pytest.approx(3.0, rel=1e-12)


def test_unknown_family():
    with pytest.raises(DomainError):
        family_rate(PhaseQuantizer(2), "qam:16", 1.0)


def test_rate_sweep_shape_and_sanity():
    q = PhaseQuantizer(2)
    fams = ("psk:4", "gaussian", "capacity")
    rows = rate_sweep(q, fams, (-5.0, 5.0, 15.0))
    assert [(r["snr_db"], r["family"]) for r in rows] == [(s, f) for s in (-5.0, 5.0, 15.0) for f in fams]
    for fam in fams:
        rates = [r["rate_bits"] for r in rows if r["family"] == fam]
        assert all(r <= 2 + 1e-12 for r in rates)
        assert np.all(np.diff(rates) >= -1e-12)
    again = rate_sweep(q, fams, (-5.0, 5.0, 15.0), workers=3)
    assert [repr(sorted(r.items())) for r in rows] == [repr(sorted(r.items())) for r in again]
