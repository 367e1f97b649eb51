"""
Tests for the experiment configuration, runner, reports and experiments
"""

import json
import math

import numpy as np
import pytest

from heislat import experiments as ex
from heislat.regions import (
    CylinderStack, DisjointUnion, Disk, Rectangle, disk_of_area, measure2, measure3,
    region_to_spec,
)
from heislat.statistical_tests import ZETA2
from heislat.utils import ConfigError, DomainError


def _cfg(**kwargs) -> ex.ExperimentConfig:
    params = {"trials": 1000, "seed": 123, "threads": 1}
    params.update(kwargs)
    return ex.ExperimentConfig(**params)


class TestExperimentConfig:

    def test_defaults(self):
        cfg = _cfg()
        assert isinstance(cfg.region, Disk)
        assert math.isclose(cfg.area, 10.0)
        assert cfg.plate.eps == 0.25

    def test_region_spec_is_parsed(self):
        cfg = _cfg(region={"type": "rectangle", "xmin": 0, "xmax": 4, "ymin": 0, "ymax": 3})
        assert cfg.region == Rectangle(0, 4, 0, 3)
        cfg = _cfg(region='{"type": "disk", "radius": 2.0}')
        assert cfg.region == Disk((0, 0), 2.0)

    @pytest.mark.parametrize("kwargs", [
        {"trials": 999},
        {"trials": 1000.0},
        {"seed": -1},
        {"seed": 2 ** 64},
        {"eps": 0.0},
        {"eps": 1.0},
        {"region": {"type": "hexagon"}},
        {"region": 3.0},
        {"delta": 0.5},
        {"r_values": (2.0, -1.0)},
        {"threads": 0},
        {"z": float("inf")},
    ])
    def test_invalid_configs(self, kwargs):
        with pytest.raises(ConfigError):
            _cfg(**kwargs)

    def test_to_params_is_json_ready(self):
        params = _cfg(eps=0.5, z=0.25).to_params()
        assert json.loads(json.dumps(params))["eps"] == 0.5


class TestRunner:

    def test_results_in_trial_order(self):
        out = ex.run_trials(ex._trial_sampler, 600, 5, None, threads=1, chunk_size=256)
        assert out.shape == (600, 4)
        again = ex.run_trials(ex._trial_sampler, 600, 5, None, threads=1, chunk_size=100)
        np.testing.assert_array_equal(out, again)

    def test_worker_count_does_not_change_results(self):
        A = disk_of_area(10.0)
        one = ex.run_trials(ex._trial_theta_euclidean, 1000, 9, A, threads=1)
        two = ex.run_trials(ex._trial_theta_euclidean, 1000, 9, A, threads=2)
        np.testing.assert_array_equal(one, two)

    def test_resolve_threads(self):
        assert ex.resolve_threads(3) == 3
        assert ex.resolve_threads(None) >= 1


class TestReport:

    def test_verdict_bookkeeping(self):
        r = ex.ExperimentReport(name="demo", seed=1, trials=1000)
        r.add_estimate("mean", 1.0, 0.1)
        r.check("mean", True, 1.0, 1.05, 0.3)
        r.check("info", None, 2.0, 0.0, 0.0)
        assert r.passed
        r.check("bound", False, 5.0, 1.0, 0.0, "<=")
        assert not r.passed
        assert r.verdict("bound").relation == "<="
        assert r.estimate("mean").se == 0.1
        with pytest.raises(KeyError):
            r.estimate("missing")

    def test_serialisation(self, tmp_path):
        r = ex.ExperimentReport(name="demo", seed=1, trials=1000)
        r.add_estimate("mean", 1.0)
        r.check("mean", True, 1.0, 1.0, 0.0)
        d = r.to_dict(include_timing=False)
        assert "elapsed_ms" not in d
        assert d["estimates"][0]["se"] is None
        assert json.loads(r.to_json())["passed"] is True
        frame = r.to_frame()
        assert list(frame.columns) == ["name", "label", "estimate", "se", "target_or_bound",
                                       "verdict", "seed", "trials"]
        assert frame.loc[0, "verdict"] == "pass"
        path = tmp_path / "report.csv"
        r.to_csv(str(path))
        assert path.read_text().startswith("name,label")


class TestMeanExperiments:

    def test_sampler_check(self):
        report = ex.sampler_check(_cfg(trials=2000))
        assert report.verdict("max_det_drift").passed
        rate = report.estimate("acceptance_rate").value
        assert abs(rate - ex.ACCEPTANCE_RATE) < 0.03
        assert report.estimate("fiber_chisquare_p").value > 1e-3
        assert report.verdict("fiber_chisquare_p").passed

    def test_siegel_mean_euclidean(self):
        report = ex.siegel_mean_euclidean(_cfg(trials=4000))
        mean = report.estimate("mean")
        assert report.targets["mean"] == pytest.approx(10.0 / ZETA2)
        assert abs(mean.value - 10.0 / ZETA2) <= 5 * mean.se

    def test_siegel_mean_heisenberg(self):
        report = ex.siegel_mean_heisenberg(_cfg(trials=4000, eps=0.5))
        mean = report.estimate("mean")
        assert report.targets["mean"] == pytest.approx(5.0 / ZETA2)
        assert abs(mean.value - 5.0 / ZETA2) <= 5 * mean.se

    def test_reports_reproducible(self):
        a = ex.siegel_mean_heisenberg(_cfg(seed=77))
        b = ex.siegel_mean_heisenberg(_cfg(seed=77, threads=2))
        assert a.to_dict(include_timing=False) == b.to_dict(include_timing=False)


class TestVarianceExperiments:

    def test_identity_requires_level_zero(self):
        with pytest.raises(ConfigError):
            ex.variance_identity_check(_cfg(z=0.3))
        with pytest.raises(ConfigError):
            ex.variance_bound_check(_cfg(region=region_to_spec(disk_of_area(0.5))))

    def test_identity_estimates(self):
        report = ex.variance_identity_check(_cfg(trials=2000, eps=0.25))
        for label in ("lhs", "rhs", "rhs_corrected", "euclidean_second_moment", "antipodal_mean"):
            assert math.isfinite(report.estimate(label).value)
        assert report.verdict("rhs").passed is None
        # centered disks are symmetric, so every primitive point has its antipode
        assert report.estimate("antipodal_mean").value > 0

    def test_variance_bound(self):
        report = ex.variance_bound_check(_cfg(trials=2000, eps=0.25))
        assert report.verdict("second_moment").relation == "<="
        assert report.targets["second_moment"] == pytest.approx(0.25 * 10 / ZETA2 + 20 * 0.0625 * 10)

    @pytest.mark.parametrize("area,eps", [(4.0, 0.5), (20.0, 0.25)])
    def test_second_moment_verdicts_pass(self, area, eps):
        cfg = _cfg(trials=4000, seed=2024, region=region_to_spec(disk_of_area(area)), eps=eps)
        identity = ex.variance_identity_check(cfg)
        lhs = identity.verdict("lhs")
        assert lhs.passed, (lhs.estimate, lhs.target, lhs.tolerance)
        bound = ex.variance_bound_check(cfg)
        assert bound.verdict("second_moment").passed

    def test_euclidean_variance(self):
        report = ex.euclidean_variance_check(_cfg(trials=2000))
        assert report.targets["second_moment"] == pytest.approx(160.0)
        assert report.verdict("second_moment").passed

    def test_chebyshev_tail(self):
        report = ex.chebyshev_tail(_cfg(trials=2000, r_values=(2.0, 4.0, 8.0)))
        tails = [report.estimate(f"tail_r{r:g}").value for r in (2, 4, 8)]
        assert tails[0] >= tails[1] >= tails[2]
        assert report.verdict("monotone_tails").passed

    def test_chebyshev_tail_euclidean(self):
        report = ex.chebyshev_tail(_cfg(trials=2000, r_values=(1.0, 2.0, 4.0)), space="euclidean")
        assert report.name == "chebyshev_tail_euclidean"
        assert report.params["space"] == "euclidean"
        assert report.targets["chebyshev_constant"] == pytest.approx(16.0)
        tails = [report.estimate(f"tail_r{r:g}").value for r in (1, 2, 4)]
        assert tails[0] >= tails[1] >= tails[2]
        assert report.verdict("chebyshev_constant").passed
        assert report.verdict("monotone_tails").passed

    def test_chebyshev_tail_unknown_space(self):
        with pytest.raises(ConfigError):
            ex.chebyshev_tail(_cfg(), space="hyperbolic")

    def test_stout_cylinder_length_limit(self):
        with pytest.raises(ConfigError):
            ex.stout_cylinder_check(_cfg(region=region_to_spec(disk_of_area(16.0)),
                                         delta=0.25, interval_length=2.5))

    def test_stout_cylinder(self):
        cfg = _cfg(region=region_to_spec(disk_of_area(16.0)), delta=0.25, interval_length=2.0)
        report = ex.stout_cylinder_check(cfg)
        assert report.estimate("measure").value == pytest.approx(32.0)
        assert report.verdict("l2_deviation").passed


class TestHighDiscrepancy:

    def test_dyadic_measure(self):
        S = ex.build_high_disc_set(5.0, 0.05, 8)
        assert len(S) == 8
        assert measure3(S) == pytest.approx(16.0 / (1 - 2 ** -8), rel=1e-9)
        volumes = [measure2(p) * (hi - lo) for p, (lo, hi) in S.cylinders]
        np.testing.assert_allclose(volumes, volumes[0])
        assert S.intervals[0] == (1.0, 2.0)
        assert S.intervals[-1] == (128.0, 256.0)

    def test_single_piece(self):
        S = ex.build_high_disc_set(5.0, 0.05, 1)
        assert len(S) == 1
        assert measure2(S.pieces[0]) == pytest.approx(4.0)

    def test_base_must_avoid_lattice(self):
        with pytest.raises(DomainError):
            ex.build_high_disc_set(5.0, 0.05, 4, base=Disk((1.0, 1.0), 0.3))
        with pytest.raises(DomainError):
            ex.build_high_disc_set(1.0, 0.05, 4)
        with pytest.raises(DomainError):
            ex.build_high_disc_set(5.0, 0.05, 0)

    def test_cylinder_defect(self):
        S = ex.build_high_disc_set(5.0, 0.05, 8)
        C = CylinderStack(((S.pieces[0], S.intervals[0]),))
        v = measure3(S) / 8
        assert ex.cylinder_defect(S, C) == pytest.approx(7 * v)
        assert ex.cylinder_defect(S, C) == pytest.approx(14.05, abs=0.01)

    def test_cylinder_over_union_of_pieces(self):
        S = ex.build_high_disc_set(5.0, 0.05, 4)
        C = ex.cylinder_over(S, [0, 1], (1.0, 4.0))
        assert isinstance(C.pieces[0], DisjointUnion)
        assert math.isfinite(ex.cylinder_defect(S, C))

    def test_foreign_cylinder_rejected(self):
        S = ex.build_high_disc_set(5.0, 0.05, 4)
        with pytest.raises(DomainError):
            ex.cylinder_defect(S, CylinderStack(((Disk((9, 9), 1.0), (0.0, 1.0)),)))

    def test_best_search_k8(self):
        S = ex.build_high_disc_set(5.0, 0.05, 8)
        C, defect = ex.best_cylinder_search(S)
        v = measure3(S) / 8
        assert defect == pytest.approx(7 * v)
        assert ex.cylinder_defect(S, C) == pytest.approx(defect)
        assert defect >= ex.dyadic_defect_bounds(8, v, 4.0)["volume_form"]

    @pytest.mark.slow
    def test_best_search_k16_exceeds_power(self):
        S = ex.build_high_disc_set(5.0, 0.05, 16)
        _, defect = ex.best_cylinder_search(S)
        assert defect == pytest.approx(15 * measure3(S) / 16)
        assert defect >= measure3(S) ** 0.9

    def test_dyadic_bounds(self):
        bounds = ex.dyadic_defect_bounds(1, 2.0, 4.0)
        assert bounds["volume_form"] == 0.0
        assert ex.dyadic_defect_bounds(16, 2.0, 4.0)["volume_form"] == pytest.approx(20.0)


class TestMissExperiments:

    def test_plate_miss(self):
        report = ex.miss_probability(_cfg(eps=0.25))
        assert report.verdict("pointwise_violations").passed
        assert report.verdict("heisenberg_miss").passed
        assert report.estimate("heisenberg_miss").value >= report.estimate("euclidean_miss").value

    def test_off_center_disk(self):
        D = ex.off_center_disk(10.0)
        assert measure2(D) == pytest.approx(10.0)
        assert D.center[0] - D.radius == pytest.approx(0.5)

    def test_euclidean_miss_scaling(self):
        report = ex.euclidean_miss_scaling(_cfg(), areas=(5.0, 10.0, 20.0))
        rates = [report.estimate(f"miss_a{a:g}").value for a in (5, 10, 20)]
        assert rates[0] >= rates[2]
        assert report.estimate("C").value > 0

    def test_heisenberg_miss_scaling(self):
        report = ex.heisenberg_miss_scaling(_cfg(eps=0.5), areas=(5.0, 10.0, 20.0))
        assert report.params["areas"] == [5.0, 10.0, 20.0]
        rates = [report.estimate(f"miss_m{a * 0.5:g}").value for a in (5, 10, 20)]
        assert all(0.0 <= p <= 1.0 for p in rates)
        assert rates[0] >= rates[2]
        assert report.estimate("C").value > 0
        product = report.estimate("product_m10")
        assert product.value == pytest.approx(10.0 * rates[2])
        assert report.verdict("bounded_products").relation == "<="

    def test_plate_misses_dominate_flat_misses(self):
        # a plate over D misses whenever D misses, so plate rates dominate on shared seeds
        cfg = _cfg(eps=0.5)
        flat = ex.euclidean_miss_scaling(cfg, areas=(10.0,))
        plate = ex.heisenberg_miss_scaling(cfg, areas=(10.0,))
        assert plate.estimate("miss_m5").value >= flat.estimate("miss_a10").value

    def test_heisenberg_miss_scaling_rejects_bad_areas(self):
        with pytest.raises(ConfigError):
            ex.heisenberg_miss_scaling(_cfg(), areas=(10.0, -1.0))

    def test_high_discrepancy(self):
        cfg = _cfg(k_values=(4,))
        report = ex.high_discrepancy_check(cfg, tube_lengths=(10.0,), tube_measures=(10.0,))
        assert report.verdict("pointwise_violations_k4").passed
        assert report.verdict("best_defect_k4").passed
        assert report.verdict("tube_miss_N10").passed
        assert report.estimate("measure_k4").value == pytest.approx(8.0 / (1 - 2 ** -4))


class TestArithmeticExperiments:

    def test_orbit_classification(self):
        report = ex.orbit_classification_check(_cfg(), height=50, dets=(0, 1, 4, 5),
                                               invariance_samples=500)
        assert report.passed
        assert report.estimate("orbits_D5").value == 4
        assert report.estimate("orbits_D0").value == 2

    def test_correlation_agreement(self):
        report = ex.correlation_agreement(_cfg(samples=2 ** 16), eps_values=(0.25,))
        assert report.passed
        measured = report.verdict("cor_0-_eps0.25_z0.125")
        assert measured.passed is None
        assert measured.estimate == pytest.approx(0.25, abs=5e-3)
        assert any("Opposite-sign" in note for note in report.notes)

    def test_registry(self):
        assert set(ex.EXPERIMENTS) >= {"siegel_mean_heisenberg", "variance_identity", "high_discrepancy"}
