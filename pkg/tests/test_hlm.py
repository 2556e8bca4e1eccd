import io
import math

import numpy as np
import pytest

from bfsurf import hlm, numerics
from bfsurf.errors import (
    CalibrationError,
    CsvFormatError,
    DegenerateGroupDesignError,
    GroupTooSmallError,
)
from conftest import make_small_hlm
from oracles import mc_oracle_hlm

CSV_2x3 = """school,ses,mathscore
A,0.1,50.0
A,0.5,55.0
A,-0.2,48.0
B,1.0,60.0
B,0.0,52.0
B,-1.0,45.0
"""


class TestLoadCsv:
    def test_two_school_file(self):
        data = hlm.load_hlm_csv(io.StringIO(CSV_2x3))
        assert data.m == 2
        assert data.total_n == 6
        for grp in data.groups:
            assert abs(np.sum(grp.x_centered)) < 1e-12

    def test_group_order_preserved(self):
        data = hlm.load_hlm_csv(io.StringIO(CSV_2x3))
        assert [g.group_id for g in data.groups] == ["A", "B"]

    def test_single_student_school(self):
        text = CSV_2x3 + "C,0.3,51.0\n"
        with pytest.raises(GroupTooSmallError, match="group too small"):
            hlm.load_hlm_csv(io.StringIO(text))

    def test_malformed_row_reports_line(self):
        text = "school,ses,mathscore\nA,0.1,50\nA,oops,51\n"
        with pytest.raises(CsvFormatError, match="line 3"):
            hlm.load_hlm_csv(io.StringIO(text))

    def test_missing_value_rejected(self):
        text = "school,ses,mathscore\nA,0.1,50\nA,nan,51\n"
        with pytest.raises(CsvFormatError, match="line 3"):
            hlm.load_hlm_csv(io.StringIO(text))

    def test_bad_header(self):
        with pytest.raises(CsvFormatError, match="header"):
            hlm.load_hlm_csv(io.StringIO("a,b,c\n1,2,3\n"))

    def test_csv_round_trip(self, small_hlm):
        back = hlm.load_hlm_csv(io.StringIO(small_hlm.to_csv()))
        assert back.m == small_hlm.m
        for a, b in zip(back.groups, small_hlm.groups):
            np.testing.assert_allclose(a.y, b.y)
            np.testing.assert_allclose(a.x_centered, b.x_centered)


class TestMarginal:
    @pytest.mark.parametrize("model,p", [(hlm.SLOPES_AND_INTERCEPTS, 2), (hlm.MEANS_ONLY, 1)])
    def test_matches_hierarchical_mc_oracle(self, small_hlm, small_hlm_hypers, model, p):
        quad = hlm.log_marginal_hlm(small_hlm, model, small_hlm_hypers)
        mc, se = mc_oracle_hlm(small_hlm, p, small_hlm_hypers, 10**6, seed=11)
        assert abs(quad - mc) < 3 * se

    def test_two_group_dataset_against_oracle(self, small_hlm_hypers):
        data = make_small_hlm(seed=9, m=2, n_per=4)
        for model, p in [(hlm.SLOPES_AND_INTERCEPTS, 2), (hlm.MEANS_ONLY, 1)]:
            quad = hlm.log_marginal_hlm(data, model, small_hlm_hypers)
            mc, se = mc_oracle_hlm(data, p, small_hlm_hypers, 10**6, seed=12)
            assert abs(quad - mc) < 3 * se

    def test_means_only_ignores_slope_components(self, small_hlm, small_hlm_hypers):
        base = hlm.log_marginal_hlm(small_hlm, hlm.MEANS_ONLY, small_hlm_hypers)
        tweaked = hlm.HlmHypers(
            g=small_hlm_hypers.g,
            mu0=np.array([small_hlm_hypers.mu0[0], 99.0]),
            lambda0=np.array([[small_hlm_hypers.lambda0[0, 0], 0.4], [0.4, 7.0]]),
            nu0=small_hlm_hypers.nu0,
            sigma0_sq=small_hlm_hypers.sigma0_sq,
        )
        assert hlm.log_marginal_hlm(small_hlm, hlm.MEANS_ONLY, tweaked) == base

    def test_node_doubling_converged(self, small_hlm, small_hlm_hypers):
        spec = numerics.DEFAULT_PRECISION_QUAD
        double = numerics.QuadratureSpec(spec.lower, spec.upper, 2 * spec.n_nodes, spec.transform)
        a = hlm.log_marginal_hlm(small_hlm, hlm.SLOPES_AND_INTERCEPTS, small_hlm_hypers, spec)
        b = hlm.log_marginal_hlm(small_hlm, hlm.SLOPES_AND_INTERCEPTS, small_hlm_hypers, double)
        assert abs(a - b) < 1e-6

    def test_degenerate_group_design(self, small_hlm_hypers):
        groups = (
            hlm.HlmGroup("ok", np.array([1.0, 2.0, 3.0]), np.array([-1.0, 0.0, 1.0])),
            hlm.HlmGroup("flat", np.array([1.0, 2.0]), np.array([0.7, 0.7])),
        )
        data = hlm.HlmDataset(groups)
        with pytest.raises(DegenerateGroupDesignError, match="flat"):
            hlm.log_marginal_hlm(data, hlm.SLOPES_AND_INTERCEPTS, small_hlm_hypers)
        # the means model never reads the predictor, so it still works
        assert math.isfinite(hlm.log_marginal_hlm(data, hlm.MEANS_ONLY, small_hlm_hypers))

    def test_group_order_permutation_invariant(self, small_hlm, small_hlm_hypers):
        permuted = hlm.HlmDataset(tuple(reversed(small_hlm.groups)))
        for model in (hlm.SLOPES_AND_INTERCEPTS, hlm.MEANS_ONLY):
            assert hlm.log_marginal_hlm(permuted, model, small_hlm_hypers) == pytest.approx(
                hlm.log_marginal_hlm(small_hlm, model, small_hlm_hypers), rel=1e-12
            )

    def test_within_group_permutation_invariant(self, small_hlm, small_hlm_hypers):
        gen = np.random.default_rng(0)
        shuffled = []
        for grp in small_hlm.groups:
            order = gen.permutation(grp.n)
            shuffled.append(hlm.HlmGroup(grp.group_id, grp.y[order], grp.x_centered[order]))
        data = hlm.HlmDataset(tuple(shuffled))
        assert hlm.log_marginal_hlm(data, hlm.SLOPES_AND_INTERCEPTS, small_hlm_hypers) == pytest.approx(
            hlm.log_marginal_hlm(small_hlm, hlm.SLOPES_AND_INTERCEPTS, small_hlm_hypers),
            rel=1e-12,
        )


class TestLogBf:
    def test_synthetic_slopes_data_favors_slopes(self, synth100, synth100_center):
        assert hlm.log_bf_hlm(synth100, synth100_center).value > 0

    def test_means_generated_data_favors_means(self):
        """Generative self-consistency: no-slope data should reject slopes."""
        signs = []
        for seed in range(20):
            gen = np.random.default_rng(1000 + seed)
            groups = []
            for j in range(12):
                x = gen.normal(0.0, 1.0, 8)
                mean_j = 50.0 + gen.normal(0.0, 6.0)  # strong group-mean spread
                y = mean_j + gen.normal(0.0, 3.0, 8)
                groups.append(hlm.HlmGroup(f"g{j}", y, x))
            data = hlm.HlmDataset(tuple(groups))
            center = hlm.default_hlm_hypers(data)
            signs.append(hlm.log_bf_hlm(data, center).value < 0)
        assert sum(signs) > 10

    def test_g_dominance(self, synth100, synth100_center):
        """Beyond moderate g the BF drop tracks -(m/2) * delta log(g+1)."""
        from dataclasses import replace

        lb100 = hlm.log_bf_hlm(synth100, replace(synth100_center, g=100.0)).value
        lb1000 = hlm.log_bf_hlm(synth100, replace(synth100_center, g=1000.0)).value
        predicted = -(synth100.m / 2.0) * (math.log(1001.0) - math.log(101.0))
        assert abs((lb1000 - lb100) - predicted) / abs(predicted) < 0.15


class TestDefaults:
    def test_recovers_generator_scales(self, synth100, synth100_center):
        c = synth100_center
        assert 5.0 < c.g < 12.0          # generator used g=7.5
        assert abs(c.mu0[0] - 47.0) < 2.0
        assert abs(c.mu0[1] - 2.3) < 1.5
        assert 60.0 < c.sigma0_sq < 100.0  # generator used 80
        assert c.nu0 == 1.0

    def test_too_few_groups(self):
        with pytest.raises(CalibrationError, match="too few groups"):
            hlm.default_hlm_hypers(make_small_hlm(m=2))

    def test_identical_groups_degenerate(self):
        grp = hlm.HlmGroup("g", np.array([1.0, 2.0, 3.0]), np.array([-1.0, 0.0, 1.0]))
        clones = tuple(hlm.HlmGroup(f"g{j}", grp.y, grp.x_centered) for j in range(3))
        with pytest.raises(CalibrationError):
            hlm.default_hlm_hypers(hlm.HlmDataset(clones))


class TestHypers:
    def test_spd_validation(self):
        with pytest.raises(ValueError, match="positive definite"):
            hlm.HlmHypers(g=1.0, mu0=np.zeros(2), lambda0=np.array([[1.0, 2.0], [2.0, 1.0]]),
                          nu0=1.0, sigma0_sq=1.0)

    def test_hypers_with_rejects_spd_violation(self, small_hlm_hypers):
        rho_max = math.sqrt(small_hlm_hypers.lambda0[0, 0] * small_hlm_hypers.lambda0[1, 1])
        with pytest.raises(ValueError):
            hlm.hypers_with(small_hlm_hypers, "lambda0_12", 1.05 * rho_max)

    def test_round_trip_dict(self, small_hlm_hypers):
        values = hlm.hypers_to_dict(small_hlm_hypers)
        back = hlm.hypers_from_dict(values)
        np.testing.assert_allclose(back.lambda0, small_hlm_hypers.lambda0)
        assert back.g == small_hlm_hypers.g


class TestSlices:
    def test_single_point_slices_return_center(self, small_hlm, small_hlm_hypers):
        center_value = hlm.log_bf_hlm(small_hlm, small_hlm_hypers).value
        slices = hlm.hlm_slices(small_hlm, small_hlm_hypers, points_per_slice=1)
        assert len(slices) == 8
        for s in slices:
            assert len(s.grid) == 1
            assert s.grid[0] == pytest.approx(hlm.hyper_value(small_hlm_hypers, s.name))
            assert s.log_bf[0] == pytest.approx(center_value, rel=1e-12)

    def test_g_slice_shape_and_dominant_range(self, synth100, synth100_center):
        slices = hlm.hlm_slices(synth100, synth100_center, points_per_slice=9)
        by_name = {s.name: s for s in slices}
        g_slice = by_name["g"]
        beyond = g_slice.log_bf[g_slice.grid >= 20.0]
        assert np.all(np.diff(beyond) < 0)          # monotone decreasing
        assert g_slice.log_bf.min() < 0 < g_slice.log_bf.max()  # crosses zero
        g_range = g_slice.log_bf.max() - g_slice.log_bf.min()
        for name, s in by_name.items():
            if name == "g":
                continue
            values = s.log_bf[~s.skipped]
            assert g_range > values.max() - values.min()

    def test_spd_violating_offdiagonal_skipped(self, small_hlm, small_hlm_hypers):
        rho_max = math.sqrt(small_hlm_hypers.lambda0[0, 0] * small_hlm_hypers.lambda0[1, 1])
        grids = {"lambda0_12": np.array([-1.05 * rho_max, 0.0, 1.05 * rho_max])}
        slices = hlm.hlm_slices(small_hlm, small_hlm_hypers, points_per_slice=3, grids=grids)
        off = next(s for s in slices if s.name == "lambda0_12")
        np.testing.assert_array_equal(off.skipped, [True, False, True])
        assert math.isnan(off.log_bf[0]) and math.isfinite(off.log_bf[1])

    def test_csv_and_json_mirrors(self, small_hlm, small_hlm_hypers):
        slices = hlm.hlm_slices(small_hlm, small_hlm_hypers, points_per_slice=3)
        csv_text = hlm.slices_to_csv(slices)
        lines = csv_text.splitlines()
        assert lines[0] == "hyper,grid_value,log_bf"
        assert len(lines) == 1 + 8 * 3
        payload = hlm.slices_to_json_dict(slices)
        assert len(payload["slices"]) == 8
        for entry in payload["slices"]:
            assert len(entry["grid"]) == 3


class TestSynthetic:
    def test_shape_and_determinism(self, synth100):
        assert synth100.m == 100
        assert all(15 <= g.n <= 25 for g in synth100.groups)
        again = hlm.synthetic_hlm(seed=0)
        np.testing.assert_array_equal(again.groups[3].y, synth100.groups[3].y)

    def test_different_seed_differs(self, synth100):
        other = hlm.synthetic_hlm(seed=1)
        assert not np.array_equal(other.groups[0].y, synth100.groups[0].y)

    def test_default_hyperbox_is_spd_safe(self, synth100_center):
        box = hlm.default_hyperbox(synth100_center)
        assert [d.name for d in box.dims] == list(hlm.SLICE_NAMES)
        # worst corner: smallest diagonals with the largest off-diagonal
        values = {}
        for dim in box.dims:
            if dim.name in ("lambda0_11", "lambda0_22"):
                values[dim.name] = dim.lower
            elif dim.name == "lambda0_12":
                values[dim.name] = dim.upper
            else:
                values[dim.name] = hlm.hyper_value(synth100_center, dim.name)
        hlm.hypers_from_dict(values)  # must validate
