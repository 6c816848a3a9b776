import numpy as np
import pytest

from condcharts import (
    Dataset,
    InputError,
    KnotSpec,
    ModelConfig,
    RngStream,
    Subject,
    FittedChartModel,
    TauFit,
    basis_dimension,
    diagnose,
    fit,
    observed_jth,
    qq_points,
    simlab,
    simulate_jth,
    subgroup,
    tau_hat_stats,
)
from condcharts.diagnosis import (
    SubgroupRule,
    default_assessment_grid,
    parse_subgroup,
)

KNOTS01 = KnotSpec((0.5,), 4, 0.0, 1.0)


class ScriptedStream:
    """Stub stream replaying queued integer and uniform draws."""

    def __init__(self, integers, uniforms):
        self._integers = list(integers)
        self._uniforms = list(uniforms)

    def integers(self, low, high, size=None):
        out = np.array(self._integers[:size])
        del self._integers[:size]
        return out

    def uniform(self, size=None):
        out = np.array(self._uniforms[:size])
        del self._uniforms[:size]
        return out


def level_model(level_values, taus=(0.25, 0.5, 0.75)):
    """p=0, l=0 model predicting constant level_values[k] at tau k."""
    kn = basis_dimension(KNOTS01)
    fits = tuple(TauFit(tau, np.full(kn, v), np.empty(0), 0.0, False)
                 for tau, v in zip(taus, level_values))
    return FittedChartModel(ModelConfig(0, KNOTS01, taus), 0, fits, 0, 0, 0)


def bare_subjects(values_per_subject):
    subjects = []
    for i, vals in enumerate(values_per_subject):
        m = len(vals)
        subjects.append(Subject(
            f"s{i}", np.linspace(0.1, 0.9, m), np.asarray(vals, dtype=float),
            np.empty((m, 0))))
    return Dataset(tuple(subjects), l=0)


class TestSimulateJth:
    def test_constant_model_yields_constant(self):
        model = level_model((4.0, 4.0, 4.0))
        ds = bare_subjects([[1, 2, 3], [4, 5, 6]])
        sample = simulate_jth(model, ds, 2, 50, RngStream(1, 0))
        assert np.all(sample == 4.0)

    def test_u_at_grid_node_returns_node_prediction(self):
        model = level_model((1.0, 2.0, 3.0))
        ds = bare_subjects([[1, 2, 3]])
        stream = ScriptedStream([0, 0, 0], [0.5, 0.25, 0.75])
        sample = simulate_jth(model, ds, 2, 3, stream)
        assert np.array_equal(sample, [2.0, 1.0, 3.0])

    def test_u_outside_grid_clamps(self):
        model = level_model((1.0, 2.0, 3.0))
        ds = bare_subjects([[1, 2, 3]])
        stream = ScriptedStream([0, 0], [0.01, 0.99])
        sample = simulate_jth(model, ds, 2, 2, stream)
        assert np.array_equal(sample, [1.0, 3.0])

    def test_u_between_nodes_interpolates(self):
        model = level_model((1.0, 2.0, 3.0))
        ds = bare_subjects([[1, 2, 3]])
        stream = ScriptedStream([0], [0.375])
        sample = simulate_jth(model, ds, 2, 1, stream)
        assert abs(sample[0] - 1.5) < 1e-12

    def test_no_eligible_subject_is_error(self):
        model = level_model((1.0, 2.0, 3.0))
        ds = bare_subjects([[1, 2]])
        with pytest.raises(InputError):
            simulate_jth(model, ds, 3, 10, RngStream(1, 0))

    def test_self_consistent_mean_on_fitted_model(self):
        # simulating from a correctly specified fit reproduces the
        # observed mean of the j-th measurement within 3 joint SEs
        ds = simlab.generate(simlab.SimModelSpec(1, 300, 10, 0.4),
                             RngStream(50, 0))
        model = fit(ds, ModelConfig(1, simlab.uniform_knot_spec(2)))
        j = 5
        observed = observed_jth(ds, j)
        sample = simulate_jth(model, ds, j, 5000, RngStream(51, 0))
        se = np.sqrt(sample.var(ddof=1) / sample.size
                     + observed.var(ddof=1) / observed.size)
        assert abs(sample.mean() - observed.mean()) < 3 * se

    def test_subject_order_invariant_in_law(self):
        ds = simlab.generate(simlab.SimModelSpec(1, 60, 8, 0.3),
                             RngStream(60, 0))
        model = fit(ds, ModelConfig(1, simlab.uniform_knot_spec(1),
                                    (0.25, 0.5, 0.75)))
        permuted = Dataset(tuple(reversed(ds.subjects)), l=ds.l)
        a = simulate_jth(model, ds, 4, 20000, RngStream(61, 0))
        b = simulate_jth(model, permuted, 4, 20000, RngStream(62, 0))
        # two-sample KS statistic small when the laws agree
        grid = np.sort(np.concatenate([a, b]))
        cdf_a = np.searchsorted(np.sort(a), grid, side="right") / a.size
        cdf_b = np.searchsorted(np.sort(b), grid, side="right") / b.size
        assert np.max(np.abs(cdf_a - cdf_b)) < 0.03


class TestTauHatStats:
    def test_identical_samples_have_small_z(self, rng):
        x = rng.normal(size=1000)
        points = tau_hat_stats(x, x)
        assert max(abs(pt.z) for pt in points) < 3.0

    def test_observed_below_simulated_minimum(self, rng):
        sim = rng.normal(size=500) + 100.0
        obs = rng.normal(size=200)
        points = tau_hat_stats(obs, sim)
        assert all(pt.tau_hat == 1.0 for pt in points)

    def test_default_grid_is_ten_levels(self):
        grid = default_assessment_grid()
        assert grid.shape == (10,)
        assert grid[0] == 0.05 and grid[-1] == 0.95
        assert np.allclose(np.diff(grid), 0.1)

    def test_strictly_below_convention(self):
        obs = np.array([1.0, 2.0, 3.0, 4.0])
        sim = np.array([2.0, 2.0, 2.0, 2.0])
        points = tau_hat_stats(obs, sim, [0.5])
        # threshold 2.0; only the value 1.0 lies strictly below
        assert points[0].tau_hat == 0.25


class TestQqPoints:
    def test_identical_samples_on_diagonal(self, rng):
        x = rng.normal(size=400)
        pairs = qq_points(x, x, 49)
        assert np.allclose(pairs[:, 0], pairs[:, 1])

    def test_shift_moves_observed_axis(self, rng):
        x = rng.normal(size=400)
        pairs = qq_points(x + 1.0, x, 49)
        assert np.allclose(pairs[:, 1], pairs[:, 0] + 1.0, atol=1e-12)

    def test_count(self, rng):
        pairs = qq_points(rng.normal(size=50), rng.normal(size=60), 99)
        assert pairs.shape == (99, 2)


class TestSubgroup:
    def test_first_quartile_rule_keeps_two_of_eight(self):
        ds = bare_subjects([[v, v + 1] for v in [1, 2, 3, 4, 5, 6, 7, 8]])
        rule = SubgroupRule("first_value", "below", 0.25)
        sub = subgroup(ds, rule)
        assert sub.n_subjects == 2
        assert {s.values[0] for s in sub.subjects} == {1.0, 2.0}

    def test_none_rule_is_identity(self):
        ds = bare_subjects([[1, 2], [3, 4]])
        assert subgroup(ds, None) is ds

    def test_complement_rules_partition(self):
        ds = bare_subjects([[v, v + 1] for v in [3, 1, 4, 1.5, 5, 9, 2, 6]])
        below = subgroup(ds, SubgroupRule("first_value", "below", 0.25))
        above = subgroup(ds, SubgroupRule("first_value", "at_or_above", 0.25))
        ids = sorted(s.id for s in below.subjects) + \
            sorted(s.id for s in above.subjects)
        assert sorted(ids) == sorted(s.id for s in ds.subjects)

    def test_parse_descriptors(self):
        assert parse_subgroup("all") is None
        rule = parse_subgroup("first<q0.25")
        assert rule == SubgroupRule("first_value", "below", 0.25)
        rule = parse_subgroup("x1>=q0.5@j3")
        assert rule == SubgroupRule("covariate", "at_or_above", 0.5,
                                    covariate_index=0, j=3)
        with pytest.raises(InputError):
            parse_subgroup("weight<median")


class TestDiagnose:
    def test_empty_group_reports_no_statistics(self):
        model = level_model((1.0, 2.0, 3.0))
        report = diagnose(model, Dataset((), l=0), 2, RngStream(1, 0),
                          group_label="empty")
        assert report.n_observed == 0
        assert report.tau_points == () and report.qq_pairs == ()
        assert report.max_abs_z is None

    def test_correct_model_fits_well(self):
        ds = simlab.generate(simlab.SimModelSpec(1, 200, 10, 0.5),
                             RngStream(70, 0))
        model = fit(ds, ModelConfig(1, simlab.uniform_knot_spec(2)))
        report = diagnose(model, ds, 5, RngStream(71, 0), size=5000)
        assert report.n_observed == 200
        assert len(report.tau_points) == 10
        assert len(report.qq_pairs) == 99
        assert report.max_abs_z < 3.5
