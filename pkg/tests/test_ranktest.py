import numpy as np
import pytest

from condcharts import (  # noqa: F401
    CollinearityError,
    InputError,
    RngStream,
    TestSpec as RankColumns,
    build_design,
    chisq_cdf,
    rank_score_test,
    simlab,
)
from oracles import chisq_cdf_oracle


def model1_design(n=200, b=0.0, knots=1, seed=100, rep=0, m=10):
    ds = simlab.generate(simlab.SimModelSpec(1, n, m, b), RngStream(seed, rep))
    return build_design(ds, 1, simlab.uniform_knot_spec(knots))


class TestChisqCdf:
    def test_zero_is_zero(self):
        for q in range(1, 11):
            assert chisq_cdf(0.0, q) == 0.0

    def test_two_dof_closed_form(self):
        xs = np.linspace(0.0, 40.0, 81)
        assert np.max(np.abs(chisq_cdf(xs, 2) - (1.0 - np.exp(-xs / 2)))) < 1e-12

    def test_standard_critical_value(self):
        assert abs(chisq_cdf(3.841459, 1) - 0.95) < 1e-6
        assert abs(chisq_cdf_oracle(3.841459, 1) - 0.95) < 1e-6

    def test_matches_independent_oracle(self):
        for q in range(1, 11):
            for x in np.linspace(0.0, 50.0, 101):
                assert abs(chisq_cdf(x, q) - chisq_cdf_oracle(x, q)) < 1e-10

    def test_monotone_in_x(self):
        xs = np.linspace(0, 30, 400)
        vals = chisq_cdf(xs, 3)
        assert np.all(np.diff(vals) >= 0)

    def test_negative_x_rejected(self):
        with pytest.raises(InputError):
            chisq_cdf(-1.0, 2)


class TestRankScoreTest:
    def test_statistic_and_pvalue_ranges(self):
        design = model1_design()
        result = rank_score_test(design, RankColumns((0,), 0.5))
        assert result.statistic >= 0.0
        assert 0.0 <= result.p_value <= 1.0
        assert result.dof == 1
        assert result.restricted_objective > 0.0

    def test_joint_test_dof(self):
        design = model1_design()
        result = rank_score_test(design, RankColumns((0, 1), 0.5))
        assert result.dof == 2

    def test_pvalue_consistent_with_cdf(self):
        design = model1_design(seed=55)
        result = rank_score_test(design, RankColumns((0,), 0.5))
        assert result.p_value == 1.0 - chisq_cdf(result.statistic, 1)

    def test_detects_strong_lag_effect(self):
        design = model1_design(b=0.5, seed=7)
        result = rank_score_test(design, RankColumns((0,), 0.5))
        assert result.p_value < 1e-4

    def test_normalization_constant_cancels(self):
        design = model1_design(seed=11)
        spec = RankColumns((0,), 0.5)
        by_subjects = rank_score_test(design, spec)
        by_rows = rank_score_test(design, spec, n_subjects=design.n_rows)
        assert abs(by_subjects.statistic - by_rows.statistic) < 1e-9

    def test_projection_orthogonality(self):
        # the score covariates are least-squares residuals against the
        # restricted design, so they must be orthogonal to it
        import scipy.linalg

        design = model1_design(seed=23)
        W = np.hstack([design.spline_block, design.linear_block[:, 1:]])
        X1 = design.linear_block[:, :1]
        Q = scipy.linalg.qr(W, mode="economic")[0]
        V = X1 - Q @ (Q.T @ X1)
        cross = np.abs(V.T @ W).max()
        scale = np.linalg.norm(X1) * np.linalg.norm(W)
        assert cross / scale < 1e-8

    def test_zero_column_is_collinearity_error(self):
        design = model1_design(seed=31)
        zeroed = np.array(design.linear_block)
        zeroed[:, 2] = 0.0
        from condcharts.longdata import DesignSystem
        broken = DesignSystem(design.spline_block, zeroed, design.response,
                              design.subject_ids, design.row_subject,
                              design.row_j)
        with pytest.raises(CollinearityError):
            rank_score_test(broken, RankColumns((2,), 0.5))

    def test_small_sample_guard(self):
        design = model1_design(n=2, m=4, seed=3)
        with pytest.raises(InputError):
            rank_score_test(design, RankColumns((0,), 0.5))

    def test_column_out_of_range(self):
        design = model1_design(seed=5)
        with pytest.raises(InputError):
            rank_score_test(design, RankColumns((7,), 0.5))

    def test_duplicate_columns_rejected(self):
        with pytest.raises(InputError):
            RankColumns((0, 0), 0.5)
