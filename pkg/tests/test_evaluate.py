import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsrep.core import BenchmarkSuite, LabeledDataset, SuiteEntry, TimeSeries
from tsrep.dtw import DtwConfig
from tsrep.evaluate import (
    EvaluationReport,
    ModelConfig,
    RunResult,
    TableRow,
    accuracy,
    average_ranks,
    balanced_accuracy,
    cd_groups,
    holm_correction,
    pc1_correlation,
    pca_project,
    render_main_table,
    render_report,
    round_half_up,
    run_benchmark,
    score_correlation,
    wilcoxon_signed_rank,
)


# ---------------------------------------------------------------------------
# Independent oracles
# ---------------------------------------------------------------------------

def midranks_oracle(values):
    """Rank by sorting, averaging tied spans (independent of the implementation)."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        for t in range(i, j + 1):
            ranks[order[t]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def wilcoxon_enumeration_oracle(x, y):
    """Exact two-sided p by enumerating all 2^n sign assignments."""
    d = [xi - yi for xi, yi in zip(x, y) if xi != yi]
    n = len(d)
    ranks = midranks_oracle([abs(v) for v in d])
    w_obs = sum(r for r, v in zip(ranks, d) if v > 0)
    lower = upper = 0
    for signs in itertools.product([0, 1], repeat=n):
        w = sum(r for r, s in zip(ranks, signs) if s)
        if w <= w_obs + 1e-12:
            lower += 1
        if w >= w_obs - 1e-12:
            upper += 1
    return min(1.0, 2 * min(lower, upper) / 2**n)


class TestMetrics:
    def test_perfect(self):
        assert accuracy([1, 0], [1, 0]) == 1.0
        assert balanced_accuracy([1, 0], [1, 0]) == 1.0

    def test_imbalanced_example(self):
        truth = [0, 0, 0, 1]
        pred = [0, 0, 0, 0]
        assert accuracy(pred, truth) == 0.75
        assert balanced_accuracy(pred, truth) == 0.5

    def test_balanced_accuracy_matches_tally_oracle(self):
        rng = np.random.default_rng(0)
        truth = rng.integers(0, 5, size=200)
        pred = rng.integers(0, 5, size=200)
        recalls = []
        for cls in sorted(set(truth.tolist())):
            hits = sum(1 for p, t in zip(pred, truth) if t == cls and p == cls)
            total = sum(1 for t in truth if t == cls)
            recalls.append(hits / total)
        assert balanced_accuracy(pred, truth) == pytest.approx(sum(recalls) / len(recalls), abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            accuracy([1], [1, 2])


class TestAverageRanks:
    def test_two_configs(self):
        np.testing.assert_array_equal(average_ranks(np.array([[0.9], [0.8]])), [1.0, 2.0])

    def test_tie_midrank(self):
        np.testing.assert_array_equal(average_ranks(np.array([[0.5], [0.5]])), [1.5, 1.5])

    def test_matches_sort_oracle(self):
        rng = np.random.default_rng(1)
        scores = rng.random((4, 10))
        got = average_ranks(scores)
        expect = np.zeros(4)
        for d in range(10):
            col = scores[:, d]
            ranks = midranks_oracle([-v for v in col])
            expect += np.array(ranks)
        np.testing.assert_allclose(got, expect / 10, atol=1e-12)

    def test_all_identical_gives_mid(self):
        scores = np.full((5, 3), 0.7)
        np.testing.assert_array_equal(average_ranks(scores), [3.0] * 5)

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(2)
        scores = rng.random((3, 6))
        np.testing.assert_array_equal(average_ranks(scores), average_ranks(np.exp(3 * scores)))


class TestWilcoxon:
    def test_degenerate(self):
        r = wilcoxon_signed_rank([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert r.p == 1.0 and r.degenerate

    def test_all_positive_n5(self):
        x = [1.0, 2.0, 3.0, 4.0, 5.0]
        y = [0.0, 0.0, 0.0, 0.0, 0.0]
        r = wilcoxon_signed_rank(x, y)
        assert r.p == pytest.approx(2 / 2**5, abs=1e-15)

    def test_matches_enumeration_oracle_random(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            n = int(rng.integers(4, 11))
            x = rng.standard_normal(n)
            y = rng.standard_normal(n)
            got = wilcoxon_signed_rank(x, y)
            assert got.method == "exact"
            assert got.p == pytest.approx(wilcoxon_enumeration_oracle(x, y), abs=1e-12)

    def test_ties_in_abs_differences(self):
        x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
        y = [0.0, 1.0, 4.0, 3.0, 4.0, 7.0]  # |d| = {1,1,1,1,1,1}
        got = wilcoxon_signed_rank(x, y)
        assert got.p == pytest.approx(wilcoxon_enumeration_oracle(x, y), abs=1e-12)

    def test_symmetry_under_swap(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal(8)
        y = rng.standard_normal(8)
        assert wilcoxon_signed_rank(x, y).p == wilcoxon_signed_rank(y, x).p

    def test_too_few_nonzero(self):
        with pytest.raises(ValueError):
            wilcoxon_signed_rank([1.0, 1.0, 2.0], [1.0, 1.0, 1.0])

    def test_large_n_uses_approximation(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal(40)
        y = x + rng.standard_normal(40) * 0.5 + 0.3
        r = wilcoxon_signed_rank(x, y)
        assert r.method == "approx" and 0.0 < r.p <= 1.0

    @given(st.integers(0, 10_000))
    @settings(max_examples=30, deadline=None)
    def test_exact_p_in_unit_interval(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(7)
        y = rng.standard_normal(7)
        r = wilcoxon_signed_rank(x, y)
        assert 0.0 < r.p <= 1.0


class TestHolm:
    def test_single_hypothesis(self):
        assert holm_correction([0.05], alpha=0.1) == [True]
        assert holm_correction([0.2], alpha=0.1) == [False]

    def test_worked_example(self):
        # thresholds 0.1/3, 0.1/2, 0.1: reject, reject, accept
        assert holm_correction([0.01, 0.04, 0.3], alpha=0.1) == [True, True, False]

    def test_all_ones(self):
        assert holm_correction([1.0, 1.0, 1.0]) == [False, False, False]

    def test_step_down_stops_at_first_failure(self):
        # sorted: 0.01 <= 0.1/3 reject; 0.06 > 0.1/2 stop; 0.07 not tested
        assert holm_correction([0.07, 0.01, 0.06], alpha=0.1) == [False, True, False]

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=12), st.floats(0.01, 0.2))
    @settings(max_examples=80, deadline=None)
    def test_between_bonferroni_and_uncorrected(self, pvals, alpha):
        holm = holm_correction(pvals, alpha)
        m = len(pvals)
        bonf = [p <= alpha / m for p in pvals]
        raw = [p <= alpha for p in pvals]
        for h, b, r in zip(holm, bonf, raw):
            assert (not b) or h  # Holm rejects a superset of Bonferroni
            assert (not h) or r  # and a subset of uncorrected


class TestCdGroups:
    def test_no_rejections_one_group(self):
        reject = np.zeros((4, 4), dtype=bool)
        assert cd_groups([1.0, 2.0, 3.0, 4.0], reject) == [{0, 1, 2, 3}]

    def test_all_rejected_no_groups(self):
        reject = ~np.eye(3, dtype=bool)
        assert cd_groups([1.0, 2.0, 3.0], reject) == []

    def test_worked_example(self):
        reject = np.zeros((4, 4), dtype=bool)
        for i, j in [(0, 2), (0, 3), (1, 3)]:
            reject[i, j] = reject[j, i] = True
        groups = cd_groups([1.0, 2.0, 3.0, 4.0], reject)
        assert groups == [{0, 1}, {1, 2}, {2, 3}]

    def test_groups_exclude_rejected_pairs(self):
        rng = np.random.default_rng(6)
        m = 6
        ranks = rng.random(m).tolist()
        reject = np.zeros((m, m), dtype=bool)
        for i in range(m):
            for j in range(i + 1, m):
                if rng.random() < 0.3:
                    reject[i, j] = reject[j, i] = True
        groups = cd_groups(ranks, reject)
        for g in groups:
            for i in g:
                for j in g:
                    assert not reject[i, j]
        # every non-rejected adjacent pair in rank order is covered by some group
        order = np.argsort(ranks)
        for a, b in zip(order, order[1:]):
            if not reject[a, b]:
                assert any(a in g and b in g for g in groups)

    def test_asymmetric_matrix_rejected(self):
        reject = np.zeros((2, 2), dtype=bool)
        reject[0, 1] = True
        with pytest.raises(ValueError):
            cd_groups([1.0, 2.0], reject)


class TestCorrelation:
    def test_linear_map(self):
        xs = np.array([1.0, 2.0, 3.0, 4.0])
        r, rho = score_correlation(xs, 2 * xs + 1)
        assert r == pytest.approx(1.0, abs=1e-12)
        assert rho == pytest.approx(1.0, abs=1e-12)

    def test_monotone_decreasing_spearman(self):
        xs = np.array([1.0, 2.0, 3.0, 4.0])
        _, rho = score_correlation(xs, np.exp(-xs))
        assert rho == pytest.approx(-1.0, abs=1e-12)

    def test_matches_direct_formula(self):
        rng = np.random.default_rng(7)
        xs = rng.standard_normal(8)
        ys = rng.standard_normal(8)
        r, _ = score_correlation(xs, ys)
        direct = np.sum((xs - xs.mean()) * (ys - ys.mean())) / np.sqrt(
            np.sum((xs - xs.mean()) ** 2) * np.sum((ys - ys.mean()) ** 2)
        )
        assert r == pytest.approx(direct, abs=1e-12)

    def test_zero_variance_rejected(self):
        with pytest.raises(ValueError, match="variance"):
            score_correlation([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])


class TestPca:
    def test_line_in_3d(self):
        t = np.linspace(0, 1, 30)
        X = np.outer(t, [1.0, 2.0, 3.0]) + 5.0
        with pytest.raises(ValueError, match="rank"):
            pca_project(X, dims=2)
        p1 = pca_project(X, dims=1)
        assert p1.shape == (30, 1)

    def test_second_component_small_for_near_line(self):
        rng = np.random.default_rng(8)
        t = np.linspace(0, 1, 50)
        X = np.outer(t, [1.0, 2.0, 3.0]) + rng.standard_normal((50, 3)) * 1e-7
        proj = pca_project(X, dims=2)
        assert np.var(proj[:, 1]) < 1e-10 * np.var(proj[:, 0])

    def test_projection_variances_match_covariance_eigenvalues(self):
        rng = np.random.default_rng(9)
        X = rng.standard_normal((40, 6)) @ rng.standard_normal((6, 6))
        proj = pca_project(X, dims=2)
        cov = np.cov(X, rowvar=False, bias=False)
        eig = np.sort(np.linalg.eigvalsh(cov))[::-1]
        got = np.var(proj, axis=0, ddof=1)
        np.testing.assert_allclose(got, eig[:2], atol=1e-9)

    def test_sign_convention(self):
        rng = np.random.default_rng(10)
        X = rng.standard_normal((20, 4))
        p1 = pca_project(X, dims=2)
        p2 = pca_project(-X[::-1] * -1.0, dims=2)  # same data, same result
        np.testing.assert_allclose(np.abs(p1).sum(), np.abs(p2).sum(), rtol=1e-9)

    def test_pc1_correlation_collapsed_matrix(self):
        X = np.ones((10, 4)) * 3.0
        assert pc1_correlation(X, np.arange(10.0)) == 0.0


# ---------------------------------------------------------------------------
# Benchmark orchestration
# ---------------------------------------------------------------------------

def tiny_suite():
    rng = np.random.default_rng(21)
    entries = []
    for name in ("alpha", "beta", "gamma"):
        def mk(split):
            samples = tuple(TimeSeries(rng.standard_normal(12) + cls * 3.0) for cls in (0, 1) for _ in range(4))
            return LabeledDataset(name=name, samples=samples, labels=(0,) * 4 + (1,) * 4, n_classes=2, split=split)

        entries.append(SuiteEntry(train=mk("train"), test=mk("test"), kind="univariate"))
    return BenchmarkSuite(tuple(entries))


def mean_threshold_runner(train, test):
    cut = float(np.mean([s.values.mean() for s in train.samples]))
    return np.array([int(s.values.mean() > cut) for s in test.samples])


def failing_on(bad_name):
    def run(train, test):
        if train.name == bad_name:
            raise RuntimeError("engineered failure")
        return mean_threshold_runner(train, test)

    return run


class TestRunBenchmark:
    def test_ok_run_and_report_shapes(self):
        suite = tiny_suite()
        cfgs = [ModelConfig("thresh", mean_threshold_runner)]
        report = run_benchmark(suite, cfgs, DtwConfig(k=1))
        assert set(report.results) == {("thresh", n) for n in ("alpha", "beta", "gamma")}
        assert all(r.status == "ok" for r in report.results.values())

    def test_fallback_substitution(self):
        suite = tiny_suite()
        good = run_benchmark(suite, [ModelConfig("m", mean_threshold_runner)], DtwConfig(k=1))
        bad = run_benchmark(suite, [ModelConfig("m", failing_on("beta"))], DtwConfig(k=1))

        r = bad.results[("m", "beta")]
        assert r.status == "fallback"
        # the substituted score is exactly the DTW baseline's score on that dataset
        from tsrep.dtw import dtw_knn_classify
        from tsrep.evaluate import accuracy as acc

        entry = [e for e in suite if e.name == "beta"][0]
        pred = dtw_knn_classify(entry.train, entry.test, DtwConfig(k=1))
        assert r.accuracy == acc(pred, np.asarray(entry.test.labels))
        # untouched cells are bit-identical to the failure-free run
        for name in ("alpha", "gamma"):
            assert bad.results[("m", name)].accuracy == good.results[("m", name)].accuracy
            assert bad.results[("m", name)].status == "ok"

    def test_resume_skips_completed_cells(self, tmp_path):
        suite = tiny_suite()
        calls = []

        def counting(train, test):
            calls.append(train.name)
            return mean_threshold_runner(train, test)

        cfgs = [ModelConfig("c", counting)]
        run_benchmark(suite, cfgs, DtwConfig(k=1), results_dir=str(tmp_path))
        first = len(calls)
        report = run_benchmark(suite, cfgs, DtwConfig(k=1), results_dir=str(tmp_path))
        assert len(calls) == first  # nothing recomputed
        assert all(r.status == "ok" for r in report.results.values())

    def test_parallel_equals_serial(self):
        suite = tiny_suite()
        cfgs = [ModelConfig("a", mean_threshold_runner), ModelConfig("b", failing_on("alpha"))]
        r1 = run_benchmark(suite, cfgs, DtwConfig(k=1), jobs=1)
        r4 = run_benchmark(suite, cfgs, DtwConfig(k=1), jobs=4)
        for key in r1.results:
            assert r1.results[key].accuracy == r4.results[key].accuracy
            assert r1.results[key].status == r4.results[key].status

    def test_all_identical_scores_mid_ranks(self):
        suite = tiny_suite()
        cfgs = [ModelConfig(f"m{i}", mean_threshold_runner) for i in range(3)]
        report = run_benchmark(suite, cfgs, DtwConfig(k=1))
        ranks, _, _, groups = report.analysis()
        np.testing.assert_array_equal(ranks, [2.0, 2.0, 2.0])
        assert groups == [{0, 1, 2}]


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

PAPER_ROWS = [
    TableRow("TiRex", "Dec", "yes", 0.80, 0.81, 0.74, 0.74, 0.79, 0.80),
    TableRow("Chr. Bolt (Base)", "EncDec", "yes", 0.77, 0.79, 0.72, 0.74, 0.76, 0.78),
    TableRow("Moirai (Large)", "Enc", "yes", 0.79, 0.80, 0.70, 0.70, 0.78, 0.78),
    TableRow("TimesFM 2.0", "Dec", "yes", 0.79, 0.79, 0.70, 0.70, 0.77, 0.78),
    TableRow("TimesFM 1.0", "Dec", "yes", 0.74, 0.75, 0.71, 0.72, 0.73, 0.74),
    TableRow("Chronos (Base)", "EncDec", "yes", 0.71, 0.76, 0.71, 0.72, 0.71, 0.75),
    TableRow("Toto", "Dec", "yes", 0.71, 0.74, 0.71, 0.70, 0.71, 0.73),
]


class TestRendering:
    def test_round_half_up(self):
        assert round_half_up(0.745) == 0.75
        assert round_half_up(0.744999) == 0.74
        assert round_half_up(0.805) == 0.81

    def test_headline_row_reproduced(self):
        table = render_main_table(PAPER_ROWS)
        tirex = [ln for ln in table.splitlines() if ln.startswith("| TiRex")][0]
        # all six TiRex cells are column maxima in this injection -> all bold
        assert "**0.80** | **0.81** | **0.74** | **0.74** | **0.79** | **0.80**" in tirex

    def test_bold_marks_column_maxima_only(self):
        table = render_main_table(PAPER_ROWS)
        bolt = [ln for ln in table.splitlines() if "Chr. Bolt" in ln][0]
        assert "**0.74**" in bolt  # shares the multivariate Stat+Diff maximum
        assert "**0.77**" not in bolt and "**0.79**" not in bolt

    def test_single_row_no_ambiguity(self):
        table = render_main_table([TableRow("only", uni_noaug=0.5)])
        assert table.count("**") == 2

    def test_csv_round_trip(self):
        suite = tiny_suite()
        report = run_benchmark(suite, [ModelConfig("m", mean_threshold_runner)], DtwConfig(k=1))
        text = render_report(report, "csv")
        rows = [ln.split(",") for ln in text.strip().splitlines()[1:]]
        for row in rows:
            key = (row[0], row[1])
            assert float(row[3]) == report.results[key].accuracy

    def test_cd_plot_data(self):
        suite = tiny_suite()
        cfgs = [ModelConfig(f"m{i}", mean_threshold_runner) for i in range(2)]
        report = run_benchmark(suite, cfgs, DtwConfig(k=1))
        text = render_report(report, "cd-plot-data")
        assert "rank m0" in text and "group m0 m1" in text

    def test_unknown_style(self):
        suite = tiny_suite()
        report = run_benchmark(suite, [ModelConfig("m", mean_threshold_runner)], DtwConfig(k=1))
        with pytest.raises(ValueError):
            render_report(report, "html")
