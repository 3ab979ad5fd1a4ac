import json
import math
import random

import jsonschema
import numpy as np
import pytest
import scipy.stats

from phrasemeter.analysis import (AnalysisError, DegenerateDataError,
                                  PhraseSummary, RatingRecord, asymmetry_test,
                                  build_report, ols_regression, paired_t_test,
                                  pearson, quadrant_assign, ratings_regression,
                                  read_ratings, scatter_svg, summaries_tsv,
                                  welch_t_test)
from phrasemeter.corpus import data_path


def summary(pid, group="target", cont=1.0, conv=-2.0, head=-2.0, dep=-2.0,
            ptype="VO", n_target=40, n_matched=40):
    return PhraseSummary(phrase_id=pid, phrase_type=ptype, group=group,
                         target_count=n_target, matched_count=n_matched,
                         mean_contingency=cont, head_conv=head, dep_conv=dep,
                         phrase_conv=conv)


class TestAgainstScipy:
    def test_welch_matches_ttest_ind(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            a = rng.normal(size=rng.integers(2, 30), scale=rng.uniform(0.5, 3))
            b = rng.normal(loc=rng.uniform(-1, 1), size=rng.integers(2, 30))
            t, df, p = welch_t_test(a, b)
            ref = scipy.stats.ttest_ind(a, b, equal_var=False)
            assert t == pytest.approx(ref.statistic, abs=1e-9)
            assert df == pytest.approx(ref.df, abs=1e-9)
            assert p == pytest.approx(ref.pvalue, abs=1e-9)

    def test_paired_matches_ttest_1samp(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            d = rng.normal(loc=rng.uniform(-1, 1), size=rng.integers(2, 40))
            t, df, p = paired_t_test(d)
            ref = scipy.stats.ttest_1samp(d, 0.0)
            assert t == pytest.approx(ref.statistic, abs=1e-9)
            assert df == len(d) - 1
            assert p == pytest.approx(ref.pvalue, abs=1e-9)

    def test_pearson_matches_pearsonr(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            n = rng.integers(3, 50)
            x = rng.normal(size=n)
            y = 0.3 * x + rng.normal(size=n)
            r, p = pearson(x, y)
            ref = scipy.stats.pearsonr(x, y)
            assert r == pytest.approx(ref.statistic, abs=1e-9)
            assert p == pytest.approx(ref.pvalue, abs=1e-9)

    def test_ols_matches_linregress(self):
        rng = np.random.default_rng(14)
        for _ in range(100):
            n = rng.integers(3, 40)
            x = rng.normal(size=n)
            y = 1.5 * x + rng.normal(size=n)
            slope, intercept, p = ols_regression(x, y)
            ref = scipy.stats.linregress(x, y)
            assert slope == pytest.approx(ref.slope, abs=1e-9)
            assert intercept == pytest.approx(ref.intercept, abs=1e-9)
            assert p == pytest.approx(ref.pvalue, abs=1e-9)


class TestTrivialIdentities:
    def test_equal_samples_give_zero_t(self):
        a = [1.0, 2.0, 3.0, 4.0]
        t, _, p = welch_t_test(a, list(a))
        assert abs(t) < 1e-12
        assert p == pytest.approx(1.0, abs=1e-12)

    def test_all_zero_differences(self):
        t, df, p = paired_t_test([0.0] * 8)
        assert (t, df, p) == (0.0, 7.0, 1.0)

    def test_identical_nonzero_differences_degenerate(self):
        with pytest.raises(DegenerateDataError):
            paired_t_test([2.0, 2.0, 2.0])

    def test_perfect_correlation(self):
        x = [1.0, 2.0, 3.0, 4.0]
        r, p = pearson(x, [2 * v + 1 for v in x])
        assert r == pytest.approx(1.0, abs=1e-12)
        assert p == pytest.approx(0.0, abs=1e-12)
        r2, _ = pearson(x, [-v for v in x])
        assert r2 == pytest.approx(-1.0, abs=1e-12)

    def test_exact_line_has_zero_slope_p(self):
        x = [0.0, 1.0, 2.0, 3.0]
        slope, intercept, p = ols_regression(x, [3 * v - 1 for v in x])
        assert slope == pytest.approx(3.0, abs=1e-12)
        assert intercept == pytest.approx(-1.0, abs=1e-12)
        assert p == 0.0

    def test_degenerate_inputs_raise(self):
        with pytest.raises(AnalysisError):
            welch_t_test([1.0], [1.0, 2.0])
        with pytest.raises(DegenerateDataError):
            welch_t_test([1.0, 1.0], [1.0, 1.0])
        with pytest.raises(DegenerateDataError):
            pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
        with pytest.raises(DegenerateDataError):
            ols_regression([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])


class TestQuadrants:
    def test_mean_thresholds(self):
        pts = [(-1.0, 2.0), (-3.0, 0.0)]
        labels, (tc, tk) = quadrant_assign(pts)
        assert (tc, tk) == (-2.0, 1.0)
        assert labels == ["high_conv_high_cont", "low_conv_low_cont"]

    def test_explicit_thresholds_and_tie_goes_high(self):
        pts = [(0.0, 0.0), (-0.1, -0.1)]
        labels, _ = quadrant_assign(pts, thresholds=(0.0, 0.0))
        assert labels == ["high_conv_high_cont", "low_conv_low_cont"]

    def test_empty_rejected(self):
        with pytest.raises(AnalysisError):
            quadrant_assign([])


class TestAsymmetry:
    def test_head_vs_dep(self):
        rows = [summary(f"p{i}", head=-1.0 - 0.01 * i, dep=-3.0 - 0.01 * i)
                for i in range(6)]
        t, df, p, (mh, md), breakdown = asymmetry_test(rows, "target")
        want = scipy.stats.ttest_ind([s.head_conv for s in rows],
                                     [s.dep_conv for s in rows],
                                     equal_var=False)
        assert t == pytest.approx(want.statistic, abs=1e-9)
        assert mh > md
        assert {r["phrase_id"] for r in breakdown["VO"]} == {f"p{i}" for i in range(6)}

    def test_filters_by_group_and_inclusion(self):
        rows = [summary("a"), summary("b", head=-1.5, dep=-2.5),
                summary("thin", n_target=3)]
        _, _, _, _, breakdown = asymmetry_test(rows, "target")
        assert [r["phrase_id"] for r in breakdown["VO"]] == ["a", "b"]
        with pytest.raises(AnalysisError):
            asymmetry_test(rows, "nonexistent")


class TestRatings:
    def test_read_ratings(self, tmp_path):
        p = tmp_path / "r.tsv"
        p.write_text("participant\titem\tphrase_id\telement\trating\n"
                     "p1\ti1\tspill_bean\thead\t5\n"
                     "p2\ti1\tspill_bean\thead\t3\n"
                     "p1\ti2\teat_pea\tphrase\t2\n")
        recs = read_ratings(p)
        assert len(recs) == 3
        assert recs[0].rating == 5

    def test_rating_scale_enforced(self):
        with pytest.raises(AnalysisError):
            RatingRecord("p", "i", "x", "head", 7)
        with pytest.raises(AnalysisError):
            RatingRecord("p", "i", "x", "verb", 3)

    def test_regression_aggregates_items(self):
        ratings = []
        conv = {}
        rng = random.Random(3)
        for i in range(12):
            pid = f"p{i}"
            conv[pid] = -float(i)
            base = 1 + (5 * i) // 12
            for part in ("a", "b"):
                ratings.append(RatingRecord(part, f"item{i}", pid, "head",
                                            min(6, base + rng.randint(0, 1))))
        slope, intercept, p = ratings_regression(ratings, conv, element="head")
        # conv decreases with i while ratings increase: negative slope
        assert slope < 0
        # element filter drops everything
        with pytest.raises(AnalysisError):
            ratings_regression(ratings, conv, element="phrase")


def full_summaries():
    out = []
    rng = random.Random(5)
    for i in range(8):
        idiom = i < 4
        pid = f"p{i}"
        cont = 2.0 + rng.random() * 0.1 if idiom else 0.1 * rng.random()
        conv = -9.0 - rng.random() if idiom else -1.0 - rng.random()
        out.append(summary(pid, "target", cont=cont, conv=conv,
                           head=conv + 0.2, dep=conv - 0.2,
                           ptype="VO" if i % 2 else "AN"))
        out.append(summary(pid, "matched", cont=0.05 * rng.random(),
                           conv=-1.2 - rng.random(), head=-1.1, dep=-1.3,
                           ptype="VO" if i % 2 else "AN"))
    return out


class TestReport:
    def test_build_report_shape_and_schema(self):
        report = build_report(full_summaries())
        payload = json.loads(report.to_json())
        schema = json.load(open(data_path("report.schema.json")))
        jsonschema.validate(payload, schema)
        assert payload["n_included_phrases"] == 8
        assert sum(payload["quadrant_counts"].values()) == 16
        assert payload["group_means"]["target"]["n"] == 8

    def test_to_json_is_deterministic(self):
        a = build_report(full_summaries()).to_json()
        b = build_report(full_summaries()).to_json()
        assert a == b

    def test_instance_filter_raises_when_everything_excluded(self):
        rows = [summary("a", n_target=3, n_matched=3)]
        with pytest.raises(AnalysisError):
            build_report(rows)

    def test_min_instances_filter(self):
        rows = full_summaries() + [summary("thin", n_target=10, n_matched=50)]
        report = build_report(rows, min_instances=30)
        assert all(p["phrase_id"] != "thin" for p in report.points)
        report2 = build_report(rows, min_instances=10)
        assert any(p["phrase_id"] == "thin" for p in report2.points)

    def test_explicit_thresholds_used_verbatim(self):
        report = build_report(full_summaries(), thresholds=(-5.0, 1.0))
        assert report.thresholds == {"conventionality": -5.0,
                                     "contingency": 1.0}
        for p in report.points:
            want_c = "low" if p["conventionality"] < -5.0 else "high"
            want_k = "low" if p["contingency"] < 1.0 else "high"
            assert p["quadrant"] == f"{want_c}_conv_{want_k}_cont"

    def test_paired_test_matches_direct_computation(self):
        rows = full_summaries()
        report = build_report(rows)
        target = {s.phrase_id: s for s in rows if s.group == "target"}
        matched = {s.phrase_id: s for s in rows if s.group == "matched"}
        diffs = [target[k].mean_contingency - matched[k].mean_contingency
                 for k in sorted(target)]
        t, df, p = paired_t_test(diffs)
        assert report.paired_contingency["t"] == pytest.approx(t, abs=1e-12)
        assert report.paired_contingency["df"] == df

    def test_ratings_block(self):
        rows = full_summaries()
        ratings = []
        for i in range(8):
            for part in ("a", "b", "c"):
                ratings.append(RatingRecord(part, f"it{i}", f"p{i}", "phrase",
                                            6 if i < 4 else 2))
        report = build_report(rows, ratings=ratings)
        assert report.ratings is not None
        assert "slope" in report.ratings
        payload = json.loads(report.to_json())
        schema = json.load(open(data_path("report.schema.json")))
        jsonschema.validate(payload, schema)


class TestSummariesTsv:
    def test_layout_and_na(self):
        rows = [summary("b"), summary("a", cont=None, conv=None,
                                      head=None, dep=None)]
        text = summaries_tsv(rows)
        lines = text.splitlines()
        assert lines[0].split("\t")[:3] == ["phrase_id", "phrase_type", "group"]
        # sorted by (group, phrase_id)
        assert [l.split("\t")[0] for l in lines[1:]] == ["a", "b"]
        assert "NA" in lines[1]

    def test_floats_round_trip_exactly(self):
        value = -3.123456789012345
        text = summaries_tsv([summary("a", cont=value)])
        cell = text.splitlines()[1].split("\t")[5]
        assert float(cell) == value


class TestScatterSvg:
    def test_contains_points_thresholds_and_means(self):
        report = build_report(full_summaries())
        svg = scatter_svg(report)
        assert svg.count("<circle") == len(report.points) + 2
        assert svg.count("<line") == 2
        assert "conventionality" in svg and "contingency" in svg

    def test_deterministic(self):
        a = scatter_svg(build_report(full_summaries()))
        b = scatter_svg(build_report(full_summaries()))
        assert a == b
