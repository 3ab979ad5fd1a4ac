"""Group comparisons and report generation.

Covers: the target-vs-matched contingency comparison with the minimum
instance-count filter, the conventionality/contingency quadrant placement
with mean-value thresholds, the head/dependent conventionality asymmetry,
and an OLS regression of human literalness ratings on conventionality.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats as sps

DEFAULT_MIN_INSTANCES = 30

QUADRANTS = ("low_conv_high_cont", "high_conv_high_cont",
             "low_conv_low_cont", "high_conv_low_cont")


class AnalysisError(Exception):
    pass


class DegenerateDataError(AnalysisError):
    """A statistic's denominator is zero or the design is degenerate."""


@dataclass
class PhraseSummary:
    phrase_id: str
    phrase_type: str
    group: str                        # target | matched
    target_count: int
    matched_count: int
    mean_contingency: Optional[float]
    head_conv: Optional[float]
    dep_conv: Optional[float]
    phrase_conv: Optional[float]

    @property
    def included(self) -> bool:
        return (self.target_count >= self.min_instances
                and self.matched_count >= self.min_instances)

    min_instances: int = DEFAULT_MIN_INSTANCES

    def complete(self) -> bool:
        return (self.mean_contingency is not None
                and self.phrase_conv is not None)


@dataclass(frozen=True)
class RatingRecord:
    participant: str
    item: str
    phrase_id: str
    element: str   # head | dep | phrase
    rating: int

    def __post_init__(self):
        if not 1 <= self.rating <= 6:
            raise AnalysisError(f"rating {self.rating} outside the 1..6 scale")
        if self.element not in ("head", "dep", "phrase"):
            raise AnalysisError(f"unknown highlighted element {self.element!r}")


def read_ratings(path) -> list[RatingRecord]:
    out = []
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().rstrip("\n").split("\t")
        want = ["participant", "item", "phrase_id", "element", "rating"]
        if header != want:
            raise AnalysisError(f"bad ratings header {header!r}; want {want}")
        for raw in handle:
            if not raw.strip():
                continue
            p, item, pid, el, rating = raw.rstrip("\n").split("\t")
            out.append(RatingRecord(p, item, pid, el, int(rating)))
    return out


# --- hypothesis tests ------------------------------------------------------

def welch_t_test(a, b) -> tuple[float, float, float]:
    """Welch's two-sample t with Welch-Satterthwaite degrees of freedom."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) < 2 or len(b) < 2:
        raise AnalysisError("each sample needs >= 2 observations")
    va, vb = a.var(ddof=1), b.var(ddof=1)
    na, nb = len(a), len(b)
    se2 = va / na + vb / nb
    if se2 == 0.0:
        if a.mean() == b.mean():
            raise DegenerateDataError("both samples constant and equal")
        raise DegenerateDataError("both samples constant; t undefined")
    t = (a.mean() - b.mean()) / math.sqrt(se2)
    df = se2 ** 2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    p = 2.0 * sps.t.sf(abs(t), df)
    return t, df, p


def paired_t_test(diffs) -> tuple[float, float, float]:
    """One-sample t on per-phrase difference means; df = N - 1."""
    d = np.asarray(diffs, dtype=np.float64)
    n = len(d)
    if n < 2:
        raise AnalysisError("need >= 2 differences")
    sd = d.std(ddof=1)
    if sd == 0.0:
        if d.mean() == 0.0:
            return 0.0, float(n - 1), 1.0
        raise DegenerateDataError("all differences identical and nonzero")
    t = d.mean() / (sd / math.sqrt(n))
    df = float(n - 1)
    p = 2.0 * sps.t.sf(abs(t), df)
    return t, df, p


def pearson(x, y) -> tuple[float, float]:
    """Sample correlation with a t-transform p-value (n - 2 df)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) != len(y) or len(x) < 3:
        raise AnalysisError("need equal-length samples of >= 3 points")
    sx, sy = x.std(), y.std()
    if sx == 0.0 or sy == 0.0:
        raise DegenerateDataError("correlation undefined for constant input")
    r = float(np.mean((x - x.mean()) * (y - y.mean())) / (sx * sy))
    r = max(-1.0, min(1.0, r))
    n = len(x)
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    p = 2.0 * sps.t.sf(abs(t), n - 2)
    return r, p


def ols_regression(x, y) -> tuple[float, float, float]:
    """OLS slope/intercept of y on x, with a two-sided slope p-value."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) != len(y) or len(x) < 3:
        raise AnalysisError("need >= 3 matched pairs")
    sxx = np.sum((x - x.mean()) ** 2)
    if sxx == 0.0:
        raise DegenerateDataError("constant predictor; design is degenerate")
    slope = float(np.sum((x - x.mean()) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    n = len(x)
    rss = float(np.sum(resid ** 2))
    if rss == 0.0:
        return slope, intercept, 0.0
    se = math.sqrt(rss / (n - 2) / sxx)
    t = slope / se
    p = 2.0 * sps.t.sf(abs(t), n - 2)
    return slope, intercept, p


def ratings_regression(ratings: list[RatingRecord],
                       conv_scores: dict[str, float],
                       element: Optional[str] = None) -> tuple[float, float, float]:
    """OLS of mean item rating on the phrase's conventionality score."""
    by_item: dict[str, list[int]] = {}
    item_phrase: dict[str, str] = {}
    for rec in ratings:
        if element is not None and rec.element != element:
            continue
        by_item.setdefault(rec.item, []).append(rec.rating)
        item_phrase[rec.item] = rec.phrase_id
    xs, ys = [], []
    for item in sorted(by_item):
        pid = item_phrase[item]
        if pid in conv_scores:
            xs.append(conv_scores[pid])
            ys.append(sum(by_item[item]) / len(by_item[item]))
    if len(xs) < 3:
        raise AnalysisError("fewer than 3 (rating, score) pairs after matching")
    return ols_regression(xs, ys)


# --- quadrants and asymmetry ----------------------------------------------

def quadrant_assign(points: list[tuple[float, float]],
                    thresholds: Optional[tuple[float, float]] = None
                    ) -> tuple[list[str], tuple[float, float]]:
    """Label each (conv, cont) point; thresholds default to the means.

    Points exactly on a threshold go to the "high" side.
    """
    if not points:
        raise AnalysisError("no points to assign")
    conv = np.array([p[0] for p in points], dtype=np.float64)
    cont = np.array([p[1] for p in points], dtype=np.float64)
    if thresholds is None:
        thresholds = (float(conv.mean()), float(cont.mean()))
    tc, tk = thresholds
    labels = []
    for cv, ck in points:
        side_c = "high" if cv >= tc else "low"
        side_k = "high" if ck >= tk else "low"
        labels.append(f"{side_c}_conv_{side_k}_cont")
    return labels, thresholds


def asymmetry_test(summaries: list[PhraseSummary], group: str):
    """Welch test of head vs dependent conventionality within one group,
    plus a per-phrase-type breakdown of (phrase, head, dep) scores."""
    rows = [s for s in summaries if s.group == group and s.included
            and s.head_conv is not None and s.dep_conv is not None]
    if not rows:
        raise AnalysisError(f"no usable summaries in group {group!r}")
    heads = [s.head_conv for s in rows]
    deps = [s.dep_conv for s in rows]
    t, df, p = welch_t_test(heads, deps)
    breakdown = {}
    for s in rows:
        breakdown.setdefault(s.phrase_type, []).append(
            {"phrase_id": s.phrase_id, "phrase_conv": s.phrase_conv,
             "head_conv": s.head_conv, "dep_conv": s.dep_conv})
    means = (float(np.mean(heads)), float(np.mean(deps)))
    return t, df, p, means, breakdown


# --- report assembly -------------------------------------------------------

@dataclass
class AnalysisReport:
    min_instances: int
    n_included_phrases: int
    group_means: dict
    paired_contingency: dict
    correlation: dict
    thresholds: dict
    quadrant_counts: dict
    points: list
    asymmetry: dict
    ratings: Optional[dict] = None
    notes: list = field(default_factory=list)

    def to_json(self) -> str:
        payload = {"min_instances": self.min_instances,
                   "n_included_phrases": self.n_included_phrases,
                   "group_means": self.group_means,
                   "paired_contingency": self.paired_contingency,
                   "correlation": self.correlation,
                   "thresholds": self.thresholds,
                   "quadrant_counts": self.quadrant_counts,
                   "points": self.points,
                   "asymmetry": self.asymmetry,
                   "ratings": self.ratings,
                   "notes": self.notes}
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def build_report(summaries: list[PhraseSummary],
                 ratings: Optional[list[RatingRecord]] = None,
                 ratings_element: Optional[str] = None,
                 thresholds: Optional[tuple[float, float]] = None,
                 min_instances: int = DEFAULT_MIN_INSTANCES) -> AnalysisReport:
    for s in summaries:
        s.min_instances = min_instances
    usable = [s for s in summaries if s.included and s.complete()]
    if not usable:
        raise AnalysisError("no phrases pass the instance-count filter; "
                            "nothing to report")

    by_group: dict[str, list[PhraseSummary]] = {}
    for s in usable:
        by_group.setdefault(s.group, []).append(s)
    group_means = {
        g: {"contingency": float(np.mean([s.mean_contingency for s in rows])),
            "conventionality": float(np.mean([s.phrase_conv for s in rows])),
            "n": len(rows)}
        for g, rows in sorted(by_group.items())}

    # paired target-minus-matched contingency differences per phrase
    target = {s.phrase_id: s for s in usable if s.group == "target"}
    matched = {s.phrase_id: s for s in usable if s.group == "matched"}
    diffs = [target[pid].mean_contingency - matched[pid].mean_contingency
             for pid in sorted(target) if pid in matched]
    if len(diffs) >= 2:
        t, df, p = paired_t_test(diffs)
        paired = {"test": "paired t on per-phrase target-minus-matched means",
                  "mean_difference": float(np.mean(diffs)), "n": len(diffs),
                  "t": t, "df": df, "p": p}
    else:
        paired = {"test": "paired t on per-phrase target-minus-matched means",
                  "n": len(diffs), "skipped": "fewer than 2 paired phrases"}

    points = sorted(usable, key=lambda s: (s.group, s.phrase_id))
    coords = [(s.phrase_conv, s.mean_contingency) for s in points]
    labels, used_thresholds = quadrant_assign(coords, thresholds)
    counts = {q: 0 for q in QUADRANTS}
    for lab in labels:
        counts[lab] += 1
    point_rows = [
        {"phrase_id": s.phrase_id, "phrase_type": s.phrase_type,
         "group": s.group, "conventionality": s.phrase_conv,
         "contingency": s.mean_contingency, "quadrant": lab}
        for s, lab in zip(points, labels)]

    try:
        r, rp = pearson([c for c, _ in coords], [k for _, k in coords])
        correlation = {"r": r, "p": rp, "n": len(coords)}
    except AnalysisError as exc:
        correlation = {"skipped": str(exc), "n": len(coords)}

    asymmetry = {}
    for group in sorted(by_group):
        try:
            t, df, p, means, breakdown = asymmetry_test(usable, group)
            asymmetry[group] = {"test": "welch t, head vs dependent scores",
                                "t": t, "df": df, "p": p,
                                "mean_head": means[0], "mean_dep": means[1],
                                "by_phrase_type": breakdown}
        except AnalysisError as exc:
            asymmetry[group] = {"skipped": str(exc)}

    ratings_block = None
    if ratings is not None:
        conv_scores = {s.phrase_id: s.phrase_conv
                       for s in usable if s.group == "target"}
        slope, intercept, p = ratings_regression(ratings, conv_scores,
                                                 element=ratings_element)
        ratings_block = {
            "model": "OLS of mean item rating on conventionality "
                     "(substitution for the mixed-effects model)",
            "slope": slope, "intercept": intercept, "p": p}

    return AnalysisReport(
        min_instances=min_instances,
        n_included_phrases=len({s.phrase_id for s in usable}),
        group_means=group_means,
        paired_contingency=paired,
        correlation=correlation,
        thresholds={"conventionality": used_thresholds[0],
                    "contingency": used_thresholds[1]},
        quadrant_counts=counts,
        points=point_rows,
        asymmetry=asymmetry,
        ratings=ratings_block)


SUMMARY_COLUMNS = ("phrase_id", "phrase_type", "group", "target_count",
                   "matched_count", "mean_contingency", "head_conv",
                   "dep_conv", "phrase_conv", "included")


def summaries_tsv(summaries: list[PhraseSummary]) -> str:
    def fmt(x):
        if x is None:
            return "NA"
        if isinstance(x, bool):
            return "1" if x else "0"
        if isinstance(x, float):
            return repr(x)
        return str(x)

    lines = ["\t".join(SUMMARY_COLUMNS)]
    for s in sorted(summaries, key=lambda s: (s.group, s.phrase_id)):
        lines.append("\t".join(fmt(v) for v in (
            s.phrase_id, s.phrase_type, s.group, s.target_count,
            s.matched_count, s.mean_contingency, s.head_conv, s.dep_conv,
            s.phrase_conv, s.included)))
    return "\n".join(lines) + "\n"


# --- scatter plot ----------------------------------------------------------

def scatter_svg(report: AnalysisReport, width: int = 640, height: int = 480) -> str:
    """Deterministic SVG scatter of conventionality vs contingency with the
    threshold lines and large group-average markers."""
    pad = 50.0
    xs = [p["conventionality"] for p in report.points]
    ys = [p["contingency"] for p in report.points]
    tx = report.thresholds["conventionality"]
    ty = report.thresholds["contingency"]
    xlo, xhi = min(xs + [tx]), max(xs + [tx])
    ylo, yhi = min(ys + [ty]), max(ys + [ty])
    xspan = (xhi - xlo) or 1.0
    yspan = (yhi - ylo) or 1.0

    def X(v):
        return pad + (v - xlo) / xspan * (width - 2 * pad)

    def Y(v):
        return height - pad - (v - ylo) / yspan * (height - 2 * pad)

    colors = {"target": "#c0392b", "matched": "#2c6fbb"}
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
           f'height="{height}" viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<line x1="{X(tx):.2f}" y1="{pad:.2f}" x2="{X(tx):.2f}" '
           f'y2="{height - pad:.2f}" stroke="black"/>',
           f'<line x1="{pad:.2f}" y1="{Y(ty):.2f}" x2="{width - pad:.2f}" '
           f'y2="{Y(ty):.2f}" stroke="black"/>']
    for p in report.points:
        out.append(f'<circle cx="{X(p["conventionality"]):.2f}" '
                   f'cy="{Y(p["contingency"]):.2f}" r="3" '
                   f'fill="{colors.get(p["group"], "#555555")}" fill-opacity="0.6">'
                   f'<title>{p["phrase_id"]} ({p["group"]})</title></circle>')
    for group, stats_ in sorted(report.group_means.items()):
        if "conventionality" not in stats_:
            continue  # nested breakdowns (e.g. by_phrase_type) have no mean point
        out.append(f'<circle cx="{X(stats_["conventionality"]):.2f}" '
                   f'cy="{Y(stats_["contingency"]):.2f}" r="9" '
                   f'fill="{colors.get(group, "#555555")}" stroke="black"/>')
    out.append(f'<text x="{width / 2:.0f}" y="{height - 12}" '
               'text-anchor="middle" font-size="14">conventionality</text>')
    out.append(f'<text x="14" y="{height / 2:.0f}" text-anchor="middle" '
               f'font-size="14" transform="rotate(-90 14 {height / 2:.0f})">'
               'contingency</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
