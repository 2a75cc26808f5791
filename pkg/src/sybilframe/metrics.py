"""Detection metrics with Sybil as the positive class."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import rankdata

from .graph import Label


@dataclass
class EvaluationReport:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0
    accuracy: float = float("nan")
    fpr: float = float("nan")
    fnr: float = float("nan")
    auc: float = float("nan")
    topk_portions: dict = field(default_factory=dict)

    @property
    def total(self):
        return self.tp + self.tn + self.fp + self.fn

    def as_row(self):
        row = {k: v for k, v in asdict(self).items() if k != "topk_portions"}
        for k, v in sorted(self.topk_portions.items()):
            row[f"top{k}"] = v
        return row


METRICS = ("accuracy", "fp", "fn", "auc", "fpr", "fnr")


def _ratio(a, b):
    return a / b if b else float("nan")


def _mask(truth, exclude):
    keep = np.ones(len(truth), dtype=bool)
    if exclude is not None:
        keep[np.asarray(list(exclude) if isinstance(exclude, set) else exclude, dtype=np.int64)] = False
    return keep


def confusion(predicted, truth, exclude=None):
    """Counts over non-excluded nodes; Unknown truth must be excluded."""
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    keep = _mask(truth, exclude)
    t, p = truth[keep], predicted[keep]
    if np.any(t == Label.UNKNOWN) or np.any(p == Label.UNKNOWN):
        raise ValueError("Unknown labels must be listed in the exclude set")
    tp = int(np.sum((t == Label.SYBIL) & (p == Label.SYBIL)))
    tn = int(np.sum((t == Label.BENIGN) & (p == Label.BENIGN)))
    fp = int(np.sum((t == Label.BENIGN) & (p == Label.SYBIL)))
    fn = int(np.sum((t == Label.SYBIL) & (p == Label.BENIGN)))
    return EvaluationReport(
        tp=tp,
        tn=tn,
        fp=fp,
        fn=fn,
        accuracy=_ratio(tp + tn, tp + tn + fp + fn),
        fpr=_ratio(fp, fp + tn),
        fnr=_ratio(fn, fn + tp),
    )


def auc(bel, truth, exclude=None):
    """P(benign belief > Sybil belief) with ties worth one half.

    Mann-Whitney U over mid-ranks, O(n log n).
    """
    bel = np.asarray(bel, dtype=float)
    truth = np.asarray(truth)
    keep = _mask(truth, exclude) & (truth != Label.UNKNOWN)
    b, t = bel[keep], truth[keep]
    pos = t == Label.BENIGN
    n_b, n_s = int(pos.sum()), int((~pos).sum())
    if n_b == 0 or n_s == 0:
        raise ValueError("AUC needs at least one benign and one Sybil node")
    ranks = rankdata(b)
    u = ranks[pos].sum() - n_b * (n_b + 1) / 2.0
    return float(u / (n_b * n_s))


def topk_sybil_portion(ranking, truth, ks):
    """Fraction of Sybils among the first ``k`` ranked nodes, per ``k``."""
    ranking = np.asarray(ranking)
    is_sybil = np.asarray(truth)[ranking] == Label.SYBIL
    csum = np.cumsum(is_sybil)
    out = {}
    for k in ks:
        if k <= 0:
            raise ValueError("k must be positive")
        if k > len(ranking):
            raise ValueError(f"k={k} exceeds ranking length {len(ranking)}")
        out[int(k)] = float(csum[k - 1] / k)
    return out


def evaluate(bel, truth, exclude=None, ranking=None, ks=()):
    """Full report from posterior beliefs (threshold 0.5, benign on ties)."""
    bel = np.asarray(bel)
    truth = np.asarray(truth)
    excl = np.zeros(len(truth), dtype=bool)
    excl[truth == Label.UNKNOWN] = True
    if exclude is not None:
        excl[np.asarray(list(exclude) if isinstance(exclude, set) else exclude, dtype=np.int64)] = True
    pred = np.where(bel >= 0.5, Label.BENIGN, Label.SYBIL)
    rep = confusion(pred, truth, np.flatnonzero(excl))
    rep.auc = auc(bel, truth, np.flatnonzero(excl))
    if ks:
        rep.topk_portions = topk_sybil_portion(ranking, truth, ks)
    return rep


@dataclass
class AggregateReport:
    n_runs: int
    mean: dict
    std: dict


def aggregate_runs(reports):
    """Per-metric mean and sample standard deviation across runs."""
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to aggregate")
    rows = [r.as_row() if isinstance(r, EvaluationReport) else dict(r) for r in reports]
    keys = list(rows[0])
    for r in rows[1:]:
        if list(r) != keys:
            raise ValueError("reports carry different metric sets")
    mean, std = {}, {}
    for k in keys:
        vals = np.array([float(r[k]) for r in rows])
        # sorting first makes the float sums independent of run order
        vals = np.sort(vals)
        mean[k] = float(math.fsum(vals) / len(vals))
        std[k] = float(np.sqrt(math.fsum((vals - mean[k]) ** 2) / (len(vals) - 1))) if len(vals) > 1 else 0.0
    return AggregateReport(n_runs=len(rows), mean=mean, std=std)


def write_report_csv(path, reports, aggregate=None, extra=None):
    """One row per run plus optional ``mean`` / ``std`` rows."""
    rows = [r.as_row() for r in reports]
    cols = ["run"] + list(rows[0]) if rows else ["run"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for i, r in enumerate(rows):
            w.writerow([i] + [format_value(r[c]) for c in cols[1:]])
        if aggregate is not None:
            w.writerow(["mean"] + [format_value(aggregate.mean[c]) for c in cols[1:]])
            w.writerow(["std"] + [format_value(aggregate.std[c]) for c in cols[1:]])


def format_value(x):
    """Stable text form for CSV cells."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.10g}"


