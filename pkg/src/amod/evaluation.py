"""APCER / BPCER / ACER, dev-set threshold selection and protocol summaries.

Positive class is bona fide (label 1).  A track is predicted real when its
score is at or above the threshold.
"""
import csv
import json
import math
from dataclasses import dataclass

import numpy as np

THRESHOLD_RULES = ("min_acer", "eer")


class EvalError(ValueError):
    pass


@dataclass
class ScoredSet:
    ids: list
    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.ids = [str(i) for i in self.ids]
        self.scores = np.asarray(self.scores, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        n = len(self.ids)
        if self.scores.shape != (n,) or self.labels.shape != (n,):
            raise EvalError("ids, scores and labels must have equal length")
        if len(set(self.ids)) != n:
            raise EvalError("track ids must be unique")
        if not np.all(np.isfinite(self.scores)) or np.any(self.scores < 0) or np.any(self.scores > 1):
            raise EvalError("scores must be finite and lie in [0, 1]")
        if not np.all(np.isin(self.labels, (0, 1))):
            raise EvalError("labels must be 0 or 1")

    def __len__(self):
        return len(self.ids)

    def require_both_labels(self, what="score set"):
        if len(self) == 0:
            raise EvalError(f"{what} is empty")
        if not (np.any(self.labels == 1) and np.any(self.labels == 0)):
            raise EvalError(f"{what} must contain both labels")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int


def confusion_at(s, thr):
    s.require_both_labels()
    real = s.scores >= thr
    pos = s.labels == 1
    return ConfusionCounts(tp=int(np.sum(real & pos)), tn=int(np.sum(~real & ~pos)),
                           fp=int(np.sum(real & ~pos)), fn=int(np.sum(~real & pos)))


def rates(c):
    """``(apcer, bpcer, acer)`` as fractions."""
    if c.tn + c.fp == 0 or c.tp + c.fn == 0:
        raise EvalError("APCER and BPCER need both attack and bona fide samples")
    apcer = c.fp / (c.tn + c.fp)
    bpcer = c.fn / (c.tp + c.fn)
    return apcer, bpcer, (apcer + bpcer) / 2


def candidate_thresholds(scores):
    u = np.unique(np.asarray(scores, dtype=np.float64))
    return np.concatenate([[-np.inf], (u[:-1] + u[1:]) / 2, [np.inf]])


def sweep(s):
    """Candidate thresholds with the APCER and BPCER each one produces."""
    s.require_both_labels()
    thr = candidate_thresholds(s.scores)
    fake = np.sort(s.scores[s.labels == 0])
    real = np.sort(s.scores[s.labels == 1])
    # predicted real iff score >= thr, i.e. count of scores not below thr
    fp = fake.size - np.searchsorted(fake, thr, side="left")
    fn = np.searchsorted(real, thr, side="left")
    return thr, fp / fake.size, fn / real.size


def select_threshold(dev, rule="min_acer"):
    """Dev threshold: minimum ACER, then smaller |APCER - BPCER|, then lower value.

    With ``rule="eer"`` the first two keys swap.
    """
    if rule not in THRESHOLD_RULES:
        raise EvalError(f"unknown threshold rule {rule!r}")
    thr, apcer, bpcer = sweep(dev)
    acer = (apcer + bpcer) / 2
    gap = np.abs(apcer - bpcer)
    keys = (thr, gap, acer) if rule == "min_acer" else (thr, acer, gap)
    order = np.lexsort(keys)  # last key is primary
    return float(thr[order[0]])


@dataclass(frozen=True)
class ProtocolResult:
    protocol_id: int
    threshold: float
    apcer: float
    bpcer: float
    acer: float


def evaluate_split(protocol_id, dev, test, rule="min_acer"):
    dev.require_both_labels("dev set")
    test.require_both_labels("test set")
    thr = select_threshold(dev, rule)
    apcer, bpcer, acer = rates(confusion_at(test, thr))
    return ProtocolResult(protocol_id, thr, apcer, bpcer, acer)


@dataclass
class EvalReport:
    protocols: list
    mean: dict
    std: dict

    def to_json(self):
        def num(x):
            return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")
        return {
            "protocols": [{"protocol": p.protocol_id, "threshold": num(p.threshold),
                           "apcer": p.apcer, "bpcer": p.bpcer, "acer": p.acer}
                          for p in self.protocols],
            "mean": self.mean,
            "std": self.std,
        }

    def table(self):
        rows = ["Protocol   APCER, %        BPCER, %        ACER, %"]
        for p in self.protocols:
            rows.append(f"{p.protocol_id:<10} {100 * p.apcer:<15.2f} {100 * p.bpcer:<15.2f} "
                        f"{100 * p.acer:.2f}")
        cells = [f"{100 * self.mean[k]:.2f} ± {100 * self.std[k]:.2f}"
                 for k in ("apcer", "bpcer", "acer")]
        rows.append(f"{'mean':<10} {cells[0]:<15} {cells[1]:<15} {cells[2]}")
        return "\n".join(rows) + "\n"


def evaluate_protocols(results):
    """Mean and population standard deviation of each rate over protocols."""
    if not results:
        raise EvalError("no protocol results")
    mean, std = {}, {}
    for k in ("apcer", "bpcer", "acer"):
        v = np.array([getattr(r, k) for r in results], dtype=np.float64)
        mean[k] = float(v.mean())
        std[k] = float(v.std())
    return EvalReport(list(results), mean, std)


def write_report(report, json_path, table_path):
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(table_path, "w", encoding="utf-8") as fh:
        fh.write(report.table())


def write_scores(path, s):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["track_id", "score", "label"])
        for i, sc, lb in zip(s.ids, s.scores, s.labels):
            w.writerow([i, repr(float(sc)), int(lb)])


def read_scores(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return ScoredSet([r["track_id"] for r in rows], [float(r["score"]) for r in rows],
                     [int(r["label"]) for r in rows])
