"""APCER / BPCER / ACER and dev-set threshold selection on toy score sets.

    python scripts/metrics_walkthrough.py
"""
import numpy as np

from amod.evaluation import (ConfusionCounts, ScoredSet, confusion_at, evaluate_protocols,
                             evaluate_split, rates, select_threshold, sweep)

# %% rates from raw counts: 2 of 1800 attacks accepted
apcer, bpcer, acer = rates(ConfusionCounts(tp=284, tn=1798, fp=2, fn=16))
print(f"APCER {100 * apcer:.2f}%  BPCER {100 * bpcer:.2f}%  ACER {100 * acer:.2f}%")

# %% a dev set; label 1 = bona fide, score >= thr means bona fide
dev = ScoredSet(["a", "b", "c", "d", "e", "f"],
                np.array([0.1, 0.6, 0.4, 0.8, 0.9, 0.3]),
                np.array([0, 0, 1, 1, 1, 0]))
for thr, ap, bp in zip(*sweep(dev)):
    print(f"thr {thr:6.3f}  APCER {ap:.3f}  BPCER {bp:.3f}  ACER {(ap + bp) / 2:.3f}")
thr = select_threshold(dev)
print("selected threshold", thr, "dev rates", rates(confusion_at(dev, thr)))

# %% three protocols, each with its own dev threshold, then mean +- std
rng = np.random.default_rng(0)
results = []
for pid in (1, 2, 3):
    def scored(n, shift):
        labels = np.r_[np.zeros(n, int), np.ones(n, int)]
        scores = np.clip(rng.normal(0.3 + 0.4 * labels, 0.15 + 0.05 * shift), 0, 1)
        return ScoredSet([str(i) for i in range(2 * n)], scores, labels)
    results.append(evaluate_split(pid, scored(50, 0), scored(200, pid)))
report = evaluate_protocols(results)
print(report.table())
