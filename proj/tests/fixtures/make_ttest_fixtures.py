"""Builds paired t-test fixtures scored with scipy.stats.ttest_rel.

The first case is constructed so that t = 2.2622 with n = 10 (the two-sided
5% critical value for 9 degrees of freedom).
"""
import json
import os

import numpy as np
from scipy import stats

HERE = os.path.join(os.path.dirname(os.path.abspath(__file__)), "stats")


def with_t(rng, n, t):
    baseline = rng.uniform(0.3, 0.7, size=n)
    d = rng.normal(size=n)
    d = (d - d.mean()) / d.std(ddof=1) * 0.05
    d += t * 0.05 / np.sqrt(n)
    return baseline, baseline + d


def main():
    rng = np.random.default_rng(7)
    cases = []
    specs = [("t2.2622_n10", 10, 2.2622), ("t-1.5_n6", 6, -1.5), ("t4.0_n25", 25, 4.0), ("t0.3_n3", 3, 0.3)]
    for name, n, t in specs:
        b, tr = with_t(rng, n, t)
        res = stats.ttest_rel(tr, b)
        cases.append({"name": name, "baseline": b.tolist(), "treatment": tr.tolist(),
                      "t": float(res.statistic), "p": float(res.pvalue)})
        print(name, res.statistic, res.pvalue)
    with open(os.path.join(HERE, "paired_t.json"), "w") as f:
        json.dump(cases, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
