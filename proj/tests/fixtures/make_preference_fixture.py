"""Writes 50 pairs x 5 annotator votes plus the expected majority tally."""
import csv
import json
import os
import random

HERE = os.path.join(os.path.dirname(os.path.abspath(__file__)), "stats")
QC_EMPTY = 3


def main():
    rng = random.Random(1234)
    rows = []
    for p in range(50):
        lean = rng.random()
        for a in range(5):
            rows.append((f"pair{p:02d}", a, "pipeline" if rng.random() < lean else "baseline"))
    rng.shuffle(rows)
    with open(os.path.join(HERE, "preference_votes.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["pair_id", "annotator", "winner"])
        w.writerows(rows)

    pipeline = sum(1 for p in {r[0] for r in rows}
                   if sum(1 for r in rows if r[0] == p and r[2] == "pipeline") >= 3)
    baseline = 50 - pipeline
    expected = {"pairs": 50, "qc_empty": QC_EMPTY, "pipeline_wins": pipeline, "baseline_wins": baseline,
                "preference_rate": pipeline / (pipeline + baseline + QC_EMPTY)}
    with open(os.path.join(HERE, "preference_expected.json"), "w") as f:
        json.dump(expected, f, indent=2)
        f.write("\n")
    print(expected)


if __name__ == "__main__":
    main()
