#!/usr/bin/env python3
"""Writes a synthetic rubric score file with fixed per-metric totals.

Each metric gets (sum, n): n dialogues carry a 0/1/2 score adding up to sum,
the rest carry null (metric not applicable). Output is deterministic.
"""
import argparse
import json
import random

METRICS = [
    ("house_expertise", 124, 80),
    ("tool_calling", 102, 72),
    ("industry_familiarity", 90, 80),
    ("service_attitude", 114, 63),
    ("demand_mining", 95, 70),
    ("promote_invitation", 100, 68),
]


def scores_for(total, n, rng):
    # smallest count of zeros that lets twos and ones reach the total
    zeros = max(0, n - total)
    twos = total - (n - zeros)
    ones = n - zeros - twos
    assert zeros >= 0 and ones >= 0 and twos >= 0 and 2 * twos + ones == total
    values = [0] * zeros + [1] * ones + [2] * twos
    rng.shuffle(values)
    return values


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--dialogues", type=int, default=80)
    ap.add_argument("--model", default="DUMA")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("out")
    args = ap.parse_args()

    rng = random.Random(args.seed)
    rows = [{} for _ in range(args.dialogues)]
    for name, total, n in METRICS:
        applicable = sorted(rng.sample(range(args.dialogues), n))
        values = scores_for(total, n, rng)
        for i in range(args.dialogues):
            rows[i][name] = None
        for i, v in zip(applicable, values):
            rows[i][name] = v

    with open(args.out, "w") as f:
        for i, scores in enumerate(rows):
            rec = {"dialogue_id": "d%03d" % (i + 1), "model_name": args.model, "scores": scores}
            f.write(json.dumps(rec) + "\n")


if __name__ == "__main__":
    main()
