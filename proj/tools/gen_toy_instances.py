#!/usr/bin/env python3
"""Writes the small instances under data/instances with exhaustively computed references."""
import itertools
import json
import pathlib
import sys

import numpy as np
from scipy.optimize import linprog

OUT = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "data/instances")


def landing_lp(planes, sep, seq):
    n = len(seq)
    # variables: t (n), u (n earliness), v (n lateness)
    c = np.concatenate([np.zeros(n), [planes[p][4] for p in seq], [planes[p][5] for p in seq]])
    A, b = [], []
    for k in range(n):
        tau = planes[seq[k]][2]
        row = np.zeros(3 * n); row[k] = -1; row[n + k] = -1; A.append(row); b.append(-tau)  # u >= tau - t
        row = np.zeros(3 * n); row[k] = 1; row[2 * n + k] = -1; A.append(row); b.append(tau)  # v >= t - tau
    for i in range(n):
        for j in range(i + 1, n):
            row = np.zeros(3 * n); row[i] = 1; row[j] = -1; A.append(row); b.append(-sep[seq[i]][seq[j]])
    bounds = [(planes[p][1], planes[p][3]) for p in seq] + [(0, None)] * (2 * n)
    res = linprog(c, A_ub=np.array(A), b_ub=np.array(b), bounds=bounds, method="highs")
    return res.fun if res.status == 0 else None


def airland(name, planes, sep):
    costs = [landing_lp(planes, sep, s) for s in itertools.permutations(range(len(planes)))]
    best = min(c for c in costs if c is not None)
    doc = {"name": name, "problem": "airland", "sense": "min", "reference": round(best, 9),
           "data": {"n_planes": len(planes), "freeze_time": 0,
                    "planes": [dict(zip(["appearance", "earliest", "target", "latest", "penalty_early", "penalty_late"], p))
                               for p in planes],
                    "separation": sep}}
    return doc


def makespan(proc, perm):
    m = len(proc[0])
    c = [0.0] * m
    for j in perm:
        for k in range(m):
            c[k] = max(c[k], c[k - 1] if k else 0.0) + proc[j][k]
    return c[-1]


def flowshop(name, proc):
    best = min(makespan(proc, p) for p in itertools.permutations(range(len(proc))))
    return {"name": name, "problem": "flowshop", "sense": "min", "reference": best,
            "data": {"n_jobs": len(proc), "m_machines": len(proc[0]), "proc": proc}}


def pmedian(name, pts, p):
    n = len(pts)
    dist = [[abs(pts[i][0] - pts[j][0]) + abs(pts[i][1] - pts[j][1]) for j in range(n)] for i in range(n)]
    best = min(sum(min(dist[v][m] for m in med) for v in range(n)) for med in itertools.combinations(range(n), p))
    return {"name": name, "problem": "pmedian", "sense": "min", "reference": best,
            "data": {"n_vertices": n, "p": p, "dist": dist}}


def epp_objective(attrs, labels):
    total = 0.0
    for a in range(len(attrs[0])):
        counts = [0] * 8
        for i, g in enumerate(labels):
            counts[g - 1] += attrs[i][a]
        mean = sum(counts) / 8
        total += sum(abs(c - mean) for c in counts) / 8
    return total


def epp(name, attrs):
    n = len(attrs)
    best = min(epp_objective(attrs, labels)
               for labels in itertools.product(range(1, 9), repeat=n) if len(set(labels)) == 8)
    return {"name": name, "problem": "epp", "sense": "min", "reference": round(best, 9),
            "data": {"n_individuals": n, "m_attributes": len(attrs[0]), "group_count": 8, "attrs": attrs}}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    docs = [
        airland("airland_toy4",
                [[0, 0, 10, 40, 2, 3], [0, 5, 12, 40, 1, 4], [0, 0, 14, 30, 3, 1], [0, 8, 9, 50, 2, 2]],
                [[0, 6, 4, 5], [3, 0, 5, 6], [7, 4, 0, 3], [5, 8, 4, 0]]),
        airland("airland_toy6",
                [[0, 2, 8, 30, 1, 2], [0, 0, 10, 35, 2, 1], [0, 4, 11, 40, 3, 3],
                 [0, 6, 13, 45, 1, 1], [0, 0, 15, 50, 2, 4], [0, 9, 16, 55, 4, 2]],
                [[0, 3, 4, 5, 3, 4], [4, 0, 3, 4, 5, 3], [3, 5, 0, 3, 4, 4],
                 [4, 3, 5, 0, 3, 5], [5, 4, 3, 4, 0, 3], [3, 4, 4, 3, 5, 0]]),
        flowshop("flowshop_toy6", [[3, 5, 2], [4, 1, 6], [2, 6, 3], [5, 2, 4], [1, 4, 5], [6, 3, 1]]),
        pmedian("pmedian_toy9", [[0, 0], [1, 3], [2, 1], [4, 4], [5, 0], [6, 2], [7, 5], [3, 6], [8, 1]], 3),
        epp("epp_toy9", [[1, 0], [0, 1], [1, 1], [1, 0], [0, 0], [1, 1], [0, 1], [1, 0], [1, 1]]),
    ]
    for d in docs:
        (OUT / f"{d['name']}.json").write_text(json.dumps(d, indent=1) + "\n")
        print(d["name"], d["reference"])


if __name__ == "__main__":
    main()
