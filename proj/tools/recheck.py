#!/usr/bin/env python3
"""Recomputes suite verdicts from records.csv with numpy/scipy and compares them
with checks.csv. Exit status 0 when every recomputed statistic and verdict
agrees, 1 otherwise."""

import argparse
import csv
import json
import math
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np
import scipy.stats

OPS = {"<": lambda s, t: s < t, "<=": lambda s, t: s <= t, ">=": lambda s, t: s >= t}


def load(out):
    records = defaultdict(list)
    with open(out / "records.csv", newline="") as f:
        for r in csv.DictReader(f):
            records[(r["experiment"], r["quantity"])].append(r)
    with open(out / "checks.csv", newline="") as f:
        checks = {c["id"]: c for c in csv.DictReader(f)}
    tol = json.loads((out / "summary.json").read_text())["tolerances"]
    return records, checks, tol


def params(row):
    return dict(kv.split("=", 1) for kv in row["param"].split(";"))


def values(records, experiment, quantity):
    return np.array([float(r["value"]) for r in records[(experiment, quantity)]])


def weights(records, experiment, quantity):
    return np.array([float(r["weight"]) for r in records[(experiment, quantity)]])


def ks_pvalue(a, b):
    d = scipy.stats.ks_2samp(a, b).statistic
    en = len(a) * len(b) / (len(a) + len(b))
    return scipy.stats.kstwobign.sf(math.sqrt(en) * d)


def recompute(records, tol):
    """Yields (check id, statistic, comparator, threshold)."""
    pmf = values(records, "c1.kemperman", "pmf")
    if len(pmf):
        k = len(pmf)
        yield "c1.kemperman_ratio", abs(k**1.5 * pmf[-1] * math.sqrt(2.0) * math.sqrt(2 * math.pi) - 1), "<=", tol["kemperman"]
        exact = [math.comb(2 * (j - 1), j - 1) / j / 2 ** (2 * j - 1) for j in range(1, 21)]
        yield "c1.catalan", float(np.max(np.abs(pmf[:20] - exact))), "<=", tol["catalan"]

    counts = values(records, "c2.shapes", "count")
    if len(counts):
        p = scipy.stats.chisquare(counts).pvalue
        yield "c2.shapes", p, ">=", tol["alpha"]

    products = records[("c4.localtime", "product")]
    if products:
        par = params(products[0])
        n, d = int(par["n"]), int(par["d"])
        scaled = values(records, "c4.localtime", "product") * n ** (d / 2 - 2)
        phi = values(records, "c4.localtime", "phi")[0]
        err = values(records, "c4.localtime", "phi_error")[0]
        se = scaled.std(ddof=1) / math.sqrt(len(scaled))
        yield "c4.localtime", abs(scaled.mean() - phi), "<=", max(tol["localtime"] * phi, tol["z"] * se + err)

    for (experiment, quantity) in sorted(records):
        if not (experiment.startswith("c5.hit.") and quantity == "hits"):
            continue
        trials = weights(records, experiment, "hits").sum()
        p = values(records, experiment, "hits").sum() / trials
        capped = values(records, experiment, "capped").sum() / trials
        norm2 = values(records, experiment, "norm2")[0]
        target = values(records, experiment, "target")[0]
        yield experiment + ".ratio", abs(norm2 * p / target - 1), "<=", tol["hit"]
        yield experiment + ".capped", capped / p if p > 0 else math.inf, "<", tol["capped"]

    lhs = records[("c6.brw_identity", "lhs_hits")]
    if lhs:
        n_l = weights(records, "c6.brw_identity", "lhs_hits").sum()
        n_s = weights(records, "c6.brw_identity", "single_hits").sum()
        pl = values(records, "c6.brw_identity", "lhs_hits").sum() / n_l
        q = values(records, "c6.brw_identity", "single_hits").sum() / n_s
        particles = int(params(lhs[0])["p"])
        rhs = 1 - (1 - q) ** particles
        se_rhs = particles * (1 - q) ** (particles - 1) * math.sqrt(q * (1 - q) / n_s)
        se = math.hypot(math.sqrt(pl * (1 - pl) / n_l), se_rhs)
        yield "c6.brw_identity", abs(pl - rhs) / se, "<", tol["z"]

    small = values(records, "c7.range.n20000", "range")
    large = values(records, "c7.range.n80000", "range")
    if len(small) and len(large):
        yield "c7.range_ks", ks_pvalue(small / 20000**0.5, large / 80000**0.5), ">=", tol["alpha"]
        volume = values(records, "c7.snake", "scaled_volume")
        if len(volume):
            yield "c7.snake_ks", ks_pvalue(large / 80000**0.5, volume), ">=", tol["alpha"]

    pairs = defaultdict(dict)
    for key in ("ws", "wt", "m_e"):
        for r in records[("c8.covariance", key)]:
            pairs[params(r)["pair"]].setdefault(key, []).append(float(r["value"]))
    for pair, v in sorted(pairs.items()):
        ws, wt = np.array(v["ws"]), np.array(v["wt"])
        prod = (ws - ws.mean()) * (wt - wt.mean())
        cov = np.cov(ws, wt, ddof=1)[0, 1]
        se = prod.std(ddof=1) / math.sqrt(len(prod))
        yield "c8.covariance.pair" + pair, abs(cov - v["m_e"][0]) / se, "<=", tol["z"]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out", type=Path, help="report directory written by `treerange verify-all`")
    parser.add_argument("--rtol", type=float, default=1e-6, help="relative tolerance on recomputed statistics")
    args = parser.parse_args()

    records, checks, tol = load(args.out)
    mismatches = 0
    seen = 0
    for cid, statistic, op, threshold in recompute(records, tol):
        seen += 1
        verdict = OPS[op](statistic, threshold)
        check = checks.get(cid)
        if check is None:
            print(f"MISSING  {cid}: recomputed but absent from checks.csv")
            mismatches += 1
            continue
        reported = float(check["statistic"])
        close = math.isclose(statistic, reported, rel_tol=args.rtol, abs_tol=1e-12) or (math.isinf(statistic) and math.isinf(reported))
        same = verdict == (check["pass"] == "1")
        status = "OK" if close and same else "MISMATCH"
        mismatches += status != "OK"
        print(f"{status:8} {cid}: statistic {statistic:.6g} (reported {reported:.6g}), {'pass' if verdict else 'fail'}")
    print(f"{seen} checks recomputed, {mismatches} mismatches")
    return 1 if mismatches or seen == 0 else 0


if __name__ == "__main__":
    sys.exit(main())
