"""Acceptance criteria 1-9, each at its stated tolerance.

Every test records one PASS/FAIL line in ``VERDICTS``; the conftest hook
prints them in the terminal summary.
"""
import itertools
import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

import oracles
from conftest import make_dataset, make_groups
from fairaudit import stats
from fairaudit.data import FeatureEncoder, SplitConfig, assign_groups, load_recipe, split_indices
from fairaudit.harness import BASE, ExperimentConfig, run_experiment
from fairaudit.metrics import PredictionSet, evaluate
from fairaudit.mitigation import VALIDATION_FRACTION, naivebase_fit, naivebase_select, reweigh_table
from fairaudit.model import apply_threshold, predict_proba
from fairaudit.tables import correlation_matrix

VERDICTS = {}

GRID_METHODS = ["rew", "eop", "naivebase", "cfe"]
GRID_TASKS = [("adult", "sex"), ("adult", "race"), ("german", "sex"), ("german", "age")]


def record(n, ok, detail):
    VERDICTS[n] = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(VERDICTS[n])
    assert ok, VERDICTS[n]


def task_config(dataset, attr, methods, runs=20, **kw):
    return ExperimentConfig.from_dict(
        {"dataset": f"recipe:{dataset}", "task": [attr], "runs": runs, "seed": 0, "methods": methods, **kw}
    )


def synthetic_task(rng, n=None):
    """Two-group tabular task with continuous features (no probability ties)."""
    n = n or int(rng.integers(200, 600))
    sex = np.where(rng.random(n) < rng.uniform(0.3, 0.7), "M", "F")
    x1, x2 = rng.normal(size=n), rng.normal(size=n)
    logit = rng.uniform(0.5, 2.0) * x1 - rng.uniform(0, 1) * x2 + rng.uniform(0, 2) * (sex == "M") - 0.5
    y = (rng.random(n) < 1.0 / (1.0 + np.exp(-logit))).astype(int)
    return make_dataset({"x1": x1, "x2": x2, "sex": sex}, y)


# -- 1 ----------------------------------------------------------------------

def test_criterion_1_metric_oracle():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        g = int(rng.integers(2, 5))
        n = int(rng.integers(g, 31))
        keys = np.array([f"g{i}" for i in range(g)] + [f"g{i}" for i in rng.integers(0, g, n - g)], dtype=object)
        y = rng.integers(0, 2, n).astype(np.int8)
        yh = rng.integers(0, 2, n).astype(np.int8)
        groups = make_groups(keys, order=tuple(rng.permutation([f"g{i}" for i in range(g)])))
        rep = evaluate(PredictionSet(y, yh, yh.astype(float), keys), groups)
        per_group = []
        for key in groups.groups:
            m = keys == key
            expect = oracles.rates(y[m].tolist(), yh[m].tolist())
            per_group.append(expect)
            got = rep.rates[groups.roles[key]]
            for a, b in zip((got.sr, got.tpr, got.fpr), expect):
                assert (a is None) == (b is None)
                if a is not None:
                    worst = max(worst, abs(a - b))
        for a, b in zip((rep.fairness.spd, rep.fairness.eod, rep.fairness.aod), oracles.fairness(per_group)):
            assert (a is None) == (b is None)
            if a is not None:
                worst = max(worst, abs(a - b))
        for k, v in oracles.performance(y.tolist(), yh.tolist()).items():
            worst = max(worst, abs(getattr(rep.performance, k) - v))
    elapsed = time.perf_counter() - start
    record(1, worst <= 1e-12 and elapsed < 10, f"1000 sets, max |diff| = {worst:.2e}, {elapsed:.1f}s")


# -- 2 ----------------------------------------------------------------------

def test_criterion_2_statistics_oracles():
    rng = np.random.default_rng(2)
    cliff_ok = True
    for _ in range(500):
        a = rng.integers(-5, 6, int(rng.integers(1, 51))).tolist()
        b = rng.integers(-5, 6, int(rng.integers(1, 51))).tolist()
        cliff_ok &= stats.cliffs_delta(a, b) == oracles.cliffs_delta(a, b)

    # the exact p depends only on the rank pattern, so every tie-free input
    # with |a| + |b| <= 10 is one of these patterns
    mwu_worst, patterns = 0.0, 0
    for n in range(2, 11):
        for n1 in range(1, n):
            null = oracles.mwu_null_counts(n1, n - n1)
            total = sum(null.values())
            for idx in itertools.combinations(range(n), n1):
                a = list(idx)
                b = [i for i in range(n) if i not in idx]
                u = oracles.u_statistic(a, b)
                dev = abs(u - n1 * (n - n1) / 2)
                p_oracle = sum(c for k, c in null.items() if abs(k - n1 * (n - n1) / 2) >= dev) / total
                mwu_worst = max(mwu_worst, abs(stats.mann_whitney_u(a, b).p_value - p_oracle))
                patterns += 1

    rho_worst = 0.0
    for _ in range(500):
        n = int(rng.integers(3, 40))
        x = rng.integers(0, 6, n).tolist()
        y = rng.integers(0, 6, n).tolist()
        if len(set(x)) < 2 or len(set(y)) < 2:
            continue
        rho_worst = max(rho_worst, abs(stats.spearman(x, y).statistic - oracles.spearman_rho(x, y)))

    small = stats.mann_whitney_u([1, 2], [3, 4]).p_value
    ok = cliff_ok and mwu_worst == 0.0 and rho_worst <= 1e-12 and small == pytest.approx(1 / 3, abs=1e-15)
    record(2, ok, f"cliff exact={cliff_ok}, MWU {patterns} patterns max diff {mwu_worst:.1e}, "
                  f"rho max diff {rho_worst:.1e}, p([1,2],[3,4]) = {small:.6f}")


# -- 3 ----------------------------------------------------------------------

def test_criterion_3_reweighing_factorizes():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        g = int(rng.integers(2, 5))
        counts = rng.integers(1, 60, size=(g, 2))
        keys, labels = [], []
        for i in range(g):
            for lab in (0, 1):
                keys += [f"g{i}"] * int(counts[i, lab])
                labels += [lab] * int(counts[i, lab])
        keys, labels = np.array(keys, dtype=object), np.array(labels)
        cells, _ = reweigh_table(keys, labels)
        w = np.array([cells[(k, int(lab))] for k, lab in zip(keys, labels)])
        total = w.sum()
        for i in range(g):
            for lab in (0, 1):
                in_g, in_l = keys == f"g{i}", labels == lab
                joint = w[in_g & in_l].sum() / total
                worst = max(worst, abs(joint - in_g.mean() * in_l.mean()))
    record(3, worst <= 1e-12, f"100 tables, max |P_w(g,l) - P(g)P(l)| = {worst:.2e}")


# -- 4 ----------------------------------------------------------------------

def test_criterion_4_naivebase_equal_selection():
    rng = np.random.default_rng(4)
    worst_excess = -1.0
    for t in range(100):
        d = synthetic_task(rng)
        groups = assign_groups(d, d)
        enc = FeatureEncoder.fit(d)
        model, pol = naivebase_fit(d, groups, enc, seed=t)
        _, val_idx = split_indices(d.N, SplitConfig(1.0 - VALIDATION_FRACTION, t))
        val = d.subset(val_idx)
        prob = predict_proba(model, enc.transform(val))
        priv = groups.keys_for(val) == "M"
        sr_p = apply_threshold(prob[priv]).mean()
        sr_u = naivebase_select(pol, prob[~priv]).mean()
        worst_excess = max(worst_excess, abs(sr_u - sr_p) - 1.0 / (~priv).sum())
    record(4, worst_excess <= 1e-12, f"100 tasks, max(|SR_U - SR_P| - 1/|U_val|) = {worst_excess:.4f}")


# -- 5 ----------------------------------------------------------------------

def test_criterion_5_selective_conservation():
    rng = np.random.default_rng(5)
    methods = [*GRID_METHODS] + [
        {"method": "selective", "id": f"{m}_u", "of": m, "scope": ["U"]} for m in GRID_METHODS
    ]
    violations = 0
    for t in range(100):
        d = synthetic_task(rng, int(rng.integers(150, 300)))
        cfg = ExperimentConfig.from_dict(
            {"dataset": "synthetic.csv", "schema": "unused.json", "task": ["sex"], "runs": 1, "seed": t,
             "methods": methods, "save_predictions": True}
        )
        res = run_experiment(cfg, dataset=d)
        preds = res.predictions[0]["predictions"]
        base = preds[BASE]
        priv = base.group_of == "M"
        for m in GRID_METHODS:
            sel = preds[f"{m}_u"]
            same = (sel.y_pred[priv].tobytes() == base.y_pred[priv].tobytes()
                    and sel.y_prob[priv].tobytes() == base.y_prob[priv].tobytes())
            rep_b, rep_s = res.runs[0]["reports"][BASE], res.runs[0]["reports"][f"{m}_u"]
            same &= all(rep_b[k] == rep_s[k] for k in ("sr_P", "tpr_P", "fpr_P"))
            violations += not same
    record(5, violations == 0, f"100 tasks x {len(GRID_METHODS)} mitigators, {violations} violations")


# -- 6 ----------------------------------------------------------------------

def test_criterion_6_adult_sex_rew_direction():
    start = time.perf_counter()
    res = run_experiment(task_config("adult", "sex", ["rew"]))
    elapsed = time.perf_counter() - start

    def delta(metric):
        return float(np.mean(res.values("rew", metric)) - np.mean(res.values(BASE, metric)))

    p_p = stats.mann_whitney_u(res.values("rew", "sr_P"), res.values(BASE, "sr_P")).p_value
    p_u = stats.mann_whitney_u(res.values("rew", "sr_U"), res.values(BASE, "sr_U")).p_value
    d_p, d_u, d_spd = delta("sr_P"), delta("sr_U"), delta("spd")
    ok = d_p < 0 and d_u > 0 and min(p_p, p_u) < 0.05 and d_spd < 0 and elapsed < 300
    record(6, ok, f"dSR_P={d_p:+.4f} (p={p_p:.1e}), dSR_U={d_u:+.4f} (p={p_u:.1e}), "
                  f"dSPD={d_spd:+.4f}, {elapsed:.0f}s")


# -- 7 and 8 share the desk-scale grid ----------------------------------------

@pytest.fixture(scope="module")
def grid():
    out = {}
    datasets = {name: load_recipe(name) for name in ("adult", "german")}
    for name, attr in GRID_TASKS:
        methods = GRID_METHODS + [{"method": "selective", "id": "cfe_u", "of": "cfe", "scope": ["U"]}]
        cfg = task_config(name, attr, methods)
        ds = datasets[name].with_schema(datasets[name].schema.restrict([attr]))
        out[(name, attr)] = run_experiment(cfg, dataset=ds)
    return out


def test_criterion_7_correlation_signs(grid):
    results = []
    for res in grid.values():
        res = type(res)(res.task, res.config, [m for m in res.methods if m != "cfe_u"], res.runs)
        results.append(res)
    corr = correlation_matrix(results)
    names = corr["metrics"]
    spd = names.index("SPD")
    r_u, p_u = corr["rho"][spd][names.index("SR_U")], corr["p"][spd][names.index("SR_U")]
    r_p, p_p = corr["rho"][spd][names.index("SR_P")], corr["p"][spd][names.index("SR_P")]
    ok = r_u is not None and r_p is not None and r_u < 0 and r_p > 0
    record(7, ok, f"{len(corr['observations'])} (method, task) deltas: "
                  f"rho(dSPD, dSR_U)={r_u:+.3f} (p={p_u:.2g}), rho(dSPD, dSR_P)={r_p:+.3f} (p={p_p:.2g})")


def test_criterion_8_selective_vs_full_overall_sr(grid):
    res = grid[("adult", "sex")]
    full = float(np.mean(res.values("cfe", "overall_sr")))
    sel = float(np.mean(res.values("cfe_u", "overall_sr")))
    assert len(res.values("cfe", "overall_sr")) == len(res.values("cfe_u", "overall_sr")) == 20
    gap = abs(sel - full)
    record(8, gap <= 0.05, f"mean overall SR selective {sel:.4f} vs full {full:.4f}, |gap| = {gap:.4f}")


# -- 9 ----------------------------------------------------------------------

def test_criterion_9_end_to_end_determinism(tmp_path):
    cfg = tmp_path / "german.json"
    cfg.write_text(json.dumps({
        "dataset": "recipe:german", "task": ["sex"], "runs": 6, "seed": 11,
        "methods": GRID_METHODS + [{"method": "selective", "id": "cfe_u", "of": "cfe", "scope": ["U"]}],
    }))

    def invoke(out, *extra):
        cmd = [sys.executable, "-m", "fairaudit.cli", "run", "--config", str(cfg), "--out", str(out), *extra]
        subprocess.run(cmd, check=True, capture_output=True)
        return {n: (out / n).read_bytes() for n in ("results.json", "report.json", "report.md")}

    first = invoke(tmp_path / "a")
    second = invoke(tmp_path / "b")
    parallel = invoke(tmp_path / "c", "--jobs", "2")
    same = first == second
    par = first == parallel
    record(9, same and par, f"repeat identical={same}, parallel(jobs=2) identical={par}, "
                            f"report.json {len(first['report.json'])} bytes")
