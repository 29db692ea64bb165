"""End-to-end acceptance gate: one test per criterion, one PASS/FAIL line each.

Run on its own with ``pytest tests/test_acceptance.py``; the verdict lines
are printed even when output capture is on.
"""
import contextlib
import math
import os
import time
from itertools import permutations

import numpy as np
import pytest

from xgx.analysis import render_svg, scoring_potential
from xgx.cli import main
from xgx.datasets import synthetic_shots
from xgx.events import GroupSelector, build_encoding, encode, match_split, select
from xgx.glocal import aggregate_profiles, aggregate_shap, cp_profile, make_grid, pdp
from xgx.metrics import compute_metrics, metrics_from_predictions
from xgx.models import FunctionPredictor, GBTConfig, evaluate, predict_batch, train_gbt
from xgx.shapley import BackgroundSet, FeatureGrouping, exact_shap, explain_rows, sampled_shap

from conftest import FIXTURE_CSV, ROSTER


@contextlib.contextmanager
def criterion(number, title, capsys):
    start = time.perf_counter()
    try:
        yield
    except BaseException as exc:
        with capsys.disabled():
            print(f"\n[criterion {number:2d}] FAIL  {title}: {str(exc).splitlines()[0] if str(exc) else type(exc).__name__}")
        raise
    with capsys.disabled():
        print(f"\n[criterion {number:2d}] PASS  {title} ({time.perf_counter() - start:.1f} s)")


def _orderings_average(v, p):
    phi = np.zeros(p)
    orders = list(permutations(range(p)))
    for order in orders:
        mask = 0
        for j in order:
            phi[j] += v[mask | 1 << j] - v[mask]
            mask |= 1 << j
    return phi / len(orders)


def test_01_local_accuracy(dataset, gbt, logit, background, grouping, capsys):
    with criterion(1, "local accuracy on 500 fixture shots, both models", capsys):
        start = time.perf_counter()
        rows = np.random.default_rng(1).choice(dataset.n, size=500, replace=False)
        worst = 0.0
        for model in (gbt, logit):
            for i in rows:
                att = exact_shap(model, dataset.X[i], background, grouping)
                assert att.prediction == model.predict_one(dataset.X[i])
                worst = max(worst, abs(att.phi0 + att.values.sum() - att.prediction))
        elapsed = time.perf_counter() - start
        assert worst <= 1e-9, f"max local-accuracy error {worst:.3e}"
        assert elapsed <= 60, f"took {elapsed:.1f} s"


def test_02_brute_force_oracle(capsys):
    with criterion(2, "exact Shapley equals ordering enumeration, p <= 5, 100 instances", capsys):
        rng = np.random.default_rng(2)
        for _ in range(100):
            p = int(rng.integers(1, 6))
            table = rng.normal(size=1 << p)
            weights = 1 << np.arange(p)
            # rows of ones/zeros index the table directly, so v(S) is the tabulated value
            model = FunctionPredictor(lambda X, t=table, w=weights: t[(X > 0.5) @ w], p)
            att = exact_shap(model, np.ones(p), BackgroundSet(rows=np.zeros((1, p))), FeatureGrouping.singletons(p))
            err = np.max(np.abs(att.values - _orderings_average(table, p)))
            assert err <= 1e-9, f"p={p}: error {err:.3e}"


def test_03_linear_closed_form(capsys):
    with criterion(3, "linear predictor closed form over 100 (x, background) pairs", capsys):
        rng = np.random.default_rng(3)
        for _ in range(100):
            d = int(rng.integers(2, 9))
            beta0, beta = rng.normal(), rng.normal(size=d)
            model = FunctionPredictor(lambda X, b0=beta0, b=beta: b0 + X @ b, d)
            bg = BackgroundSet(rows=rng.normal(size=(int(rng.integers(1, 60)), d)))
            x = rng.normal(size=d)
            att = exact_shap(model, x, bg, FeatureGrouping.singletons(d))
            want = beta * (x - bg.rows.mean(axis=0))
            assert np.max(np.abs(att.values - want)) <= 1e-9


def test_04_sampling_convergence(dataset, gbt, background, grouping, capsys):
    with criterion(4, "sampled (2000 orderings) vs exact on 50 shots", capsys):
        start = time.perf_counter()
        rows = np.random.default_rng(4).choice(dataset.n, size=50, replace=False)
        worst_abs = 0.0
        for i in rows:
            exact = exact_shap(gbt, dataset.X[i], background, grouping)
            est = sampled_shap(gbt, dataset.X[i], background, grouping, n_perm=2000, seed=42)
            se = np.array(list(est.se.values()))
            diff = np.abs(est.values - exact.values)
            worst_abs = max(worst_abs, diff.max())
            # features with zero spread have zero error up to rounding
            assert np.all(diff <= 3 * se + 1e-12), f"shot {i}: |diff| {diff} vs 3*SE {3 * se}"
        elapsed = time.perf_counter() - start
        assert worst_abs <= 0.01, f"max |diff| {worst_abs:.4f}"
        assert elapsed <= 120, f"took {elapsed:.1f} s"


def test_05_ashap_identities(dataset, gbt, background, grouping, capsys):
    with criterion(5, "aSHAP mean/sum/union identities", capsys):
        groups = [select(dataset, GroupSelector(player=p)) for p in ("Evan Ferguson", "Mathys Tel")]
        attrs = [explain_rows(gbt, dataset.X[g], background, grouping) for g in groups]
        for g, a in zip(groups, attrs):
            mean = aggregate_shap(a, "mean")
            total = aggregate_shap(a, "sum")
            target = predict_batch(gbt, dataset.X[g]).mean()
            assert abs(mean.phi0 + sum(mean.phi_bar.values()) - target) <= 1e-9
            for f in mean.phi_bar:
                assert abs(total.phi_bar[f] - mean.n * mean.phi_bar[f]) <= 1e-12
            assert abs(mean.n * mean.phi0 + sum(total.phi_bar.values()) - mean.n * target) <= 1e-9
        a, b = (aggregate_shap(x) for x in attrs)
        union = aggregate_shap(attrs[0] + attrs[1])
        for f in union.phi_bar:
            assert abs(union.phi_bar[f] - (a.n * a.phi_bar[f] + b.n * b.phi_bar[f]) / (a.n + b.n)) <= 1e-12


def test_06_profile_identities(dataset, gbt, capsys):
    with criterion(6, "AP = double-loop oracle on the roster; PDP = AP(all); CP through f(x)", capsys):
        enc = dataset.encoding
        col = enc.feature_columns("distance_to_goal")[0]
        grid = make_grid(dataset, "distance_to_goal")
        for player in ROSTER:
            rows = select(dataset, GroupSelector(player=player))
            ap = aggregate_profiles(gbt, dataset, rows, "distance_to_goal", grid)
            sums = np.zeros(len(grid.values))
            for r in rows:
                for g, value in enumerate(grid.values):
                    z = np.array(dataset.X[r])
                    z[col] = value
                    sums[g] += gbt.predict_one(z)
            assert np.max(np.abs(ap.values - sums / rows.size)) <= 1e-12, player
        for feature in ("angle_to_goal", "situation"):
            g = make_grid(dataset, feature)
            assert pdp(gbt, dataset, feature, g).values.tobytes() == \
                aggregate_profiles(gbt, dataset, np.arange(dataset.n), feature, g).values.tobytes()
        for i in np.random.default_rng(6).choice(dataset.n, size=50, replace=False):
            x = dataset.X[i]
            prof = cp_profile(gbt, x, "distance_to_goal", grid)
            assert prof.values[prof.grid.index(x[col])] == gbt.predict_one(x)


def test_07_axioms(capsys):
    with criterion(7, "dummy, symmetry and additivity on constructed models", capsys):
        rng = np.random.default_rng(7)
        grouping = FeatureGrouping.singletons(5)

        def g(X):
            return np.tanh(X[:, 0] + X[:, 1]) + X[:, 0] * X[:, 1] * X[:, 2]

        def h(X):
            return np.sin(X[:, 2]) + 0.5 * X[:, 3] ** 2

        for _ in range(30):
            bg = BackgroundSet(rows=rng.normal(size=(20, 5)))
            x = rng.normal(size=5)
            x[1] = x[0]
            sym_bg = BackgroundSet(rows=np.vstack([bg.rows, bg.rows[:, [1, 0, 2, 3, 4]]]))
            att_g = exact_shap(FunctionPredictor(g, 5), x, sym_bg, grouping)
            assert att_g.phi["x4"] == 0.0 and att_g.phi["x3"] == 0.0
            assert abs(att_g.phi["x0"] - att_g.phi["x1"]) <= 1e-9
            both = exact_shap(FunctionPredictor(lambda X: g(X) + h(X), 5), x, bg, grouping).values
            parts = exact_shap(FunctionPredictor(g, 5), x, bg, grouping).values + \
                exact_shap(FunctionPredictor(h, 5), x, bg, grouping).values
            assert np.max(np.abs(both - parts)) <= 1e-9


@pytest.fixture(scope="module")
def synthetic_1000(dataset, gbt):
    events = synthetic_shots(1000, seed=8)
    return events, encode(events, dataset.encoding)


def test_08_metrics(gbt, synthetic_1000, capsys):
    with criterion(8, "xG family vs row-by-row recomputation; on-target sub-sums on 1000 subgroups", capsys):
        events, data = synthetic_1000
        pred = predict_batch(gbt, data.X)
        for team in sorted({e.team for e in events}):
            xg = xgot = xga = xgaot = 0.0
            for e, p in zip(events, pred.tolist()):
                if e.team == team:
                    xg += p
                    xgot += p if e.on_target else 0.0
                if e.opponent == team:
                    xga += p
                    xgaot += p if e.on_target else 0.0
            rep = compute_metrics(gbt, data, GroupSelector(team=team))
            for got, want in ((rep.xg, xg), (rep.xgot, xgot), (rep.xga, xga), (rep.xgaot, xgaot)):
                assert abs(got - want) <= 1e-12, team
        rng = np.random.default_rng(8)
        z = np.asarray(data.z, dtype=float)
        for _ in range(1000):
            taken = np.flatnonzero(rng.random(data.n) < rng.random())
            conceded = np.flatnonzero(rng.random(data.n) < rng.random())
            if taken.size == 0:
                continue
            rep = metrics_from_predictions(pred, z, data.y, taken, conceded)
            assert 0 <= rep.xgot <= rep.xg and 0 <= rep.xgaot <= rep.xga


def test_09_xg_per_shot_fixture(dataset, capsys):
    with criterion(9, "100-shot fixture averaging 0.267 gives xG/shot 0.267", capsys):
        rows = select(dataset, GroupSelector(team="Lille OSC", season="2021/22"))[:100]
        sub = dataset.subset(rows)
        col = dataset.encoding.feature_columns("distance_to_goal")[0]
        d = sub.X[:, col]
        spread = (d - d.mean()) / (d.max() - d.min()) * 0.2
        lookup = dict(zip(d.tolist(), (0.267 + spread).tolist()))
        model = FunctionPredictor(lambda X: np.array([lookup[v] for v in X[:, col]]), dataset.d, dataset.encoding)
        assert abs(math.fsum(lookup[v] for v in d.tolist()) / 100 - 0.267) <= 1e-12
        rep = compute_metrics(model, sub, GroupSelector(team="Lille OSC"))
        assert rep.m == 100
        assert abs(rep.xg_per_shot - 0.267) <= 1e-12, rep.xg_per_shot


def test_10_gbt_sanity(capsys):
    with criterion(10, "GBT on 50 000 synthetic shots: AUC, calibration, training time", capsys):
        events = synthetic_shots(50_000, seed=10)
        data = encode(events, build_encoding(events))
        train_idx, test_idx = match_split(data)
        start = time.perf_counter()
        model = train_gbt(data.subset(train_idx), GBTConfig())
        elapsed = time.perf_counter() - start
        rep = evaluate(model, data.subset(test_idx))
        good = sum(abs(b["mean_predicted"] - b["observed_rate"]) <= 0.05 for b in rep.calibration)
        assert rep.auc >= 0.75, f"AUC {rep.auc:.3f}"
        assert good >= 8, f"{good}/10 calibrated bins"
        assert elapsed <= 60, f"training took {elapsed:.1f} s"


def _run_all(tmp, model, threads):
    """Every subcommand once; returns {relative path: bytes} of everything written."""
    os.makedirs(tmp, exist_ok=True)
    t = ["--threads", str(threads)]
    data = ["--data", FIXTURE_CSV, "--model", model]
    calls = [
        ["explain", *data, *t, "--select", "player=Mathys Tel", "--out", f"{tmp}/explain_group.json"],
        ["explain", *data, *t, "--select", "team=Lille OSC", "--method", "sampled", "--n-perm", "200",
         "--mode", "sum", "--out", f"{tmp}/explain_sampled.json"],
        ["profile", *data, *t, "--feature", "distance_to_goal", "--select", "player=Evan Ferguson",
         "--out", f"{tmp}/profile_ap.json"],
        ["profile", *data, *t, "--feature", "situation", "--out", f"{tmp}/profile_pdp.json"],
        ["metrics", *data, *t, "--select", "league=EPL", "--by", "team", "--out", f"{tmp}/metrics.json",
         "--csv", f"{tmp}/metrics.csv"],
        ["report", "scoring-potential", *data, *t, "--players", ",".join(ROSTER), "--out-dir", f"{tmp}/sp"],
        ["report", "goalkeeper-blindspot", *data, *t, "--keepers", "FC Köln,RCD Espanyol,Brentford FC",
         "--labels", "Schwabe,Remino,Raya", "--select", "season=2022/23", "--out-dir", f"{tmp}/gk"],
        ["report", "season-comparison", *data, *t, "--team", "Lille OSC", "--seasons", "2020/21,2021/22",
         "--out-dir", f"{tmp}/sc"],
    ]
    for argv in calls:
        assert main(argv) == 0, " ".join(argv[:2])
    files = {}
    for root, _, names in os.walk(tmp):
        for name in names:
            path = os.path.join(root, name)
            with open(path, "rb") as fh:
                files[os.path.relpath(path, tmp)] = fh.read()
    return files


def test_11_cli_determinism(tmp_path, capsys):
    with criterion(11, "CLI outputs byte-identical across reruns and --threads 1 vs 8", capsys):
        models = []
        for name in ("m1.json", "m2.json"):
            assert main(["train", "--data", FIXTURE_CSV, "--out", str(tmp_path / name), "--seed", "42"]) == 0
            models.append((tmp_path / name).read_bytes())
        assert models[0] == models[1], "model files differ"
        model = str(tmp_path / "m1.json")
        first = _run_all(str(tmp_path / "a"), model, 1)
        second = _run_all(str(tmp_path / "b"), model, 1)
        eight = _run_all(str(tmp_path / "c"), model, 8)
        assert sum(name.endswith(".svg") for name in first) == 2 + 3 + 2
        assert first == second, sorted(k for k in first if first[k] != second.get(k))
        assert first == eight, sorted(k for k in first if first[k] != eight.get(k))


def test_12_performance(dataset, gbt, background, grouping, tmp_path, capsys):
    with criterion(12, "exact SHAP <= 50 ms/shot; 36-shot aSHAP + 2 APs + SVGs <= 5 s", capsys):
        rows = np.random.default_rng(12).choice(dataset.n, size=100, replace=False)
        exact_shap(gbt, dataset.X[rows[0]], background, grouping)
        start = time.perf_counter()
        for i in rows:
            exact_shap(gbt, dataset.X[i], background, grouping)
        per_shot = (time.perf_counter() - start) / rows.size
        assert per_shot <= 0.050, f"{per_shot * 1000:.1f} ms/shot"

        start = time.perf_counter()
        fergus = GroupSelector(player="Evan Ferguson", season="2022/23")
        members = select(dataset, fergus)
        assert members.size == 36
        aggregate_shap(explain_rows(gbt, dataset.X[members], background, grouping), group=fergus.to_dict())
        report = scoring_potential(gbt, dataset, [fergus])
        paths = render_svg(report, tmp_path)
        elapsed = time.perf_counter() - start
        assert len(paths) == 2
        assert elapsed <= 5.0, f"group workflow took {elapsed:.2f} s"
