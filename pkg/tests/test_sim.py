import json

import numpy as np
import pytest
from scipy import stats

from umpcodes import sim, ump
from umpcodes.sim import (
    ERASURE,
    WRONG_CLASS,
    ErrorEstimate,
    ExperimentConfig,
    FrameRecords,
    Simulator,
    best_threshold,
    build_code,
    estimate_rates,
    find_max_rates,
    find_min_snr,
    frame_categories,
    optimize_threshold,
    wilson_interval,
)

SYMMETRIC = dict(family="ztcc", n=32, k0=12, k1=12, generators="133,171/133,171", eps0=1e-2, eps1=1e-2,
                 batch_size=2000)
SMALL = dict(family="ztcc", n=32, k0=6, k1=12, generators="117,127,155,171/133,171",
             eps0=1e-2, eps1=5e-2, batch_size=500, max_frames=20_000, bracket=(-4.0, 6.0))


def test_config_defaults_and_validation():
    cfg = ExperimentConfig()
    assert (cfg.k0, cfg.k1) == (32, 64)
    assert ExperimentConfig(rates=(0.25, 0.5), n=64).k0 == 16
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.replace(k0=20).k0 == 20
    for bad in (dict(family="ldpc"), dict(mode="ml"), dict(eps0=0.1, eps1=0.01), dict(k0=128),
                dict(family="polar", mode="lrt"), dict(bracket=(3, 1)), dict(nu=7)):
        with pytest.raises(ValueError):
            ExperimentConfig(**bad)
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"colour": 1})
    with pytest.raises(ValueError):
        ExperimentConfig(generators="133,171").generator_pair()


def test_wilson_matches_scipy():
    for k, n in [(0, 10), (3, 100), (50, 60), (1, 1_000_000)]:
        ci = stats.binomtest(k, n).proportion_ci(0.95, method="wilson")
        lo, hi = wilson_interval(k, n)
        assert lo == pytest.approx(ci.low, abs=1e-12) and hi == pytest.approx(ci.high, abs=1e-12)
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_error_estimate_accounting():
    e = ErrorEstimate(100, 3, 2, 1)
    assert e.errors == 6 and e.rate == 0.06
    lo, hi = e.interval
    assert lo < 0.06 < hi
    d = e.to_dict()
    assert d["wrong_class"] + d["wrong_codeword"] + d["erasure"] == d["errors"]
    with pytest.raises(ValueError):
        ErrorEstimate(5, 3, 3, 0)


def random_candidates(rng, size, n=6, erasures=True, shared=False):
    cw0 = rng.integers(0, 2, (size, n), dtype=np.uint8)
    cw1 = rng.integers(0, 2, (size, n), dtype=np.uint8)
    ok0 = rng.random(size) > (0.2 if erasures else 0)
    ok1 = rng.random(size) > (0.2 if erasures else 0)
    sh = (rng.random(size) < 0.2) if shared else np.zeros(size, bool)
    return ump.Candidates(rng.normal(0, 2, size), cw0, cw1, cw0[:, :2], cw1[:, :2], ok0, ok1, sh & ok0)


def test_records_agree_with_direct_decisions(rng):
    """Offline threshold evaluation equals deciding each frame at that threshold."""
    for true_class in (0, 1):
        cand = random_candidates(rng, 3000, shared=True)
        sent = np.where(rng.random((3000, 1)) < 0.5, cand.cw0, cand.cw1)
        rec = FrameRecords()
        half = 1500
        for sl in (slice(0, half), slice(half, None)):
            sub = ump.Candidates(*(getattr(cand, f)[sl] for f in
                                   ("stat", "cw0", "cw1", "msg0", "msg1", "ok0", "ok1", "shared0")))
            rec.extend(sub.stat, *frame_categories(sub, sent[sl], true_class))
        for t in (-3.0, -0.5, 0.0, 0.7, 2.0, float(cand.stat[5])):
            h, from0 = ump.decide(cand, t)
            out = np.where(from0[:, None], cand.cw0, cand.cw1)
            wrong_class = (h != true_class) & (h != ump.Hypothesis.ERASURE)
            erasure = h == ump.Hypothesis.ERASURE
            wrong_cw = (h == true_class) & ~(out == sent).all(axis=1)
            c = rec.counts(t)
            assert c[WRONG_CLASS] == wrong_class.sum()
            assert c[ERASURE] == erasure.sum()
            assert c[sim.WRONG_CODEWORD] == wrong_cw.sum()
            assert c.sum() == 3000
        grid = np.linspace(-4, 4, 9)
        assert np.array_equal(rec.counts(grid)[3], rec.counts(grid[3]))


def test_high_snr_no_errors():
    e0, e1 = estimate_rates(ExperimentConfig(**SMALL), 12.0, 0.0)
    assert e0.errors == 0 and e1.errors == 0
    assert e0.frames == e1.frames == SMALL["max_frames"]


def test_same_seed_same_counts():
    cfg = ExperimentConfig(**dict(SMALL, max_frames=3000))
    a = estimate_rates(cfg, 0.0, 0.0)
    b = estimate_rates(cfg, 0.0, 0.0)
    assert a == b
    c = estimate_rates(cfg.replace(seed=1), 0.0, 0.0)
    assert c != a


def test_worker_count_independence():
    cfg = ExperimentConfig(**dict(SMALL, max_frames=4000, min_errors=10_000))
    one = estimate_rates(cfg, 0.0, 0.5)
    two = estimate_rates(cfg.replace(threads=2), 0.0, 0.5)
    assert one == two


def test_common_random_numbers_monotone():
    cfg = ExperimentConfig(**SMALL)
    s = Simulator(cfg, build_code(cfg), -1.0)
    s.run(0, 8)
    s.run(1, 8)
    grid = sim.threshold_grid()
    e0 = [s.estimates(float(t))[0].errors for t in grid]
    e1 = [s.estimates(float(t))[1].errors for t in grid]
    assert all(np.diff(e0) >= 0) and all(np.diff(e1) <= 0)
    assert e0[0] < e0[-1] and e1[0] > e1[-1]


def test_symmetric_problem_threshold_near_zero():
    for seed in range(3):
        cfg = ExperimentConfig(**dict(SYMMETRIC, seed=seed))
        s = Simulator(cfg, build_code(cfg), -4.0)
        s.run(0, 10)
        s.run(1, 10)
        res = best_threshold(s, (cfg.eps0, cfg.eps1))
        assert abs(res.log_threshold) <= sim.THRESHOLD_STEP


def test_grid_refinement_stability(monkeypatch):
    cfg = ExperimentConfig(**SMALL)
    s = Simulator(cfg, build_code(cfg), -1.0)
    s.run(0, 10)
    s.run(1, 10)
    coarse = best_threshold(s, (cfg.eps0, cfg.eps1)).log_threshold
    monkeypatch.setattr(sim, "THRESHOLD_STEP", sim.THRESHOLD_STEP / 2)
    fine = best_threshold(s, (cfg.eps0, cfg.eps1)).log_threshold
    assert abs(fine - coarse) <= 0.25


def test_optimize_threshold_reports_infeasible():
    cfg = ExperimentConfig(**dict(SMALL, eps0=1e-4, eps1=1e-4))
    res = optimize_threshold(cfg, -4.0)
    assert not res.satisfied
    assert res.grid["step"] == sim.THRESHOLD_STEP


def test_error_floor_with_overlapping_cosets():
    cfg = ExperimentConfig(family="ztcc", n=32, k0=4, k1=12, overlap=True, max_frames=20_000,
                           min_errors=10**9, batch_size=2000)
    code = build_code(cfg)
    floor = ump.predicted_error_floor(code)
    e0, _ = estimate_rates(cfg, 9.0, 0.0, code)
    lo, hi = e0.interval
    assert lo <= floor <= hi
    assert e0.wrong_class == e0.errors


def test_min_snr_search():
    cfg = ExperimentConfig(**SMALL)
    res = find_min_snr(cfg)
    assert res.esn0_db in [p.esn0_db for p in res.points]
    feasible = {p.esn0_db: p.result.satisfied for p in res.points}
    assert feasible[res.esn0_db]
    assert not feasible[round(res.esn0_db - sim.SNR_RESOLUTION_DB, 6)]
    again = find_min_snr(cfg)
    assert again.esn0_db == res.esn0_db and again.estimates == res.estimates
    relaxed = find_min_snr(cfg.replace(eps0=5e-2, eps1=1e-1, bracket=(-10.0, 6.0)))
    assert relaxed.esn0_db <= res.esn0_db


def test_min_snr_bracket_errors():
    cfg = ExperimentConfig(**dict(SMALL, bracket=(-8.0, -6.0)))
    with pytest.raises(sim.BracketError):
        find_min_snr(cfg)
    cfg = ExperimentConfig(**dict(SMALL, bracket=(10.0, 12.0)))
    with pytest.raises(sim.BracketError):
        find_min_snr(cfg)


def test_max_rates_monotone_in_snr():
    base = dict(family="polar", n=32, crc="0x61", list_size=8, eps0=1e-2, eps1=5e-2,
                batch_size=500, max_frames=5000)
    cfg = ExperimentConfig(**base)
    low = find_max_rates(cfg, 0.0)
    high = find_max_rates(cfg, 3.0)
    assert 1 <= low.k0 and 1 <= low.k1
    assert high.k0 >= low.k0 and high.k1 >= low.k1
    r0, r1 = high.rates
    assert r0 == high.k0 / 32 and r1 == high.k1 / 32
    best = [p for p in high.points if (p.k0, p.k1) == (high.k0, high.k1)][0]
    assert best.result.satisfied


def test_max_rates_infeasible():
    cfg = ExperimentConfig(family="ztcc", n=16, k0=2, k1=2, generators="117,127,155,171/133,171",
                           eps0=1e-3, eps1=1e-3, max_frames=4000)
    with pytest.raises(sim.InfeasibleError):
        find_max_rates(cfg, -15.0, start=(2, 2))


def test_outputs(tmp_path):
    cfg = ExperimentConfig(**dict(SMALL, max_frames=2000))
    res = optimize_threshold(cfg, 1.0)
    row = sim.PointRecord(1.0, cfg.k0, cfg.k1, res).row(cfg)
    csv_path, json_path = sim.write_outputs(str(tmp_path / "out"), [row], cfg, {"note": 1})
    lines = open(csv_path).read().splitlines()
    assert lines[0].startswith("# config=")
    assert json.loads(lines[0][len("# config="):]) == cfg.to_dict()
    header = lines[1].split(",")
    for col in ("family", "n", "k0", "k1", "mode", "frames0", "wrong_class0", "wrong_codeword0",
                "erasure0", "rate0", "ci_low0", "ci_high0", "seed"):
        assert col in header
    summary = json.load(open(json_path))
    assert summary["config"] == cfg.to_dict() and summary["note"] == 1
