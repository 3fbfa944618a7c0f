import numpy as np
import pytest
from scipy import stats

from walshae import autoencoder as ae
from walshae import evaluation as ev
from walshae.fingerprint import InterferenceMask


def threshold_trial(t):
    def trial(rng, n):
        return int(np.count_nonzero(rng.standard_normal(n) > t))
    return trial


def bernoulli_trial(p):
    def trial(rng, n):
        return int(np.count_nonzero(rng.random(n) < p))
    return trial


def min_distance_model(seed=2):
    """Encoder from init_model, decoder hand-set to the minimum-distance rule."""
    m = ae.init_model(seed)
    cb = ae.codebook(m)
    m.dec_w1[:] = cb.T
    m.dec_b1[:] = 100.0 - 0.5 * (cb**2).sum(1)
    m.dec_w2[:] = 50 * np.eye(16)
    m.dec_b2[:] = 0
    return m


def test_estimator_matches_gaussian_tail():
    p = stats.norm.sf(2.0)
    errors, blocks = ev.run_trials(threshold_trial(2.0), 1, 7, min_errors=2000, chunk_blocks=20_000)
    sigma = np.sqrt(p * (1 - p) / blocks)
    assert errors >= 2000
    assert abs(errors / blocks - p) < 3 * sigma


def test_clopper_pearson_coverage():
    p = 1e-3
    covered = 0
    for s in range(100):
        e, n = ev.run_trials(bernoulli_trial(p), s, 1, min_errors=10**9, max_blocks=50_000,
                             chunk_blocks=50_000)
        lo, hi = ev.clopper_pearson(e, n)
        covered += lo <= p <= hi
    assert covered >= 93


def test_clopper_pearson_edges():
    lo, hi = ev.clopper_pearson(0, 1000)
    assert lo == 0 and hi == pytest.approx(1 - 0.025 ** (1 / 1000))
    lo, hi = ev.clopper_pearson(1000, 1000)
    assert hi == 1 and lo == pytest.approx(0.025 ** (1 / 1000))
    lo, hi = ev.clopper_pearson(50, 1000)
    assert lo < 0.05 < hi


def test_worker_count_invariance():
    a = ev.run_trials(bernoulli_trial(0.01), 3, 9, min_errors=500, chunk_blocks=4096, workers=1)
    b = ev.run_trials(bernoulli_trial(0.01), 3, 9, min_errors=500, chunk_blocks=4096, workers=8)
    assert a == b


def test_max_blocks_respected():
    e, n = ev.run_trials(bernoulli_trial(1e-9), 0, 0, max_blocks=100_000, chunk_blocks=30_000, workers=3)
    assert n == 100_000


def test_censored_point():
    p = ev.make_point(8.0, 0, 1_000_000)
    assert p.censored and p.block_errors == 0
    assert p.bler == pytest.approx(3.689e-6, rel=1e-3)


def test_point_fields():
    p = ev.make_point(6.0, 150, 10_000)
    assert p.bler == 0.015 and not p.censored
    assert p.ci_low < 0.015 < p.ci_high
    assert p.ci95_halfwidth == pytest.approx((p.ci_high - p.ci_low) / 2)


def test_uniform_decoder_guesses():
    m = ae.init_model(0)
    for k in ("dec_w1", "dec_b1", "dec_w2", "dec_b2"):
        getattr(m, k)[:] = 0
    sc = ev.ScenarioSpec(m, "baseline")
    p = ev.measure_bler(sc, 8.0, 0, min_errors=20_000)
    assert p.ci_low <= 15 / 16 <= p.ci_high


def test_measure_reproducible_and_worker_invariant():
    sc = ev.ScenarioSpec(min_distance_model(), "baseline")
    a = ev.measure_bler(sc, 4.0, 5, min_errors=200, workers=1)
    b = ev.measure_bler(sc, 4.0, 5, min_errors=200, workers=1)
    c = ev.measure_bler(sc, 4.0, 5, min_errors=200, workers=4)
    assert a == b == c


def test_curve_decreasing():
    sc = ev.ScenarioSpec(min_distance_model(), "baseline")
    pts = ev.bler_curve(sc, [2.0, 5.0, 8.0], 0, min_errors=200)
    assert pts[0].bler > pts[1].bler > pts[2].bler


def test_scenario_label_checks():
    base = ae.init_model(0)
    aware = ae.init_model(0)
    aware.meta["ici_db"] = 6.0
    mask = InterferenceMask.uniform(32)
    with pytest.raises(ValueError):
        ev.ScenarioSpec(base, "baseline", mask, 6.0)
    with pytest.raises(ValueError):
        ev.ScenarioSpec(base, "ici-aware-model", mask, 6.0)
    with pytest.raises(ValueError):
        ev.ScenarioSpec(aware, "ici-unaware-model", mask, 6.0)
    with pytest.raises(ValueError):
        ev.ScenarioSpec(base, "ici-unaware-model", None, 6.0)
    with pytest.raises(ValueError):
        ev.ScenarioSpec(base, "interfered")
    assert ev.ScenarioSpec(base, "ici-unaware-model", mask, 6.0).channel(8.0).interference_active


def test_cis_overlap_and_median():
    a, b, c = ev.make_point(8, 10, 10**5), ev.make_point(8, 12, 10**5), ev.make_point(8, 200, 10**5)
    assert ev.cis_overlap(a, b) and not ev.cis_overlap(a, c)
    assert ev.ensemble_median([c, a, b]) is b


def test_offset_gradient_fit():
    f = np.array([2475, 2375, 2275, 1250, 1350, 1450]) * 1e6
    off = np.array([25, 125, 225, 0, 100, 200])
    slope, r2 = ev.fit_offset_gradient(f, 1e-5 + 3e-7 * off)
    assert slope == pytest.approx(3e-7) and r2 == pytest.approx(1.0)
    assert ev.offset_from_submultiple(2075e6) == pytest.approx(425e6)


def test_single_frequency_sweep():
    m = min_distance_model()
    m.meta["ici_db"] = 6.0
    mask = InterferenceMask.uniform(32)
    res = ev.frequency_sweep({2475e6: m}, {2475e6: mask}, [2475e6], 6.0, [4.0], 0, min_errors=50)
    assert len(res.rows) == 1
    assert res.gradients[4.0][0] == 0.0


def test_meets_target():
    assert ev.meets_target(ev.make_point(8, 0, 10**6), 1e-4)
    assert not ev.meets_target(ev.make_point(8, 500, 10**5), 1e-4)
    assert ev.meets_target(ev.make_point(8, 100, 2 * 10**6), 1e-4)


def test_rejection_sweep_picks_highest_passing_level():
    base = min_distance_model()
    calls = []

    def model_for(fc, level):
        calls.append(level)
        m = base.copy()
        m.meta = {"ici_db": level}
        return m

    masks = {1e9: InterferenceMask.uniform(32)}
    grid = [1.0, 4.0, 8.0, 12.0]
    (res,) = ev.ici_rejection_sweep(model_for, masks, [1e9], 1e-3, 16.0, grid, 0,
                                    min_errors=100, max_blocks=200_000)
    assert res.max_ici_db == 4.0  # 12 and 8 dB fail at this operating point
    assert ev.meets_target(res.points[res.max_ici_db], 1e-3)
    assert all(not ev.meets_target(p, 1e-3) for lvl, p in res.points.items() if lvl > res.max_ici_db)
    assert calls == sorted(calls, reverse=True)
    (none,) = ev.ici_rejection_sweep(model_for, masks, [1e9], 1e-2, -5.0, [1.0, 2.0], 0,
                                     min_errors=100, max_blocks=200_000)
    assert none.max_ici_db is None


def test_rejection_sweep_ensemble_uses_median_member():
    good = min_distance_model()
    bad = ae.init_model(0)
    for k in ("dec_w1", "dec_b1", "dec_w2", "dec_b2"):
        getattr(bad, k)[:] = 0  # always guesses message 0

    def model_for(fc, level):
        ms = [good.copy(), good.copy(), bad.copy()]
        for m in ms:
            m.meta = {"ici_db": level}
        return ms

    (res,) = ev.ici_rejection_sweep(model_for, {1e9: InterferenceMask.uniform(32)}, [1e9], 1e-3, 22.0,
                                    [12.0], 0, min_errors=100, max_blocks=200_000)
    assert res.max_ici_db == 12.0

