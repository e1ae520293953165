import math

import numpy as np
import pytest

from kashinsplit import (
    ConfigError,
    MixSpace,
    VectorSet,
    bernoulli_sup,
    bernoulli_sup_bound,
    gen_walsh,
    moment_deviation,
    scaling_study,
)

W4 = gen_walsh(4)
SPACE = MixSpace(1.5, 1.0)


def test_bernoulli_single_vector_l2_ball_is_one():
    xs = VectorSet.from_system(W4, [0])
    rep = bernoulli_sup(xs, SPACE, W4, sign_trials=2, restarts=3, iters=60,
                        seed=0, ball="l2", support=[0])
    assert rep.lhs_estimate == pytest.approx(1.0, rel=1e-9)
    assert rep.semantics == "lower-estimate"


def test_bernoulli_zero_vectors():
    xs = VectorSet(np.zeros((3, 16)), W4.weights, bound=0.0)
    rep = bernoulli_sup(xs, SPACE, W4, sign_trials=4, restarts=2, iters=30, seed=1)
    assert rep.lhs_estimate == 0.0


def test_bernoulli_global_sign_flip_invariance():
    from kashinsplit.empirical import sign_trial_value
    from kashinsplit.metrics import pairing_matrix

    xs = VectorSet.from_system(W4, [0, 3, 5, 9])
    C = pairing_matrix(xs, W4)
    rng = np.random.default_rng(2)
    for t in range(5):
        eps = rng.integers(0, 2, size=4) * 2.0 - 1.0
        v_plus, _ = sign_trial_value(C, eps, W4, SPACE, restarts=4, iters=80, seed=t)
        v_minus, _ = sign_trial_value(C, -eps, W4, SPACE, restarts=4, iters=80, seed=t)
        assert v_plus == v_minus


def test_bernoulli_exhaustive_covers_flip_pairs():
    # exhaustive mode enumerates one representative per +-pair
    xs = VectorSet.from_system(W4, [0, 3, 5, 9])
    rep = bernoulli_sup(xs, SPACE, W4, sign_trials=1, restarts=3, iters=60,
                        seed=2, exhaustive=True)
    assert rep.values.size == 8
    assert all(v > 0 for v in rep.values)


def test_bernoulli_exhaustive_cap():
    xs = VectorSet.from_system(gen_walsh(5))
    with pytest.raises(ConfigError):
        bernoulli_sup(xs, SPACE, gen_walsh(5), exhaustive=True)


def test_bernoulli_guards():
    xs = VectorSet.from_system(W4)
    with pytest.raises(ConfigError):
        bernoulli_sup(xs, SPACE, W4, sign_trials=0)


def test_bound_components_product():
    xs = VectorSet.from_system(W4, [0, 1])
    rhs, comps = bernoulli_sup_bound(xs, SPACE)
    lam = math.sqrt(8.0 / (1.5 * 0.5))
    expect = lam**4 * math.sqrt(3.0) * math.sqrt(math.log(2.0)) * 1.0 * math.sqrt(xs.l2_quad_sup)
    assert rhs == pytest.approx(expect, rel=1e-12)
    assert comps["sqrt_log_m"] == pytest.approx(math.sqrt(math.log(2.0)))


def test_bound_scales_quadratically_with_vectors():
    xs1 = VectorSet.from_system(W4, range(4))
    t = 3.0
    xs2 = VectorSet(W4.values[:4] * t, W4.weights, bound=t)
    r1, _ = bernoulli_sup_bound(xs1, SPACE)
    r2, _ = bernoulli_sup_bound(xs2, SPACE)
    assert r2 == pytest.approx(t * t * r1, rel=1e-9)


def test_bound_needs_two_vectors():
    xs = VectorSet.from_system(W4, [0])
    with pytest.raises(ConfigError):
        bernoulli_sup_bound(xs, SPACE)


def test_moment_single_sample_exact():
    n = W4.n
    rep = moment_deviation(W4, 1, SPACE, picks=[0], support=[0], ball="l2",
                           restarts=3, iters=60, seed=0)
    assert rep.lhs_estimate == pytest.approx(1.0 - 1.0 / n, rel=1e-9)


def test_moment_exact_tiling_is_zero():
    rep = moment_deviation(W4, W4.n, SPACE, picks=np.arange(W4.n), ball="l2",
                           restarts=3, iters=50, seed=0)
    assert rep.lhs_estimate == pytest.approx(0.0, abs=1e-12)


def test_moment_report_fields():
    rep = moment_deviation(W4, 8, SPACE, trials=5, restarts=3, iters=50, seed=3)
    assert rep.lhs_estimate >= 0.0
    assert rep.A is not None and rep.sigma is not None
    assert rep.rhs == pytest.approx(rep.A**2 + rep.sigma * rep.A)
    assert rep.sigma == pytest.approx(math.sqrt(2.0) / 4.0)  # sqrt(2) rho / sqrt(16)


def test_moment_lhs_decreases_with_more_samples():
    small = moment_deviation(W4, 8, SPACE, trials=12, restarts=4, iters=80, seed=4)
    large = moment_deviation(W4, 128, SPACE, trials=12, restarts=4, iters=80, seed=4)
    assert large.lhs_estimate < small.lhs_estimate


def test_moment_guard():
    with pytest.raises(ConfigError):
        moment_deviation(W4, 0, SPACE)


def test_scaling_study_single_row_degenerate():
    study = scaling_study([W4], 1.5, 1.0, sign_trials=4, restarts=3, iters=40, seed=5)
    assert study.degenerate
    assert math.isnan(study.slope)
    assert len(study.rows) == 1


def test_scaling_study_two_rows():
    study = scaling_study([W4, gen_walsh(5)], 1.5, 1.0, sign_trials=6,
                          restarts=3, iters=60, seed=6)
    assert not study.degenerate
    assert len(study.rows) == 2
    assert study.rows[0].m == 16 and study.rows[1].m == 32
    assert all(r.ratio > 0 for r in study.rows)
    assert math.isfinite(study.slope) and math.isfinite(study.loglog_slope)


def test_scaling_study_empty_grid():
    with pytest.raises(ConfigError):
        scaling_study([], 1.5, 1.0)
