import math

import numpy as np
import pytest

from kashinsplit import (
    ConfigError,
    MixSpace,
    SpanElement,
    VectorSet,
    chain_dist,
    clarkson_slack,
    dual_norm_upper,
    ellipsoid_norm,
    gen_walsh,
    increment_dist,
    lp_norm,
    max_abs_quad_on_ball,
    max_pairing,
    max_quad_on_ball,
    metric_inequalities,
    mix_norm,
    quad_sup_upper,
    sample_mix_ball,
)

W3 = gen_walsh(3)
W6 = gen_walsh(6)


def rand_coeffs(rng, n, size=None):
    shape = (n,) if size is None else (size, n)
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0, np.inf])
def test_lp_norm_single_character(p):
    assert lp_norm(W3.values[5], W3, p) == pytest.approx(1.0)


def test_lp_norm_walsh2_character_sum():
    w2 = gen_walsh(2)
    f = w2.values.sum(axis=0)  # equals n at x = 0, zero elsewhere
    assert lp_norm(f, w2, 1.0) == pytest.approx(1.0)
    assert lp_norm(f, w2, 2.0) == pytest.approx(2.0)


def test_lp_norm_zero_and_guard():
    assert lp_norm(np.zeros(8), W3, 1.5) == 0.0
    with pytest.raises(ConfigError):
        lp_norm(np.ones(8), W3, 0.5)


def test_lp_norm_span_element():
    coeffs = np.zeros(8, dtype=complex)
    coeffs[2] = 2.0
    el = SpanElement(coeffs, support=[2])
    assert lp_norm(el, W3, 1.0) == pytest.approx(2.0)


def test_lp_norm_batched():
    rng = np.random.default_rng(0)
    ys = rng.standard_normal((5, 8))
    out = lp_norm(ys, W3, 1.5)
    assert out.shape == (5,)
    assert out[2] == pytest.approx(float(lp_norm(ys[2], W3, 1.5)))


def test_mix_space_constants():
    sp = MixSpace(1.5, 2.0)
    assert sp.convexity_constant == pytest.approx(math.sqrt(8.0 / (1.5 * 0.5)))
    assert sp.dual_type2 == pytest.approx(math.sqrt(3.0))
    assert sp.convexity_constant >= 1.0
    assert MixSpace(1.01, 1.0).convexity_constant > MixSpace(1.9, 1.0).convexity_constant


def test_mix_space_guards():
    with pytest.raises(ConfigError):
        MixSpace(1.0, 1.0)
    with pytest.raises(ConfigError):
        MixSpace(1.5, 0.0)


def test_mix_norm_balanced_point():
    # constant function: both legs are 1 when rho = 1
    y = np.ones(8)
    assert mix_norm(y, MixSpace(1.5, 1.0), W3) == pytest.approx(1.0)


def test_mix_norm_character_any_p():
    for p in (1.1, 1.5, 1.9):
        assert mix_norm(W3.values[1], MixSpace(p, 1.0), W3) == pytest.approx(1.0)


def test_mix_norm_matches_recomputation():
    rng = np.random.default_rng(1)
    y = rand_coeffs(rng, 64) @ W6.values
    sp = MixSpace(1.5, 2.0)
    expect = math.sqrt((lp_norm(y, W6, 1.5) ** 2 + lp_norm(y, W6, 2.0) ** 2 / 4.0) / 2.0)
    assert mix_norm(y, sp, W6) == pytest.approx(expect, rel=1e-12)


def test_max_pairing_orthonormal():
    xs = VectorSet.from_system(W3, range(4))
    assert max_pairing(W3.values[1], xs) == pytest.approx(1.0)
    assert max_pairing(W3.values[7], xs) == pytest.approx(0.0, abs=1e-15)


def test_max_pairing_loop_oracle():
    rng = np.random.default_rng(2)
    xs = VectorSet.from_system(W6, rng.choice(64, 10, replace=False))
    y = rand_coeffs(rng, 64) @ W6.values
    oracle = max(abs(np.sum(np.conj(x) * y) / 64.0) for x in xs.vectors)
    assert max_pairing(y, xs) == pytest.approx(oracle, rel=1e-12)


def test_distances_coincide_at_equal_points():
    xs = VectorSet.from_system(W3)
    y = W3.values[2] * 1.7
    assert chain_dist(y, y, xs) == 0.0
    assert increment_dist(y, y, xs) == 0.0


def test_distances_single_vector_unit_pairing():
    xs = VectorSet.from_system(W3, [0])
    y = W3.values[0]
    zero = np.zeros(8)
    assert chain_dist(y, zero, xs) == pytest.approx(1.0)
    assert increment_dist(y, zero, xs) == pytest.approx(1.0)


def test_increment_at_most_twice_chain():
    rng = np.random.default_rng(3)
    xs = VectorSet.from_system(W6)
    for _ in range(500):
        y, yb = rand_coeffs(rng, 64, 2) @ W6.values
        assert increment_dist(y, yb, xs) <= 2.0 * chain_dist(y, yb, xs) * (1 + 1e-12)


def test_ellipsoid_norm_cases():
    xs = VectorSet.from_system(W3, range(4))
    assert ellipsoid_norm(W3.values[1], xs, W3.values[7]) == pytest.approx(0.0, abs=1e-15)
    assert ellipsoid_norm(W3.values[1], xs, W3.values[1]) == pytest.approx(1.0)


def test_ellipsoid_norm_loop_oracle():
    rng = np.random.default_rng(4)
    xs = VectorSet.from_system(W6, rng.choice(64, 8, replace=False))
    y = rand_coeffs(rng, 64) @ W6.values
    u = rand_coeffs(rng, 64) @ W6.values
    oracle = math.sqrt(sum(
        abs(np.sum(np.conj(x) * y) / 64.0) ** 2 * abs(np.sum(np.conj(x) * u) / 64.0) ** 2
        for x in xs.vectors
    ))
    assert ellipsoid_norm(y, xs, u) == pytest.approx(oracle, rel=1e-12)


@pytest.mark.parametrize("norm_fn", [
    lambda y, sp: float(lp_norm(y, W6, 1.5)),
    lambda y, sp: float(mix_norm(y, sp, W6)),
    lambda y, sp: float(max_pairing(y, VectorSet.from_system(W6))),
    lambda y, sp: ellipsoid_norm(y, VectorSet.from_system(W6), W6.values[0]),
])
def test_norm_homogeneity_factor_three(norm_fn):
    rng = np.random.default_rng(5)
    sp = MixSpace(1.5, 1.5)
    y = rand_coeffs(rng, 64) @ W6.values
    assert norm_fn(3.0 * y, sp) == pytest.approx(3.0 * norm_fn(y, sp), rel=1e-12)


def test_metric_inequalities_degenerate_tuple():
    xs = VectorSet.from_system(W6)
    sp = MixSpace(1.5, 1.0)
    y = W6.values[1] * 0.5
    checks = metric_inequalities(y, y, y, y, y, xs, sp, W6)
    for c in checks:
        assert c.lhs == pytest.approx(0.0, abs=1e-14)
        assert c.holds(1e-10)


def test_metric_inequalities_random_tuples():
    rng = np.random.default_rng(6)
    xs = VectorSet.from_system(W6)
    sp = MixSpace(1.5, 1.0)
    for _ in range(200):
        pts = sample_mix_ball(W6, sp, 5, rng) @ W6.values
        checks = metric_inequalities(*pts, xs, sp, W6)
        assert all(c.holds(1e-10) for c in checks)


def test_metric_inequality_pairing_lhs_zero_off_support():
    xs = VectorSet.from_system(W6, range(4))
    sp = MixSpace(1.5, 1.0)
    y = W6.values[9] * 0.3
    checks = metric_inequalities(y, np.zeros(64), y, y, np.zeros(64), xs, sp, W6)
    pairing = next(c for c in checks if c.name == "pairing_sup_vs_norm")
    assert pairing.lhs == pytest.approx(0.0, abs=1e-15)


def test_metric_inequalities_u_guard():
    xs = VectorSet.from_system(W6)
    sp = MixSpace(1.5, 1.0)
    big = W6.values[0] * 5.0
    with pytest.raises(ConfigError):
        metric_inequalities(big, big, big, big, big, xs, sp, W6)


def test_clarkson_equal_inputs():
    rng = np.random.default_rng(7)
    f = rand_coeffs(rng, 64) @ W6.values
    assert clarkson_slack(f, f, 1.5, W6) == pytest.approx(0.0, abs=1e-12)


def test_clarkson_opposite_inputs():
    rng = np.random.default_rng(8)
    f = rand_coeffs(rng, 64) @ W6.values
    p = 1.5
    nf = float(lp_norm(f, W6, p))
    expect = nf * nf - (p * (p - 1.0) / 8.0) * nf * nf
    assert clarkson_slack(f, -f, p, W6) == pytest.approx(expect, rel=1e-12)


@pytest.mark.parametrize("p", [1.1, 1.5, 2.0])
def test_clarkson_random_batch(p):
    rng = np.random.default_rng(9)
    f = rand_coeffs(rng, 64, 500) @ W6.values
    g = rand_coeffs(rng, 64, 500) @ W6.values
    slack = clarkson_slack(f, g, p, W6)
    assert slack.min() >= -1e-12


def test_clarkson_guard():
    with pytest.raises(ConfigError):
        clarkson_slack(np.ones(8), np.ones(8), 2.5, W3)


def test_l2_quad_sup_matches_svd():
    rng = np.random.default_rng(10)
    xs = VectorSet.from_system(W6, rng.choice(64, 12, replace=False))
    # oracle: top singular value of the weighted pairing operator
    p_mat = xs.vectors.conj() * np.sqrt(xs.weights)
    oracle = float(np.linalg.svd(p_mat, compute_uv=False)[0] ** 2)
    assert xs.l2_quad_sup == pytest.approx(oracle, rel=1e-6)


def test_l2_quad_sup_full_system_is_one():
    assert VectorSet.from_system(W6).l2_quad_sup == pytest.approx(1.0, rel=1e-7)


def test_ball_sandwich_on_samples():
    rng = np.random.default_rng(11)
    sp = MixSpace(1.5, 2.0)
    pts = sample_mix_ball(W6, sp, 200, rng, boundary=True) @ W6.values
    # outer inclusion: unit vectors of the mixed norm sit in sqrt(2)(B_Lp ∩ rho B_L2)
    assert float(np.max(lp_norm(pts, W6, 1.5))) <= math.sqrt(2.0) + 1e-9
    assert float(np.max(lp_norm(pts, W6, 2.0))) <= math.sqrt(2.0) * sp.rho + 1e-9
    # inner inclusion: lp <= 1 and l2 <= rho forces mixed norm <= 1
    inner = pts / np.maximum(
        np.maximum(lp_norm(pts, W6, 1.5), lp_norm(pts, W6, 2.0) / sp.rho), 1.0
    )[:, None]
    assert float(np.max(mix_norm(inner, sp, W6))) <= 1.0 + 1e-9


def test_dual_norm_upper_dominates_pairings():
    rng = np.random.default_rng(12)
    sp = MixSpace(1.5, 1.5)
    x = W6.values[7]
    u_bound = dual_norm_upper(x, sp, W6)
    ys = sample_mix_ball(W6, sp, 100, rng) @ W6.values
    pair = np.abs((ys / 64.0) @ x.conj())
    norms = mix_norm(ys, sp, W6)
    assert np.all(pair <= u_bound * norms + 1e-12)


def test_quad_sup_upper_dominates_samples():
    rng = np.random.default_rng(13)
    sp = MixSpace(1.5, 1.5)
    xs = VectorSet.from_system(W6, range(16))
    cap = quad_sup_upper(xs, sp, W6)
    ys = sample_mix_ball(W6, sp, 200, rng) @ W6.values
    q = (np.abs(xs.pair(ys)) ** 2).sum(axis=1)
    assert float(q.max()) <= cap + 1e-12


def test_sample_mix_ball_membership():
    rng = np.random.default_rng(14)
    sp = MixSpace(1.3, 0.7)
    pts = sample_mix_ball(W6, sp, 100, rng)
    norms = mix_norm(pts @ W6.values, sp, W6)
    assert float(np.max(norms)) <= 1.0 + 1e-12
    boundary = sample_mix_ball(W6, sp, 10, rng, boundary=True)
    assert np.allclose(mix_norm(boundary @ W6.values, sp, W6), 1.0, atol=1e-12)


def test_max_quad_on_l2_ball_diagonal():
    w2 = gen_walsh(2)
    A = np.diag([3.0, 1.0, -2.0, 0.0]).astype(complex)
    res = max_quad_on_ball(A, w2, ball="l2", restarts=4, iters=100, seed=0)
    assert res.value == pytest.approx(3.0, rel=1e-6)
    neg = max_abs_quad_on_ball(-A, w2, ball="l2", restarts=4, iters=100, seed=0)
    assert neg.value == pytest.approx(3.0, rel=1e-6)
