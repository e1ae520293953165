import numpy as np
import pytest

from kashinsplit import (
    ConfigError,
    OrthonormalSystem,
    SpanElement,
    gen_fourier,
    gen_walsh,
    load_system,
    save_system,
    validate_system,
    walsh_gram_exact,
    walsh_product_law_exact,
)


def test_walsh_n1_table():
    w = gen_walsh(1)
    assert np.array_equal(w.values.real, [[1, 1], [1, -1]])
    assert np.all(w.values.imag == 0)
    assert w.linf_bound == 1.0


def test_walsh_gram_identity_exact():
    w = gen_walsh(3)
    table = w.values.real.astype(np.int64)
    gram = table @ table.T
    assert np.array_equal(gram, 8 * np.eye(8, dtype=np.int64))
    assert walsh_gram_exact(w)


def test_walsh_row_product_rows_3_5():
    w = gen_walsh(3)
    prod = w.values[3] * w.values[5]
    assert np.array_equal(prod, w.values[3 ^ 5])


@pytest.mark.parametrize("N", [1, 2, 3, 4, 5])
def test_walsh_group_closure_all_pairs(N):
    w = gen_walsh(N)
    for j in range(w.n):
        for k in range(w.n):
            assert np.array_equal(w.values[j] * w.values[k], w.values[j ^ k])


def test_walsh_product_law_packed_matches_direct():
    w = gen_walsh(6)
    assert walsh_product_law_exact(w)
    broken = OrthonormalSystem(w.values.copy(), 1.0, group_xor=True)
    broken.values[5] = broken.values[9]
    assert not walsh_product_law_exact(broken)


def test_walsh_bounds():
    with pytest.raises(ConfigError):
        gen_walsh(0)
    with pytest.raises(ConfigError):
        gen_walsh(21)


def test_fourier_n2():
    f = gen_fourier(2)
    assert np.allclose(f.values, [[1, 1], [1, -1]], atol=1e-15)


def test_fourier_n4_first_row():
    f = gen_fourier(4)
    assert np.allclose(f.values[1], [1, 1j, -1, -1j], atol=1e-14)


def test_fourier_gram_offdiagonal():
    f = gen_fourier(8)
    gram = (f.values.conj() / f.m0) @ f.values.T
    off = gram - np.diag(np.diag(gram))
    assert np.abs(off).max() < 1e-12


def test_fourier_rows_unit_l2():
    f = gen_fourier(16)
    l2 = np.sqrt((np.abs(f.values) ** 2).mean(axis=1))
    assert np.abs(l2 - 1.0).max() < 1e-12


def test_fourier_bounds():
    with pytest.raises(ConfigError):
        gen_fourier(1)


def test_validate_pass_walsh():
    rep = validate_system(gen_walsh(4), 1e-12)
    assert rep.passed and rep.max_gram_deviation == 0.0


def test_validate_duplicated_row_fails():
    w = gen_walsh(3)
    vals = w.values.copy()
    vals[1] = vals[0]
    bad = OrthonormalSystem(vals)
    rep = validate_system(bad, 0.5)
    assert not rep.passed
    assert rep.max_gram_deviation == pytest.approx(1.0)


def test_validate_fourier16():
    rep = validate_system(gen_fourier(16), 1e-10)
    assert rep.passed


def test_validate_rejects_bad_tol():
    with pytest.raises(ConfigError):
        validate_system(gen_walsh(2), 0.0)


def test_weights_uniform():
    w = gen_walsh(4)
    assert np.allclose(w.weights, 1.0 / 16)
    assert w.weights.sum() == pytest.approx(1.0)


def test_synth_coeffs_roundtrip():
    w = gen_walsh(4)
    rng = np.random.default_rng(0)
    a = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    back = w.coeffs(w.synth(a))
    assert np.allclose(back, a, atol=1e-13)


def test_span_element_support_enforced():
    coeffs = np.zeros(8, dtype=complex)
    coeffs[3] = 1.0
    el = SpanElement(coeffs, support=[3, 5])
    assert np.array_equal(el.support, [3, 5])
    coeffs[1] = 2.0
    with pytest.raises(ValueError):
        SpanElement(coeffs, support=[3, 5])


def test_save_load_roundtrip(tmp_path):
    f = gen_fourier(8)
    path = tmp_path / "sys.txt"
    save_system(f, path)
    back = load_system(path)
    assert back.n == 8 and back.m0 == 8
    assert back.linf_bound == 1.0
    assert np.allclose(back.values, f.values, atol=1e-15)
