import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nbldpc.galois import FieldOrderError, group_transform, make_field, xor_convolve

import oracles


@pytest.mark.parametrize("q", [2, 4, 8, 16, 32, 64, 128, 256])
def test_mul_table_matches_polynomial_products(q):
    gf = make_field(q)
    np.testing.assert_array_equal(gf.mul_table, oracles.mul_table(q))


@pytest.mark.parametrize("q", [2, 4, 8, 256])
def test_inverse_and_log_tables(q):
    gf = make_field(q)
    for a in range(1, q):
        assert gf.mul(a, gf.inv(a)) == 1
        assert gf.exp[gf.log[a]] == a
    # the primitive element generates the whole multiplicative group
    assert len({gf.pow(gf.primitive_element, k) for k in range(q - 1)}) == q - 1


def test_gf8_known_product():
    # x^2 * x = x^3 = x + 1 modulo x^3 + x + 1
    gf = make_field(8)
    assert gf.mul(0b100, 0b010) == 0b011
    assert gf.add(5, 3) == 6 and gf.sub(5, 3) == 6


def test_zero_has_no_inverse():
    with pytest.raises(ZeroDivisionError):
        make_field(4).inv(0)
    with pytest.raises(ZeroDivisionError):
        make_field(4).div(1, 0)


@pytest.mark.parametrize("q", [0, 1, 3, 6, 512])
def test_bad_field_order(q):
    with pytest.raises(FieldOrderError):
        make_field(q)


def test_tables_are_read_only():
    gf = make_field(4)
    with pytest.raises(ValueError):
        gf.mul_table[1, 1] = 0


@settings(max_examples=200, deadline=None)
@given(st.sampled_from([4, 8, 16]), st.data())
def test_field_axioms(q, data):
    gf = make_field(q)
    a, b, c = (data.draw(st.integers(0, q - 1)) for _ in range(3))
    assert gf.mul(a, gf.mul(b, c)) == gf.mul(gf.mul(a, b), c)
    assert gf.mul(a, gf.add(b, c)) == gf.add(gf.mul(a, b), gf.mul(a, c))
    assert gf.mul(a, b) == gf.mul(b, a)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from([2, 4, 8, 16]), st.integers(0, 2**32 - 1))
def test_transform_round_trip(q, seed):
    x = np.random.default_rng(seed).normal(size=(3, q))
    back = group_transform(group_transform(x), "inverse")
    np.testing.assert_allclose(back, x, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from([2, 4, 8, 16]), st.integers(0, 2**32 - 1))
def test_convolution_theorem(q, seed):
    rng = np.random.default_rng(seed)
    u, v = rng.random(q), rng.random(q)
    np.testing.assert_allclose(xor_convolve(u, v), oracles.xor_convolve_direct(u, v), atol=1e-12)


def test_transform_rejects_bad_lengths():
    with pytest.raises(ValueError):
        group_transform(np.ones(6))
    with pytest.raises(ValueError):
        group_transform(np.ones(4), q=8)
    with pytest.raises(ValueError):
        group_transform(np.ones(4), direction="sideways")
