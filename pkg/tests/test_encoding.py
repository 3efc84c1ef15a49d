import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from multicrop.encoding import encode, encode_bbox, encoding_length, relative, relative_matrix
from multicrop.geometry import BBox


def test_encode_zero():
    np.testing.assert_array_equal(encode(0.0, 2), [0, 0, 1, 0, 1, 0, 1])


def test_encode_one_L0():
    np.testing.assert_allclose(encode(1.0, 0), [1, 0, -1], atol=1e-15)


def test_encode_half_L1():
    np.testing.assert_allclose(encode(0.5, 1), [0.5, 1, 0, 0, -1], atol=1e-15)


def test_encode_bbox_zero_box():
    enc = encode_bbox((0.0, 0.0, 0.0), 5)
    per = np.zeros(encoding_length(5))
    per[2::2] = 1.0
    np.testing.assert_array_equal(enc, np.tile(per, 3))


def test_length_L32():
    assert encode_bbox(BBox(1, 2, 3)).shape == (201,)


@pytest.mark.parametrize("L", range(0, 65, 7))
def test_length_formula(L):
    assert encode(0.3, L).shape == (2 * L + 3,)
    assert encode_bbox(BBox(1, 2, 3), L).shape == (3 * (2 * L + 3),)


@given(
    st.tuples(st.floats(-50, 50), st.floats(-50, 50), st.floats(0.1, 50)),
    st.integers(0, 12),
)
def test_encode_bbox_matches_oracle(box, L):
    np.testing.assert_allclose(encode_bbox(box, L), oracles.encode_bbox(box, L), rtol=1e-12, atol=1e-9)


def test_relative_self_zero_and_antisymmetry_bitwise():
    gen = np.random.default_rng(0)
    for _ in range(50):
        a = BBox(*gen.uniform(-500, 500, 2), gen.uniform(10, 900))
        b = BBox(*gen.uniform(-500, 500, 2), gen.uniform(10, 900))
        assert not np.any(relative(a, a))
        np.testing.assert_array_equal(relative(a, b), -relative(b, a))


def test_relative_matches_oracle_subtraction():
    a, b = (0.31, -0.12, 0.9), (-0.2, 0.05, 1.1)
    expected = np.subtract(oracles.encode_bbox(a, 6), oracles.encode_bbox(b, 6))
    np.testing.assert_allclose(relative(a, b, 6), expected, rtol=1e-12, atol=1e-12)


def test_relative_matrix_entries():
    boxes = [BBox(1, 2, 3), BBox(-4, 0.5, 7), BBox(0, 0, 1)]
    mat = relative_matrix(boxes, 4)
    for m in range(3):
        for n in range(3):
            np.testing.assert_array_equal(mat[m, n], relative(boxes[m], boxes[n], 4))


def test_shift_sensitivity():
    assert not np.array_equal(encode(0.25, 8), encode(0.25 + 1e-3, 8))
    # delta = 2 aliases every band; only the raw entry differs
    diff = encode(0.25, 3) - encode(2.25, 3)
    assert diff[0] == -2.0
    np.testing.assert_allclose(diff[1:], 0.0, atol=1e-13)


def test_prescale():
    np.testing.assert_array_equal(encode(300.0, 4, scale=1 / 1000), encode(0.3, 4))
