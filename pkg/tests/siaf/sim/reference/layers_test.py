'''Reference layer arithmetic against plain loops'''
import numpy as np
import pytest

from siaf.sim.errors import ShapeMismatchError
from siaf.sim.reference import layers
from siaf.sim.tensor import AccTensor, ByteImage, QTensor, SpikeTensor, bitplane_decompose
from tests import conv3x3_loop, linear_loop, random_bits


def _weights(rng, shape, scale_exp=-6):
    return QTensor(rng.integers(-128, 128, size=shape), scale_exp)


def _bias(values, scale_exp=-6):
    return AccTensor(np.asarray(values), scale_exp)


def test_conv_of_zero_input_is_bias():
    rng = np.random.default_rng(0)
    x = SpikeTensor.zeros((4, 3, 5, 5))
    out = layers.conv_bn_3x3(x, _weights(rng, (2, 3, 3, 3)), _bias([7, -3]))
    assert out.shape == (4, 2, 5, 5)
    assert np.all(out.data[:, 0] == 7)
    assert np.all(out.data[:, 1] == -3)


def test_conv_impulse_copies_flipped_kernel():
    kernel = np.arange(9).reshape(1, 1, 3, 3)
    bits = np.zeros((1, 1, 5, 5), dtype=np.uint8)
    bits[0, 0, 2, 2] = 1
    out = layers.conv_bn_3x3(SpikeTensor.from_bits(bits), QTensor(kernel, -6), _bias([0]))
    # cross-correlation: output around the impulse is the kernel rotated by 180 degrees
    assert np.array_equal(out.data[0, 0, 1:4, 1:4], kernel[0, 0, ::-1, ::-1])
    assert out.data[0, 0].sum() == kernel.sum()


@pytest.mark.parametrize('stride', [1, 2])
def test_conv_against_loops(stride):
    rng = np.random.default_rng(stride)
    bits = random_bits(rng, (2, 4, 6, 6))
    w = _weights(rng, (3, 4, 3, 3))
    bias = rng.integers(-50, 50, size=3)
    out = layers.conv_bn_3x3(SpikeTensor.from_bits(bits), w, _bias(bias), stride)
    assert np.array_equal(out.data, conv3x3_loop(bits, w.data, bias, stride))


def test_conv_bias_scale_must_match():
    rng = np.random.default_rng(0)
    with pytest.raises(ShapeMismatchError):
        layers.conv_bn_3x3(SpikeTensor.zeros((1, 1, 2, 2)), _weights(rng, (1, 1, 3, 3)), _bias([0], -5))


@pytest.mark.parametrize('seed', range(50))
def test_encode_equals_sum_of_bitplanes(seed):
    rng = np.random.default_rng(seed)
    img = ByteImage(rng.integers(0, 256, size=(3, 6, 6)))
    w = _weights(rng, (2, 3, 3, 3))
    bias = _bias([5, -5], -6 - 8)
    out = layers.encode_conv_3x3(img, w, bias, 4)
    planes = bitplane_decompose(img)
    expected = np.zeros((2, 6, 6), dtype=np.int64)
    for b, plane in enumerate(planes):
        expected += conv3x3_loop(plane.to_bits(), w.data, [0, 0])[0] << b
    expected += np.array([5, -5])[:, None, None]
    # direct 8-bit convolution
    assert np.array_equal(expected, conv3x3_loop(img.data[np.newaxis], w.data, [5, -5])[0])
    assert out.scale_exp == -14
    for t in range(4):
        assert np.array_equal(out.data[t], expected)


def test_conv1x1_is_channel_mix():
    rng = np.random.default_rng(4)
    bits = random_bits(rng, (1, 5, 3, 3))
    w = _weights(rng, (2, 5, 1, 1))
    out = layers.conv_bn_1x1(SpikeTensor.from_bits(bits), w, _bias([1, 2]))
    expected = np.einsum('oc,chw->ohw', w.data[:, :, 0, 0].astype(np.int64), bits[0]) + np.array([1, 2])[:, None, None]
    assert np.array_equal(out.data[0], expected)


def test_linear_identity_and_example():
    bits = np.array([[[1, 0, 1]]], dtype=np.uint8)
    eye = layers.linear(SpikeTensor.from_bits(bits), QTensor(np.eye(3, dtype=np.int64), -6), _bias([0, 0, 0]))
    assert np.array_equal(eye.data, bits)
    bits = np.ones((1, 1, 3), dtype=np.uint8)
    out = layers.linear(SpikeTensor.from_bits(bits), QTensor([[3, -2, 5]], -6), _bias([4]))
    assert out.data[0, 0, 0] == 6 + 4


def test_linear_against_loops():
    rng = np.random.default_rng(5)
    bits = random_bits(rng, (4, 6, 10))
    w = _weights(rng, (7, 10))
    bias = rng.integers(-9, 9, size=7)
    out = layers.linear(SpikeTensor.from_bits(bits), w, _bias(bias))
    assert np.array_equal(out.data, linear_loop(bits, w.data, bias))


def test_linear_shape_mismatch():
    rng = np.random.default_rng(0)
    with pytest.raises(ShapeMismatchError):
        layers.linear(SpikeTensor.zeros((1, 2, 4)), _weights(rng, (3, 5)), _bias([0, 0, 0]))


def test_maxpool_is_or():
    bits = np.zeros((1, 1, 4, 4), dtype=np.uint8)
    bits[0, 0, 1, 1] = 1
    bits[0, 0, 2, 3] = 1
    out = layers.maxpool2x2(SpikeTensor.from_bits(bits)).to_bits()
    assert out[0, 0].tolist() == [[1, 0], [0, 1]]
    with pytest.raises(ShapeMismatchError):
        layers.maxpool2x2(SpikeTensor.zeros((1, 1, 3, 4)))


def test_residual_add_leaves_binary_domain():
    ones = SpikeTensor.from_bits(np.ones((1, 2, 2), dtype=np.uint8))
    assert layers.residual_add(ones, ones).data.max() == 2


def test_attention_of_zero_is_zero():
    zero = SpikeTensor.zeros((2, 4, 8))
    out = layers.attention_currents(zero, zero, zero, heads=2, scale_shift=3)
    assert not out.data.any()


def test_attention_single_token_all_ones():
    ones = SpikeTensor.from_bits(np.ones((1, 1, 16), dtype=np.uint8))
    out = layers.attention_currents(ones, ones, ones, heads=1, scale_shift=2)
    # score is the dot product 16, times v = 1
    assert np.all(out.data == 16 >> 2)


def test_attention_against_loops():
    rng = np.random.default_rng(6)
    q, k, v = (random_bits(rng, (2, 5, 8), 0.5) for _ in range(3))
    out = layers.attention_currents(*(SpikeTensor.from_bits(a) for a in (q, k, v)), heads=2, scale_shift=1)
    for t in range(2):
        for h in range(2):
            cols = slice(h * 4, h * 4 + 4)
            for n in range(5):
                for d in range(4):
                    total = 0
                    for m in range(5):
                        score = sum(int(q[t, n, cols][i]) * int(k[t, m, cols][i]) for i in range(4))
                        total += score * int(v[t, m, cols][d])
                    assert out.data[t, n, h * 4 + d] == total >> 1


def test_attention_heads_must_divide():
    zero = SpikeTensor.zeros((1, 2, 6))
    with pytest.raises(ShapeMismatchError):
        layers.attention_currents(zero, zero, zero, heads=4, scale_shift=0)


def test_head_zero_is_bias_and_rate_is_count():
    w = QTensor(np.ones((2, 3), dtype=np.int64), -6)
    zero = layers.classifier_head(SpikeTensor.zeros((4, 2, 3)), w, _bias([1, -1]))
    assert zero.data.tolist() == [1, -1]
    ones = SpikeTensor.from_bits(np.ones((4, 2, 3), dtype=np.uint8))
    # each feature fires 4 * 2 = 8 times, three features per class
    assert layers.classifier_head(ones, w, _bias([1, -1])).data.tolist() == [25, 23]


def test_to_tokens_is_row_major():
    bits = np.zeros((1, 2, 2, 2), dtype=np.uint8)
    bits[0, 1, 0, 1] = 1
    tokens = layers.to_tokens(SpikeTensor.from_bits(bits)).to_bits()
    assert tokens.shape == (1, 4, 2)
    assert tokens[0, 1, 1] == 1
    assert tokens.sum() == 1
