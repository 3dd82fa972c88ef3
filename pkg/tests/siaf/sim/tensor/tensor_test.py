'''Spike, weight, accumulator and image tensors'''
import numpy as np
import pytest

from siaf.sim.errors import AccumulatorOverflowError, ShapeMismatchError
from siaf.sim.tensor import (AccTensor, ByteImage, QTensor, SpikeTensor, bitplane_decompose,
                             bitplane_recompose, iand_payload, sparsity)
from tests import random_bits


def test_bitplanes_of_181():
    '''0b10110101, LSB plane first'''
    planes = bitplane_decompose(ByteImage(np.full((1, 1, 1), 181)))
    assert [plane.get_bit((0, 0, 0, 0)) for plane in planes] == [1, 0, 1, 0, 1, 1, 0, 1]


def test_bitplanes_of_zero_and_full_images():
    zero = bitplane_decompose(ByteImage(np.zeros((3, 4, 4))))
    full = bitplane_decompose(ByteImage(np.full((3, 4, 4), 255)))
    assert len(zero) == len(full) == 8
    assert all(plane.count_ones() == 0 for plane in zero)
    assert all(plane.sparsity() == 0.0 for plane in full)
    assert all(plane.shape == (1, 3, 4, 4) for plane in full)


def test_recompose_from_planes():
    bits = [1, 0, 1, 0, 1, 1, 0, 1]
    planes = [SpikeTensor.from_bits(np.full((1, 1, 2, 2), bit)) for bit in bits]
    assert (bitplane_recompose(planes).data == 181).all()
    ones = [SpikeTensor.from_bits(np.ones((1, 2, 3, 3))) for _ in range(8)]
    assert (bitplane_recompose(ones).data == 255).all()


def test_bitplane_round_trip_on_random_images():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        shape = tuple(int(d) for d in rng.integers(1, 6, size=3))
        img = ByteImage(rng.integers(0, 256, size=shape))
        assert bitplane_recompose(bitplane_decompose(img)) == img


def test_recompose_rejects_mismatched_planes():
    planes = [SpikeTensor((1, 2, 2, 2)) for _ in range(7)] + [SpikeTensor((1, 2, 2, 3))]
    with pytest.raises(ShapeMismatchError):
        bitplane_recompose(planes)
    with pytest.raises(ShapeMismatchError):
        bitplane_recompose(planes[:7])


def test_sparsity_examples():
    assert sparsity(SpikeTensor((1, 64))) == 1.0
    assert sparsity(SpikeTensor.from_bits(np.ones((2, 5, 3)))) == 0.0
    bits = np.zeros(64, dtype=np.uint8)
    bits[:16] = 1
    assert sparsity(SpikeTensor.from_bits(bits.reshape(1, 64))) == 0.75


def test_sparsity_ignores_padding():
    # 13 elements do not fill two bytes
    s = SpikeTensor.from_bits(np.ones((1, 13)))
    assert s.payload.size == 2
    assert s.count_ones() == 13
    assert s.sparsity() + s.density() == 1.0


def test_get_set_bit():
    s = SpikeTensor((4, 3, 5))
    assert s.get_bit((2, 1, 4)) == 0
    s.set_bit((2, 1, 4), 1)
    assert s.get_bit((2, 1, 4)) == 1
    s.set_bit((2, 1, 4), 0)
    assert s.count_ones() == 0


@pytest.mark.parametrize('index', [(4, 0, 0), (0, 3, 0), (0, 0, -1), (0, 0)])
def test_get_bit_out_of_range(index):
    with pytest.raises(IndexError):
        SpikeTensor((4, 3, 5)).get_bit(index)


def test_set_bit_rejects_non_binary():
    with pytest.raises(ValueError):
        SpikeTensor((1, 4)).set_bit((0, 0), 2)


def test_packing_matches_unpacked_shadow():
    rng = np.random.default_rng(11)
    for _ in range(50):
        shape = (int(rng.choice([1, 2, 4])),) + tuple(int(d) for d in rng.integers(1, 9, size=2))
        shadow = random_bits(rng, shape, 0.5)
        packed = SpikeTensor.from_bits(shadow)
        assert np.array_equal(packed.to_bits(), shadow)
        index = tuple(int(rng.integers(0, d)) for d in shape)
        assert packed.get_bit(index) == shadow[index]
        assert packed.count_ones() == int(shadow.sum())


def test_lsb_first_layout():
    bits = np.zeros((1, 16), dtype=np.uint8)
    bits[0, 0] = 1
    bits[0, 9] = 1
    assert list(SpikeTensor.from_bits(bits).payload) == [0b00000001, 0b00000010]


def test_spike_tensor_contracts():
    with pytest.raises(ShapeMismatchError):
        SpikeTensor((3, 4))
    with pytest.raises(ShapeMismatchError):
        SpikeTensor.from_bits(np.full((1, 4), 2))
    with pytest.raises(ShapeMismatchError):
        # nonzero padding bit
        SpikeTensor((1, 4), bytes([0b00010000]))
    with pytest.raises(ShapeMismatchError):
        SpikeTensor((1, 16), bytes([0]))


def test_time_step_slice():
    bits = np.arange(8).reshape(4, 2) % 2
    s = SpikeTensor.from_bits(bits)
    assert s.time_step(1).shape == (1, 2)
    assert np.array_equal(s.time_step(3).to_bits()[0], bits[3])
    with pytest.raises(IndexError):
        s.time_step(4)


def test_qtensor_ranges():
    q = QTensor([-128, 0, 127], -6)
    assert q.data.dtype == np.int8
    with pytest.raises(ValueError):
        QTensor([128], 0)
    with pytest.raises(ValueError):
        QTensor([1], 1)
    with pytest.raises(ValueError):
        QTensor([1], -17)


def test_acc_tensor_overflow_is_an_error():
    AccTensor([2 ** 31 - 1, -2 ** 31])
    with pytest.raises(AccumulatorOverflowError) as err:
        AccTensor([[0, 0], [0, 2 ** 31]], where='overflow-site')
    assert err.value.index == (1, 1)
    assert err.value.location == 'overflow-site'


def test_byte_image_range():
    with pytest.raises(ValueError):
        ByteImage(np.full((1, 1, 1), 256))
    with pytest.raises(ShapeMismatchError):
        ByteImage(np.zeros((4, 4)))


def test_iand_truth_table():
    x = SpikeTensor.from_bits(np.array([[1, 1, 0, 0]]))
    y = SpikeTensor.from_bits(np.array([[1, 0, 1, 0]]))
    assert list(iand_payload(x, y).to_bits()[0]) == [0, 1, 0, 0]


def test_iand_matches_unpacked_oracle():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a, b = random_bits(rng, (4, 7, 5), 0.5), random_bits(rng, (4, 7, 5), 0.5)
        out = iand_payload(SpikeTensor.from_bits(a), SpikeTensor.from_bits(b)).to_bits()
        assert np.array_equal(out, a & (1 - b))


def test_iand_shape_mismatch():
    with pytest.raises(ShapeMismatchError):
        iand_payload(SpikeTensor((1, 4)), SpikeTensor((1, 5)))
