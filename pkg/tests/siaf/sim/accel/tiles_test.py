'''PE array tiles'''
import numpy as np
import pytest

from siaf.sim.accel.tiles import (PE_ROWS, TILE_COLS, Conv3x3Pipeline, conv1x1_tile, conv3x3_tile,
                                  matmul_tile)
from siaf.sim.errors import ShapeMismatchError
from siaf.sim.reference.layers import conv3x3_sums
from tests import random_bits


def test_conv_tile_against_convolution():
    rng = np.random.default_rng(0)
    image = random_bits(rng, (3, TILE_COLS - 2), 0.5)
    kernel = rng.integers(-8, 9, size=(3, 3))
    padded = np.pad(image, ((0, 0), (1, 1)))
    sums, active = conv3x3_tile(padded, kernel.reshape(9))
    # middle output row of the padded 3-row strip
    expected = conv3x3_sums(image[np.newaxis, np.newaxis], kernel[np.newaxis, np.newaxis])[0, 0, 1]
    assert np.array_equal(sums, expected)
    assert active > 0


def test_conv_tile_counts_active_inputs():
    rows = np.zeros((3, TILE_COLS), dtype=np.uint8)
    rows[1, 4] = 1
    sums, active = conv3x3_tile(rows, np.arange(9))
    # the centre spike reaches three output lanes through taps 3, 4 and 5
    assert active == 3
    assert sums.tolist() == [0, 0, 5, 4, 3, 0, 0, 0]


def test_conv_tile_broadcasts_blocks():
    rng = np.random.default_rng(1)
    rows = random_bits(rng, (12, 4, 3, TILE_COLS))
    w9 = rng.integers(-8, 9, size=(12, 1, 9))
    sums, _ = conv3x3_tile(rows, w9)
    assert sums.shape == (12, 4, PE_ROWS)
    single, _ = conv3x3_tile(rows[5, 2], w9[5, 0])
    assert np.array_equal(sums[5, 2], single)


def test_pipeline_rate():
    pipeline = Conv3x3Pipeline(2)
    rows = np.ones((3, TILE_COLS), dtype=np.uint8)
    w9 = np.ones(9)
    emitted = [pipeline.step(rows, w9) for _ in range(8)]
    assert emitted[:2] == [None, None]
    outputs = [out for out in emitted if out is not None] + pipeline.drain()
    assert len(outputs) == 8
    assert sum(out.size for out in outputs) == 64
    assert pipeline.cycles == 10


def test_pipeline_without_fill():
    pipeline = Conv3x3Pipeline(0)
    assert pipeline.step(np.zeros((3, TILE_COLS)), np.zeros(9)) is not None
    assert pipeline.drain() == []


def test_matmul_tile_sums_rows():
    rng = np.random.default_rng(2)
    cols = random_bits(rng, (PE_ROWS, 9), 0.5)
    sums, active = matmul_tile(cols, np.ones(9))
    assert sums.tolist() == cols.sum(axis=1).tolist()
    assert active == cols.sum()


def test_matmul_group_limit():
    with pytest.raises(ShapeMismatchError):
        matmul_tile(np.zeros((PE_ROWS, 9)), np.zeros(10))
    with pytest.raises(ShapeMismatchError):
        conv3x3_tile(np.zeros((3, 8)), np.zeros(9))
    with pytest.raises(ShapeMismatchError):
        matmul_tile(np.zeros((PE_ROWS, 10)), np.zeros(10))


def test_partial_group_matches_padded_group():
    rng = np.random.default_rng(3)
    cols = random_bits(rng, (PE_ROWS, 5), 0.5)
    w = rng.integers(-8, 9, size=5)
    sums, active = conv1x1_tile(cols, w)
    padded, padded_active = matmul_tile(np.pad(cols, ((0, 0), (0, 4))), np.pad(w, (0, 4)))
    assert np.array_equal(sums, padded)
    assert active == padded_active
