'''
PE array tiles.

An array is 8 rows x 9 columns of PEs. For a 3x3 convolution the nine columns
hold the nine kernel taps (three 8x3 sub-arrays, one per kernel row) and the
eight rows produce eight neighbouring outputs of one output row; partial sums
travel diagonally so that output lane i collects tap (ky, kx) from input
column i + kx. For 1x1 convolutions and matmuls the nine columns hold nine
reduction channels and sums travel horizontally.

Functions here evaluate one cycle. Leading dimensions of the operands are
broadcast, which is how the PE blocks (one per input channel or slice) and
the per-time-step arrays inside a block are evaluated together.
'''
import logging
from collections import deque
from typing import Deque, List, Optional, Tuple

import numpy as np

from siaf.sim.errors import ShapeMismatchError

logger = logging.getLogger(__name__)  # pylint: disable=C0103

PE_ROWS = 8
PE_COLS = 9
KERNEL = 3
# 8 outputs need 8 + 2 input columns
TILE_COLS = PE_ROWS + KERNEL - 1


def _tap_windows(rows: np.ndarray) -> np.ndarray:
    '''[..., 3, 10] input rows -> [..., 8, 9] PE inputs, column j = tap (j // 3, j % 3)'''
    windows = [rows[..., ky, kx:kx + PE_ROWS] for ky in range(KERNEL) for kx in range(KERNEL)]
    return np.stack(windows, axis=-1)


def conv3x3_tile(rows, w9) -> Tuple[np.ndarray, int]:
    '''
    One cycle of the 3x3 flow.
    rows: [..., 3, 10] spikes, three input rows with one halo column each side.
    w9: [..., 9] kernel taps in row-major order.
    Returns [..., 8] partial sums and the number of PEs whose input spike is 1.
    '''
    rows = np.asarray(rows)
    if rows.shape[-2:] != (KERNEL, TILE_COLS):
        raise ShapeMismatchError(f'3x3 tile takes [..., {KERNEL}, {TILE_COLS}] rows, got {rows.shape}')
    w9 = np.asarray(w9, dtype=np.int64)
    if w9.shape[-1] != PE_COLS:
        raise ShapeMismatchError(f'3x3 tile takes 9 taps, got {w9.shape[-1]}')
    inputs = _tap_windows(rows).astype(np.int64)
    # spike gates the weight: select-and-add
    sums = (inputs * w9[..., np.newaxis, :]).sum(axis=-1)
    return sums, int(inputs.sum())


def matmul_tile(cols, w9) -> Tuple[np.ndarray, int]:
    '''
    One cycle of the 1x1 / matmul flow.
    cols: [..., 8, k] spikes, eight positions x k <= 9 reduction channels.
    w9: [..., k] weights of one output channel for those k channels.
    A last partial slice may carry fewer than nine channels; the idle
    columns contribute nothing.
    Returns [..., 8] sums and the number of PEs whose input spike is 1.
    '''
    cols = np.asarray(cols)
    if cols.ndim < 2 or cols.shape[-2] != PE_ROWS or not 1 <= cols.shape[-1] <= PE_COLS:
        raise ShapeMismatchError(f'matmul tile takes [..., {PE_ROWS}, <={PE_COLS}] spikes, got {cols.shape}')
    w9 = np.asarray(w9, dtype=np.int64)
    if w9.shape[-1] != cols.shape[-1]:
        raise ShapeMismatchError(f'{w9.shape[-1]} weights for a group of {cols.shape[-1]} channels')
    inputs = cols.astype(np.int64)
    return (inputs * w9[..., np.newaxis, :]).sum(axis=-1), int(inputs.sum())


conv1x1_tile = matmul_tile


class Conv3x3Pipeline:
    '''
    Output registers of the diagonal flow: a result leaves the array
    fill_cycles cycles after its input rows entered.
    '''

    def __init__(self, fill_cycles: int):
        self.fill_cycles = fill_cycles
        self._stages: Deque[Optional[np.ndarray]] = deque([None] * fill_cycles)
        self.cycles = 0
        self.active_inputs = 0

    def step(self, rows=None, w9=None) -> Optional[np.ndarray]:
        '''Advance one cycle, optionally feeding rows; returns the sums leaving the array'''
        self.cycles += 1
        entering = None
        if rows is not None:
            entering, active = conv3x3_tile(rows, w9)
            self.active_inputs += active
        if not self.fill_cycles:
            return entering
        self._stages.append(entering)
        return self._stages.popleft()

    def drain(self) -> List[np.ndarray]:
        '''idle cycles until every fed result has left'''
        out = []
        for _ in range(self.fill_cycles):
            result = self.step()
            if result is not None:
                out.append(result)
        return out
