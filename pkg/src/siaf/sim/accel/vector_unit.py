'''
Lightweight vector unit for the element-wise work that never touches the PE
array: IAND residuals, 2x2 max pooling, the attention scale shift and the
classifier head. It processes vector_lanes elements per cycle.
'''
import logging
from typing import Sequence, Tuple

import numpy as np

from siaf.sim.accel import AccelConfig
from siaf.sim.accel.jobs import ceil_div
from siaf.sim.errors import ShapeMismatchError
from siaf.sim.memory import BankSet, words_for
from siaf.sim.tensor import AccTensor, QTensor, SpikeTensor, checked_int32, iand_payload

logger = logging.getLogger(__name__)  # pylint: disable=C0103


def iand_cycles(shape: Sequence[int], accel: AccelConfig) -> int:
    '''one output element per lane per cycle'''
    return ceil_div(int(np.prod(shape)), accel.vector_lanes)


def maxpool_cycles(out_shape: Sequence[int], accel: AccelConfig) -> int:
    '''each lane ORs one 2x2 window per cycle'''
    return ceil_div(int(np.prod(out_shape)), accel.vector_lanes)


def shift_cycles(shape: Sequence[int], accel: AccelConfig) -> int:
    '''one accumulator value per lane per cycle'''
    return ceil_div(int(np.prod(shape)), accel.vector_lanes)


def head_cycles(time_steps: int, tokens: int, dim: int, classes: int, accel: AccelConfig) -> int:
    '''spike counting over T*N*D, then the classes x D multiply-accumulate'''
    return ceil_div(time_steps * tokens * dim, accel.vector_lanes) + ceil_div(classes * dim, accel.vector_lanes)


class VectorUnit:
    '''Functional vector unit; counts its spike-temp traffic on the bank set'''

    def __init__(self, accel: AccelConfig, banks: BankSet):
        self.accel = accel
        self.banks = banks

    def _spike_words(self, elements: int) -> int:
        return words_for(elements, self.banks.spike_temp.word_bits)

    def iand(self, x: SpikeTensor, y: SpikeTensor) -> Tuple[SpikeTensor, int]:
        '''x AND NOT y on packed words'''
        out = iand_payload(x, y)
        self.banks.spike_temp.record_read(2 * self._spike_words(x.size))
        self.banks.spike_temp.record_write(self._spike_words(out.size))
        return out, iand_cycles(x.shape, self.accel)

    def maxpool(self, x: SpikeTensor) -> Tuple[SpikeTensor, int]:
        '''OR over each 2x2 window'''
        bits = x.to_bits()
        if bits.ndim != 4 or bits.shape[2] % 2 or bits.shape[3] % 2:
            raise ShapeMismatchError(f'max pooling needs an even [T, C, H, W] map, got {bits.shape}')
        out = (bits[:, :, 0::2, 0::2] | bits[:, :, 1::2, 0::2] | bits[:, :, 0::2, 1::2] | bits[:, :, 1::2, 1::2])
        self.banks.spike_temp.record_read(self._spike_words(bits.size))
        self.banks.spike_temp.record_write(self._spike_words(out.size))
        return SpikeTensor.from_bits(out), maxpool_cycles(out.shape, self.accel)

    def head(self, x: SpikeTensor, weights: QTensor, bias: AccTensor, where: str = 'head') -> Tuple[AccTensor, int]:
        '''popcount each feature over time and tokens, then weights . rate + bias'''
        bits = x.to_bits()
        if bits.ndim != 3 or weights.shape[1] != bits.shape[2]:
            raise ShapeMismatchError(f'{where}: weights {weights.shape} do not match tokens {bits.shape}')
        rate = bits.reshape(-1, bits.shape[2]).sum(axis=0, dtype=np.int64)
        logits = np.zeros(weights.shape[0], dtype=np.int64)
        matrix = weights.data.astype(np.int64)
        for cls in range(weights.shape[0]):
            logits[cls] = bias.wide()[cls] + int(np.dot(matrix[cls], rate))
        self.banks.spike_temp.record_read(self._spike_words(bits.size))
        self.banks.weight.record_read(words_for(weights.data.size * 8, self.banks.weight.word_bits))
        time_steps, tokens, dim = bits.shape
        cycles = head_cycles(time_steps, tokens, dim, weights.shape[0], self.accel)
        return AccTensor(checked_int32(logits, where), weights.scale_exp, where), cycles
