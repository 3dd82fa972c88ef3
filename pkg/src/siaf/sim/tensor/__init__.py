'''
Core tensor types shared by the reference model and the accelerator simulator.

Spike tensors are bit-packed, LSB-first within each byte, bytes in row-major
element order (so a little-endian view of the payload as 64-bit words is also
LSB-first). Padding bits in the last byte are always zero.
'''
import logging
from functools import reduce
from operator import mul
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from siaf.sim.errors import AccumulatorOverflowError, ShapeMismatchError

logger = logging.getLogger(__name__)  # pylint: disable=C0103

ALLOWED_TIME_STEPS = (1, 2, 4)
INT8_MIN, INT8_MAX = -128, 127
INT32_MIN, INT32_MAX = -(1 << 31), (1 << 31) - 1
SCALE_EXP_MIN, SCALE_EXP_MAX = -16, 0
# pixel values are fractions of full scale
IMAGE_SCALE_EXP = -8
BITPLANES = 8


def _prod(shape: Iterable[int]) -> int:
    return reduce(mul, shape, 1)


def _normalize_shape(shape) -> Tuple[int, ...]:
    shape = tuple(int(dim) for dim in shape)
    if not shape or any(dim <= 0 for dim in shape):
        raise ShapeMismatchError(f'invalid shape {shape}')
    return shape


def check_time_steps(time_steps: int) -> int:
    '''Reject anything but 1, 2 or 4 time steps'''
    if time_steps not in ALLOWED_TIME_STEPS:
        raise ShapeMismatchError(f'time steps must be one of {ALLOWED_TIME_STEPS}, got {time_steps}')
    return time_steps


def checked_int32(values, where: str) -> np.ndarray:
    '''Returns values as int64 after asserting they fit a signed 32-bit accumulator'''
    values = np.asarray(values, dtype=np.int64)
    bad = (values < INT32_MIN) | (values > INT32_MAX)
    if bad.any():
        flat = int(np.flatnonzero(bad)[0])
        index = np.unravel_index(flat, values.shape) if values.ndim else ()
        raise AccumulatorOverflowError(where, tuple(int(i) for i in index), int(values.flat[flat]))
    return values


class SpikeTensor:
    '''Bit-packed binary activations, first dimension is the time step'''

    __slots__ = ('_shape', '_payload')

    def __init__(self, shape: Sequence[int], payload=None):
        self._shape = _normalize_shape(shape)
        check_time_steps(self._shape[0])
        nbytes = (self.size + 7) // 8
        if payload is None:
            self._payload = np.zeros(nbytes, dtype=np.uint8)
            return
        payload = np.frombuffer(bytes(payload), dtype=np.uint8).copy() \
            if isinstance(payload, (bytes, bytearray)) else np.array(payload, dtype=np.uint8)
        if payload.ndim != 1 or payload.size != nbytes:
            raise ShapeMismatchError(
                f'payload of {payload.size} bytes does not match shape {self._shape} ({nbytes} bytes)')
        pad = nbytes * 8 - self.size
        if pad and payload[-1] >> (8 - pad):
            raise ShapeMismatchError('padding bits of a spike payload must be zero')
        self._payload = payload

    @classmethod
    def zeros(cls, shape: Sequence[int]) -> 'SpikeTensor':
        '''all-zero tensor'''
        return cls(shape)

    @classmethod
    def from_bits(cls, bits) -> 'SpikeTensor':
        '''Pack an unpacked 0/1 array'''
        bits = np.asarray(bits)
        if bits.size and not np.isin(bits, (0, 1)).all():
            raise ShapeMismatchError('spike tensors hold only 0 and 1')
        packed = np.packbits(bits.astype(np.uint8).ravel(), bitorder='little')
        return cls(bits.shape, packed)

    @property
    def shape(self) -> Tuple[int, ...]:
        '''dimension sizes, time step first'''
        return self._shape

    @property
    def time_steps(self) -> int:
        '''T'''
        return self._shape[0]

    @property
    def ndim(self) -> int:
        '''rank'''
        return len(self._shape)

    @property
    def size(self) -> int:
        '''number of elements, padding excluded'''
        return _prod(self._shape)

    @property
    def payload(self) -> np.ndarray:
        '''read-only view of the packed bytes'''
        view = self._payload.view()
        view.flags.writeable = False
        return view

    def to_bits(self) -> np.ndarray:
        '''Unpacked uint8 array of the tensor's shape'''
        return np.unpackbits(self._payload, count=self.size, bitorder='little').reshape(self._shape)

    def _flat_index(self, index) -> int:
        index = tuple(index) if isinstance(index, (tuple, list)) else (index,)
        if len(index) != self.ndim:
            raise IndexError(f'index {index} has rank {len(index)}, tensor has rank {self.ndim}')
        for pos, dim in zip(index, self._shape):
            if not 0 <= int(pos) < dim:
                raise IndexError(f'index {index} out of range for shape {self._shape}')
        return int(np.ravel_multi_index(tuple(int(i) for i in index), self._shape))

    def get_bit(self, index) -> int:
        '''bit at a multi-index'''
        flat = self._flat_index(index)
        return int(self._payload[flat >> 3] >> (flat & 7)) & 1

    def set_bit(self, index, value: int) -> None:
        '''Builder-phase setter; tensors are treated as read-only once handed to a layer'''
        if value not in (0, 1):
            raise ValueError(f'spike value must be 0 or 1, got {value}')
        flat = self._flat_index(index)
        mask = np.uint8(1 << (flat & 7))
        if value:
            self._payload[flat >> 3] |= mask
        else:
            self._payload[flat >> 3] &= np.uint8(~mask & 0xFF)

    def count_ones(self) -> int:
        '''popcount over the payload, padding is zero so no correction is needed'''
        return int(np.unpackbits(self._payload).sum(dtype=np.int64))

    def count_zeros(self) -> int:
        '''zero elements'''
        return self.size - self.count_ones()

    def sparsity(self) -> float:
        '''fraction of zero elements'''
        return self.count_zeros() / self.size

    def density(self) -> float:
        '''fraction of one elements'''
        return self.count_ones() / self.size

    def time_step(self, t: int) -> 'SpikeTensor':
        '''Single time step as a T=1 tensor'''
        if not 0 <= t < self.time_steps:
            raise IndexError(f'time step {t} out of range for T={self.time_steps}')
        return SpikeTensor.from_bits(self.to_bits()[t:t + 1])

    def __eq__(self, other):
        if not isinstance(other, SpikeTensor):
            return NotImplemented
        return self._shape == other._shape and np.array_equal(self._payload, other._payload)

    def __hash__(self):
        return hash((self._shape, self._payload.tobytes()))

    def __repr__(self):
        return f'SpikeTensor(shape={self._shape}, ones={self.count_ones()})'


class QTensor:
    '''8-bit signed weights, value = data * 2**scale_exp (BN already folded)'''

    __slots__ = ('data', 'scale_exp')

    def __init__(self, data, scale_exp: int):
        raw = np.asarray(data)
        if raw.size and (raw.min() < INT8_MIN or raw.max() > INT8_MAX):
            raise ValueError(f'int8 weight out of range [{INT8_MIN}, {INT8_MAX}]')
        if not SCALE_EXP_MIN <= int(scale_exp) <= SCALE_EXP_MAX:
            raise ValueError(f'scale_exp {scale_exp} outside [{SCALE_EXP_MIN}, {SCALE_EXP_MAX}]')
        self.data = raw.astype(np.int8)
        self.data.flags.writeable = False
        self.scale_exp = int(scale_exp)

    @property
    def shape(self) -> Tuple[int, ...]:
        '''dimension sizes'''
        return self.data.shape

    def __eq__(self, other):
        if not isinstance(other, QTensor):
            return NotImplemented
        return self.scale_exp == other.scale_exp and np.array_equal(self.data, other.data)

    def __repr__(self):
        return f'QTensor(shape={self.shape}, scale_exp={self.scale_exp})'


class AccTensor:
    '''Signed 32-bit accumulator values (currents, membranes, logits)'''

    __slots__ = ('data', 'scale_exp')

    def __init__(self, data, scale_exp: int = 0, where: str = 'AccTensor'):
        self.data = checked_int32(data, where).astype(np.int32)
        self.data.flags.writeable = False
        self.scale_exp = int(scale_exp)

    @property
    def shape(self) -> Tuple[int, ...]:
        '''dimension sizes'''
        return self.data.shape

    def wide(self) -> np.ndarray:
        '''int64 copy for further arithmetic'''
        return self.data.astype(np.int64)

    def __eq__(self, other):
        if not isinstance(other, AccTensor):
            return NotImplemented
        return self.scale_exp == other.scale_exp and np.array_equal(self.data, other.data)

    def __repr__(self):
        return f'AccTensor(shape={self.shape}, scale_exp={self.scale_exp})'


class ByteImage:
    '''8-bit unsigned image laid out as [channels, height, width]'''

    __slots__ = ('data',)

    def __init__(self, data):
        raw = np.asarray(data)
        if raw.ndim != 3:
            raise ShapeMismatchError(f'image must be [channels, height, width], got {raw.shape}')
        if raw.size and (raw.min() < 0 or raw.max() > 255):
            raise ValueError('image values must lie in [0, 255]')
        self.data = raw.astype(np.uint8)
        self.data.flags.writeable = False

    @property
    def shape(self) -> Tuple[int, ...]:
        '''[channels, height, width]'''
        return self.data.shape

    def __eq__(self, other):
        if not isinstance(other, ByteImage):
            return NotImplemented
        return np.array_equal(self.data, other.data)

    def __repr__(self):
        return f'ByteImage(shape={self.shape})'


def bitplane_decompose(img: ByteImage) -> List[SpikeTensor]:
    '''Split an 8-bit image into 8 T=1 spike planes, plane 0 is the LSB'''
    return [SpikeTensor.from_bits(((img.data >> b) & 1)[np.newaxis]) for b in range(BITPLANES)]


def bitplane_recompose(planes: Sequence[SpikeTensor]) -> ByteImage:
    '''Inverse of bitplane_decompose'''
    if len(planes) != BITPLANES:
        raise ShapeMismatchError(f'expected {BITPLANES} planes, got {len(planes)}')
    shape = planes[0].shape
    if shape[0] != 1 or any(plane.shape != shape for plane in planes):
        raise ShapeMismatchError('bitplanes must share one T=1 shape')
    value = np.zeros(shape[1:], dtype=np.uint16)
    for b, plane in enumerate(planes):
        value |= plane.to_bits()[0].astype(np.uint16) << b
    return ByteImage(value)


def sparsity(s: SpikeTensor) -> float:
    '''fraction of zero elements, padding excluded'''
    return s.sparsity()


def iand_payload(x: SpikeTensor, y: SpikeTensor) -> SpikeTensor:
    '''x AND NOT y on packed bytes'''
    if x.shape != y.shape:
        raise ShapeMismatchError(f'IAND operands differ: {x.shape} vs {y.shape}')
    # x padding is zero, so the result padding is zero too
    return SpikeTensor(x.shape, x.payload & ~y.payload)
