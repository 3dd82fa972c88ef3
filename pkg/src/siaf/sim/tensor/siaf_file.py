'''SIAF tensor container: little-endian, named tensors, bit-exact spike payloads'''
import logging
import struct
from collections import OrderedDict
from typing import Dict, Mapping, Union

import numpy as np

from siaf.sim.errors import WeightFileError
from siaf.sim.tensor import AccTensor, ByteImage, QTensor, SpikeTensor

logger = logging.getLogger(__name__)  # pylint: disable=C0103

MAGIC = b'SIAF'
FORMAT_VERSION = 1

DTYPE_SPIKE = 0
DTYPE_INT8 = 1
DTYPE_INT32 = 2
DTYPE_UINT8 = 3

Tensor = Union[SpikeTensor, QTensor, AccTensor, ByteImage]

_HEADER = struct.Struct('<4sHI')


def _describe(tensor: Tensor):
    '''(dtype code, dims, scale_exp, payload bytes)'''
    if isinstance(tensor, SpikeTensor):
        return DTYPE_SPIKE, tensor.shape, 0, tensor.payload.tobytes()
    if isinstance(tensor, QTensor):
        return DTYPE_INT8, tensor.shape, tensor.scale_exp, tensor.data.astype('<i1').tobytes()
    if isinstance(tensor, AccTensor):
        return DTYPE_INT32, tensor.shape, tensor.scale_exp, tensor.data.astype('<i4').tobytes()
    if isinstance(tensor, ByteImage):
        return DTYPE_UINT8, tensor.shape, 0, tensor.data.tobytes()
    raise TypeError(f'cannot serialize {type(tensor).__name__}')


def dumps(tensors: Mapping[str, Tensor]) -> bytes:
    '''Serialize named tensors'''
    chunks = [_HEADER.pack(MAGIC, FORMAT_VERSION, len(tensors))]
    for name, tensor in tensors.items():
        encoded = name.encode('utf-8')
        dtype, dims, scale_exp, payload = _describe(tensor)
        chunks.append(struct.pack('<H', len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack('<BB', dtype, len(dims)))
        chunks.append(struct.pack(f'<{len(dims)}I', *dims))
        chunks.append(struct.pack('<bQ', scale_exp, len(payload)))
        chunks.append(payload)
    return b''.join(chunks)


def write_tensors(path: str, tensors: Mapping[str, Tensor]) -> None:
    '''Write a SIAF file'''
    with open(path, 'wb') as file:
        file.write(dumps(tensors))
    logger.debug('Wrote %d tensors to %s', len(tensors), path)


class _Reader:  # pylint: disable=R0903
    def __init__(self, blob: bytes, path: str):
        self.blob = blob
        self.offset = 0
        self.path = path

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.offset + size > len(self.blob):
            raise WeightFileError(f'truncated file, needed {size} bytes', self.offset, self.path)
        values = struct.unpack_from(fmt, self.blob, self.offset)
        self.offset += size
        return values

    def take_bytes(self, count: int) -> bytes:
        if self.offset + count > len(self.blob):
            raise WeightFileError(f'truncated payload, needed {count} bytes', self.offset, self.path)
        chunk = self.blob[self.offset:self.offset + count]
        self.offset += count
        return chunk


def _expected_payload(dtype: int, dims) -> int:
    count = int(np.prod(dims, dtype=np.int64)) if dims else 1
    if dtype == DTYPE_SPIKE:
        return (count + 7) // 8
    if dtype == DTYPE_INT32:
        return count * 4
    return count


def _build(dtype: int, dims, scale_exp: int, payload: bytes) -> Tensor:
    if dtype == DTYPE_SPIKE:
        return SpikeTensor(dims, payload)
    if dtype == DTYPE_INT8:
        return QTensor(np.frombuffer(payload, dtype='<i1').reshape(dims), scale_exp)
    if dtype == DTYPE_INT32:
        return AccTensor(np.frombuffer(payload, dtype='<i4').reshape(dims), scale_exp)
    return ByteImage(np.frombuffer(payload, dtype=np.uint8).reshape(dims))


def loads(blob: bytes, path: str = '') -> Dict[str, Tensor]:
    '''Parse a SIAF blob, errors carry the byte offset of the offending field'''
    reader = _Reader(blob, path)
    magic, version, count = reader.take('<4sHI')
    if magic != MAGIC:
        raise WeightFileError(f'bad magic {magic!r}, expected {MAGIC!r}', 0, path)
    if version != FORMAT_VERSION:
        raise WeightFileError(f'unsupported format version {version}', 4, path)

    tensors = OrderedDict()
    for _ in range(count):
        name_offset = reader.offset
        (name_len,) = reader.take('<H')
        try:
            name = reader.take_bytes(name_len).decode('utf-8')
        except UnicodeDecodeError as err:
            raise WeightFileError('tensor name is not UTF-8', name_offset + 2, path) from err
        dtype_offset = reader.offset
        dtype, rank = reader.take('<BB')
        if dtype not in (DTYPE_SPIKE, DTYPE_INT8, DTYPE_INT32, DTYPE_UINT8):
            raise WeightFileError(f'unknown dtype code {dtype}', dtype_offset, path)
        dims = reader.take(f'<{rank}I') if rank else ()
        scale_offset = reader.offset
        scale_exp, length = reader.take('<bQ')
        if length != _expected_payload(dtype, dims):
            raise WeightFileError(
                f'payload length {length} does not match dims {tuple(dims)}', scale_offset + 1, path)
        payload_offset = reader.offset
        payload = reader.take_bytes(length)
        if name in tensors:
            raise WeightFileError(f'duplicate tensor {name!r}', name_offset, path)
        try:
            tensors[name] = _build(dtype, tuple(dims), scale_exp, payload)
        except ValueError as err:
            raise WeightFileError(f'invalid tensor {name!r}: {err}', payload_offset, path) from err
    if reader.offset != len(blob):
        raise WeightFileError('trailing bytes after last tensor', reader.offset, path)
    return tensors


def read_tensors(path: str) -> Dict[str, Tensor]:
    '''Read a SIAF file'''
    try:
        with open(path, 'rb') as file:
            blob = file.read()
    except OSError as err:
        raise WeightFileError(f'cannot read weights: {err}', 0, path) from err
    tensors = loads(blob, path)
    logger.debug('Loaded %d tensors from %s', len(tensors), path)
    return tensors
