'''Raw 8-bit image files: width u32, height u32, channels u32, then [C, H, W] bytes'''
import logging
import struct

import numpy as np

from siaf.sim.errors import ImageFileError
from siaf.sim.tensor import ByteImage

logger = logging.getLogger(__name__)  # pylint: disable=C0103

_HEADER = struct.Struct('<III')


def write_image(path: str, img: ByteImage) -> None:
    '''Write a raw image'''
    channels, height, width = img.shape
    with open(path, 'wb') as file:
        file.write(_HEADER.pack(width, height, channels))
        file.write(img.data.tobytes())


def read_image(path: str) -> ByteImage:
    '''Read a raw image'''
    try:
        with open(path, 'rb') as file:
            blob = file.read()
    except OSError as err:
        raise ImageFileError(f'cannot read image: {err}', 0, path) from err
    if len(blob) < _HEADER.size:
        raise ImageFileError('truncated image header', len(blob), path)
    width, height, channels = _HEADER.unpack_from(blob, 0)
    expected = width * height * channels
    if expected == 0:
        raise ImageFileError('image has an empty dimension', 0, path)
    if len(blob) - _HEADER.size != expected:
        raise ImageFileError(
            f'expected {expected} pixel bytes, found {len(blob) - _HEADER.size}', _HEADER.size, path)
    data = np.frombuffer(blob, dtype=np.uint8, offset=_HEADER.size)
    logger.debug('Loaded %dx%dx%d image from %s', channels, height, width, path)
    return ByteImage(data.reshape(channels, height, width))


def random_image(shape, seed: int) -> ByteImage:
    '''Deterministic pseudo-random image of shape [C, H, W]'''
    rng = np.random.default_rng(seed)
    return ByteImage(rng.integers(0, 256, size=tuple(shape), dtype=np.uint8))
