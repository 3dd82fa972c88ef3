'''Exceptions raised by the reference model and the simulator'''


class SiafError(Exception):
    '''Base class of every error raised by siaf'''

    location = ''


class ShapeMismatchError(SiafError, ValueError):
    '''Operands or tensors whose shapes do not line up'''


class AccumulatorOverflowError(SiafError, ArithmeticError):
    '''A value left the signed 32-bit accumulator range'''

    def __init__(self, where: str, index=None, value=None):
        self.location = where
        self.index = index
        self.value = value
        super().__init__(f'32-bit accumulator overflow in {where} at index {index} (value {value})')


class CapacityExceededError(SiafError):
    '''An SRAM access reached past the end of its bank'''

    def __init__(self, bank: str, address: int, nbytes: int, capacity: int):
        self.location = bank
        self.address = address
        self.nbytes = nbytes
        self.capacity = capacity
        super().__init__(f'bank {bank}: access of {nbytes} bytes at address {address} '
                         f'exceeds capacity {capacity}')


class SelectorError(SiafError, ValueError):
    '''Unrolled LIF mux pattern outside 111/101/000'''


class TimeStepMismatchError(SiafError, ValueError):
    '''Job, selector and tensor disagree on the number of time steps'''


class UnsupportedLayerError(SiafError, TypeError):
    '''Layer kind the fabric or the compiler cannot map'''


class ConfigError(SiafError, ValueError):
    '''Malformed model or simulator configuration'''

    def __init__(self, message: str, location: str = ''):
        self.location = location
        super().__init__(f'{location}: {message}' if location else message)


class WeightFileError(SiafError, ValueError):
    '''Malformed SIAF tensor file'''

    def __init__(self, message: str, offset: int, path: str = ''):
        self.offset = offset
        self.location = f'{path}@offset={offset}' if path else f'offset={offset}'
        super().__init__(f'{message} at offset {offset}')


class ImageFileError(WeightFileError):
    '''Malformed raw 8-bit image file'''
