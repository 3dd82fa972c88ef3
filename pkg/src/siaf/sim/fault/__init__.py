"""Fault abstract base class for verification runs"""
from abc import ABC, abstractmethod

import numpy as np

from siaf.sim.errors import ConfigError
from siaf.sim.tensor import INT8_MAX, INT8_MIN


class Fault(ABC):
    """
    Fault alters what the fabric sees, never the reference model. A verify run
    with an active fault is expected to report a mismatch.
    """
    @abstractmethod
    def apply_weights(self, layer_name: str, weights: np.ndarray) -> np.ndarray:
        """apply_weights returns the int8 weights the PE array will load for layer_name"""


class NoopFault(Fault):
    """NoopFault leaves every weight untouched"""

    def apply_weights(self, layer_name: str, weights: np.ndarray) -> np.ndarray:
        return weights


class FlipWeightSign(Fault):
    """Negates the weights of one layer, -128 saturates to 127"""

    def __init__(self, layer: str):
        if not layer:
            raise ConfigError('flip-weight-sign needs a layer name', 'fault')
        self.layer = layer

    def apply_weights(self, layer_name: str, weights: np.ndarray) -> np.ndarray:
        if layer_name != self.layer:
            return weights
        return np.clip(-weights.astype(np.int16), INT8_MIN, INT8_MAX).astype(np.int8)

    def __repr__(self):
        return f'FlipWeightSign({self.layer})'


FAULT_KINDS = {
    'flip-weight-sign': FlipWeightSign,
}


def parse_fault(text: str) -> Fault:
    '''"<kind>:<layer>" as given on the command line'''
    kind, _, argument = text.partition(':')
    if kind not in FAULT_KINDS:
        raise ConfigError(f'unknown fault {kind!r}, expected one of {sorted(FAULT_KINDS)}', 'fault')
    return FAULT_KINDS[kind](argument)
