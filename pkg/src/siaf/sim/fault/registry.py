"""Used for holding faults to inject into fabric runs"""
from typing import Tuple, Type

import numpy as np

from siaf.sim.fault import Fault


class Registry:
    """
    Registry is used to register and apply faults
    """
    def __new__(cls):
        if not hasattr(cls, 'instance'):
            cls.instance = super(Registry, cls).__new__(cls)
        return cls.instance

    def __init__(self):
        if not hasattr(self, '_initialized'):
            self._initialized = True
            self.faults = []

    def register(self, fault_class: Type[Fault], *args, **kwargs) -> Fault:
        '''Register a fault to apply on every following fabric run'''
        instance = fault_class(*args, **kwargs)
        self.faults.append(instance)
        return instance

    def add(self, fault: Fault) -> None:
        '''Register an already built fault'''
        self.faults.append(fault)

    def clear(self) -> None:
        '''Drop every registered fault'''
        self.faults = []

    def snapshot(self) -> Tuple[Fault, ...]:
        '''faults active for one run'''
        return tuple(self.faults)


def apply_faults(faults, layer_name: str, weights: np.ndarray) -> np.ndarray:
    '''Run weights through every fault in order'''
    for fault in faults:
        weights = fault.apply_weights(layer_name, weights)
    return weights
