'''
Golden functional model of the spiking transformer: sequential LIF dynamics,
quantized ConvBN and linear layers, IAND residuals, softmax-free spiking
self-attention, the spiking tokenizer and the classification head.
'''
from siaf.sim.reference.lif import LifParams, lif_seq, lif_step, threshold_for_scale
from siaf.sim.reference.model import (LayerTrace, ReferenceBackend, iand_residual, model_forward,
                                      non_spike_entries, ssa, tokenizer_forward)
from siaf.sim.reference.network import (Block, ClassifierHead, ConvBn1x1, ConvBn3x3, IandResidual,
                                        Lif, Linear, MaxPool2x2, ModelConfig, Ssa, op_sites, validate)

__all__ = [
    'LifParams', 'lif_seq', 'lif_step', 'threshold_for_scale',
    'LayerTrace', 'ReferenceBackend', 'iand_residual', 'model_forward', 'non_spike_entries', 'ssa',
    'tokenizer_forward',
    'Block', 'ClassifierHead', 'ConvBn1x1', 'ConvBn3x3', 'IandResidual', 'Lif', 'Linear',
    'MaxPool2x2', 'ModelConfig', 'Ssa', 'op_sites', 'validate',
]
