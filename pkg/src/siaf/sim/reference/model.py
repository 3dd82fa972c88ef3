'''
Model walker and the golden reference backend.

The walker owns the wiring of the network (tokenizer, blocks, head) and asks a
backend to evaluate each operation. The reference backend evaluates them
naively; the accelerator backend in the scheduler evaluates the same calls on
the modeled fabric, so both paths produce comparable LayerTraces.
'''
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from siaf.sim.errors import ConfigError, ShapeMismatchError
from siaf.sim.reference import layers as ops
from siaf.sim.reference.lif import lif_seq
from siaf.sim.reference.network import (ClassifierHead, ConvBn1x1, ConvBn3x3, IandResidual, Lif,
                                        Linear, MaxPool2x2, ModelConfig, Ssa, op_sites)
from siaf.sim.tensor import AccTensor, ByteImage, SpikeTensor

logger = logging.getLogger(__name__)  # pylint: disable=C0103

RESIDUAL_IAND = 'iand'
# test-only: plain addition, which breaks the all-spike property
RESIDUAL_ADD = 'add'


@dataclass
class TraceEntry:
    '''One executed operation: its input, pre-LIF currents and output'''
    name: str
    kind: str
    inputs: Optional[ops.Activation]
    currents: Optional[AccTensor]
    output: object


@dataclass
class LayerTrace:
    '''Ordered record of every executed operation'''
    entries: List[TraceEntry] = field(default_factory=list)

    def record(self, name, kind, inputs, currents, output):
        '''append an entry'''
        self.entries.append(TraceEntry(name, kind, inputs, currents, output))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, index):
        return self.entries[index]

    def find(self, name: str) -> TraceEntry:
        '''entry by operation name'''
        for entry in self.entries:
            if entry.name == name:
                return entry
        raise KeyError(name)


class Backend(ABC):
    '''Evaluates the operations the walker issues'''

    @abstractmethod
    def encode(self, layer: ConvBn3x3, lif: Lif, img: ByteImage,
               time_steps: int) -> Tuple[AccTensor, SpikeTensor]:
        '''encoding conv on the 8-bit image, then LIF'''

    @abstractmethod
    def fused(self, layer, lif: Lif, x: ops.Activation) -> Tuple[AccTensor, SpikeTensor]:
        '''conv or linear layer followed by its LIF'''

    @abstractmethod
    def attention(self, ssa: Ssa, q: SpikeTensor, k: SpikeTensor,
                  v: SpikeTensor) -> Tuple[AccTensor, SpikeTensor]:
        '''softmax-free attention currents and the attention LIF'''

    @abstractmethod
    def maxpool(self, layer: MaxPool2x2, x: ops.Activation) -> ops.Activation:
        '''2x2 max pooling'''

    @abstractmethod
    def iand(self, layer: IandResidual, x: SpikeTensor, y: SpikeTensor) -> SpikeTensor:
        '''residual x AND NOT y'''

    @abstractmethod
    def head(self, head: ClassifierHead, x: ops.Activation) -> AccTensor:
        '''classifier head'''


class ReferenceBackend(Backend):
    '''Naive evaluation with the reference layer ops'''

    def encode(self, layer, lif, img, time_steps):
        currents = ops.encode_conv_3x3(img, layer.weights, layer.bias, time_steps, layer.stride, layer.name)
        spikes, _ = lif_seq(currents, lif.params, lif.name)
        return currents, spikes

    def fused(self, layer, lif, x):
        if isinstance(layer, ConvBn3x3):
            currents = ops.conv_bn_3x3(x, layer.weights, layer.bias, layer.stride, layer.name)
        elif isinstance(layer, ConvBn1x1):
            currents = ops.conv_bn_1x1(x, layer.weights, layer.bias, layer.name)
        else:
            currents = ops.linear(x, layer.weights, layer.bias, layer.name)
        spikes, _ = lif_seq(currents, lif.params, lif.name)
        return currents, spikes

    def attention(self, ssa, q, k, v):
        currents = ops.attention_currents(q, k, v, ssa.heads, ssa.scale_shift, f'{ssa.name}.attn')
        spikes, _ = lif_seq(currents, ssa.attn_lif.params, ssa.attn_lif.name)
        return currents, spikes

    def maxpool(self, layer, x):
        if isinstance(x, SpikeTensor):
            return ops.maxpool2x2(x, layer.name)
        data = x.wide()
        t, c, h, w = data.shape
        return AccTensor(data.reshape(t, c, h // 2, 2, w // 2, 2).max(axis=(3, 5)), x.scale_exp, layer.name)

    def iand(self, layer, x, y):
        return ops.iand(x, y)

    def head(self, head, x):
        return ops.classifier_head(x, head.weights, head.bias, head.name)


class ModelWalker:
    '''Drives a backend through the model graph and records a LayerTrace'''

    def __init__(self, backend: Backend, residual: str = RESIDUAL_IAND):
        if residual not in (RESIDUAL_IAND, RESIDUAL_ADD):
            raise ConfigError(f'unknown residual mode {residual!r}')
        self.backend = backend
        self.residual = residual
        self.trace = LayerTrace()

    def _fused(self, layer, lif, x):
        currents, spikes = self.backend.fused(layer, lif, x)
        self.trace.record(layer.name, type(layer).__name__, x, currents, spikes)
        return spikes

    def run_layers(self, layers: Sequence, x):
        '''Evaluate a layer list on activation x'''
        index = 0
        while index < len(layers):
            layer = layers[index]
            if isinstance(layer, (ConvBn3x3, ConvBn1x1, Linear)):
                x = self._fused(layer, layers[index + 1], x)
                index += 2
                continue
            if isinstance(layer, MaxPool2x2):
                out = self.backend.maxpool(layer, x)
                self.trace.record(layer.name, 'MaxPool2x2', x, None, out)
                x = out
            elif isinstance(layer, IandResidual):
                x = self.residual_block(layer, x)
            elif isinstance(layer, Ssa):
                x = self.ssa(layer, x)
            index += 1
        return x

    def residual_block(self, layer: IandResidual, x):
        '''x AND NOT inner(x), or x + inner(x) in addition mode'''
        branch = self.run_layers(layer.inner, x)
        if self.residual == RESIDUAL_ADD:
            out = ops.residual_add(x, branch)
        else:
            out = self.backend.iand(layer, x, branch)
        self.trace.record(layer.name, 'IandResidual', x, None, out)
        return out

    def ssa(self, spec: Ssa, x):
        '''Q, K, V projections, attention, output projection'''
        q = self._fused(spec.q, spec.q_lif, x)
        k = self._fused(spec.k, spec.k_lif, x)
        v = self._fused(spec.v, spec.v_lif, x)
        currents, attn = self.backend.attention(spec, q, k, v)
        self.trace.record(f'{spec.name}.attn', 'Attention', q, currents, attn)
        return self._fused(spec.proj, spec.proj_lif, attn)

    def tokenizer(self, img: ByteImage, cfg: ModelConfig):
        '''encoding layer then the remaining tokenizer layers, as a [T, C, H, W] map'''
        if tuple(img.shape) != tuple(cfg.input_shape):
            raise ShapeMismatchError(f'image shape {img.shape} does not match model input {cfg.input_shape}')
        encoder, lif = cfg.tokenizer[0], cfg.tokenizer[1]
        currents, spikes = self.backend.encode(encoder, lif, img, cfg.time_steps)
        self.trace.record(encoder.name, 'Encode', None, currents, spikes)
        return self.run_layers(cfg.tokenizer[2:], spikes)

    def forward(self, img: ByteImage, cfg: ModelConfig) -> AccTensor:
        '''full model, returns logits'''
        op_sites(cfg)
        x = ops.to_tokens(self.tokenizer(img, cfg))
        for block in cfg.blocks:
            logger.debug('Block %s', block.name)
            x = self.run_layers((block.ssa, block.mlp), x)
        logits = self.backend.head(cfg.head, x)
        self.trace.record(cfg.head.name, 'ClassifierHead', x, logits, logits)
        return logits


def model_forward(img: ByteImage, cfg: ModelConfig,
                  residual: str = RESIDUAL_IAND) -> Tuple[AccTensor, LayerTrace]:
    '''Golden end-to-end inference'''
    walker = ModelWalker(ReferenceBackend(), residual)
    logits = walker.forward(img, cfg)
    return logits, walker.trace


def tokenizer_forward(img: ByteImage, cfg: ModelConfig) -> SpikeTensor:
    '''Spiking tokenizer output as a [T, C, H, W] map'''
    return ModelWalker(ReferenceBackend()).tokenizer(img, cfg)


def iand_residual(x: SpikeTensor, spec: IandResidual) -> SpikeTensor:
    '''iand(x, inner(x)) with the reference backend'''
    return ModelWalker(ReferenceBackend()).residual_block(spec, x)


def ssa(x: SpikeTensor, spec: Ssa) -> SpikeTensor:
    '''spiking self-attention branch on [T, N, D] tokens'''
    return ModelWalker(ReferenceBackend()).ssa(spec, x)


def _is_binary(value) -> bool:
    if isinstance(value, SpikeTensor):
        return True
    return bool(np.isin(value.data, (0, 1)).all())


def non_spike_entries(trace: LayerTrace) -> List[str]:
    '''
    Names of operations after the encoding layer whose input or output is not
    binary. Empty for every model evaluated with IAND residuals.
    '''
    offenders = []
    for entry in trace.entries[1:]:
        if entry.kind == 'ClassifierHead':
            values = [entry.inputs]
        else:
            values = [entry.inputs, entry.output]
        if any(value is not None and not _is_binary(value) for value in values):
            offenders.append(entry.name)
    return offenders
