'''
Layer specifications and the model graph.

A model is a tokenizer layer list, a list of blocks (an SSA branch and an MLP
branch, each wrapped in an IAND residual) and a classifier head. Every ConvBN
or Linear layer in a list is immediately followed by the Lif layer that turns
its currents into spikes.
'''
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

from siaf.sim.errors import ConfigError, ShapeMismatchError, UnsupportedLayerError
from siaf.sim.reference.lif import LifParams
from siaf.sim.tensor import IMAGE_SCALE_EXP, AccTensor, QTensor, check_time_steps

logger = logging.getLogger(__name__)  # pylint: disable=C0103

MLP_RATIO = 4
DEFAULT_SCALE_SHIFT = 3


@dataclass(frozen=True)
class ConvBn3x3:
    '''3x3 convolution with folded batch norm, padding 1'''
    name: str
    in_ch: int
    out_ch: int
    weights: QTensor
    bias: AccTensor
    stride: int = 1

    def __post_init__(self):
        if self.weights.shape != (self.out_ch, self.in_ch, 3, 3):
            raise ShapeMismatchError(f'{self.name}: weights {self.weights.shape} are not '
                                     f'({self.out_ch}, {self.in_ch}, 3, 3)')
        if self.stride not in (1, 2):
            raise ConfigError(f'stride must be 1 or 2, got {self.stride}', self.name)


@dataclass(frozen=True)
class ConvBn1x1:
    '''1x1 convolution with folded batch norm'''
    name: str
    in_ch: int
    out_ch: int
    weights: QTensor
    bias: AccTensor

    def __post_init__(self):
        if self.weights.shape not in ((self.out_ch, self.in_ch), (self.out_ch, self.in_ch, 1, 1)):
            raise ShapeMismatchError(f'{self.name}: weights {self.weights.shape} are not '
                                     f'({self.out_ch}, {self.in_ch})')


@dataclass(frozen=True)
class Linear:
    '''Token-wise linear layer, weights are [out_dim, in_dim]'''
    name: str
    in_dim: int
    out_dim: int
    weights: QTensor
    bias: AccTensor

    def __post_init__(self):
        if self.weights.shape != (self.out_dim, self.in_dim):
            raise ShapeMismatchError(f'{self.name}: weights {self.weights.shape} are not '
                                     f'({self.out_dim}, {self.in_dim})')


@dataclass(frozen=True)
class MaxPool2x2:
    name: str


@dataclass(frozen=True)
class Lif:
    name: str
    params: LifParams


@dataclass(frozen=True)
class IandResidual:
    '''out = x AND NOT inner(x)'''
    name: str
    inner: Tuple['LayerSpec', ...]


@dataclass(frozen=True)
class Ssa:  # pylint: disable=R0902
    '''
    Spiking self-attention. Q, K and V are LIF outputs of linear projections,
    attention is ((Q K^T) V) >> scale_shift per head, followed by a LIF and
    the output projection with its own LIF.
    '''
    name: str
    dim: int
    heads: int
    q: Linear
    k: Linear
    v: Linear
    proj: Linear
    q_lif: Lif
    k_lif: Lif
    v_lif: Lif
    attn_lif: Lif
    proj_lif: Lif
    scale_shift: int = DEFAULT_SCALE_SHIFT

    def __post_init__(self):
        if self.heads <= 0 or self.dim % self.heads:
            raise ShapeMismatchError(f'{self.name}: dim {self.dim} not divisible by {self.heads} heads')
        if self.scale_shift < 0:
            raise ConfigError(f'scale_shift must be >= 0, got {self.scale_shift}', self.name)
        for sub in (self.q, self.k, self.v, self.proj):
            if (sub.in_dim, sub.out_dim) != (self.dim, self.dim):
                raise ShapeMismatchError(f'{sub.name}: expected {self.dim}->{self.dim}, '
                                         f'got {sub.in_dim}->{sub.out_dim}')

    @property
    def head_dim(self) -> int:
        '''features per head'''
        return self.dim // self.heads


@dataclass(frozen=True)
class ClassifierHead:
    name: str
    classes: int
    weights: QTensor
    bias: AccTensor

    def __post_init__(self):
        if len(self.weights.shape) != 2:
            raise ShapeMismatchError(f'{self.name}: weights must be [classes, dim]')
        if self.weights.shape[0] != self.classes:
            raise ShapeMismatchError(f'{self.name}: {self.weights.shape[0]} weight rows for '
                                     f'{self.classes} classes')


LayerSpec = Union[ConvBn3x3, ConvBn1x1, Linear, MaxPool2x2, Lif, IandResidual, Ssa]
WeightLayer = Union[ConvBn3x3, ConvBn1x1, Linear]


@dataclass(frozen=True)
class Block:
    '''One transformer block: SSA branch then MLP branch, both IAND residuals'''
    name: str
    ssa: IandResidual
    mlp: IandResidual

    @property
    def attention(self) -> Ssa:
        '''the Ssa layer of the attention branch'''
        return self.ssa.inner[0]


@dataclass(frozen=True)
class ModelConfig:
    '''Complete model: time steps, input shape [C, H, W], tokenizer, blocks, head'''
    time_steps: int
    input_shape: Tuple[int, int, int]
    tokenizer: Tuple[LayerSpec, ...]
    blocks: Tuple[Block, ...]
    head: ClassifierHead
    name: str = 'model'


@dataclass(frozen=True)
class OpSite:
    '''
    One executed operation in model order, with the activation shapes it sees.
    Shapes exclude the time step; maps are [C, H, W] and tokens [N, D].
    '''
    kind: str
    layer: object
    lif: Optional[Lif]
    in_shape: Tuple[int, ...]
    out_shape: Tuple[int, ...]

    @property
    def name(self) -> str:
        '''layer name'''
        return self.layer.name


OP_ENCODE = 'encode'
OP_CONV3X3 = 'conv3x3'
OP_CONV1X1 = 'conv1x1'
OP_LINEAR = 'linear'
OP_MAXPOOL = 'maxpool2x2'
OP_IAND = 'iand'
OP_ATTENTION = 'attention'
OP_HEAD = 'head'

WEIGHT_OPS = (OP_ENCODE, OP_CONV3X3, OP_CONV1X1, OP_LINEAR)


def current_scale(layer: WeightLayer, encoding: bool = False) -> int:
    '''Accumulator scale exponent of a layer's currents'''
    return layer.weights.scale_exp + (IMAGE_SCALE_EXP if encoding else 0)


class _SiteWalker:  # pylint: disable=R0903
    '''Builds the OpSite sequence while checking channel chaining'''

    def __init__(self):
        self.sites: List[OpSite] = []

    def _weighted(self, layer, lif, shape, encoding=False):
        if lif is None or not isinstance(lif, Lif):
            raise ConfigError('must be followed by a lif layer', layer.name)
        if isinstance(layer, ConvBn3x3):
            if len(shape) != 3 or shape[0] != layer.in_ch:
                raise ShapeMismatchError(f'{layer.name}: expects {layer.in_ch} channels, input is {shape}')
            out = (layer.out_ch, -(-shape[1] // layer.stride), -(-shape[2] // layer.stride))
            kind = OP_ENCODE if encoding else OP_CONV3X3
        elif isinstance(layer, ConvBn1x1):
            if len(shape) != 3 or shape[0] != layer.in_ch:
                raise ShapeMismatchError(f'{layer.name}: expects {layer.in_ch} channels, input is {shape}')
            out = (layer.out_ch,) + tuple(shape[1:])
            kind = OP_CONV1X1
        else:
            if len(shape) != 2 or shape[1] != layer.in_dim:
                raise ShapeMismatchError(f'{layer.name}: expects {layer.in_dim} features, input is {shape}')
            out = (shape[0], layer.out_dim)
            kind = OP_LINEAR
        self.sites.append(OpSite(kind, layer, lif, tuple(shape), out))
        return out

    def walk(self, layers, shape, encoding=False):
        '''Walk a layer list, returns the output shape'''
        index = 0
        while index < len(layers):
            layer = layers[index]
            if isinstance(layer, (ConvBn3x3, ConvBn1x1, Linear)):
                lif = layers[index + 1] if index + 1 < len(layers) else None
                shape = self._weighted(layer, lif, shape, encoding and index == 0)
                index += 2
                continue
            if encoding and index == 0:
                raise ConfigError('the first tokenizer layer must be the conv3x3 encoding layer', layer.name)
            if isinstance(layer, MaxPool2x2):
                if len(shape) != 3 or shape[1] % 2 or shape[2] % 2:
                    raise ShapeMismatchError(f'{layer.name}: needs an even [C, H, W] map, got {shape}')
                out = (shape[0], shape[1] // 2, shape[2] // 2)
                self.sites.append(OpSite(OP_MAXPOOL, layer, None, tuple(shape), out))
                shape = out
            elif isinstance(layer, IandResidual):
                if not layer.inner or not isinstance(layer.inner[-1], (Lif, Ssa)):
                    raise ConfigError('residual branch must end with a spiking layer', layer.name)
                inner_out = self.walk(layer.inner, shape)
                if tuple(inner_out) != tuple(shape):
                    raise ShapeMismatchError(f'{layer.name}: branch maps {shape} to {inner_out}')
                self.sites.append(OpSite(OP_IAND, layer, None, tuple(shape), tuple(shape)))
            elif isinstance(layer, Ssa):
                self._ssa(layer, shape)
            elif isinstance(layer, Lif):
                raise ConfigError('lif layer without a preceding conv or linear layer', layer.name)
            else:
                raise UnsupportedLayerError(f'unsupported layer {type(layer).__name__}')
            index += 1
        return shape

    def _ssa(self, ssa: Ssa, shape):
        if len(shape) != 2 or shape[1] != ssa.dim:
            raise ShapeMismatchError(f'{ssa.name}: expects [N, {ssa.dim}] tokens, got {shape}')
        for sub, lif in ((ssa.q, ssa.q_lif), (ssa.k, ssa.k_lif), (ssa.v, ssa.v_lif)):
            self._weighted(sub, lif, shape)
        self.sites.append(OpSite(OP_ATTENTION, ssa, ssa.attn_lif, tuple(shape), tuple(shape)))
        self._weighted(ssa.proj, ssa.proj_lif, shape)


def op_sites(cfg: ModelConfig) -> List[OpSite]:
    '''Validate the model and list its operations in execution order'''
    check_time_steps(cfg.time_steps)
    if len(cfg.input_shape) != 3:
        raise ConfigError(f'input_shape must be [C, H, W], got {cfg.input_shape}', cfg.name)
    if not cfg.tokenizer:
        raise ConfigError('tokenizer is empty', cfg.name)
    walker = _SiteWalker()
    shape = walker.walk(cfg.tokenizer, tuple(cfg.input_shape), encoding=True)
    if len(shape) != 3:
        raise ShapeMismatchError(f'tokenizer must end with a [C, H, W] map, got {shape}')
    tokens = (shape[1] * shape[2], shape[0])
    for block in cfg.blocks:
        if not isinstance(block.attention, Ssa) or len(block.ssa.inner) != 1:
            raise ConfigError('attention branch must hold exactly one ssa layer', block.name)
        tokens = walker.walk((block.ssa, block.mlp), tokens)
    if cfg.head.weights.shape[1] != tokens[1]:
        raise ShapeMismatchError(f'{cfg.head.name}: weights {cfg.head.weights.shape} do not match '
                                 f'{tokens[1]} features')
    walker.sites.append(OpSite(OP_HEAD, cfg.head, None, tokens, (cfg.head.classes,)))
    logger.debug('Model %s validated: %d operations', cfg.name, len(walker.sites))
    return walker.sites


def validate(cfg: ModelConfig) -> ModelConfig:
    '''Raise on inconsistent chaining, returns cfg unchanged'''
    op_sites(cfg)
    return cfg


def token_shape(cfg: ModelConfig) -> Tuple[int, int]:
    '''[N, D] of the token sequence leaving the tokenizer'''
    sites = op_sites(cfg)
    return next(site.in_shape for site in sites if site.kind == OP_HEAD)


def mlp_layers(prefix: str, dim: int, fc1: Tuple[QTensor, AccTensor], fc2: Tuple[QTensor, AccTensor],
               lif1: LifParams, lif2: LifParams) -> Tuple[LayerSpec, ...]:
    '''Linear(D->rD), LIF, Linear(rD->D), LIF'''
    hidden = fc1[0].shape[0]
    return (Linear(f'{prefix}.fc1', dim, hidden, *fc1), Lif(f'{prefix}.fc1_lif', lif1),
            Linear(f'{prefix}.fc2', hidden, dim, *fc2), Lif(f'{prefix}.fc2_lif', lif2))


def weight_layers(cfg: ModelConfig) -> List[Union[WeightLayer, ClassifierHead]]:
    '''Every layer that owns a weight tensor, in model order'''
    layers = [site.layer for site in op_sites(cfg) if site.kind in WEIGHT_OPS]
    return layers + [cfg.head]


@dataclass
class ModelSummary:
    '''Shape-level description for reports'''
    name: str
    time_steps: int
    input_shape: Tuple[int, ...]
    tokens: Tuple[int, ...]
    blocks: int
    classes: int
    parameters: int = 0
    layers: List[str] = field(default_factory=list)


def summarize(cfg: ModelConfig) -> ModelSummary:
    '''ModelSummary of a validated config'''
    sites = op_sites(cfg)
    params = sum(int(layer.weights.data.size) for layer in weight_layers(cfg))
    return ModelSummary(name=cfg.name, time_steps=cfg.time_steps, input_shape=tuple(cfg.input_shape),
                        tokens=sites[-1].in_shape, blocks=len(cfg.blocks), classes=cfg.head.classes,
                        parameters=params, layers=[site.name for site in sites])
