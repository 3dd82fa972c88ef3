'''Random test models by size class'''
import logging
import os
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from siaf.sim.errors import ConfigError
from siaf.sim.reference.lif import LifParams, threshold_for_scale
from siaf.sim.reference.model_file import dump_model
from siaf.sim.reference.network import (MLP_RATIO, Block, ClassifierHead, ConvBn3x3, IandResidual, Lif,
                                        Linear, MaxPool2x2, ModelConfig, Ssa, mlp_layers, validate)
from siaf.sim.tensor import IMAGE_SCALE_EXP, AccTensor, QTensor

logger = logging.getLogger(__name__)  # pylint: disable=C0103

WEIGHT_SCALE_EXP = -6
WEIGHT_BOUND = 64
BIAS_BOUND = 16


@dataclass(frozen=True)
class SizeClass:
    input_shape: Tuple[int, int, int]
    channels: Tuple[int, int, int, int]
    blocks: int
    heads: int
    classes: int = 10

    @property
    def dim(self) -> int:
        '''token width, the last tokenizer stage'''
        return self.channels[-1]


SIZE_CLASSES = {
    'tiny': SizeClass((3, 8, 8), (2, 4, 8, 16), blocks=1, heads=2),
    'small': SizeClass((3, 16, 16), (4, 8, 16, 32), blocks=2, heads=2),
    # shapes of the 8-384 model, weights random
    'paper-384': SizeClass((3, 32, 32), (48, 96, 192, 384), blocks=8, heads=12),
}


class _Factory:
    '''Draws every tensor from one generator, in model order'''

    def __init__(self, seed: int, bias_bound: int):
        self.rng = np.random.default_rng(seed)
        self.bias_bound = bias_bound

    def tensors(self, shape, out: int) -> Tuple[QTensor, AccTensor]:
        '''int8 weights and a bias at the same scale'''
        weights = self.rng.integers(-WEIGHT_BOUND, WEIGHT_BOUND + 1, size=shape)
        bias = self.rng.integers(-self.bias_bound, self.bias_bound + 1, size=out) if self.bias_bound \
            else np.zeros(out, dtype=np.int64)
        return QTensor(weights, WEIGHT_SCALE_EXP), AccTensor(bias, WEIGHT_SCALE_EXP)

    def conv(self, name: str, in_ch: int, out_ch: int, encoding: bool = False) -> Tuple[ConvBn3x3, Lif]:
        '''ConvBN3x3 and its LIF'''
        weights, bias = self.tensors((out_ch, in_ch, 3, 3), out_ch)
        if encoding:
            # bias lives in the image-scaled accumulator
            bias = AccTensor(bias.wide(), WEIGHT_SCALE_EXP + IMAGE_SCALE_EXP)
        scale = WEIGHT_SCALE_EXP + (IMAGE_SCALE_EXP if encoding else 0)
        return (ConvBn3x3(name, in_ch, out_ch, weights, bias),
                Lif(f'{name}_lif', LifParams(threshold_for_scale(scale))))

    def linear(self, name: str, in_dim: int, out_dim: int) -> Linear:
        '''token-wise linear'''
        return Linear(name, in_dim, out_dim, *self.tensors((out_dim, in_dim), out_dim))


def _tokenizer(factory: _Factory, size: SizeClass) -> tuple:
    c1, c2, c3, c4 = size.channels
    layers = []
    layers.extend(factory.conv('tok.conv0', size.input_shape[0], c1, encoding=True))
    layers.extend(factory.conv('tok.conv1', c1, c2))
    layers.append(MaxPool2x2('tok.pool1'))
    layers.extend(factory.conv('tok.conv2', c2, c3))
    layers.extend(factory.conv('tok.conv3', c3, c4))
    layers.append(MaxPool2x2('tok.pool3'))
    # relative position embedding
    layers.append(IandResidual('tok.rpe_iand', factory.conv('tok.rpe', c4, c4)))
    return tuple(layers)


def _block(factory: _Factory, index: int, size: SizeClass) -> Block:
    name = f'block{index}'
    dim = size.dim
    ssa_name = f'{name}.ssa'
    linear_threshold = LifParams(threshold_for_scale(WEIGHT_SCALE_EXP))
    parts = {part: factory.linear(f'{ssa_name}.{part}', dim, dim) for part in ('q', 'k', 'v', 'proj')}
    attention = Ssa(ssa_name, dim, size.heads, parts['q'], parts['k'], parts['v'], parts['proj'],
                    Lif(f'{ssa_name}.q_lif', linear_threshold), Lif(f'{ssa_name}.k_lif', linear_threshold),
                    Lif(f'{ssa_name}.v_lif', linear_threshold),
                    Lif(f'{ssa_name}.attn_lif', LifParams(threshold_for_scale(0))),
                    Lif(f'{ssa_name}.proj_lif', linear_threshold))
    hidden = MLP_RATIO * dim
    mlp = mlp_layers(f'{name}.mlp', dim, factory.tensors((hidden, dim), hidden),
                     factory.tensors((dim, hidden), dim), linear_threshold, linear_threshold)
    return Block(name, IandResidual(f'{name}.ssa_iand', (attention,)), IandResidual(f'{name}.mlp_iand', mlp))


def generate(size_class: str, seed: int, time_steps: int = 4, bias_bound: int = BIAS_BOUND) -> ModelConfig:
    '''Random model of a size class; the same seed always yields the same weights'''
    if size_class not in SIZE_CLASSES:
        raise ConfigError(f'unknown size class {size_class!r}, expected one of {sorted(SIZE_CLASSES)}',
                          'size_class')
    size = SIZE_CLASSES[size_class]
    factory = _Factory(seed, bias_bound)
    tokenizer = _tokenizer(factory, size)
    blocks = tuple(_block(factory, i, size) for i in range(size.blocks))
    head = ClassifierHead('head', size.classes, *factory.tensors((size.classes, size.dim), size.classes))
    cfg = ModelConfig(time_steps=time_steps, input_shape=size.input_shape, tokenizer=tokenizer,
                      blocks=blocks, head=head, name=f'{size_class}-s{seed}')
    logger.debug('Generated %s model with seed %d', size_class, seed)
    return validate(cfg)


def write_model(cfg: ModelConfig, out_dir: str, stem: Optional[str] = None) -> Tuple[str, str]:
    '''YAML model file plus SIAF weights in out_dir, returns both paths'''
    os.makedirs(out_dir, exist_ok=True)
    config_path = os.path.join(out_dir, f'{stem or cfg.name}.yaml')
    weights_path = dump_model(cfg, config_path)
    return config_path, weights_path
