'''
Textual model configuration.

A YAML document names the layers and their shapes; weights and biases live in
a SIAF tensor file referenced by the ``weights`` key (relative to the YAML
file). Tensor names default to ``<layer>.weight`` and ``<layer>.bias``. LIF
thresholds default to the 0.5 threshold expressed in the preceding layer's
accumulator scale.
'''
import logging
import os
from contextlib import contextmanager
from typing import Dict, Iterator, List, Optional, Tuple

import yaml

from siaf.sim.errors import ConfigError, SiafError, WeightFileError
from siaf.sim.reference.lif import DEFAULT_LEAK_SHIFT, LifParams, threshold_for_scale
from siaf.sim.reference.network import (DEFAULT_SCALE_SHIFT, Block, ClassifierHead, ConvBn1x1,
                                        ConvBn3x3, IandResidual, Lif, Linear, MaxPool2x2,
                                        ModelConfig, Ssa, validate)
from siaf.sim.tensor import IMAGE_SCALE_EXP, AccTensor, QTensor
from siaf.sim.tensor.siaf_file import read_tensors, write_tensors

logger = logging.getLogger(__name__)  # pylint: disable=C0103

# sections of a model file that configure the simulator rather than the model
SIM_SECTIONS = ('accelerator', 'memory', 'energy', 'tracing', 'schedule')

KIND_CONV3X3 = 'conv3x3'
KIND_CONV1X1 = 'conv1x1'
KIND_LINEAR = 'linear'
KIND_MAXPOOL = 'maxpool2x2'
KIND_LIF = 'lif'
KIND_IAND_RESIDUAL = 'iand_residual'

SSA_PARTS = ('q', 'k', 'v', 'proj')


def _require(entry: dict, key: str, location: str):
    if not isinstance(entry, dict) or key not in entry:
        raise ConfigError(f'missing key {key!r}', location)
    return entry[key]


@contextmanager
def _parsing(location: str) -> Iterator[None]:
    '''values of the wrong type or range surface as ConfigError at location'''
    try:
        yield
    except SiafError:
        raise
    except (TypeError, ValueError, KeyError, AttributeError) as err:
        raise ConfigError(f'malformed value: {err}', location) from err


class _Builder:
    '''Turns parsed YAML into layer specs, pulling tensors by name'''

    def __init__(self, tensors: Dict[str, object], leak_shift: int, weights_path: str):
        self.tensors = tensors
        self.leak_shift = leak_shift
        self.weights_path = weights_path
        self.last_scale = 0

    def tensor(self, name: str, expected_type, location: str):
        '''named tensor of the expected type'''
        if name not in self.tensors:
            raise ConfigError(f'tensor {name!r} not found in {self.weights_path}', location)
        tensor = self.tensors[name]
        if not isinstance(tensor, expected_type):
            raise ConfigError(f'tensor {name!r} is {type(tensor).__name__}, '
                              f'expected {expected_type.__name__}', location)
        return tensor

    def weights(self, entry: dict, name: str, location: str) -> Tuple[QTensor, AccTensor]:
        '''weight and bias tensors of a layer entry'''
        with _parsing(location):
            weights = self.tensor(entry.get('weight', f'{name}.weight'), QTensor, location)
            bias = self.tensor(entry.get('bias', f'{name}.bias'), AccTensor, location)
        return weights, bias

    def lif(self, entry: dict, name: str, location: str) -> Lif:
        '''Lif layer, threshold derived from the preceding layer scale when absent'''
        with _parsing(location):
            threshold = entry.get('threshold', threshold_for_scale(self.last_scale))
            return Lif(name, LifParams(int(threshold), int(entry.get('leak_shift', self.leak_shift))))

    def layer(self, entry: dict, location: str, encoding: bool = False):
        '''one layer entry'''
        kind = _require(entry, 'kind', location)
        name = _require(entry, 'name', location)
        with _parsing(location):
            if kind == KIND_CONV3X3:
                weights, bias = self.weights(entry, name, location)
                self.last_scale = weights.scale_exp + (IMAGE_SCALE_EXP if encoding else 0)
                return ConvBn3x3(name, int(_require(entry, 'in_ch', location)),
                                 int(_require(entry, 'out_ch', location)), weights, bias,
                                 int(entry.get('stride', 1)))
            if kind == KIND_CONV1X1:
                weights, bias = self.weights(entry, name, location)
                self.last_scale = weights.scale_exp
                return ConvBn1x1(name, int(_require(entry, 'in_ch', location)),
                                 int(_require(entry, 'out_ch', location)), weights, bias)
            if kind == KIND_LINEAR:
                weights, bias = self.weights(entry, name, location)
                self.last_scale = weights.scale_exp
                return Linear(name, int(_require(entry, 'in_dim', location)),
                              int(_require(entry, 'out_dim', location)), weights, bias)
        if kind == KIND_LIF:
            return self.lif(entry, name, location)
        if kind == KIND_MAXPOOL:
            return MaxPool2x2(name)
        if kind == KIND_IAND_RESIDUAL:
            inner = self.layers(_require(entry, 'inner', location), f'{location}.inner')
            return IandResidual(name, inner)
        raise ConfigError(f'unknown layer kind {kind!r}', location)

    def layers(self, entries, location: str, encoding: bool = False) -> tuple:
        '''a layer list'''
        if not isinstance(entries, list):
            raise ConfigError('expected a list of layers', location)
        return tuple(self.layer(entry, f'{location}[{i}]', encoding and i == 0)
                     for i, entry in enumerate(entries))

    def ssa(self, entry: dict, location: str) -> Ssa:
        '''Ssa layer with q/k/v/proj linears'''
        name = _require(entry, 'name', location)
        with _parsing(location):
            dim = int(_require(entry, 'dim', location))
            thresholds = entry.get('thresholds', {})
            linears, lifs = {}, {}
            for part in SSA_PARTS:
                part_entry = entry.get(part, {})
                weights, bias = self.weights(part_entry, f'{name}.{part}', f'{location}.{part}')
                self.last_scale = weights.scale_exp
                linears[part] = Linear(f'{name}.{part}', dim, dim, weights, bias)
                lifs[part] = self.lif({'threshold': thresholds[part]} if part in thresholds else {},
                                      f'{name}.{part}_lif', f'{location}.thresholds.{part}')
            self.last_scale = 0
            attn_lif = self.lif({'threshold': thresholds['attn']} if 'attn' in thresholds else {},
                                f'{name}.attn_lif', f'{location}.thresholds.attn')
            return Ssa(name, dim, int(_require(entry, 'heads', location)), linears['q'], linears['k'],
                       linears['v'], linears['proj'], lifs['q'], lifs['k'], lifs['v'], attn_lif,
                       lifs['proj'], int(entry.get('scale_shift', DEFAULT_SCALE_SHIFT)))


def build_model(doc: dict, tensors: Dict[str, object], weights_path: str = '',
                time_steps: Optional[int] = None) -> ModelConfig:
    '''ModelConfig from a parsed document and its tensors'''
    if not isinstance(doc, dict):
        raise ConfigError('model file must hold a mapping')
    with _parsing('leak_shift'):
        builder = _Builder(tensors, int(doc.get('leak_shift', DEFAULT_LEAK_SHIFT)), weights_path)
    tokenizer = builder.layers(_require(doc, 'tokenizer', 'model'), 'tokenizer', encoding=True)
    entries = doc.get('blocks', [])
    if not isinstance(entries, list):
        raise ConfigError('expected a list of blocks', 'blocks')
    blocks: List[Block] = []
    for i, entry in enumerate(entries):
        location = f'blocks[{i}]'
        name = _require(entry, 'name', location)
        attn = builder.ssa(_require(entry, 'ssa', location), f'{location}.ssa')
        mlp = builder.layers(_require(entry, 'mlp', location), f'{location}.mlp')
        blocks.append(Block(name, IandResidual(f'{name}.ssa_iand', (attn,)),
                            IandResidual(f'{name}.mlp_iand', mlp)))
    head_entry = _require(doc, 'head', 'model')
    head_name = _require(head_entry, 'name', 'head')
    weights, bias = builder.weights(head_entry, head_name, 'head')
    with _parsing('head'):
        head = ClassifierHead(head_name, int(_require(head_entry, 'classes', 'head')), weights, bias)
    with _parsing('time_steps'):
        steps = int(time_steps or _require(doc, 'time_steps', 'model'))
    with _parsing('input_shape'):
        input_shape = tuple(int(d) for d in _require(doc, 'input_shape', 'model'))
    with _parsing('model'):
        cfg = ModelConfig(time_steps=steps, input_shape=input_shape, tokenizer=tokenizer,
                          blocks=tuple(blocks), head=head, name=str(doc.get('name', 'model')))
        return validate(cfg)


def load_model(path: str, weights_path: Optional[str] = None,
               time_steps: Optional[int] = None) -> Tuple[ModelConfig, dict]:
    '''
    Load a model file. Returns the ModelConfig and the simulator sections the
    file carries (accelerator, memory, energy, tracing, schedule).
    '''
    try:
        with open(path, encoding='utf-8') as config_file:
            doc = yaml.safe_load(config_file)
    except yaml.YAMLError as err:
        raise ConfigError(f'cannot parse YAML: {err}', path) from err
    if not isinstance(doc, dict):
        raise ConfigError('model file must hold a mapping', path)
    if weights_path is None:
        with _parsing('weights'):
            weights_path = os.path.join(os.path.dirname(path), _require(doc, 'weights', path))
    tensors = read_tensors(weights_path)
    logger.debug('Building model from %s with weights %s', path, weights_path)
    cfg = build_model(doc, tensors, weights_path, time_steps)
    return cfg, {key: doc[key] for key in SIM_SECTIONS if key in doc}


def _lif_entry(lif: Lif) -> dict:
    return {'kind': KIND_LIF, 'name': lif.name, 'threshold': lif.params.threshold_int,
            'leak_shift': lif.params.leak_shift}


def _layer_entries(layers, tensors: dict) -> list:
    entries = []
    for layer in layers:
        if isinstance(layer, ConvBn3x3):
            entries.append({'kind': KIND_CONV3X3, 'name': layer.name, 'in_ch': layer.in_ch,
                            'out_ch': layer.out_ch, 'stride': layer.stride})
        elif isinstance(layer, ConvBn1x1):
            entries.append({'kind': KIND_CONV1X1, 'name': layer.name, 'in_ch': layer.in_ch,
                            'out_ch': layer.out_ch})
        elif isinstance(layer, Linear):
            entries.append({'kind': KIND_LINEAR, 'name': layer.name, 'in_dim': layer.in_dim,
                            'out_dim': layer.out_dim})
        elif isinstance(layer, Lif):
            entries.append(_lif_entry(layer))
        elif isinstance(layer, MaxPool2x2):
            entries.append({'kind': KIND_MAXPOOL, 'name': layer.name})
        elif isinstance(layer, IandResidual):
            entries.append({'kind': KIND_IAND_RESIDUAL, 'name': layer.name,
                            'inner': _layer_entries(layer.inner, tensors)})
        if isinstance(layer, (ConvBn3x3, ConvBn1x1, Linear)):
            tensors[f'{layer.name}.weight'] = layer.weights
            tensors[f'{layer.name}.bias'] = layer.bias
    return entries


def dump_model(cfg: ModelConfig, path: str, weights_file: Optional[str] = None,
               extra: Optional[dict] = None) -> str:
    '''Write the YAML model file and its SIAF weights, returns the weights path'''
    weights_file = weights_file or os.path.splitext(os.path.basename(path))[0] + '.siaf'
    tensors: Dict[str, object] = {}
    blocks = []
    for block in cfg.blocks:
        attn = block.attention
        for part in SSA_PARTS:
            linear = getattr(attn, part)
            tensors[f'{linear.name}.weight'] = linear.weights
            tensors[f'{linear.name}.bias'] = linear.bias
        thresholds = {part: getattr(attn, f'{part}_lif').params.threshold_int
                      for part in SSA_PARTS + ('attn',)}
        blocks.append({'name': block.name,
                       'ssa': {'name': attn.name, 'dim': attn.dim, 'heads': attn.heads,
                               'scale_shift': attn.scale_shift, 'thresholds': thresholds},
                       'mlp': _layer_entries(block.mlp.inner, tensors)})
    tokenizer = _layer_entries(cfg.tokenizer, tensors)
    tensors[f'{cfg.head.name}.weight'] = cfg.head.weights
    tensors[f'{cfg.head.name}.bias'] = cfg.head.bias
    doc = {'name': cfg.name, 'time_steps': cfg.time_steps, 'input_shape': list(cfg.input_shape),
           'weights': weights_file, 'tokenizer': tokenizer, 'blocks': blocks,
           'head': {'name': cfg.head.name, 'classes': cfg.head.classes}}
    doc.update(extra or {})
    with open(path, 'w', encoding='utf-8') as config_file:
        yaml.safe_dump(doc, config_file, sort_keys=False)
    weights_path = os.path.join(os.path.dirname(path), weights_file)
    try:
        write_tensors(weights_path, tensors)
    except OSError as err:
        raise WeightFileError(f'cannot write weights: {err}', 0, weights_path) from err
    logger.debug('Wrote model %s to %s and %s', cfg.name, path, weights_path)
    return weights_path
