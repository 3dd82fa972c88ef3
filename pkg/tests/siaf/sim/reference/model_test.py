'''End-to-end golden inference'''
import dataclasses
import os

import numpy as np
import pytest

from siaf.sim.errors import ConfigError, ShapeMismatchError, WeightFileError
from siaf.sim.reference.model import (RESIDUAL_ADD, ModelWalker, ReferenceBackend, iand_residual,
                                      model_forward, non_spike_entries, ssa, tokenizer_forward)
from siaf.sim.reference.model_file import dump_model, load_model
from siaf.sim.reference.network import (OP_IAND, ClassifierHead, ConvBn3x3, IandResidual, Lif, op_sites,
                                        summarize, token_shape)
from siaf.sim.reference.lif import LifParams
from siaf.sim.tensor import AccTensor, ByteImage, QTensor, SpikeTensor
from siaf.sim.tensor.image_file import random_image


@pytest.mark.parametrize('seed', range(100))
def test_all_spike_between_layers(make_model, seed):
    cfg = make_model('tiny', seed)
    _, trace = model_forward(random_image(cfg.input_shape, seed), cfg)
    assert non_spike_entries(trace) == []


def test_addition_residual_leaves_spike_domain(make_model):
    offenders = []
    for seed in range(10):
        cfg = make_model('tiny', seed)
        _, trace = model_forward(random_image(cfg.input_shape, seed), cfg, residual=RESIDUAL_ADD)
        offenders.extend(non_spike_entries(trace))
    assert offenders


def test_zero_image_gives_head_bias(make_model):
    cfg = make_model('tiny', 3, bias_bound=0)
    bias = AccTensor(np.arange(10) - 5, cfg.head.bias.scale_exp)
    cfg = dataclasses.replace(cfg, head=ClassifierHead('head', 10, cfg.head.weights, bias))
    logits, trace = model_forward(ByteImage(np.zeros(cfg.input_shape)), cfg)
    assert logits == bias
    assert trace.find('tok.conv0').output.count_ones() == 0


def test_forward_is_deterministic(tiny_model):
    img = random_image(tiny_model.input_shape, 11)
    first, _ = model_forward(img, tiny_model)
    second, _ = model_forward(img, tiny_model)
    assert first == second


def test_trace_follows_op_sites(tiny_model):
    _, trace = model_forward(random_image(tiny_model.input_shape, 0), tiny_model)
    names = [entry.name for entry in trace]
    sites = [site.name for site in op_sites(tiny_model)]
    assert names[0] == 'tok.conv0'
    assert trace[0].kind == 'Encode'
    assert trace[-1].kind == 'ClassifierHead'
    assert 'block0.ssa.attn' in names
    # op sites name the Ssa layer where the trace names the attention product
    assert len(names) == len(sites)


def test_image_shape_must_match(tiny_model):
    with pytest.raises(ShapeMismatchError):
        model_forward(ByteImage(np.zeros((3, 4, 4))), tiny_model)


def test_unknown_residual_mode():
    with pytest.raises(ConfigError):
        ModelWalker(ReferenceBackend(), residual='mul')


def test_tokenizer_output_shape(tiny_model):
    spikes = tokenizer_forward(random_image(tiny_model.input_shape, 1), tiny_model)
    assert spikes.shape == (4, 16, 2, 2)
    assert token_shape(tiny_model) == (4, 16)


def _identity_conv(name, channels, bias):
    weights = np.zeros((channels, channels, 3, 3), dtype=np.int64)
    for c in range(channels):
        weights[c, c, 1, 1] = 1
    return ConvBn3x3(name, channels, channels, QTensor(weights, 0), AccTensor(np.full(channels, bias), 0))


def test_iand_residual_with_identity_branch_is_silent():
    bits = np.zeros((1, 2, 2, 2), dtype=np.uint8)
    bits[0, 0, 1, 1] = 1
    spec = IandResidual('r', (_identity_conv('r.conv', 2, 0), Lif('r.lif', LifParams(1))))
    # branch reproduces x, so x AND NOT x is empty
    assert iand_residual(SpikeTensor.from_bits(bits), spec).count_ones() == 0


def test_iand_residual_with_silent_branch_is_identity():
    bits = np.ones((1, 2, 2, 2), dtype=np.uint8)
    spec = IandResidual('r', (_identity_conv('r.conv', 2, -5), Lif('r.lif', LifParams(1))))
    x = SpikeTensor.from_bits(bits)
    assert iand_residual(x, spec) == x


def test_ssa_preserves_token_shape(tiny_model):
    attention = tiny_model.blocks[0].attention
    rng = np.random.default_rng(2)
    x = SpikeTensor.from_bits((rng.random((4, 4, 16)) < 0.4).astype(np.uint8))
    out = ssa(x, attention)
    assert out.shape == (4, 4, 16)
    assert ssa(SpikeTensor.zeros((4, 4, 16)), attention) == ssa(SpikeTensor.zeros((4, 4, 16)), attention)


def test_summary(tiny_model):
    summary = summarize(tiny_model)
    assert summary.time_steps == 4
    assert summary.tokens == (4, 16)
    assert summary.classes == 10
    assert summary.layers[0] == 'tok.conv0'
    assert summary.parameters > 0


def test_model_file_round_trip(tmpdir, tiny_model):
    path = os.path.join(str(tmpdir), 'tiny.yaml')
    weights_path = dump_model(tiny_model, path)
    assert os.path.exists(weights_path)
    loaded, sections = load_model(path)
    assert sections == {}
    assert loaded == tiny_model
    img = random_image(tiny_model.input_shape, 5)
    assert model_forward(img, loaded)[0] == model_forward(img, tiny_model)[0]


def test_model_file_time_step_override_and_sections(tmpdir, tiny_model):
    path = os.path.join(str(tmpdir), 'tiny.yaml')
    dump_model(tiny_model, path, extra={'schedule': 'serial', 'accelerator': {'pe_rows': 4}})
    loaded, sections = load_model(path, time_steps=2)
    assert loaded.time_steps == 2
    assert sections == {'schedule': 'serial', 'accelerator': {'pe_rows': 4}}


def test_model_file_missing_tensor(tmpdir, tiny_model):
    path = os.path.join(str(tmpdir), 'tiny.yaml')
    dump_model(tiny_model, path)
    other = os.path.join(str(tmpdir), 'other.yaml')
    dump_model(dataclasses.replace(tiny_model, blocks=()), other)
    with pytest.raises(ConfigError) as err:
        load_model(path, weights_path=os.path.join(str(tmpdir), 'other.siaf'))
    assert 'block0' in str(err.value)


def test_model_file_missing_weights(tmpdir, tiny_model):
    path = os.path.join(str(tmpdir), 'tiny.yaml')
    dump_model(tiny_model, path)
    os.remove(os.path.join(str(tmpdir), 'tiny.siaf'))
    with pytest.raises(WeightFileError):
        load_model(path)


def test_attention_residual_is_accepted(tiny_model):
    iand_sites = [site.name for site in op_sites(tiny_model) if site.kind == OP_IAND]
    assert iand_sites == ['tok.rpe_iand', 'block0.ssa_iand', 'block0.mlp_iand']


def test_residual_branch_must_end_spiking(tiny_model):
    block = tiny_model.blocks[0]
    broken = dataclasses.replace(block, ssa=IandResidual(block.ssa.name, (block.mlp.inner[0],)))
    with pytest.raises(ConfigError) as err:
        op_sites(dataclasses.replace(tiny_model, blocks=(broken,)))
    assert err.value.location == 'block0.ssa_iand'
