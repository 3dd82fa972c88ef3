'''Fabric execution against the golden model'''
import dataclasses

import numpy as np
import pytest

from siaf.sim import Simulator
from siaf.sim.accel import AccelConfig
from siaf.sim.config import SimConfig
from siaf.sim.fault import FlipWeightSign
from siaf.sim.reference.model import model_forward
from siaf.sim.reference.network import ClassifierHead
from siaf.sim.scheduler import PARALLEL, SERIAL, make_schedule
from siaf.sim.scheduler.compiler import compile_model
from siaf.sim.scheduler.executor import execute, first_mismatch
from siaf.sim.tensor import AccTensor, ByteImage
from siaf.sim.tensor.image_file import random_image

SWEEP_CASES = [(size_class, kind, time_steps) for size_class in ('tiny', 'small')
               for kind in (SERIAL, PARALLEL) for time_steps in (1, 2, 4)]


@pytest.mark.parametrize('kind', [SERIAL, PARALLEL])
@pytest.mark.parametrize('seed', [0, 1, 2])
def test_fabric_matches_golden(simulator, make_model, kind, seed):
    cfg = make_model('tiny', seed)
    img = random_image(cfg.input_shape, seed)
    result = simulator.verify(cfg, img, make_schedule(kind, 4))
    assert result.ok, result.mismatch.describe()
    assert result.layers_compared == len(model_forward(img, cfg)[1])
    assert result.report.verification['match'] is True


# every size class, schedule and T combination, each over several seeds
@pytest.mark.parametrize('seed', range(100))
def test_fabric_matches_golden_sweep(simulator, make_model, seed):
    size_class, kind, time_steps = SWEEP_CASES[seed % len(SWEEP_CASES)]
    cfg = make_model(size_class, seed, time_steps)
    img = random_image(cfg.input_shape, seed)
    result = simulator.verify(cfg, img, make_schedule(kind, time_steps))
    assert result.ok, result.mismatch.describe()


def test_small_model_logits(simulator, make_model):
    cfg = make_model('small', 0)
    img = random_image(cfg.input_shape, 0)
    logits, _, _ = simulator.run(cfg, img)
    assert logits == model_forward(img, cfg)[0]


def test_zero_image_gives_head_bias(simulator, make_model):
    cfg = make_model('tiny', 5, bias_bound=0)
    bias = AccTensor(np.arange(10) * 3, cfg.head.bias.scale_exp)
    cfg = dataclasses.replace(cfg, head=ClassifierHead('head', 10, cfg.head.weights, bias))
    logits, _, report = simulator.run(cfg, ByteImage(np.zeros(cfg.input_shape)))
    assert logits == bias
    assert report.spike_ops == 0


def test_membrane_traffic_only_under_serial(simulator, tiny_model):
    img = random_image(tiny_model.input_shape, 0)
    _, _, serial = simulator.run(tiny_model, img, make_schedule(SERIAL, 4))
    _, _, parallel = simulator.run(tiny_model, img, make_schedule(PARALLEL, 4))
    assert serial.traffic.banks['membrane'].writes > 0
    assert serial.traffic.banks['membrane'].reads == serial.traffic.banks['membrane'].writes
    assert parallel.traffic.banks['membrane'].writes == 0
    assert parallel.membrane_bytes == 0


def test_report_totals_reconcile(simulator, tiny_model):
    img = random_image(tiny_model.input_shape, 1)
    plans = simulator.compile(tiny_model)
    _, _, report = simulator.run(tiny_model, img)
    assert report.total_cycles == sum(plan.total_cycles(True) for plan in plans)
    assert report.weight_reads == sum(layer.weight_reads for layer in report.layers)
    assert report.spike_ops == sum(layer.pe_active_ops for layer in report.layers)
    assert [layer.name for layer in report.layers] == [plan.name for plan in plans]
    assert 0.0 < report.utilization <= 1.0
    document = report.to_dict()
    assert document['schema_version'] == 1
    assert document['cycles']['total'] == report.total_cycles
    assert document['energy']['total_pj'] > 0
    assert document['energy']['comparable_with_silicon'] is False


def test_report_is_deterministic(simulator, tiny_model):
    img = random_image(tiny_model.input_shape, 2)
    first = simulator.run(tiny_model, img)[2].to_dict()
    second = simulator.run(tiny_model, img)[2].to_dict()
    assert first == second


def test_gating_off_counts_every_pe(tiny_model):
    img = random_image(tiny_model.input_shape, 0)
    gated = Simulator(SimConfig(), faults=[]).run(tiny_model, img)[2]
    dense = Simulator(SimConfig(overrides={'accelerator': {'sparsity_gating': False}}), faults=[])
    report = dense.run(tiny_model, img)[2]
    assert report.spike_ops > gated.spike_ops
    assert report.total_cycles == gated.total_cycles


def test_weight_fault_reports_first_mismatch(make_model):
    cfg = make_model('tiny', 0)
    img = random_image(cfg.input_shape, 0)
    result = Simulator(SimConfig(), faults=[FlipWeightSign('tok.conv0')]).verify(cfg, img)
    assert not result.ok
    assert result.mismatch.layer == 'tok.conv0'
    assert result.mismatch.field == 'currents'
    assert result.mismatch.describe().startswith('layer=tok.conv0 field=currents t=0 index=[')
    assert result.report.verification['mismatch']['layer'] == 'tok.conv0'


def test_fault_on_later_layer(make_model):
    cfg = make_model('tiny', 1)
    img = random_image(cfg.input_shape, 1)
    result = Simulator(SimConfig(), faults=[FlipWeightSign('tok.conv1')]).verify(cfg, img)
    assert result.mismatch.layer == 'tok.conv1'


def test_identical_traces_have_no_mismatch(tiny_model):
    img = random_image(tiny_model.input_shape, 0)
    _, golden = model_forward(img, tiny_model)
    assert first_mismatch(golden, golden) is None


def test_execute_without_simulator(tiny_model):
    schedule = make_schedule(SERIAL, 4)
    plans = compile_model(tiny_model, AccelConfig(), schedule)
    img = random_image(tiny_model.input_shape, 3)
    logits, trace, report = execute(plans, img, tiny_model, AccelConfig(), schedule)
    assert logits == model_forward(img, tiny_model)[0]
    assert trace[0].name == 'tok.conv0'
    assert report.schedule == {'kind': 'serial', 'time_steps': 4}


def test_spans_per_layer(simulator, exporter, tiny_model):
    simulator.run(tiny_model, random_image(tiny_model.input_shape, 0))
    spans = exporter.get_finished_spans()
    names = [span.name for span in spans]
    assert 'siaf.run' in names
    assert 'siaf.layer tok.conv0' in names
    assert 'siaf.layer block0.ssa.attn.qk' in names
    run_span = next(span for span in spans if span.name == 'siaf.run')
    assert run_span.attributes['siaf.schedule'] == 'parallel'
    assert run_span.attributes['siaf.time_steps'] == 4
    conv_span = next(span for span in spans if span.name == 'siaf.layer tok.conv0')
    assert conv_span.attributes['siaf.layer.kind'] == 'encode'
    assert conv_span.parent.span_id == run_span.context.span_id
    exporter.clear()
