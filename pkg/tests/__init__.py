import numpy as np

from opentelemetry.sdk.trace.export import SimpleSpanProcessor
from opentelemetry.sdk.trace.export.in_memory_span_exporter import InMemorySpanExporter


def configure_inmemory_span_exporter(simulator):
    memoryExporter = InMemorySpanExporter()
    simpleExportSpanProcessor = SimpleSpanProcessor(memoryExporter)
    simulator.register_processor(simpleExportSpanProcessor)
    return memoryExporter


def scalar_lif(currents, threshold, leak_shift=2):
    '''one neuron, plain python ints'''
    membrane = 0
    spikes = []
    for current in currents:
        membrane = (membrane >> leak_shift) + int(current)
        if membrane >= threshold:
            spikes.append(1)
            membrane = 0
        else:
            spikes.append(0)
    return spikes, membrane


def conv3x3_loop(x, weights, bias, stride=1):
    '''[T, C, H, W] values, [OC, C, 3, 3] weights, padding 1'''
    steps, channels, height, width = x.shape
    out_ch = weights.shape[0]
    out_h, out_w = -(-height // stride), -(-width // stride)
    out = np.zeros((steps, out_ch, out_h, out_w), dtype=np.int64)
    for t in range(steps):
        for oc in range(out_ch):
            for oy in range(out_h):
                for ox in range(out_w):
                    total = int(bias[oc])
                    for ic in range(channels):
                        for ky in range(3):
                            for kx in range(3):
                                y, x_ = oy * stride + ky - 1, ox * stride + kx - 1
                                if 0 <= y < height and 0 <= x_ < width:
                                    total += int(weights[oc, ic, ky, kx]) * int(x[t, ic, y, x_])
                    out[t, oc, oy, ox] = total
    return out


def linear_loop(x, weights, bias):
    '''[T, N, D] values, [O, D] weights'''
    steps, tokens, dim = x.shape
    out = np.zeros((steps, tokens, weights.shape[0]), dtype=np.int64)
    for t in range(steps):
        for n in range(tokens):
            for o in range(weights.shape[0]):
                out[t, n, o] = int(bias[o]) + sum(int(weights[o, d]) * int(x[t, n, d]) for d in range(dim))
    return out


def random_bits(rng, shape, density=0.3):
    '''0/1 array with the given fraction of ones on average'''
    return (rng.random(shape) < density).astype(np.uint8)
