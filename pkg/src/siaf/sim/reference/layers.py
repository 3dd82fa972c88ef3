'''
Naive integer layer arithmetic.

Every op works on whole tensors, one time step at a time where time matters,
and is the oracle the accelerator dataflow is checked against.
'''
import logging
from typing import Union

import numpy as np

from siaf.sim.errors import ShapeMismatchError
from siaf.sim.tensor import (IMAGE_SCALE_EXP, AccTensor, ByteImage, QTensor, SpikeTensor,
                             check_time_steps, checked_int32, iand_payload)

logger = logging.getLogger(__name__)  # pylint: disable=C0103

# residual outputs are AccTensor only when the test-only addition residual is selected
Activation = Union[SpikeTensor, AccTensor]


def activation_values(x: Activation) -> np.ndarray:
    '''int64 view of an activation, spikes become 0/1'''
    if isinstance(x, SpikeTensor):
        return x.to_bits().astype(np.int64)
    return x.wide()


def _check_bias(bias: AccTensor, out_channels: int, scale_exp: int, name: str) -> np.ndarray:
    if bias.shape != (out_channels,):
        raise ShapeMismatchError(f'{name}: bias shape {bias.shape}, expected ({out_channels},)')
    if bias.scale_exp != scale_exp:
        raise ShapeMismatchError(f'{name}: bias scale 2^{bias.scale_exp} differs from '
                                 f'accumulator scale 2^{scale_exp}')
    return bias.wide()


def conv3x3_sums(values: np.ndarray, weights: np.ndarray, stride: int = 1) -> np.ndarray:
    '''
    Cross-correlation with padding 1 on [T, C, H, W] integer inputs.
    weights are [OC, C, 3, 3]; returns int64 [T, OC, Ho, Wo] without bias.
    '''
    time_steps, channels, height, width = values.shape
    if weights.shape[1:] != (channels, 3, 3):
        raise ShapeMismatchError(f'3x3 weights {weights.shape} do not match {channels} input channels')
    padded = np.pad(values, ((0, 0), (0, 0), (1, 1), (1, 1)))
    out = np.zeros((time_steps, weights.shape[0], height, width), dtype=np.int64)
    wide = weights.astype(np.int64)
    for ky in range(3):
        for kx in range(3):
            window = padded[:, :, ky:ky + height, kx:kx + width]
            out += np.einsum('oc,tchw->tohw', wide[:, :, ky, kx], window)
    return out[:, :, ::stride, ::stride]


def conv_bn_3x3(x: Activation, w: QTensor, b: AccTensor, stride: int = 1,
                name: str = 'conv3x3') -> AccTensor:
    '''ConvBN 3x3, padding 1, per time step'''
    values = activation_values(x)
    if values.ndim != 4:
        raise ShapeMismatchError(f'{name}: expected [T, C, H, W], got {values.shape}')
    bias = _check_bias(b, w.shape[0], w.scale_exp, name)
    out = conv3x3_sums(values, w.data, stride) + bias[None, :, None, None]
    return AccTensor(checked_int32(out, name), w.scale_exp, name)


def encode_conv_3x3(img: ByteImage, w: QTensor, b: AccTensor, time_steps: int, stride: int = 1,
                    name: str = 'encode') -> AccTensor:
    '''Encoding layer: the same 8-bit image is presented at every time step'''
    check_time_steps(time_steps)
    scale_exp = w.scale_exp + IMAGE_SCALE_EXP
    bias = _check_bias(b, w.shape[0], scale_exp, name)
    values = img.data.astype(np.int64)[np.newaxis]
    out = conv3x3_sums(values, w.data, stride) + bias[None, :, None, None]
    out = np.repeat(checked_int32(out, name), time_steps, axis=0)
    return AccTensor(out, scale_exp, name)


def conv_bn_1x1(x: Activation, w: QTensor, b: AccTensor, name: str = 'conv1x1') -> AccTensor:
    '''ConvBN 1x1 on [T, C, H, W]'''
    values = activation_values(x)
    weights = w.data.reshape(w.shape[0], -1).astype(np.int64)
    if values.ndim != 4 or weights.shape[1] != values.shape[1]:
        raise ShapeMismatchError(f'{name}: weights {w.shape} do not match input {values.shape}')
    bias = _check_bias(b, w.shape[0], w.scale_exp, name)
    out = np.einsum('oc,tchw->tohw', weights, values) + bias[None, :, None, None]
    return AccTensor(checked_int32(out, name), w.scale_exp, name)


def linear(x: Activation, w: QTensor, b: AccTensor, name: str = 'linear') -> AccTensor:
    '''Linear on [T, N, D] tokens, weights are [out, in]'''
    values = activation_values(x)
    if values.ndim != 3 or w.data.ndim != 2 or w.shape[1] != values.shape[2]:
        raise ShapeMismatchError(f'{name}: weights {w.shape} do not match tokens {values.shape}')
    bias = _check_bias(b, w.shape[0], w.scale_exp, name)
    out = np.einsum('tnd,od->tno', values, w.data.astype(np.int64)) + bias[None, None, :]
    return AccTensor(checked_int32(out, name), w.scale_exp, name)


def maxpool2x2(x: SpikeTensor, name: str = 'maxpool') -> SpikeTensor:
    '''2x2 max pooling, which on spikes is an OR over each window'''
    bits = x.to_bits()
    if bits.ndim != 4 or bits.shape[2] % 2 or bits.shape[3] % 2:
        raise ShapeMismatchError(f'{name}: needs [T, C, H, W] with even H and W, got {bits.shape}')
    time_steps, channels, height, width = bits.shape
    windows = bits.reshape(time_steps, channels, height // 2, 2, width // 2, 2)
    return SpikeTensor.from_bits(windows.max(axis=(3, 5)))


def iand(x: SpikeTensor, y: SpikeTensor) -> SpikeTensor:
    '''x AND NOT y, elementwise on packed words'''
    return iand_payload(x, y)


def residual_add(x: Activation, y: SpikeTensor) -> AccTensor:
    '''Plain residual addition; produces non-spike values and exists to show why IAND is used'''
    values = activation_values(x)
    other = activation_values(y)
    if values.shape != other.shape:
        raise ShapeMismatchError(f'residual operands differ: {values.shape} vs {other.shape}')
    return AccTensor(values + other, 0, 'residual_add')


def attention_currents(q: SpikeTensor, k: SpikeTensor, v: SpikeTensor, heads: int,
                       scale_shift: int, name: str = 'attention') -> AccTensor:
    '''
    Softmax-free attention per head and time step: ((Q K^T) V) >> scale_shift.
    Q, K, V are binary so every product is an AND and every sum a popcount.
    '''
    if not q.shape == k.shape == v.shape or q.ndim != 3:
        raise ShapeMismatchError(f'{name}: Q/K/V shapes {q.shape}, {k.shape}, {v.shape}')
    time_steps, tokens, dim = q.shape
    if dim % heads:
        raise ShapeMismatchError(f'{name}: dim {dim} not divisible by {heads} heads')
    head_dim = dim // heads
    qb, kb, vb = (s.to_bits().astype(np.int64) for s in (q, k, v))
    out = np.zeros((time_steps, tokens, dim), dtype=np.int64)
    for t in range(time_steps):
        for h in range(heads):
            cols = slice(h * head_dim, (h + 1) * head_dim)
            scores = qb[t, :, cols] @ kb[t, :, cols].T
            out[t, :, cols] = checked_int32(scores @ vb[t, :, cols], f'{name}[t={t},h={h}]')
    return AccTensor(out >> scale_shift, 0, name)


def spike_rates(x: Activation) -> np.ndarray:
    '''spike count per feature, summed over time steps and tokens'''
    values = activation_values(x)
    return values.reshape(-1, values.shape[-1]).sum(axis=0)


def classifier_head(x: Activation, w: QTensor, b: AccTensor, name: str = 'head') -> AccTensor:
    '''logits = W . rate + bias, rate summed over time steps and tokens'''
    rate = spike_rates(x)
    if w.data.ndim != 2 or w.shape[1] != rate.shape[0]:
        raise ShapeMismatchError(f'{name}: weights {w.shape} do not match {rate.shape[0]} features')
    bias = _check_bias(b, w.shape[0], w.scale_exp, name)
    return AccTensor(w.data.astype(np.int64) @ rate + bias, w.scale_exp, name)


def to_tokens(x: Activation) -> Activation:
    '''[T, C, H, W] feature map to [T, H*W, C] tokens, row-major over positions'''
    values = x.to_bits() if isinstance(x, SpikeTensor) else x.data
    time_steps, channels, height, width = values.shape
    tokens = values.transpose(0, 2, 3, 1).reshape(time_steps, height * width, channels)
    if isinstance(x, SpikeTensor):
        return SpikeTensor.from_bits(tokens)
    return AccTensor(tokens, x.scale_exp, 'tokens')
