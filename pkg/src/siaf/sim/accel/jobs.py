'''
Tile jobs: the unit of work issued to the PE blocks.

A 3x3 job covers one output channel, one group of up to num_blocks input
channels, one 8-wide column tile and every row (plus one bitplane for the
encoding layer). A matmul job covers one output channel, one group of up to
num_blocks slices of nine reduction channels and up to 64 positions. Within
a pass, jobs are issued output channel first, then channel group, then
bitplane, then spatial tile, so the weight slice of (output channel, group)
stays in the PE registers across bitplanes and tiles.

The eight bitplanes multiply only the encoding layer's compute cycles. All
planes of an output channel accumulate into the same temp lanes and drain
once, so its total cycles stay below eight times a spike layer's.
'''
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from siaf.sim.accel import AccelConfig
from siaf.sim.accel.tiles import PE_COLS, PE_ROWS
from siaf.sim.errors import ShapeMismatchError, TimeStepMismatchError

logger = logging.getLogger(__name__)  # pylint: disable=C0103

JOB_CONV3X3 = 'conv3x3'
JOB_MATMUL = 'matmul'
# positions one matmul job streams, 8 vectors of 8
MATMUL_JOB_POSITIONS = 64


def ceil_div(a: int, b: int) -> int:
    '''integer ceiling division'''
    return -(-a // b)


@dataclass(frozen=True)
class TileJob:  # pylint: disable=R0902
    kind: str
    out_channel: int
    group: int
    channels: Tuple[int, int]
    lanes: Tuple[int, ...]
    tile: Tuple[int, int]
    plane: Optional[int]
    first: bool
    last: bool
    fetch_weights: bool
    weight_words: int
    cycles: int
    pass_index: int = 0

    def check(self, accel: AccelConfig) -> None:
        '''group and lane limits of the fabric'''
        width = self.channels[1] - self.channels[0]
        limit = accel.num_blocks if self.kind == JOB_CONV3X3 else accel.matmul_group
        if width > limit:
            raise ShapeMismatchError(f'job group of {width} channels exceeds {limit}')
        if len(self.lanes) > accel.arrays_per_block:
            raise TimeStepMismatchError(f'job carries {len(self.lanes)} time steps, '
                                        f'blocks have {accel.arrays_per_block} arrays')


@dataclass(frozen=True)
class ConvGeometry:
    '''3x3 layer shape; the array computes densely and keeps every stride-th output'''
    in_ch: int
    out_ch: int
    height: int
    width: int
    stride: int = 1
    planes: int = 1

    @property
    def out_height(self) -> int:
        '''rows kept'''
        return ceil_div(self.height, self.stride)

    @property
    def out_width(self) -> int:
        '''columns kept'''
        return ceil_div(self.width, self.stride)

    @property
    def released(self) -> int:
        '''output positions per channel'''
        return self.out_height * self.out_width

    @property
    def col_tiles(self) -> int:
        '''8-wide column tiles over the dense width'''
        return ceil_div(self.width, PE_ROWS)


@dataclass(frozen=True)
class MatmulGeometry:
    '''reduction channels x positions for every output channel'''
    reduction: int
    out_ch: int
    positions: int

    @property
    def released(self) -> int:
        '''output positions per channel'''
        return self.positions

    @property
    def slices(self) -> int:
        '''nine-channel slices of the reduction'''
        return ceil_div(self.reduction, PE_COLS)


def conv3x3_jobs(geom: ConvGeometry, accel: AccelConfig,
                 lane_passes: Sequence[Tuple[int, ...]]) -> List[TileJob]:
    '''Every job of a 3x3 layer, pass by pass'''
    groups = ceil_div(geom.in_ch, accel.num_blocks)
    jobs = []
    for pass_index, lanes in enumerate(lane_passes):
        for oc in range(geom.out_ch):
            for g in range(groups):
                channels = (g * accel.num_blocks, min((g + 1) * accel.num_blocks, geom.in_ch))
                fetch = True
                for plane in range(geom.planes):
                    for xt in range(geom.col_tiles):
                        cycles = accel.fill_cycles + geom.height
                        if fetch:
                            cycles += accel.weight_fetch_stall_cycles
                        jobs.append(TileJob(
                            kind=JOB_CONV3X3, out_channel=oc, group=g, channels=channels,
                            lanes=tuple(lanes), tile=(xt * PE_ROWS, min((xt + 1) * PE_ROWS, geom.width)),
                            plane=plane if geom.planes > 1 else None,
                            first=g == 0 and plane == 0, last=g == groups - 1 and plane == geom.planes - 1,
                            fetch_weights=fetch, weight_words=(channels[1] - channels[0]) if fetch else 0,
                            cycles=cycles, pass_index=pass_index))
                        fetch = False
    return jobs


def matmul_jobs(geom: MatmulGeometry, accel: AccelConfig, lane_passes: Sequence[Tuple[int, ...]],
                weight_bank: bool = True) -> List[TileJob]:
    '''
    Every job of a 1x1 / linear / attention matmul, pass by pass. With
    weight_bank False the per-lane operands come from activation banks and no
    weight words are fetched.
    '''
    slices_per_group = accel.num_blocks
    groups = ceil_div(geom.slices, slices_per_group)
    chunks = ceil_div(geom.positions, MATMUL_JOB_POSITIONS)
    jobs = []
    for pass_index, lanes in enumerate(lane_passes):
        for oc in range(geom.out_ch):
            for g in range(groups):
                first_slice = g * slices_per_group
                last_slice = min(first_slice + slices_per_group, geom.slices)
                channels = (first_slice * PE_COLS, last_slice * PE_COLS)
                fetch = weight_bank
                for chunk in range(chunks):
                    start = chunk * MATMUL_JOB_POSITIONS
                    stop = min(start + MATMUL_JOB_POSITIONS, geom.positions)
                    cycles = ceil_div(stop - start, PE_ROWS)
                    if fetch:
                        cycles += accel.weight_fetch_stall_cycles
                    jobs.append(TileJob(
                        kind=JOB_MATMUL, out_channel=oc, group=g, channels=channels, lanes=tuple(lanes),
                        tile=(start, stop), plane=None, first=g == 0, last=g == groups - 1,
                        fetch_weights=fetch, weight_words=(last_slice - first_slice) if fetch else 0,
                        cycles=cycles, pass_index=pass_index))
                    fetch = False
    return jobs


def conv3x3_weight_words(geom: ConvGeometry) -> int:
    '''one 72-bit word per 3x3 kernel'''
    return geom.out_ch * geom.in_ch


def matmul_weight_words(geom: MatmulGeometry) -> int:
    '''one 72-bit word per nine-channel slice of a weight row'''
    return geom.out_ch * geom.slices


@dataclass
class CycleBreakdown:
    '''Layer cycles on the PE array and the accumulator drain'''
    compute: int = 0
    drain: int = 0
    exposed_drain: int = 0
    stall: int = 0

    def total(self, overlap: bool) -> int:
        '''compute plus drain, hidden behind the next channel's compute when overlap is on'''
        return self.compute + (self.exposed_drain if overlap else self.drain)


def cycle_breakdown(jobs: Sequence[TileJob], released: int, accel: AccelConfig) -> CycleBreakdown:
    '''
    Drain takes ceil(released / 8) cycles per output channel per pass. With
    overlap, only the part of a drain longer than the following channel's
    compute is exposed, plus the whole final drain.
    '''
    per_channel: Dict[Tuple[int, int], int] = {}
    stall = 0
    for job in jobs:
        key = (job.pass_index, job.out_channel)
        per_channel[key] = per_channel.get(key, 0) + job.cycles
        if job.fetch_weights:
            stall += accel.weight_fetch_stall_cycles
    drain_each = ceil_div(released, PE_ROWS)
    compute = list(per_channel.values())
    breakdown = CycleBreakdown(compute=sum(compute), drain=drain_each * len(compute), stall=stall)
    for following in compute[1:]:
        breakdown.exposed_drain += max(0, drain_each - following)
    if compute:
        breakdown.exposed_drain += drain_each
    return breakdown


def covered_elements(jobs: Sequence[TileJob], geom) -> Dict[Tuple[int, int, int], int]:
    '''
    (lane, output channel, dense position) -> number of jobs releasing it.
    A complete plan maps every element of the layer output to exactly 1.
    '''
    counts: Dict[Tuple[int, int, int], int] = {}
    for job in jobs:
        if not job.last:
            continue
        if job.kind == JOB_CONV3X3:
            positions = [y * geom.width + x for y in range(geom.height) for x in range(*job.tile)]
        else:
            positions = range(*job.tile)
        for lane in job.lanes:
            for position in positions:
                key = (lane, job.out_channel, position)
                counts[key] = counts.get(key, 0) + 1
    return counts


def dense_positions(geom) -> int:
    '''positions per channel the array computes'''
    if isinstance(geom, ConvGeometry):
        return geom.height * geom.width
    return geom.positions
