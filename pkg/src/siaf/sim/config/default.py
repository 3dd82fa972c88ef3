'''Default simulator configuration'''
from siaf.sim.memory import DEFAULT_BANKS

DEFAULT_SIM_CONFIG = {
    'accelerator': {
        'pe_rows': 8,
        'pe_cols': 9,
        'arrays_per_block': 4,
        'num_blocks': 12,
        'clock_hz': 500e6,
        'ops_per_pe_cycle': 2,
        'fill_cycles': 2,
        'sparsity_gating': True,
        'overlap_drain': True,
        'vector_lanes': 8,
        'weight_fetch_stall_cycles': 0,
    },
    'memory': {
        'banks': {name: dict(values) for name, values in DEFAULT_BANKS.items()},
        'off_chip_word_bits': 64,
    },
    'energy': {
        'banks': {
            'weight': {'read_pj': 1.0, 'write_pj': 1.2},
            'spike_in': {'read_pj': 1.0, 'write_pj': 1.2},
            'temp': {'read_pj': 1.0, 'write_pj': 1.2},
            'spike_temp': {'read_pj': 1.0, 'write_pj': 1.2},
            'membrane': {'read_pj': 1.0, 'write_pj': 1.2},
        },
        'spike_op_pj': 0.05,
        'off_chip_pj_per_word': 100.0,
    },
    'tracing': {
        'exporter': 'none',
        'endpoint': '',
    },
    'schedule': {
        'kind': 'parallel',
        'time_steps': None,
    },
}
