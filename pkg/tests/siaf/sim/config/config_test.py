'''Simulator configuration layers'''
import os.path

import pytest

from siaf.env_var_settings import env_key, get_env_value, siaf_environment
from siaf.sim.config import SimConfig, merge_config
from siaf.sim.config.environment import load_config_from_env
from siaf.sim.config.file import load_config_from_file
from siaf.sim.errors import ConfigError

CONFIG_FILE = os.path.join(os.path.dirname(__file__), 'test_sim-config.yaml')


def test_load_from_file() -> None:
    '''values come through as written'''
    cfg = load_config_from_file(CONFIG_FILE)
    assert cfg['accelerator']['num_blocks'] == 6
    assert cfg['memory']['banks']['temp']['capacity_bytes'] == 65536
    assert cfg['schedule']['kind'] == 'serial'


def test_defaults() -> None:
    config = SimConfig()
    assert config.schedule_kind == 'parallel'
    assert config.time_steps is None
    assert config.tracing_exporter == 'none'
    assert config.accel_config().total_pes == 3456
    assert config.bank_set().budget_bytes == 142592


def test_file_layer() -> None:
    config = SimConfig(CONFIG_FILE)
    accel = config.accel_config()
    assert accel.num_blocks == 6
    # untouched keys keep their defaults
    assert accel.arrays_per_block == 4
    assert accel.fill_cycles == 3
    assert config.bank_set().temp.capacity_bytes == 65536
    assert config.bank_set().weight.capacity_bytes == 65536
    assert config.energy_model().read_pj['weight'] == 4.0
    assert config.energy_model().write_pj['weight'] == 1.2
    assert config.schedule_kind == 'serial'
    assert config.tracing_exporter == 'console'


def test_config_file_from_env(monkeypatch) -> None:
    monkeypatch.setenv('SIAF_CONFIG_FILE', CONFIG_FILE)
    assert SimConfig().accel_config().num_blocks == 6


def test_empty_config_file_path(monkeypatch) -> None:
    monkeypatch.setenv('SIAF_CONFIG_FILE', '')
    with pytest.raises(ConfigError) as err:
        SimConfig()
    assert err.value.location == 'SIAF_CONFIG_FILE'


def test_missing_config_file(tmpdir) -> None:
    with pytest.raises(ConfigError):
        SimConfig(os.path.join(str(tmpdir), 'absent.yaml'))


def test_malformed_config_file(tmpdir) -> None:
    path = os.path.join(str(tmpdir), 'bad.yaml')
    with open(path, 'w', encoding='utf-8') as file:
        file.write('accelerator: [1, 2\n')
    with pytest.raises(ConfigError):
        SimConfig(path)


def test_env_config(monkeypatch) -> None:
    '''Test config is loaded from env.'''
    monkeypatch.setenv('SIAF_CLOCK_HZ', '250e6')
    monkeypatch.setenv('SIAF_SPARSITY_GATING', 'False')
    monkeypatch.setenv('SIAF_OVERLAP_DRAIN', 'true')
    monkeypatch.setenv('SIAF_SCHEDULE', 'SERIAL')
    monkeypatch.setenv('SIAF_TIMESTEPS', '2')
    monkeypatch.setenv('SIAF_TRACING_EXPORTER', 'otlp_http')
    monkeypatch.setenv('SIAF_TRACING_ENDPOINT', 'http://localhost:4318/v1/traces')
    config = load_config_from_env()
    assert config['accelerator'] == {'clock_hz': 250e6, 'sparsity_gating': False, 'overlap_drain': True}
    assert config['schedule'] == {'kind': 'serial', 'time_steps': 2}
    assert config['tracing'] == {'exporter': 'otlp_http', 'endpoint': 'http://localhost:4318/v1/traces'}


def test_console_span_exporter_flag(monkeypatch) -> None:
    monkeypatch.setenv('SIAF_ENABLE_CONSOLE_SPAN_EXPORTER', 'True')
    assert load_config_from_env() == {'tracing': {'exporter': 'console'}}


def test_no_env_no_sections() -> None:
    assert load_config_from_env() == {}


def test_bad_env_number(monkeypatch) -> None:
    monkeypatch.setenv('SIAF_TIMESTEPS', 'four')
    with pytest.raises(ConfigError) as err:
        SimConfig()
    assert err.value.location == 'env SIAF_TIMESTEPS'


def test_merge_order(monkeypatch) -> None:
    '''defaults < file < model sections < env < overrides'''
    sections = {'accelerator': {'clock_hz': 300e6, 'fill_cycles': 1}, 'schedule': {'kind': 'parallel'}}
    config = SimConfig(CONFIG_FILE, sections)
    assert config.accel_config().clock_hz == 300e6
    assert config.accel_config().fill_cycles == 1
    assert config.accel_config().num_blocks == 6
    assert config.schedule_kind == 'parallel'

    monkeypatch.setenv('SIAF_CLOCK_HZ', '200e6')
    assert SimConfig(CONFIG_FILE, sections).accel_config().clock_hz == 200e6

    overrides = {'accelerator': {'clock_hz': 100e6}, 'schedule': {'kind': 'serial'}}
    config = SimConfig(CONFIG_FILE, sections, overrides)
    assert config.accel_config().clock_hz == 100e6
    assert config.schedule_kind == 'serial'


def test_merge_config_is_recursive() -> None:
    merged = merge_config({'a': {'b': 1, 'c': 2}, 'd': 3}, {'a': {'b': 5}, 'e': 6})
    assert merged == {'a': {'b': 5, 'c': 2}, 'd': 3, 'e': 6}


@pytest.mark.parametrize('overrides, location', [
    ({'schedule': {'kind': 'zigzag'}}, 'schedule.kind'),
    ({'tracing': {'exporter': 'zipkin'}}, 'tracing.exporter'),
    ({'accelerator': {'pe_cols': 8}}, 'accelerator.pe_cols'),
    ({'accelerator': {'warp': 9}}, 'accelerator'),
    ({'memory': {'banks': {'l3': {'capacity_bytes': 1}}}}, 'memory.banks'),
    ({'energy': {'spike_op_pj': -0.5}}, 'energy'),
    ({'memory': 'large'}, 'memory'),
])
def test_bad_values(overrides, location) -> None:
    with pytest.raises(ConfigError) as err:
        SimConfig(overrides=overrides)
    assert err.value.location == location


def test_env_prefix(monkeypatch) -> None:
    monkeypatch.setenv('SIAF_SCHEDULE', 'serial')
    monkeypatch.setenv('OTHER_SCHEDULE', 'parallel')
    assert env_key('SCHEDULE') == 'SIAF_SCHEDULE'
    assert get_env_value('SCHEDULE') == 'serial'
    assert get_env_value('CLOCK_HZ') is None
    assert siaf_environment() == {'SIAF_SCHEDULE': 'serial'}
