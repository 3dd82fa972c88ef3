'''
siaf-sim command line: run, verify, gen, compare and stats.

Exit codes: 0 success, 1 verification mismatch, 2 file or parse error,
3 simulation error. Every error path writes one machine-parseable line
first on stderr: ERROR code=<n> location=<where> message=<text>
'''
import argparse
import json
import os
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Tuple

from siaf.sim import Simulator, custom_logger
from siaf.sim.cli.gen import SIZE_CLASSES, generate, write_model
from siaf.sim.config import SimConfig
from siaf.sim.constants import (EXCEPTION_MESSAGE, EXIT_FILE_ERROR, EXIT_MISMATCH, EXIT_OK,
                                EXIT_SIMULATION_ERROR, REPORT_SCHEMA_VERSION)
from siaf.sim.errors import ConfigError, SiafError, WeightFileError
from siaf.sim.fault import parse_fault
from siaf.sim.reference.network import ModelConfig
from siaf.sim.scheduler import PARALLEL, SERIAL
from siaf.sim.tensor import ALLOWED_TIME_STEPS, ByteImage
from siaf.sim.tensor.image_file import random_image, read_image, write_image

logger = custom_logger.get_custom_logger('siaf')


def _add_model_args(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument('--config', help='YAML model file')
    source.add_argument('--size-class', choices=sorted(SIZE_CLASSES),
                        help='generate a random model of this size class from --seed instead')
    parser.add_argument('--weights', help='SIAF weight file, defaults to the one the model file names')
    parser.add_argument('--timesteps', type=int, choices=ALLOWED_TIME_STEPS, help='override T')
    parser.add_argument('--schedule', choices=(SERIAL, PARALLEL), help='tick-batching schedule')
    parser.add_argument('--sim-config', help='simulator config file (else SIAF_CONFIG_FILE)')


def _add_run_args(parser: argparse.ArgumentParser) -> None:
    _add_model_args(parser)
    parser.add_argument('--input', help='raw 8-bit image, defaults to a random image from --seed')
    parser.add_argument('--seed', type=int, default=0, help='seed for generated models and images')
    parser.add_argument('--report', help='write the JSON report here')
    parser.add_argument('--sweep', type=int, default=1, metavar='N',
                        help='N independent runs on seeds seed..seed+N-1, on a thread pool')
    parser.add_argument('--fault', action='append', default=[], metavar='KIND:LAYER',
                        help='inject a fault into the fabric, e.g. flip-weight-sign:block0.ssa.q')


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    '''Parse CLI arguments.'''
    parser = argparse.ArgumentParser(
        prog='siaf-sim',
        description='''
        Bit-exact spiking transformer reference and cycle-level accelerator
        simulator
        ''')
    commands = parser.add_subparsers(dest='command', required=True)
    _add_run_args(commands.add_parser('run', help='execute one frame on the modeled fabric'))
    _add_run_args(commands.add_parser('verify', help='compare the golden model with the fabric'))
    _add_run_args(commands.add_parser('compare', help='serial against parallel tick batching'))
    stats = commands.add_parser('stats', help='fabric constants and compiled cycles, no execution')
    _add_model_args(stats)
    stats.add_argument('--seed', type=int, default=0)
    stats.add_argument('--report')
    gen = commands.add_parser('gen', help='write a random model and its weights')
    gen.add_argument('--size-class', choices=sorted(SIZE_CLASSES), default='tiny')
    gen.add_argument('--seed', type=int, default=0)
    gen.add_argument('--timesteps', type=int, choices=ALLOWED_TIME_STEPS, default=4)
    gen.add_argument('--out', default='.', help='output directory')
    gen.add_argument('--name', help='file stem, defaults to <size-class>-s<seed>')
    gen.add_argument('--image', action='store_true', help='also write a random input image')
    return parser.parse_args(argv)


def _overrides(args: argparse.Namespace) -> dict:
    overrides = {'schedule': {}}
    if args.schedule:
        overrides['schedule']['kind'] = args.schedule
    if args.timesteps:
        overrides['schedule']['time_steps'] = args.timesteps
    return overrides


def _simulator(args: argparse.Namespace, seed: int) -> Tuple[Simulator, ModelConfig]:
    faults = [parse_fault(text) for text in getattr(args, 'fault', [])]
    if args.config:
        return Simulator.from_files(args.config, args.weights, args.sim_config, _overrides(args), faults)
    config = SimConfig(args.sim_config, None, _overrides(args))
    cfg = generate(args.size_class, seed, config.time_steps or 4)
    return Simulator(config, faults), cfg


def _image(args: argparse.Namespace, cfg: ModelConfig, seed: int) -> ByteImage:
    if args.input:
        return read_image(args.input)
    return random_image(cfg.input_shape, seed)


def _one(args: argparse.Namespace, seed: int) -> Tuple[int, dict]:
    '''one isolated run of run/verify/compare'''
    sim, cfg = _simulator(args, seed)
    img = _image(args, cfg, seed)
    if args.command == 'run':
        _, _, report = sim.run(cfg, img)
        print(f'seed={seed} cycles={report.total_cycles} frames_per_second={report.frames_per_second:.3f} '
              f'utilization={report.utilization:.4f}')
        return EXIT_OK, report.to_dict()
    if args.command == 'verify':
        result = sim.verify(cfg, img)
        if result.ok:
            print(f'seed={seed} OK layers={result.layers_compared}')
            return EXIT_OK, result.report.to_dict()
        print(f'seed={seed} MISMATCH {result.mismatch.describe()}')
        return EXIT_MISMATCH, result.report.to_dict()
    comparison = sim.compare(cfg, img)
    table = comparison.to_dict()
    print(f'seed={seed} weight_access_reduction={comparison.weight_access_reduction:.4f} '
          f'membrane_bytes serial={comparison.serial.membrane_bytes} parallel={comparison.parallel.membrane_bytes} '
          f'latency_ratio={comparison.latency_ratio:.4f}')
    return EXIT_OK, dict(table, schema_version=REPORT_SCHEMA_VERSION)


def _write_report(path: Optional[str], document: dict) -> None:
    if not path:
        return
    try:
        with open(path, 'w', encoding='utf-8') as report_file:
            json.dump(document, report_file, indent=2)
            report_file.write('\n')
    except OSError as err:
        raise ConfigError(f'cannot write report: {err.strerror}', path) from err


def cmd_runs(args: argparse.Namespace) -> int:
    '''run, verify and compare, optionally swept over seeds'''
    if args.sweep < 1:
        raise ConfigError('--sweep must be >= 1', 'sweep')
    seeds = [args.seed + i for i in range(args.sweep)]
    if len(seeds) == 1:
        code, document = _one(args, seeds[0])
    else:
        with ThreadPoolExecutor() as pool:
            results = list(pool.map(lambda seed: _one(args, seed), seeds))
        code = max(result[0] for result in results)
        document = {'schema_version': REPORT_SCHEMA_VERSION,
                    'sweep': [dict(seed=seed, **result[1]) for seed, result in zip(seeds, results)]}
    _write_report(args.report, document)
    return code


def cmd_gen(args: argparse.Namespace) -> int:
    '''write <name>.yaml and <name>.siaf (and <name>.raw)'''
    cfg = generate(args.size_class, args.seed, args.timesteps)
    stem = args.name or cfg.name
    config_path, weights_path = write_model(cfg, args.out, stem)
    print(f'config={config_path} weights={weights_path}')
    if args.image:
        image_path = os.path.join(args.out, f'{stem}.raw')
        write_image(image_path, random_image(cfg.input_shape, args.seed))
        print(f'input={image_path}')
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    '''compiled cost without functional execution'''
    sim, cfg = _simulator(args, args.seed)
    stats = dict(sim.stats(cfg), schema_version=REPORT_SCHEMA_VERSION)
    accel = stats['accelerator']
    cycles = stats['cycles']
    print(f"pes={accel['total_pes']} peak_gsops={accel['peak_gsops']:g} "
          f"sram_kb={accel['sram_budget_kb']:g} cycles={cycles['total']} "
          f"frames_per_second={cycles['frames_per_second']:.3f} "
          f"published_frames_per_second={cycles['published_frames_per_second']}")
    _write_report(args.report, stats)
    return EXIT_OK


def _exit_code(err: Exception) -> int:
    if isinstance(err, (ConfigError, WeightFileError, OSError)):
        return EXIT_FILE_ERROR
    return EXIT_SIMULATION_ERROR


def _error_line(code: int, err: Exception) -> str:
    location = getattr(err, 'location', '') or getattr(err, 'filename', '') or '-'
    message = str(err).replace('\n', ' ')
    return f'ERROR code={code} location={location} message={message}'


def main(argv: Optional[List[str]] = None) -> int:
    '''parse, dispatch, convert errors to exit codes'''
    args = parse_args(argv)
    try:
        if args.command == 'gen':
            return cmd_gen(args)
        if args.command == 'stats':
            return cmd_stats(args)
        return cmd_runs(args)
    except (SiafError, OSError) as err:
        code = _exit_code(err)
        sys.stderr.write(_error_line(code, err) + '\n')
        logger.debug(EXCEPTION_MESSAGE, args.command, err, traceback.format_exc())
        return code


def run() -> None:
    '''siaf-sim Entry point'''
    sys.exit(main())


if __name__ == '__main__':
    run()
