'''
Counted SRAM banks, off-chip traffic and the linear energy model.
'''
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

from siaf.sim.errors import CapacityExceededError, ConfigError

logger = logging.getLogger(__name__)  # pylint: disable=C0103

BANK_WEIGHT = 'weight'
BANK_SPIKE_IN = 'spike_in'
BANK_TEMP = 'temp'
BANK_SPIKE_TEMP = 'spike_temp'
BANK_MEMBRANE = 'membrane'
BANK_NAMES = (BANK_WEIGHT, BANK_SPIKE_IN, BANK_TEMP, BANK_SPIKE_TEMP, BANK_MEMBRANE)
# banks counted in the on-chip SRAM budget
BUDGET_BANKS = (BANK_WEIGHT, BANK_SPIKE_IN, BANK_TEMP, BANK_SPIKE_TEMP)

DEFAULT_BANKS = {
    BANK_WEIGHT: {'capacity_bytes': 65536, 'word_bits': 72},
    BANK_SPIKE_IN: {'capacity_bytes': 32768, 'word_bits': 64},
    BANK_TEMP: {'capacity_bytes': 32768, 'word_bits': 32},
    BANK_SPIKE_TEMP: {'capacity_bytes': 11520, 'word_bits': 64},
    BANK_MEMBRANE: {'capacity_bytes': 0, 'word_bits': 32},
}


def words_for(nbits: int, word_bits: int) -> int:
    '''whole words needed for nbits'''
    return -(-int(nbits) // word_bits)


class SramBank:
    '''
    One SRAM bank. Data written through write() round-trips through a byte
    array; record_read()/record_write() count traffic for accesses whose data
    the simulator keeps elsewhere.
    '''

    def __init__(self, name: str, capacity_bytes: int, word_bits: int):
        if capacity_bytes < 0 or word_bits <= 0:
            raise ConfigError('capacity must be >= 0 and word_bits > 0', f'memory.banks.{name}')
        self.name = name
        self.capacity_bytes = int(capacity_bytes)
        self.word_bits = int(word_bits)
        self.reads = 0
        self.writes = 0
        self.peak_bytes = 0
        self._data = bytearray(self.capacity_bytes)

    def _check(self, address: int, nbytes: int) -> None:
        if address < 0 or address + nbytes > self.capacity_bytes or (nbytes == 0 and address >= self.capacity_bytes):
            raise CapacityExceededError(self.name, address, nbytes, self.capacity_bytes)

    def check_footprint(self, nbytes: int) -> None:
        '''Error when a working set of nbytes cannot live in this bank'''
        self._check(0, nbytes)
        self.peak_bytes = max(self.peak_bytes, int(nbytes))

    def write(self, address: int, data: bytes) -> int:
        '''Store data at a byte address, returns the words written'''
        self._check(address, len(data))
        self._data[address:address + len(data)] = data
        self.peak_bytes = max(self.peak_bytes, address + len(data))
        words = words_for(len(data) * 8, self.word_bits)
        self.writes += words
        return words

    def read(self, address: int, nbytes: int) -> bytes:
        '''Load nbytes from a byte address'''
        self._check(address, nbytes)
        self.reads += words_for(nbytes * 8, self.word_bits)
        return bytes(self._data[address:address + nbytes])

    def record_read(self, words: int) -> None:
        '''count words read'''
        if words < 0:
            raise ValueError('word counts are non-negative')
        self.reads += int(words)

    def record_write(self, words: int) -> None:
        '''count words written'''
        if words < 0:
            raise ValueError('word counts are non-negative')
        self.writes += int(words)

    @property
    def read_bytes(self) -> int:
        '''bytes moved by reads'''
        return self.reads * self.word_bits // 8

    @property
    def write_bytes(self) -> int:
        '''bytes moved by writes'''
        return self.writes * self.word_bits // 8

    def __repr__(self):
        return (f'SramBank({self.name}, capacity={self.capacity_bytes}, reads={self.reads}, '
                f'writes={self.writes})')


class OffChipPort:  # pylint: disable=R0903
    '''Traffic to and from off-chip memory, counted in words'''

    def __init__(self, word_bits: int = 64):
        self.word_bits = word_bits
        self.words = 0

    def transfer(self, nbytes: int) -> None:
        '''count a transfer'''
        self.words += words_for(nbytes * 8, self.word_bits)

    @property
    def nbytes(self) -> int:
        '''bytes moved'''
        return self.words * self.word_bits // 8


@dataclass
class BankSet:
    '''Every bank of one simulation plus the off-chip port'''
    banks: Dict[str, SramBank]
    off_chip: OffChipPort = field(default_factory=OffChipPort)

    def __getattr__(self, name):
        banks = self.__dict__.get('banks', {})
        if name in banks:
            return banks[name]
        raise AttributeError(name)

    @property
    def budget_bytes(self) -> int:
        '''on-chip SRAM inside the budget, membrane bank excluded'''
        return sum(self.banks[name].capacity_bytes for name in BUDGET_BANKS)


def default_budget(bank_config: Optional[dict] = None, membrane_bytes: int = 0,
                   off_chip_word_bits: int = 64) -> BankSet:
    '''
    Bank partition from the memory config (defaults sum to 139.25 KB). The
    membrane bank sits outside the budget: capacity 0 under the parallel
    schedule, sized to membrane_bytes for the serial baseline.
    '''
    config = {name: dict(values) for name, values in DEFAULT_BANKS.items()}
    for name, values in (bank_config or {}).items():
        if name not in config:
            raise ConfigError(f'unknown bank {name!r}', 'memory.banks')
        config[name].update(values)
    if membrane_bytes:
        config[BANK_MEMBRANE]['capacity_bytes'] = max(config[BANK_MEMBRANE]['capacity_bytes'],
                                                      membrane_bytes)
    banks = {name: SramBank(name, int(values['capacity_bytes']), int(values['word_bits']))
             for name, values in config.items()}
    logger.debug('Bank set: %s', {name: bank.capacity_bytes for name, bank in banks.items()})
    return BankSet(banks, OffChipPort(off_chip_word_bits))


@dataclass(frozen=True)
class EnergyModel:
    '''Per-word picojoule coefficients, all non-negative'''
    read_pj: Dict[str, float]
    write_pj: Dict[str, float]
    spike_op_pj: float = 0.05
    off_chip_pj_per_word: float = 100.0

    def __post_init__(self):
        values = list(self.read_pj.values()) + list(self.write_pj.values()) + \
            [self.spike_op_pj, self.off_chip_pj_per_word]
        if any(value < 0 for value in values):
            raise ConfigError('energy coefficients must be >= 0', 'energy')

    @classmethod
    def from_dict(cls, section: dict) -> 'EnergyModel':
        '''from the energy config section'''
        section = section or {}
        read = {name: 1.0 for name in BANK_NAMES}
        write = {name: 1.2 for name in BANK_NAMES}
        for name, values in (section.get('banks') or {}).items():
            if name not in read:
                raise ConfigError(f'unknown bank {name!r}', 'energy.banks')
            read[name] = float(values.get('read_pj', read[name]))
            write[name] = float(values.get('write_pj', write[name]))
        return cls(read, write, float(section.get('spike_op_pj', 0.05)),
                   float(section.get('off_chip_pj_per_word', 100.0)))


@dataclass
class BankTraffic:
    reads: int
    writes: int
    read_bytes: int
    write_bytes: int


@dataclass
class TrafficReport:
    '''Per-bank counters and off-chip traffic of one run'''
    banks: Dict[str, BankTraffic]
    off_chip_words: int = 0
    off_chip_bytes: int = 0

    @classmethod
    def from_banks(cls, bank_set: BankSet) -> 'TrafficReport':
        '''snapshot of a bank set'''
        return cls({name: BankTraffic(bank.reads, bank.writes, bank.read_bytes, bank.write_bytes)
                    for name, bank in bank_set.banks.items()},
                   bank_set.off_chip.words, bank_set.off_chip.nbytes)

    @property
    def total_reads(self) -> int:
        '''sum of per-bank reads'''
        return sum(entry.reads for entry in self.banks.values())

    @property
    def total_writes(self) -> int:
        '''sum of per-bank writes'''
        return sum(entry.writes for entry in self.banks.values())

    def scaled(self, factor: int) -> 'TrafficReport':
        '''every counter multiplied by factor'''
        return TrafficReport({name: BankTraffic(e.reads * factor, e.writes * factor,
                                                e.read_bytes * factor, e.write_bytes * factor)
                              for name, e in self.banks.items()},
                             self.off_chip_words * factor, self.off_chip_bytes * factor)

    def to_dict(self) -> dict:
        '''report section'''
        return {
            'banks': {name: vars(entry) for name, entry in sorted(self.banks.items())},
            'total_reads': self.total_reads,
            'total_writes': self.total_writes,
            'off_chip_words': self.off_chip_words,
            'off_chip_bytes': self.off_chip_bytes,
        }


def energy_report(traffic: TrafficReport, spike_ops: int, model: EnergyModel,
                  seconds: Optional[float] = None) -> dict:
    '''
    Linear energy estimate in picojoules. The split and TSOPS/W come from the
    coefficients above and are not comparable with measured silicon.
    '''
    per_bank = {name: entry.reads * model.read_pj.get(name, 0.0) + entry.writes * model.write_pj.get(name, 0.0)
                for name, entry in traffic.banks.items()}
    sram_pj = sum(per_bank.values())
    off_chip_pj = traffic.off_chip_words * model.off_chip_pj_per_word
    logic_pj = spike_ops * model.spike_op_pj
    memory_pj = sram_pj + off_chip_pj
    total_pj = memory_pj + logic_pj
    report = {
        'per_bank_pj': dict(sorted(per_bank.items())),
        'sram_pj': sram_pj,
        'off_chip_pj': off_chip_pj,
        'logic_pj': logic_pj,
        'memory_pj': memory_pj,
        'total_pj': total_pj,
        'energy_per_inference_pj': total_pj,
        'memory_fraction': memory_pj / total_pj if total_pj else 0.0,
        'logic_fraction': logic_pj / total_pj if total_pj else 0.0,
        'spike_ops': spike_ops,
        # sops per picojoule equals tera-sops per watt
        'tsops_per_watt': spike_ops / total_pj if total_pj else 0.0,
        'comparable_with_silicon': False,
    }
    if seconds:
        report['average_power_mw'] = total_pj * 1e-12 / seconds * 1e3
    return report
