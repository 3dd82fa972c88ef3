'''constants'''
from siaf import version

EXCEPTION_MESSAGE = 'Failed to %s: exception=%s, stacktrace=%s'
TELEMETRY_SDK_VERSION = version.__version__
TELEMETRY_SDK_NAME = 'siaf'
TELEMETRY_SDK_LANGUAGE = 'python'
SERVICE_NAME = 'siaf-sim'

# CLI exit codes
EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_FILE_ERROR = 2
EXIT_SIMULATION_ERROR = 3

# Report field names are frozen for downstream tooling
REPORT_SCHEMA_VERSION = 1

# Published figures, reported next to simulated numbers and never asserted
PUBLISHED_FRAMES_PER_SECOND = 46.72
PUBLISHED_WEIGHT_ACCESS_REDUCTION = 0.432
PUBLISHED_MEMORY_POWER_SHARE = 0.43
PUBLISHED_ACTIVATION_SPARSITY = 0.7388
PUBLISHED_TSOPS_PER_WATT = 38.334
PUBLISHED_PEAK_GSOPS = 3456
PUBLISHED_SRAM_KB = 139.25
