"""Bit-exact spiking transformer reference and cycle-level accelerator simulator"""

from siaf.version import __version__  # pylint:disable=W0611
