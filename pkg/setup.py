import sys

from setuptools import setup, find_packages

# install_requires doesn't always work(like if on older versions of pip)
if sys.version_info < (3, 8):
    print("siaf-sim is not supported on python versions before 3.8")
    sys.exit(1)

exec(open('src/siaf/version.py').read())

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setup(
    name="siaf-sim",
    version=__version__,
    description="Bit-exact spiking transformer reference and cycle-level accelerator simulator",
    long_description=long_description,
    long_description_content_type="text/markdown",
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: Apache Software License",
        "Operating System :: OS Independent"
    ],
    package_dir={"": "src"},
    packages=find_packages(where="src"),
    python_requires=">=3.8",
    install_requires=[
        "numpy>=1.22",
        "opentelemetry-api==1.26.0",
        "opentelemetry-sdk==1.26.0",
        "opentelemetry-exporter-otlp==1.26.0",
        "pyyaml",
    ],
    entry_points = {
        'console_scripts': [
            'siaf-sim = siaf.sim.cli.siaf_cli:run',
        ],
    }
)
