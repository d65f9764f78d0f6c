# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.
from setuptools import find_packages, setup

# Package metadata
NAME = "cycfold"
VERSION = "1.0"
DESCRIPTION = "Cyclic algebraic datatypes: fold evaluation by rewriting, bisimilarity proofs and termination checks."
LICENSE = "Apache 2.0"

# Read the contents of README file
with open("README.md", "r", encoding="utf-8") as f:
    LONG_DESCRIPTION = f.read()

# Required dependencies
REQUIRED_PACKAGES = [
    "numpy>=2.0.1",
    "tqdm>=4.66.5",
    "hydra-core>=1.3.2",
    "omegaconf>=2.3",
    "iopath>=0.1.10",
    "lark>=1.1.9",
    "networkx>=3.3",
]

EXTRA_PACKAGES = {
    "dev": [
        "pytest>=8.0",
        "black==24.2.0",
        "usort==1.0.2",
        "ufmt==2.0.0b2",
    ],
}

# Setup configuration
setup(
    name=NAME,
    version=VERSION,
    description=DESCRIPTION,
    long_description=LONG_DESCRIPTION,
    long_description_content_type="text/markdown",
    license=LICENSE,
    packages=find_packages(exclude=["tests", "examples"]),
    package_data={"cycfold": ["configs/*.yaml", "surface/grammar.lark"]},
    include_package_data=True,
    install_requires=REQUIRED_PACKAGES,
    extras_require=EXTRA_PACKAGES,
    python_requires=">=3.10.0",
    entry_points={"console_scripts": ["cycfold=cycfold.cli:main"]},
)
