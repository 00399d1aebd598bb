#!/usr/bin/env python3

import importlib.util

if importlib.util.find_spec("setuptools_scm") is None:
    raise ImportError("setuptools-scm is not installed. Install it by `pip3 install setuptools-scm`")

import os
from os import path

from setuptools import find_packages, setup
from setuptools_scm.version import get_local_dirty_tag

THIS_DIR = path.dirname(path.abspath(__file__))


def my_local_scheme(version):
    # The following is used to build release packages.
    # Users should never use it.
    local_version = os.getenv("GREEN_COLLOC_BUILD_LOCAL_VERSION")
    if local_version is None:
        return get_local_dirty_tag(version)
    return f"+{local_version}"


def fetch_requirements():
    with open(path.join(THIS_DIR, "requirements.txt")) as f:
        reqs = [line.strip() for line in f.read().strip().split("\n")]
    return [req for req in reqs if req and not req.startswith("#")]


setup(
    name="green_colloc",
    use_scm_version={
        "write_to": path.join("src", "green_colloc", "_version.py"),
        "local_scheme": my_local_scheme,
        "fallback_version": "0.1.0",
    },
    package_dir={
        "": "src",
    },
    packages=find_packages(where="src"),
    python_requires=">=3.9",
    include_package_data=True,
    install_requires=fetch_requirements(),
    entry_points={
        "console_scripts": [
            "green-colloc = green_colloc.convlab.cli:main",
        ],
    },
    extras_require={
        # optional dependencies, required by some features
        "all": [],
        # dev dependencies. Install them by `pip3 install 'green-colloc[dev]'`
        "dev": [
            "pre-commit",
            "pytest>=7.0.0",
        ],
    },
)
