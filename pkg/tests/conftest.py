# This file is part of shrinkerlab.
#
# Copyright 2022 the shrinkerlab authors
#
# Shrinkerlab is free software: you can redistribute it and/or modify it
# under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# Shrinkerlab is distributed in the hope that it will be useful, but
# WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE. See the GNU
# General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with shrinkerlab. If not, see <https://www.gnu.org/licenses/>.

import pytest
from shrinkerlab.shooting import find_torus, torus_profile


def pytest_addoption(parser):
    parser.addoption('--slow', action='store_true',
                     help='Enable long flow runs (family construction, refinement studies)')


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long flow run, enabled with --slow")


def pytest_collection_modifyitems(config, items):
    if not config.option.slow:
        # Skip tests marked as slow
        skip_slow = pytest.mark.skip(reason="need --slow option to run")
        for item in items:
            if "slow" in item.keywords:
                item.add_marker(skip_slow)


@pytest.fixture(scope='session')
def torus2():
    """Shooting result for the n = 2 torus at 2048 nodes."""
    return find_torus(2)


@pytest.fixture(scope='session')
def torus_at(torus2):
    """Factory for the n = 2 torus profile at any even node count."""
    cache = {}

    def make(nodes):
        if nodes not in cache:
            cache[nodes] = torus_profile(torus2.r0, 2, nodes)
        return cache[nodes]

    return make
