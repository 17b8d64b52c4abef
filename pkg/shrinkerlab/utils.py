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

import sys
import numpy as np


def print_enc(msg, out=None, linefeed_and_flush=True):
    if out is None:
        out = sys.stdout

    if hasattr(out, 'buffer'):
        bytes_out = out.buffer
    else:
        bytes_out = out

    if hasattr(out, 'encoding'):
        enc = out.encoding or 'UTF-8'
    else:
        enc = 'UTF-8'

    bytes_out.write(bytes(msg.encode(enc, 'ignore')))
    if linefeed_and_flush:
        bytes_out.write(b'\n')
        bytes_out.flush()


def parse_range(arg):
    """'start:stop:step' to the values start, start + step, ... <= stop"""
    parts = arg.split(':')
    if len(parts) != 3:
        raise ValueError(f'Expected start:stop:step, got "{arg}"')
    start, stop, step = (float(p) for p in parts)
    if step <= 0 or stop <= start:
        raise ValueError(f'Empty range "{arg}"')
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


def parse_pair(arg):
    parts = arg.split(',')
    if len(parts) != 2:
        raise ValueError(f'Expected a,b, got "{arg}"')
    return (float(parts[0]), float(parts[1]))


def parse_int_list(arg):
    return [int(p) for p in arg.split(',') if p.strip()]
