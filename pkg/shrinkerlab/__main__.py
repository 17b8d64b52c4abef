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

from .shrinkerlab import main

if __name__ == '__main__':
    sys.exit(main())
