# Copyright 2026 The FDIM Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates pu21_reference.csv from the ColorVideoVDP PU class.

Usage: python make_pu21_reference.py path/to/cvvdp-<ver>-py3-none-any.whl

The wheel is only read, not installed; the PU class is executed on numpy
arrays. Output: 1000 log-spaced luminances in [0.005, 10000] cd/m^2 with the
banding-glare encoding.
"""
import functools
import math
import sys
import zipfile

import numpy as np


def load_pu_class(wheel):
    src = zipfile.ZipFile(wheel).read("pycvvdp/utils.py").decode()
    start = src.index("class PU")
    end = src.find("\nclass ", start + 1)
    body = src[start:end if end > 0 else len(src)]
    ns = {"cache": functools.cache, "math": math, "np": np}
    try:
        import torch
        ns["torch"] = torch
    except ImportError:
        pass
    exec(body, ns)
    return ns["PU"]


def main():
    pu = load_pu_class(sys.argv[1])(type="banding_glare")
    lum = np.logspace(math.log10(0.005), math.log10(10000.0), 1000)
    enc = pu._encode_direct(lum)
    with open("pu21_reference.csv", "w") as f:
        f.write("luminance,pu21\n")
        for l, v in zip(lum, enc):
            f.write(f"{l:.17g},{v:.17g}\n")


if __name__ == "__main__":
    main()
