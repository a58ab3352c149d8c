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
"""Converts a torchvision ResNet-18 state dict into an FDIM checkpoint.

Only the encoder is replaced; the comparison, fusion and regression layers
keep their seeded initialisation. Usage:

    fdim-convert-torchvision resnet18.pth out.fdimw [--seed N]
"""
import argparse

import numpy as np

from ._core import Model

_SKIP = ("fc.",)
# Standardisation constants live in the encoder but are not part of a torchvision state dict.
_OWN = ("input_mean", "input_std")


def convert(state_dict, out_path=None, seed=0):
    """Returns a Model whose backbone holds the given weights; saves it if out_path is set."""
    model = Model.init(seed)
    names = set(model.tensor_names())
    loaded = []
    for key, value in state_dict.items():
        if key.startswith(_SKIP):
            continue
        target = "backbone." + key
        if target not in names:
            raise KeyError(f"unexpected tensor {key}")
        array = value.detach().cpu().numpy() if hasattr(value, "detach") else np.asarray(value)
        model.set_tensor(target, np.array(array, dtype=np.float32, order="C"))
        loaded.append(key)
    missing = sorted(n for n in names if n.startswith("backbone.") and n[len("backbone."):] not in loaded
               and n[len("backbone."):] not in _OWN)
    if missing:
        raise KeyError(f"state dict lacks {len(missing)} encoder tensors, e.g. {missing[0]}")
    if out_path is not None:
        model.save(str(out_path), '{"encoder_source": "torchvision resnet18"}')
    return model


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("state_dict", help="torch.save()d state dict (.pth)")
    parser.add_argument("out", help="output .fdimw")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    import torch

    convert(torch.load(args.state_dict, map_location="cpu", weights_only=True), args.out, args.seed)
    print(args.out)


if __name__ == "__main__":
    main()
