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
"""Python interface to the FDIM native core."""
import json

from ._core import (  # noqa: F401
    FdimError,
    Model,
    __version__,
    fidelity_loss,
    fit_logistic,
    fuse_scores,
    gt_preference,
    map_branch,
    plcc,
    predicted_preference,
    pq_eotf,
    pu21_encode,
    srocc,
)
from . import _core


def score(ref, dist, weights, width, height, fps=25.0, bit_depth=8, deep_only=False,
          calibration=None, vmaf_scores=None, sampling="one-per-second", seed=0):
    """Scores one distorted clip against its reference; returns the JSON record as a dict."""
    return json.loads(_core._score_json(
        str(ref), str(dist), str(weights), width, height, fps, bit_depth, deep_only,
        None if calibration is None else str(calibration),
        None if vmaf_scores is None else str(vmaf_scores), sampling, seed))


def synth(out_dir, refs=4, levels=5, width=320, height=256, frames=10, fps=5.0, seed=0):
    """Writes the procedural corpus and its manifest; returns the summary dict."""
    return json.loads(_core._synth_json(str(out_dir), refs, levels, width, height, frames, fps, seed))
