# Copyright 2026 The freeseg Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Training-free zero-shot open-vocabulary segmentation."""

import os as _os

_bundled = _os.path.join(_os.path.dirname(__file__), "data")
if _os.path.isdir(_bundled):
    _os.environ.setdefault("FREESEG_DATA_DIR", _bundled)

from ._freeseg import (  # noqa: E402
    BackendError,
    ConfigError,
    DataError,
    DataIoError,
    EvalAccumulator,
    FreesegError,
    Pipeline,
    bench,
    decide_keyword,
    dense_crf,
    extract_keywords,
    kmeans,
    load_config,
    pamr,
    polygon_to_mask,
    rle_decode,
    rle_encode,
)

__all__ = [
    "BackendError",
    "ConfigError",
    "DataError",
    "DataIoError",
    "EvalAccumulator",
    "FreesegError",
    "Pipeline",
    "bench",
    "decide_keyword",
    "dense_crf",
    "extract_keywords",
    "kmeans",
    "load_config",
    "pamr",
    "polygon_to_mask",
    "rle_decode",
    "rle_encode",
]
