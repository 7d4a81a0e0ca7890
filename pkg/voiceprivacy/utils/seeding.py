# Copyright 2024 voiceprivacy developers
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

import hashlib
from typing import Union

import numpy as np

KeyPart = Union[str, int]


def stable_hash(*parts: KeyPart) -> int:
    """64-bit integer digest of the given key parts, stable across processes and platforms."""
    joined = "\x1f".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(joined).digest()[:8], "little")


def stream_rng(seed: int, *parts: KeyPart) -> np.random.Generator:
    """Independent numpy Generator for the stream identified by `seed` and `parts`."""
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, stable_hash(*parts)])
