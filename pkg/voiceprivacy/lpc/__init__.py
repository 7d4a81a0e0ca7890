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

from voiceprivacy.lpc.core import (
    LpcModel,
    analyze,
    autocorrelate,
    de_emphasis,
    inverse_filter,
    levinson_durbin,
    pre_emphasis,
    synthesis_filter,
)
from voiceprivacy.lpc.poles import PoleSet, find_poles, poles_to_coeffs

__all__ = [
    "LpcModel",
    "PoleSet",
    "analyze",
    "autocorrelate",
    "de_emphasis",
    "find_poles",
    "inverse_filter",
    "levinson_durbin",
    "poles_to_coeffs",
    "pre_emphasis",
    "synthesis_filter",
]
