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

"""Storage place for constants such as default frame geometry, LPC settings, pool-selection sizes and display precision."""

################################################################################
# Audio I/O and framing
################################################################################
WAV_SCALE = 32768.0
WAV_SUBTYPE = "PCM_16"
DEFAULT_FRAME_MS = 20.0
DEFAULT_HOP_MS = 10.0
DEFAULT_WINDOW = "hann"
SUPPORTED_WINDOWS = ["rectangular", "hann"]
OLA_ENVELOPE_FLOOR = 1e-8

################################################################################
# Linear prediction
################################################################################
DEFAULT_LPC_ORDER = 20
SILENCE_THRESHOLD = 1e-12
PRE_EMPHASIS = 0.97
ROOT_RESIDUAL_TOL = 1e-8
CONJUGATE_TOL = 1e-8

################################################################################
# McAdams anonymization
################################################################################
DEFAULT_ALPHA = 0.8
DEFAULT_STABILITY_CLAMP = 0.998
ANGLE_EPS = 1e-4

################################################################################
# Pool-based embedding anonymization
################################################################################
DEFAULT_N_FARTHEST = 200
DEFAULT_N_SUBSET = 100
MAX_COLLISION_REDRAWS = 8
SUBSET_TAGS = ["enrollment", "trial"]

################################################################################
# Reporting
################################################################################
EER_DECIMALS = 3
CLLR_DECIMALS = 3
WER_DECIMALS = 2
CONDITIONS = ["o", "a"]
ALL_GENDERS = "all"
DEFAULT_ASR_SYSTEM = "asr"
RESULT_FORMATS = ["plain", "latex"]
SEED_ENVVAR = "VOICEPRIVACY_SEED"
DEFAULT_SEED = 0
FAILURE_MESSAGE = "Unable to process file"
