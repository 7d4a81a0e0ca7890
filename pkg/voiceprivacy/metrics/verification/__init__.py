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

from voiceprivacy.metrics.verification.metrics import (
    PavCalibration,
    ScoreSet,
    SpeakerConfusion,
    calibration_loss,
    cllr,
    cllr_min,
    eer,
    error_rates,
    pav_calibrate,
    speaker_confusion,
)
from voiceprivacy.metrics.verification.verification import VerificationMetrics

__all__ = [
    "PavCalibration",
    "ScoreSet",
    "SpeakerConfusion",
    "VerificationMetrics",
    "calibration_loss",
    "cllr",
    "cllr_min",
    "eer",
    "error_rates",
    "pav_calibrate",
    "speaker_confusion",
]
