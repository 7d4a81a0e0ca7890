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

from voiceprivacy.metrics.verification.metrics.baseclass.metrics import (
    Metric,
    ScoreSet,
    as_score_set,
)
from voiceprivacy.metrics.verification.metrics.cllr import Cllr, cllr, cllr_from_llrs
from voiceprivacy.metrics.verification.metrics.cllr_min import (
    CalibrationLoss,
    CllrMin,
    PavCalibration,
    calibration_loss,
    cllr_min,
    pav_calibrate,
)
from voiceprivacy.metrics.verification.metrics.confusion import (
    SpeakerConfusion,
    deidentification_effect,
    diag_ratio,
    pseudonymization_effect,
    speaker_confusion,
)
from voiceprivacy.metrics.verification.metrics.eer import (
    EqualErrorRate,
    ErrorRates,
    eer,
    eer_with_threshold,
    error_rates,
)

__all__ = [
    "Metric",
    "ScoreSet",
    "as_score_set",
    "Cllr",
    "cllr",
    "cllr_from_llrs",
    "CalibrationLoss",
    "CllrMin",
    "PavCalibration",
    "calibration_loss",
    "cllr_min",
    "pav_calibrate",
    "SpeakerConfusion",
    "deidentification_effect",
    "diag_ratio",
    "pseudonymization_effect",
    "speaker_confusion",
    "EqualErrorRate",
    "ErrorRates",
    "eer",
    "eer_with_threshold",
    "error_rates",
]
