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

from voiceprivacy.protocol.mapping import (
    MappingRecord,
    PseudoMapping,
    ValidationReport,
    Violation,
    load_mapping,
    validate_pseudo_mapping,
)
from voiceprivacy.protocol.results import AsvRow, ResultsTable, WerRow, emit_results, parse_results
from voiceprivacy.protocol.trials import (
    CountDiscrepancy,
    Trial,
    TrialList,
    load_expected_counts,
    load_metadata,
    load_trials,
    reconcile_counts,
    score_trials,
)

__all__ = [
    "AsvRow",
    "CountDiscrepancy",
    "MappingRecord",
    "PseudoMapping",
    "ResultsTable",
    "Trial",
    "TrialList",
    "ValidationReport",
    "Violation",
    "WerRow",
    "emit_results",
    "load_expected_counts",
    "load_mapping",
    "load_metadata",
    "load_trials",
    "parse_results",
    "reconcile_counts",
    "score_trials",
    "validate_pseudo_mapping",
]
