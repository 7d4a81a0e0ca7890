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

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple, Union

from voiceprivacy.metrics.verification.metrics.baseclass.metrics import ScoreSet
from voiceprivacy.utils.dataloader import PathLike, iter_records, load_key_value, load_score_rows
from voiceprivacy.utils.exceptions import ParseError, ReconciliationError, ValidationError

logger = logging.getLogger(__name__)

TRIAL_LABELS = ["target", "nontarget"]
ScoreRows = Iterable[Tuple[str, str, float]]


@dataclass(frozen=True)
class Trial:
    enrollment_id: str
    test_utterance_id: str
    label: str

    @property
    def key(self) -> Tuple[str, str]:
        return (self.enrollment_id, self.test_utterance_id)

    @property
    def is_target(self) -> bool:
        return self.label == "target"


@dataclass
class TrialList:
    """
    Verification trials keyed by (enrollment speaker, test utterance).

    Parameters
    ----------
    trials : list of Trial
        Trials in file order. Keys must be unique.
    """

    trials: List[Trial] = field(default_factory=list)

    def __post_init__(self) -> None:
        seen = set()
        for trial in self.trials:
            if trial.key in seen:
                raise ValidationError(f"voiceprivacy: duplicate trial pair {trial.key}")
            seen.add(trial.key)

    def __len__(self) -> int:
        return len(self.trials)

    def __iter__(self):
        return iter(self.trials)

    def keys(self) -> List[Tuple[str, str]]:
        return [t.key for t in self.trials]

    def label_counts(self) -> Dict[str, int]:
        counts = Counter(t.label for t in self.trials)
        return {label: counts.get(label, 0) for label in TRIAL_LABELS}

    def gender_counts(self, spk2gender: Dict[str, str]) -> Dict[str, Dict[str, int]]:
        """Label counts per gender of the enrollment speaker."""
        return {g: part.label_counts() for g, part in self.partition_by_gender(spk2gender).items()}

    def partition_by_gender(self, spk2gender: Dict[str, str]) -> Dict[str, "TrialList"]:
        """
        Splits trials by the gender of their enrollment speaker.

        Raises
        ------
        ReconciliationError
            If an enrollment speaker has no gender entry.
        """
        missing = sorted({t.enrollment_id for t in self.trials if t.enrollment_id not in spk2gender})
        if missing:
            raise ReconciliationError("voiceprivacy: enrollment speakers missing from metadata", keys=missing)
        parts: Dict[str, List[Trial]] = {}
        for trial in self.trials:
            parts.setdefault(spk2gender[trial.enrollment_id], []).append(trial)
        return {g: TrialList(parts[g]) for g in sorted(parts)}


def load_trials(path: PathLike) -> TrialList:
    """
    Loads a trial list of `<enrollment-id> <test-utterance-id> target|nontarget` lines.

    Raises
    ------
    ParseError
        For a malformed line, with its line number.
    ValidationError
        For a repeated (enrollment, test) pair.
    """
    trials, seen = [], {}
    for line_number, fields in iter_records(path, min_fields=3):
        if len(fields) != 3 or fields[2] not in TRIAL_LABELS:
            raise ParseError(
                "expected `<enrollment-id> <test-utterance-id> target|nontarget`",
                path=path,
                line_number=line_number,
            )
        trial = Trial(*fields)
        if trial.key in seen:
            raise ValidationError(
                f"{path}:{line_number}: duplicate trial pair {trial.key} (first on line {seen[trial.key]})"
            )
        seen[trial.key] = line_number
        trials.append(trial)
    trial_list = TrialList(trials)
    logger.info("Loaded %d trials from %s: %s", len(trial_list), path, trial_list.label_counts())
    return trial_list


def load_metadata(path: PathLike) -> Dict[str, str]:
    """Loads `<speaker-id> <gender>` lines. Genders are free-form labels such as f and m."""
    return load_key_value(path)


def load_expected_counts(path: PathLike) -> Dict[str, int]:
    """
    Loads expected trial counts as `<key> <count>` lines.

    Keys are `target`, `nontarget`, or `<label>.<gender>` (e.g. `target.f`).
    """
    expected = {}
    for key, value in load_key_value(path).items():
        label = key.split(".", 1)[0]
        if label not in TRIAL_LABELS:
            raise ParseError(f"unknown count key {key!r}", path=path)
        try:
            expected[key] = int(value)
        except ValueError:
            raise ParseError(f"count for {key!r} is not an integer: {value!r}", path=path)
    return expected


@dataclass(frozen=True)
class CountDiscrepancy:
    key: str
    expected: int
    observed: int


def reconcile_counts(
    trials: TrialList,
    expected: Dict[str, int],
    spk2gender: Optional[Dict[str, str]] = None,
) -> List[CountDiscrepancy]:
    """
    Compares observed trial counts with expected ones.

    Returns
    -------
    list of CountDiscrepancy
        Empty when every expected count matches. Gendered keys need `spk2gender`.
    """
    observed = dict(trials.label_counts())
    if any("." in key for key in expected):
        if spk2gender is None:
            raise ValidationError("voiceprivacy: gendered expected counts need speaker metadata")
        for gender, counts in trials.gender_counts(spk2gender).items():
            for label, n in counts.items():
                observed[f"{label}.{gender}"] = n
    report = [
        CountDiscrepancy(key=key, expected=n, observed=observed.get(key, 0))
        for key, n in sorted(expected.items())
        if observed.get(key, 0) != n
    ]
    for item in report:
        logger.warning("Trial count %s: expected %d, observed %d", item.key, item.expected, item.observed)
    return report


def score_trials(scores: Union[PathLike, ScoreRows], trials: TrialList) -> ScoreSet:
    """
    Partitions verification scores into target and impostor lists using a trial list.

    Parameters
    ----------
    scores : path or iterable of (str, str, float)
        Score file or already loaded `(enrollment, test utterance, score)` rows.

    trials : TrialList
        Trials whose pairs must each appear exactly once among the scores.

    Returns
    -------
    ScoreSet
        Target and impostor scores in trial order.

    Raises
    ------
    ReconciliationError
        For duplicate, missing or unknown pairs.
    """
    rows = load_score_rows(scores) if isinstance(scores, (str, bytes)) or hasattr(scores, "__fspath__") else scores
    by_pair: Dict[Tuple[str, str], float] = {}
    duplicates = []
    for enroll, test_utt, score in rows:
        if (enroll, test_utt) in by_pair:
            duplicates.append((enroll, test_utt))
        by_pair[(enroll, test_utt)] = score
    if duplicates:
        raise ReconciliationError("voiceprivacy: duplicate score rows", keys=duplicates)
    trial_keys = set(trials.keys())
    missing = [k for k in trials.keys() if k not in by_pair]
    if missing:
        raise ReconciliationError("voiceprivacy: trials without a score", keys=missing)
    extra = sorted(k for k in by_pair if k not in trial_keys)
    if extra:
        raise ReconciliationError("voiceprivacy: scores for pairs not in the trial list", keys=extra)
    target = [by_pair[t.key] for t in trials if t.is_target]
    impostor = [by_pair[t.key] for t in trials if not t.is_target]
    return ScoreSet(target, impostor)
