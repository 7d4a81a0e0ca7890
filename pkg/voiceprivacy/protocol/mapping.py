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
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Set, Tuple

from voiceprivacy.constants.defaults import SUBSET_TAGS
from voiceprivacy.utils.dataloader import PathLike, iter_records
from voiceprivacy.utils.exceptions import ParseError

logger = logging.getLogger(__name__)

RULES = {
    1: "all utterances of a speaker within a subset share one pseudo-speaker",
    2: "different speakers within a subset get different pseudo-speakers",
    3: "a speaker's enrollment and trial pseudo-speakers differ",
}


@dataclass(frozen=True)
class MappingRecord:
    utterance_id: str
    speaker_id: str
    tag: str
    pseudo_id: str


@dataclass
class PseudoMapping:
    """Per-utterance pseudo-speaker records of an anonymized evaluation set."""

    records: List[MappingRecord] = field(default_factory=list)

    @classmethod
    def from_tuples(cls, rows: Iterable[Tuple[str, str, str, str]]) -> "PseudoMapping":
        return cls([MappingRecord(*row) for row in rows])

    def __len__(self) -> int:
        return len(self.records)

    def pseudo_ids(self) -> Dict[Tuple[str, str], Set[str]]:
        """(speaker, tag) to the set of pseudo IDs its utterances carry."""
        table: Dict[Tuple[str, str], Set[str]] = defaultdict(set)
        for r in self.records:
            table[(r.speaker_id, r.tag)].add(r.pseudo_id)
        return dict(table)


def load_mapping(path: PathLike) -> PseudoMapping:
    """Loads `<utterance-id> <speaker-id> <tag> <pseudo-id>` lines; tag is enrollment or trial."""
    records = []
    for line_number, fields in iter_records(path, min_fields=4):
        if len(fields) != 4:
            raise ParseError(
                "expected `<utterance-id> <speaker-id> <tag> <pseudo-id>`", path=path, line_number=line_number
            )
        if fields[2] not in SUBSET_TAGS:
            raise ParseError(f"tag must be one of {SUBSET_TAGS}, got {fields[2]!r}", path=path, line_number=line_number)
        records.append(MappingRecord(*fields))
    return PseudoMapping(records)


@dataclass(frozen=True)
class Violation:
    rule: int
    message: str

    def to_dict(self) -> Dict[str, object]:
        return {"rule": self.rule, "message": self.message}


@dataclass
class ValidationReport:
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def rules_violated(self) -> List[int]:
        return sorted({v.rule for v in self.violations})

    def to_dict(self) -> Dict[str, object]:
        return {"ok": self.ok, "violations": [v.to_dict() for v in self.violations]}


def validate_pseudo_mapping(mapping: PseudoMapping) -> ValidationReport:
    """
    Checks the pseudo-speaker consistency rules of an anonymized evaluation set.

    1. Within (speaker, tag), all utterances share one pseudo ID.
    2. Within a tag, distinct speakers have distinct pseudo IDs.
    3. For each speaker, enrollment and trial pseudo IDs differ. Speakers present under only one tag
       satisfy this rule.

    Parameters
    ----------
    mapping : PseudoMapping
        Parsed per-utterance records.

    Returns
    -------
    ValidationReport
        One violation per offending (speaker, tag), (tag, pseudo ID) or speaker.
    """
    report = ValidationReport()
    by_speaker_tag = mapping.pseudo_ids()

    for (speaker, tag), pseudos in sorted(by_speaker_tag.items()):
        if len(pseudos) > 1:
            report.violations.append(
                Violation(1, f"speaker {speaker} ({tag}) maps to several pseudo-speakers: {sorted(pseudos)}")
            )

    speakers_of: Dict[Tuple[str, str], Set[str]] = defaultdict(set)
    for (speaker, tag), pseudos in by_speaker_tag.items():
        for pseudo in pseudos:
            speakers_of[(tag, pseudo)].add(speaker)
    for (tag, pseudo), speakers in sorted(speakers_of.items()):
        if len(speakers) > 1:
            report.violations.append(
                Violation(2, f"pseudo-speaker {pseudo} ({tag}) is shared by speakers {sorted(speakers)}")
            )

    enrollment_tag, trial_tag = SUBSET_TAGS
    for speaker in sorted({s for s, _ in by_speaker_tag}):
        shared = by_speaker_tag.get((speaker, enrollment_tag), set()) & by_speaker_tag.get(
            (speaker, trial_tag), set()
        )
        if shared:
            report.violations.append(
                Violation(3, f"speaker {speaker} uses pseudo-speaker {sorted(shared)} for enrollment and trial")
            )

    logger.info("Validated %d mapping records: %d violations", len(mapping), len(report.violations))
    return report
