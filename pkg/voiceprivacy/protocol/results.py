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

import re
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from voiceprivacy.constants.defaults import (
    CLLR_DECIMALS,
    CONDITIONS,
    EER_DECIMALS,
    RESULT_FORMATS,
    WER_DECIMALS,
)
from voiceprivacy.utils.exceptions import ContractError, ParseError, ValidationError

ASV_HEADER = ["Dataset", "Enr", "Trl", "Gen", "EER,%", "Cllr_min", "Cllr"]
ASV_TITLE = "ASV results"
ASR_TITLE = "ASR results"
MISSING_CELL = {"plain": "-", "latex": "--"}
_NAME = re.compile(r"^[^\s&\\]+$")


def _check_name(value: str, what: str) -> None:
    if not _NAME.match(value):
        raise ContractError(f"voiceprivacy: {what} {value!r} must be non-empty without spaces, '&' or '\\'")


def _check_condition(value: str) -> None:
    if value not in CONDITIONS:
        raise ContractError(f"voiceprivacy: condition must be one of {CONDITIONS}, got {value!r}")


@dataclass
class AsvRow:
    """One verification result: dataset, enrollment/trial conditions, gender, EER%, C_llr^min, C_llr."""

    dataset: str
    enrollment: str
    trial: str
    gender: str
    eer: float
    cllr_min: float
    cllr: float
    source: Optional[str] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        _check_name(self.dataset, "dataset")
        _check_name(self.gender, "gender")
        _check_condition(self.enrollment)
        _check_condition(self.trial)

    @property
    def key(self) -> Tuple[str, str, str, str]:
        return (self.dataset, self.enrollment, self.trial, self.gender)


@dataclass
class WerRow:
    """One recognition result: dataset, data condition, ASR system label, WER%."""

    dataset: str
    condition: str
    system: str
    wer: float
    source: Optional[str] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        _check_name(self.dataset, "dataset")
        _check_name(self.system, "system")
        _check_condition(self.condition)

    @property
    def key(self) -> Tuple[str, str, str]:
        return (self.dataset, self.condition, self.system)


@dataclass
class ResultsTable:
    """
    Privacy (ASV) and utility (ASR) results in the layout of the challenge result tables.

    Every cell keeps the file it was computed from in `source`.
    """

    asv_rows: List[AsvRow] = field(default_factory=list)
    wer_rows: List[WerRow] = field(default_factory=list)

    def __post_init__(self) -> None:
        for key in _duplicates([r.key for r in self.asv_rows] + [r.key for r in self.wer_rows]):
            raise ValidationError(f"voiceprivacy: duplicate result row {key}")

    @property
    def is_empty(self) -> bool:
        return not self.asv_rows and not self.wer_rows

    def add_asv(self, row: AsvRow) -> None:
        if any(r.key == row.key for r in self.asv_rows):
            raise ValidationError(f"voiceprivacy: duplicate result row {row.key}")
        self.asv_rows.append(row)

    def add_wer(self, row: WerRow) -> None:
        if any(r.key == row.key for r in self.wer_rows):
            raise ValidationError(f"voiceprivacy: duplicate result row {row.key}")
        self.wer_rows.append(row)

    def merge(self, other: "ResultsTable") -> "ResultsTable":
        merged = ResultsTable(list(self.asv_rows), list(self.wer_rows))
        for row in other.asv_rows:
            merged.add_asv(row)
        for row in other.wer_rows:
            merged.add_wer(row)
        return merged

    def systems(self) -> List[str]:
        """ASR system labels in first-seen order."""
        return list(dict.fromkeys(r.system for r in self.wer_rows))

    def wer_groups(self) -> List[Tuple[Tuple[str, str], Dict[str, WerRow]]]:
        """WER rows grouped by (dataset, condition), preserving first-seen order."""
        groups: Dict[Tuple[str, str], Dict[str, WerRow]] = {}
        for row in self.wer_rows:
            groups.setdefault((row.dataset, row.condition), {})[row.system] = row
        return list(groups.items())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "asv": [asdict(r) for r in self.asv_rows],
            "asr": [asdict(r) for r in self.wer_rows],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ResultsTable":
        try:
            return cls(
                asv_rows=[AsvRow(**r) for r in data.get("asv", [])],
                wer_rows=[WerRow(**r) for r in data.get("asr", [])],
            )
        except TypeError as e:
            raise ParseError(f"malformed results document: {e}")


def _duplicates(keys: List[Tuple]) -> List[Tuple]:
    seen, dup = set(), []
    for key in keys:
        if key in seen:
            dup.append(key)
        seen.add(key)
    return dup


def _latex_escape(value: str) -> str:
    return value.replace("_", r"\_")


def _latex_unescape(value: str) -> str:
    return value.replace(r"\_", "_")


def _columns(rows: List[List[str]]) -> List[str]:
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    return ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]


def _asv_cells(row: AsvRow) -> List[str]:
    return [f"{row.eer:.{EER_DECIMALS}f}", f"{row.cllr_min:.{CLLR_DECIMALS}f}", f"{row.cllr:.{CLLR_DECIMALS}f}"]


def _wer_cells(group: Dict[str, WerRow], systems: List[str], fmt: str) -> List[str]:
    return [f"{group[s].wer:.{WER_DECIMALS}f}" if s in group else MISSING_CELL[fmt] for s in systems]


def emit_results(table: ResultsTable, format: str = "plain") -> str:
    """
    Renders a results table as text.

    Parameters
    ----------
    table : ResultsTable
        Non-empty table.

    format : str, one of 'plain' or 'latex', default='plain'
        'plain' gives aligned columns with a header per section. 'latex' gives tabular rows in the
        column order Dataset, EER%, C_llr^min, C_llr, Enr, Trl, Gen for ASV and Dataset, one WER%
        per ASR system, Data for ASR; each section starts with a comment line naming it.

    Returns
    -------
    str
        EER with 3 decimals, C_llr values with 3, WER with 2.
    """
    assert format in RESULT_FORMATS, f"voiceprivacy: format must be one of {RESULT_FORMATS}"
    if table.is_empty:
        raise ContractError("voiceprivacy: cannot emit an empty results table")
    systems = table.systems()
    lines: List[str] = []
    if format == "plain":
        if table.asv_rows:
            rows = [ASV_HEADER] + [
                [r.dataset, r.enrollment, r.trial, r.gender] + _asv_cells(r) for r in table.asv_rows
            ]
            lines += [ASV_TITLE] + _columns(rows)
        if table.wer_rows:
            if lines:
                lines.append("")
            rows = [["Dataset", "Data"] + [f"WER,%[{s}]" for s in systems]] + [
                [dataset, condition] + _wer_cells(group, systems, format)
                for (dataset, condition), group in table.wer_groups()
            ]
            lines += [ASR_TITLE] + _columns(rows)
    else:
        if table.asv_rows:
            lines.append(f"% {ASV_TITLE}")
            for r in table.asv_rows:
                cells = [_latex_escape(r.dataset)] + _asv_cells(r) + [r.enrollment, r.trial, r.gender]
                lines.append(" & ".join(cells) + r" \\")
        if table.wer_rows:
            lines.append(f"% {ASR_TITLE}: {' '.join(systems)}")
            for (dataset, condition), group in table.wer_groups():
                cells = [_latex_escape(dataset)] + _wer_cells(group, systems, format) + [condition]
                lines.append(" & ".join(cells) + r" \\")
    return "\n".join(lines) + "\n"


def _to_float(cell: str, line_number: int) -> float:
    try:
        return float(cell)
    except ValueError:
        raise ParseError(f"{cell!r} is not a number", line_number=line_number)


def parse_results(text: str, format: str = "plain") -> ResultsTable:
    """
    Parses text written by `emit_results` back into a table. Sources are not part of the text and
    come back as None.
    """
    assert format in RESULT_FORMATS, f"voiceprivacy: format must be one of {RESULT_FORMATS}"
    table = ResultsTable()
    section, systems = None, []
    for line_number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if format == "plain":
            if stripped in (ASV_TITLE, ASR_TITLE):
                section = stripped
                continue
            cells = stripped.split()
            if cells[0] == "Dataset":
                if section == ASR_TITLE:
                    systems = [c[len("WER,%["):-1] for c in cells[2:]]
                continue
        else:
            if stripped.startswith("%"):
                title, _, names = stripped[1:].strip().partition(":")
                section = title.strip()
                systems = names.split()
                continue
            if not stripped.endswith(r"\\"):
                raise ParseError("LaTeX row must end with \\\\", line_number=line_number)
            cells = [_latex_unescape(c.strip()) for c in stripped[:-2].split("&")]
            if section == ASV_TITLE and len(cells) == 7:
                cells = [cells[0], cells[4], cells[5], cells[6]] + cells[1:4]
            elif section == ASR_TITLE and len(cells) == len(systems) + 2:
                cells = [cells[0], cells[-1]] + cells[1:-1]
        if section == ASV_TITLE:
            if len(cells) != 7:
                raise ParseError("ASV row needs 7 cells", line_number=line_number)
            eer, cllr_min, cllr = (_to_float(c, line_number) for c in cells[4:])
            table.add_asv(AsvRow(cells[0], cells[1], cells[2], cells[3], eer, cllr_min, cllr))
        elif section == ASR_TITLE:
            if len(cells) != len(systems) + 2:
                raise ParseError(f"ASR row needs {len(systems) + 2} cells", line_number=line_number)
            for system, cell in zip(systems, cells[2:]):
                if cell in MISSING_CELL.values():
                    continue
                table.add_wer(WerRow(cells[0], cells[1], system, _to_float(cell, line_number)))
        else:
            raise ParseError("row outside of a results section", line_number=line_number)
    return table
