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

import math
import os
from pathlib import Path
from typing import Dict, Iterator, List, Tuple, Union

import numpy as np

from voiceprivacy.utils.exceptions import ConfigurationError, ParseError, ValidationError

PathLike = Union[str, os.PathLike]


def iter_records(path: PathLike, min_fields: int = 1) -> Iterator[Tuple[int, List[str]]]:
    """
    Yields (line number, whitespace-separated fields) for every data line of a text file.

    Blank lines and lines whose first non-blank character is '#' are skipped.

    Raises
    ------
    ConfigurationError
        If the file does not exist.
    ParseError
        If a data line has fewer than `min_fields` fields.
    """
    if not os.path.isfile(path):
        raise ConfigurationError(f"File not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            fields = stripped.split()
            if len(fields) < min_fields:
                raise ParseError(
                    f"expected at least {min_fields} fields, got {len(fields)}",
                    path=path,
                    line_number=line_number,
                )
            yield line_number, fields


def load_manifest(path: PathLike) -> List[Tuple[str, Path]]:
    """
    Loads an anonymization manifest of `<utterance-id> <wav-path>` lines.

    Relative WAV paths are resolved against the manifest's directory.

    Example
    -------
    >>> from voiceprivacy.utils.dataloader import load_manifest
    >>> entries = load_manifest("data/manifest.txt")
    >>> entries[0]
    ('1272-128104-0000', PosixPath('data/wav/1272-128104-0000.wav'))
    """
    base = Path(path).parent
    entries, seen = [], set()
    for line_number, fields in iter_records(path, min_fields=2):
        if len(fields) != 2:
            raise ParseError("expected `<utterance-id> <wav-path>`", path=path, line_number=line_number)
        utt_id, wav_path = fields
        if utt_id in seen:
            raise ValidationError(f"{path}:{line_number}: duplicate utterance id {utt_id!r}")
        seen.add(utt_id)
        wav = Path(wav_path)
        entries.append((utt_id, wav if wav.is_absolute() else base / wav))
    return entries


def load_embedding_rows(path: PathLike) -> List[Tuple[str, str, np.ndarray]]:
    """
    Loads `<utterance-id> <speaker-id> <v1> ... <vD>` lines.

    Returns
    -------
    list of (utterance_id, speaker_id, vector)
        One entry per line; all vectors share the dimension of the first line.
    """
    rows, dim = [], None
    for line_number, fields in iter_records(path, min_fields=3):
        try:
            vector = np.array([float(v) for v in fields[2:]])
        except ValueError:
            raise ParseError("embedding values must be real numbers", path=path, line_number=line_number)
        if not np.all(np.isfinite(vector)):
            raise ParseError("embedding values must be finite", path=path, line_number=line_number)
        if dim is None:
            dim = vector.shape[0]
        elif vector.shape[0] != dim:
            raise ParseError(
                f"embedding dimension {vector.shape[0]} differs from {dim}", path=path, line_number=line_number
            )
        rows.append((fields[0], fields[1], vector))
    return rows


def write_embedding_rows(rows: List[Tuple[str, str, np.ndarray]], path: PathLike) -> None:
    """Writes rows in the format read by `load_embedding_rows`, using repr-exact floats."""
    with open(path, "w", encoding="utf-8") as f:
        for utt_id, speaker_id, vector in rows:
            values = " ".join(repr(float(v)) for v in vector)
            f.write(f"{utt_id} {speaker_id} {values}\n")


def load_transcripts(path: PathLike) -> Dict[str, str]:
    """
    Loads `<utterance-id> <word> <word> ...` lines into a mapping from utterance id to text.

    An utterance id alone on a line denotes an empty transcript.
    """
    table = {}
    for line_number, fields in iter_records(path, min_fields=1):
        if fields[0] in table:
            raise ValidationError(f"{path}:{line_number}: duplicate utterance id {fields[0]!r}")
        table[fields[0]] = " ".join(fields[1:])
    return table


def load_score_rows(path: PathLike) -> List[Tuple[str, str, float]]:
    """Loads Kaldi-style `<enrollment-id> <test-utterance-id> <score>` lines."""
    rows = []
    for line_number, fields in iter_records(path, min_fields=3):
        if len(fields) != 3:
            raise ParseError(
                "expected `<enrollment-id> <test-utterance-id> <score>`", path=path, line_number=line_number
            )
        try:
            score = float(fields[2])
        except ValueError:
            raise ParseError(f"score {fields[2]!r} is not a number", path=path, line_number=line_number)
        if not math.isfinite(score):
            raise ParseError(f"score {fields[2]!r} is not finite", path=path, line_number=line_number)
        rows.append((fields[0], fields[1], score))
    return rows


def load_key_value(path: PathLike) -> Dict[str, str]:
    """Loads `<key> <value>` lines, e.g. speaker-to-gender metadata or utterance-to-speaker maps."""
    table = {}
    for line_number, fields in iter_records(path, min_fields=2):
        if len(fields) != 2:
            raise ParseError("expected `<key> <value>`", path=path, line_number=line_number)
        if fields[0] in table and table[fields[0]] != fields[1]:
            raise ValidationError(f"{path}:{line_number}: conflicting values for {fields[0]!r}")
        table[fields[0]] = fields[1]
    return table
