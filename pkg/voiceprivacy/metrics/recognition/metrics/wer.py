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
import warnings
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from voiceprivacy.metrics.recognition.metrics.baseclass.metrics import Metric
from voiceprivacy.utils.exceptions import ContractError, ReconciliationError

logger = logging.getLogger(__name__)

Tokens = Union[str, Sequence[str]]


@dataclass(frozen=True)
class WerBreakdown:
    """Edit counts of an alignment. Breakdowns add, so shards can be merged."""

    n_sub: int = 0
    n_del: int = 0
    n_ins: int = 0
    n_ref: int = 0

    @property
    def n_errors(self) -> int:
        return self.n_sub + self.n_del + self.n_ins

    @property
    def wer(self) -> float:
        if self.n_ref == 0:
            raise ContractError("voiceprivacy: WER is undefined for an empty reference")
        return self.n_errors / self.n_ref

    def __add__(self, other: "WerBreakdown") -> "WerBreakdown":
        return WerBreakdown(
            n_sub=self.n_sub + other.n_sub,
            n_del=self.n_del + other.n_del,
            n_ins=self.n_ins + other.n_ins,
            n_ref=self.n_ref + other.n_ref,
        )

    def to_dict(self) -> Dict[str, int]:
        return {"n_sub": self.n_sub, "n_del": self.n_del, "n_ins": self.n_ins, "n_ref": self.n_ref}


def tokenize(text: Tokens) -> List[str]:
    """Whitespace split after case folding. Token sequences are case folded token by token. Punctuation is kept as
    part of the words."""
    if isinstance(text, str):
        return text.casefold().split()
    return [str(token).casefold() for token in text]


def align(ref: Tokens, hyp: Tokens) -> WerBreakdown:
    """
    Minimum edit distance alignment with unit costs.

    Among alignments of equal cost the one with fewer insertions wins, then fewer deletions. An
    empty reference is allowed here and yields only insertions.
    """
    ref_tokens, hyp_tokens = tokenize(ref), tokenize(hyp)
    n, m = len(ref_tokens), len(hyp_tokens)
    # key per cell: (cost, insertions, deletions), ordered lexicographically
    cost = np.zeros((n + 1, m + 1), dtype=np.int64)
    ins = np.zeros((n + 1, m + 1), dtype=np.int64)
    dels = np.zeros((n + 1, m + 1), dtype=np.int64)
    cost[:, 0] = dels[:, 0] = np.arange(n + 1)
    cost[0, :] = ins[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            diag = cost[i - 1, j - 1] + (ref_tokens[i - 1] != hyp_tokens[j - 1])
            candidates: List[Tuple[int, int, int, Tuple[int, int]]] = [
                (diag, ins[i - 1, j - 1], dels[i - 1, j - 1], (i - 1, j - 1)),
                (cost[i - 1, j] + 1, ins[i - 1, j], dels[i - 1, j] + 1, (i - 1, j)),
                (cost[i, j - 1] + 1, ins[i, j - 1] + 1, dels[i, j - 1], (i, j - 1)),
            ]
            best = min(candidates, key=lambda c: c[:3])
            cost[i, j], ins[i, j], dels[i, j] = best[0], best[1], best[2]
    n_ins, n_del = int(ins[n, m]), int(dels[n, m])
    return WerBreakdown(
        n_sub=int(cost[n, m]) - n_ins - n_del, n_del=n_del, n_ins=n_ins, n_ref=n
    )


def wer(ref: Tokens, hyp: Tokens) -> WerBreakdown:
    """
    Word error rate breakdown of one utterance.

    Parameters
    ----------
    ref, hyp : str or sequence of str
        Reference and hypothesis, as text or as token sequences.

    Returns
    -------
    WerBreakdown
        `.wer` gives (n_sub + n_del + n_ins) / n_ref.
    """
    breakdown = align(ref, hyp)
    if breakdown.n_ref == 0:
        raise ContractError("voiceprivacy: reference has no tokens")
    return breakdown


def wer_corpus(
    references: Dict[str, Tokens], hypotheses: Dict[str, Tokens]
) -> Tuple[WerBreakdown, Dict[str, WerBreakdown]]:
    """
    Corpus-level WER: counts are pooled over hypothesis utterances before dividing.

    Parameters
    ----------
    references : dict
        Utterance ID to reference transcript.

    hypotheses : dict
        Utterance ID to recognized transcript. Every ID must exist in `references`.

    Returns
    -------
    tuple
        Pooled breakdown and per-utterance breakdowns.
    """
    missing = sorted(set(hypotheses) - set(references))
    if missing:
        raise ReconciliationError("voiceprivacy: hypothesis utterances missing from reference", keys=missing)
    extra = len(set(references) - set(hypotheses))
    if extra:
        warnings.warn(f"voiceprivacy: ignoring {extra} reference utterances without a hypothesis")
    per_utterance = {utt: align(references[utt], hypotheses[utt]) for utt in sorted(hypotheses)}
    total = sum(per_utterance.values(), WerBreakdown())
    if total.n_ref == 0:
        raise ContractError("voiceprivacy: references hold no tokens")
    logger.info("WER over %d utterances: %d errors / %d words", len(per_utterance), total.n_errors, total.n_ref)
    return total, per_utterance


class WordErrorRate(Metric):
    def __init__(self) -> None:
        """
        This class computes corpus-level word error rate in percent, pooling edit counts over all
        hypothesis utterances.
        """
        self.name = "WER"

    def evaluate(self, references: Dict[str, Tokens], hypotheses: Dict[str, Tokens]) -> float:
        total, _ = wer_corpus(references, hypotheses)
        return 100.0 * total.wer
