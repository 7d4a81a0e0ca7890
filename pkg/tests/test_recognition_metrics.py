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

from functools import lru_cache

import numpy as np
import pytest

from voiceprivacy.metrics.recognition import (
    RecognitionMetrics,
    WerBreakdown,
    tokenize,
    wer,
    wer_corpus,
)
from voiceprivacy.metrics.recognition.metrics import WordErrorRate, align
from voiceprivacy.utils.exceptions import ContractError, ReconciliationError


def brute_force_alignment(ref, hyp):
    """Lexicographically smallest (cost, insertions, deletions) over all edit scripts."""

    @lru_cache(maxsize=None)
    def best(i, j):
        if i == len(ref) and j == len(hyp):
            return (0, 0, 0)
        options = []
        if i < len(ref) and j < len(hyp):
            c, n_ins, n_del = best(i + 1, j + 1)
            options.append((c + (ref[i] != hyp[j]), n_ins, n_del))
        if i < len(ref):
            c, n_ins, n_del = best(i + 1, j)
            options.append((c + 1, n_ins, n_del + 1))
        if j < len(hyp):
            c, n_ins, n_del = best(i, j + 1)
            options.append((c + 1, n_ins + 1, n_del))
        return min(options)

    return best(0, 0)


def test_wer_example():
    breakdown = wer("a b c", "a x c d")
    assert breakdown == WerBreakdown(n_sub=1, n_del=0, n_ins=1, n_ref=3)
    assert breakdown.wer == pytest.approx(2 / 3)


def test_wer_edge_cases():
    assert wer("a b", "").to_dict() == {"n_sub": 0, "n_del": 2, "n_ins": 0, "n_ref": 2}
    assert wer("a b", "").wer == 1.0
    assert wer("Hello World", "hello   world").wer == 0.0
    assert wer(["a", "b"], ["a", "b", "b", "b"]).wer == 1.0
    assert tokenize("It's  done.") == ["it's", "done."]
    assert tokenize(["Hello", "WORLD"]) == ["hello", "world"]
    assert wer(["A", "b"], ["a", "B"]).wer == 0.0
    with pytest.raises(ContractError):
        wer("", "a")
    assert align("", "a b").n_ins == 2


def test_alignment_matches_brute_force():
    rng = np.random.default_rng(0)
    alphabet = ["a", "b", "c", "d"]
    for _ in range(500):
        ref = [alphabet[k] for k in rng.integers(0, 4, int(rng.integers(1, 9)))]
        hyp = [alphabet[k] for k in rng.integers(0, 4, int(rng.integers(0, 9)))]
        breakdown = wer(ref, hyp)
        cost, n_ins, n_del = brute_force_alignment(tuple(ref), tuple(hyp))
        assert (breakdown.n_errors, breakdown.n_ins, breakdown.n_del) == (cost, n_ins, n_del)
        assert breakdown.n_ref - breakdown.n_del + breakdown.n_ins == len(hyp)
        assert breakdown.n_sub >= 0


def test_wer_corpus_pools_counts():
    references = {"u1": "one two three four five", "u2": "six seven eight nine ten"}
    hypotheses = {"u1": "one two tree four five", "u2": "six seven nine ten"}
    total, per_utterance = wer_corpus(references, hypotheses)
    assert total.wer == pytest.approx(0.2)
    assert per_utterance["u1"].n_sub == 1
    assert per_utterance["u2"].n_del == 1
    assert per_utterance["u1"] + per_utterance["u2"] == total
    assert WordErrorRate().evaluate(references, hypotheses) == pytest.approx(20.0)


def test_wer_corpus_reconciliation():
    references = {"u1": "a b", "u2": "c d"}
    with pytest.raises(ReconciliationError):
        wer_corpus(references, {"u3": "a"})
    with pytest.warns(UserWarning, match="ignoring 1 reference"):
        total, _ = wer_corpus(references, {"u1": "a b"})
    assert total.wer == 0.0
    with pytest.raises(ContractError):
        wer_corpus({"u1": ""}, {"u1": "a"})


def test_recognition_metrics():
    references = {"u1": "a b c", "u2": "d e"}
    hypotheses = {"u1": "a x c d", "u2": "d"}
    result = RecognitionMetrics().evaluate(references, hypotheses, return_data=True)
    assert result["metrics"] == {
        "WER": pytest.approx(60.0),
        "Substitutions": 1,
        "Deletions": 1,
        "Insertions": 1,
        "Reference words": 5,
    }
    assert result["data"]["u2"] == {"n_sub": 0, "n_del": 1, "n_ins": 0, "n_ref": 2}
    assert "data" not in RecognitionMetrics().evaluate(references, hypotheses)
