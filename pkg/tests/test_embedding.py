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

import json

import numpy as np
import pytest
from scipy.optimize import nnls

from voiceprivacy.anonymization import (
    Embedding,
    PoolAnonymizer,
    PoolSelectionParams,
    SpeakerPool,
    anonymize_embedding,
    assign_pseudo_speakers,
    cosine_distance,
    select_candidates,
)
from voiceprivacy.anonymization.embedding import farthest_candidates, speaker_source
from voiceprivacy.protocol import PseudoMapping, validate_pseudo_mapping
from voiceprivacy.utils.dataloader import load_embedding_rows, write_embedding_rows
from voiceprivacy.utils.exceptions import ConfigurationError, ContractError, ValidationError
from voiceprivacy.utils.seeding import stream_rng


def random_pool(rng, size, dim, prefix="pool"):
    return [
        Embedding(vector=rng.normal(size=dim), speaker_id=f"{prefix}spk{i:04d}", utterance_id=f"{prefix}{i:04d}")
        for i in range(size)
    ]


def exhaustive_farthest(source, pool, n):
    eligible = [e for e in pool if e.key != source.key and e.speaker_id != source.speaker_id]
    ranked = sorted(eligible, key=lambda e: (-cosine_distance(source.vector, e.vector), e.key))
    return [e.key for e in ranked[:n]]


def test_cosine_distance():
    assert cosine_distance([1.0, 2.0], [1.0, 2.0]) == pytest.approx(0.0, abs=1e-15)
    assert cosine_distance([1.0, 2.0], [-1.0, -2.0]) == pytest.approx(2.0)
    assert cosine_distance([1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0)
    with pytest.raises(ContractError):
        cosine_distance([0.0, 0.0], [1.0, 0.0])


def test_toy_pool_farthest():
    pool = [
        Embedding(vector=np.array(v, dtype=float), speaker_id=f"s{i}", utterance_id=f"p{i}")
        for i, v in enumerate([[1, 0.1], [-1, 0.2], [0, 1], [-0.5, -1], [0.9, -0.1]])
    ]
    source = Embedding(vector=np.array([1.0, 0.0]), speaker_id="src")
    params = PoolSelectionParams(n_farthest=3, n_subset=3)
    expected = exhaustive_farthest(source, pool, 3)
    assert farthest_candidates(source, pool, 3) == expected == ["p1", "p3", "p2"]
    assert sorted(select_candidates(source, pool, params, np.random.default_rng(9))) == sorted(expected)

    pseudo = anonymize_embedding(source, pool, params)
    hand = np.mean([pool[1].vector, pool[3].vector, pool[2].vector], axis=0)
    np.testing.assert_allclose(pseudo.vector, hand, atol=1e-15)


def test_farthest_tie_breaks_by_id():
    pool = [
        Embedding(vector=np.array([0.0, 1.0]), speaker_id="b", utterance_id="b"),
        Embedding(vector=np.array([0.0, -1.0]), speaker_id="a", utterance_id="a"),
        Embedding(vector=np.array([1.0, 0.0]), speaker_id="c", utterance_id="c"),
    ]
    source = Embedding(vector=np.array([1.0, 0.0]), speaker_id="src")
    assert farthest_candidates(source, pool, 1) == ["a"]


def test_farthest_matches_exhaustive_sort():
    rng = np.random.default_rng(0)
    for _ in range(100):
        dim, size = int(rng.integers(2, 9)), int(rng.integers(5, 501))
        pool = random_pool(rng, size, dim)
        source = Embedding(vector=rng.normal(size=dim), speaker_id="source")
        n = int(rng.integers(1, size + 1))
        assert farthest_candidates(source, SpeakerPool(pool), n) == exhaustive_farthest(source, pool, n)


def test_pool_too_small():
    rng = np.random.default_rng(1)
    source = Embedding(vector=rng.normal(size=4), speaker_id="source")
    with pytest.raises(ConfigurationError, match="n_farthest=200 required but only 50"):
        anonymize_embedding(source, random_pool(rng, 50, 4), PoolSelectionParams())


def test_params_validation():
    with pytest.raises(ConfigurationError):
        PoolSelectionParams(n_farthest=10, n_subset=20)
    with pytest.raises(ConfigurationError):
        PoolSelectionParams(distance="plda")


def test_identical_candidates_and_full_subset():
    v = np.array([0.3, -0.2, 0.5])
    pool = [Embedding(vector=-v, speaker_id=f"s{i}", utterance_id=f"u{i}") for i in range(6)]
    source = Embedding(vector=v, speaker_id="src")
    params = PoolSelectionParams(n_farthest=4, n_subset=4)
    np.testing.assert_allclose(anonymize_embedding(source, pool, params).vector, -v)
    stage1 = farthest_candidates(source, pool, 4)
    for seed in range(5):
        assert select_candidates(source, pool, params, np.random.default_rng(seed)) == stage1


def test_mean_in_convex_hull():
    rng = np.random.default_rng(2)
    for _ in range(20):
        pool = random_pool(rng, 60, 3)
        params = PoolSelectionParams(n_farthest=20, n_subset=8, rng_seed=int(rng.integers(100)))
        source = Embedding(vector=rng.normal(size=3), speaker_id="src")
        candidates = select_candidates(source, pool, params, stream_rng(params.rng_seed, "src", "", 0))
        vectors = SpeakerPool(pool).vectors(candidates)
        pseudo = anonymize_embedding(source, pool, params)
        system = np.vstack([vectors.T, 1e3 * np.ones(len(candidates))])
        target = np.concatenate([pseudo.vector, [1e3]])
        _, residual = nnls(system, target)
        assert residual <= 1e-8


def test_length_norm():
    rng = np.random.default_rng(3)
    pool = random_pool(rng, 30, 5)
    source = Embedding(vector=rng.normal(size=5), speaker_id="src")
    pseudo = anonymize_embedding(source, pool, PoolSelectionParams(n_farthest=10, n_subset=5, length_norm=True))
    assert np.linalg.norm(pseudo.vector) == pytest.approx(1.0)


def test_assignment_rules_and_determinism():
    rng = np.random.default_rng(4)
    pool = random_pool(rng, 300, 8)
    utterances = {
        f"spk{s}": [Embedding(vector=rng.normal(size=8), speaker_id=f"spk{s}", utterance_id=f"spk{s}-u{u}") for u in range(3)]
        for s in range(10)
    }
    params = PoolSelectionParams(n_farthest=50, n_subset=10, rng_seed=11)
    runs = [assign_pseudo_speakers(utterances, pool, params) for _ in range(3)]
    audits = [json.dumps(run.to_audit()) for run in runs]
    assert audits[0] == audits[1] == audits[2]
    for a, b in zip(runs[0].entries.values(), runs[1].entries.values()):
        np.testing.assert_array_equal(a.embedding.vector, b.embedding.vector)

    assignment = runs[0]
    for speaker in utterances:
        enrollment, trial = assignment[(speaker, "enrollment")], assignment[(speaker, "trial")]
        assert enrollment.pseudo_id != trial.pseudo_id
        assert not np.array_equal(enrollment.embedding.vector, trial.embedding.vector)

    report = validate_pseudo_mapping(PseudoMapping.from_tuples(assignment.mapping_records(utterances)))
    assert report.ok


def test_two_speakers_far_pool():
    rng = np.random.default_rng(5)
    pool = [Embedding(vector=np.array([-1.0, 0.0]) + 0.1 * rng.normal(size=2), speaker_id=f"p{i}", utterance_id=f"p{i}")
            for i in range(20)]
    utterances = {
        "a": [Embedding(vector=np.array([1.0, 0.1]), speaker_id="a", utterance_id="a1")],
        "b": [Embedding(vector=np.array([1.0, -0.1]), speaker_id="b", utterance_id="b1")],
    }
    params = PoolSelectionParams(n_farthest=10, n_subset=4)
    assignment = assign_pseudo_speakers(utterances, pool, params, tags=["trial"])
    assert not np.array_equal(assignment[("a", "trial")].embedding.vector, assignment[("b", "trial")].embedding.vector)
    assert set(assignment[("a", "trial")].candidates) != set(assignment[("b", "trial")].candidates)


def test_collision_exhaustion():
    pool = [Embedding(vector=np.array([-1.0, float(i)]), speaker_id=f"p{i}", utterance_id=f"p{i}") for i in range(3)]
    utterances = {"a": [Embedding(vector=np.array([1.0, 0.0]), speaker_id="a", utterance_id="a1")]}
    params = PoolSelectionParams(n_farthest=3, n_subset=3)
    with pytest.raises(ValidationError):
        assign_pseudo_speakers(utterances, pool, params)


def test_speaker_source_single_utterance():
    e = Embedding(vector=np.array([0.5, 0.25]), speaker_id="a", utterance_id="a1")
    np.testing.assert_array_equal(speaker_source("a", [e]).vector, e.vector)


def test_pool_anonymizer_and_file_round_trip(tmp_path):
    rng = np.random.default_rng(6)
    pool = random_pool(rng, 40, 4)
    sources = [Embedding(vector=rng.normal(size=4), speaker_id=f"s{i % 2}", utterance_id=f"u{i}") for i in range(4)]
    assignment, outputs = PoolAnonymizer(pool, PoolSelectionParams(n_farthest=20, n_subset=5)).anonymize(sources)
    assert set(outputs) == {"enrollment", "trial"}
    assert [e.utterance_id for e in outputs["trial"]] == ["u0", "u1", "u2", "u3"]
    assert outputs["trial"][0].speaker_id == outputs["trial"][2].speaker_id

    path = tmp_path / "pseudo.txt"
    write_embedding_rows([(e.utterance_id, e.speaker_id, e.vector) for e in outputs["trial"]], path)
    rows = load_embedding_rows(path)
    for (utt, spk, vec), e in zip(rows, outputs["trial"]):
        assert (utt, spk) == (e.utterance_id, e.speaker_id)
        np.testing.assert_array_equal(vec, e.vector)
