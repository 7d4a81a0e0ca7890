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
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from voiceprivacy.constants.defaults import (
    DEFAULT_N_FARTHEST,
    DEFAULT_N_SUBSET,
    DEFAULT_SEED,
    MAX_COLLISION_REDRAWS,
    SUBSET_TAGS,
)
from voiceprivacy.utils.exceptions import ConfigurationError, ContractError, ValidationError
from voiceprivacy.utils.seeding import stable_hash, stream_rng

logger = logging.getLogger(__name__)


@dataclass
class Embedding:
    """
    Speaker embedding (e.g. an x-vector) with its labels.

    Parameters
    ----------
    vector : array-like of float
        Finite real vector; the dimension is data-driven.

    speaker_id : str
        Speaker label.

    utterance_id : str, default=None
        Utterance label; None for speaker-level embeddings.
    """

    vector: np.ndarray
    speaker_id: str
    utterance_id: Optional[str] = None

    def __post_init__(self) -> None:
        self.vector = np.asarray(self.vector, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(self.vector)):
            raise ContractError(f"voiceprivacy: embedding of {self.key} has non-finite entries")

    @property
    def key(self) -> str:
        """Identifier used for pool bookkeeping: the utterance id if set, else the speaker id."""
        return self.utterance_id if self.utterance_id is not None else self.speaker_id

    @property
    def dim(self) -> int:
        return self.vector.shape[0]


@dataclass(frozen=True)
class PoolSelectionParams:
    """
    Settings of the pool selection-and-averaging anonymizer.

    Parameters
    ----------
    n_farthest : int, default=200
        Number N of farthest pool candidates kept in the first stage.

    n_subset : int, default=100
        Number N* of candidates drawn at random from the first-stage set and averaged.

    distance : {'cosine'}, default='cosine'
        Distance between embeddings.

    rng_seed : int, default=0
        Seed of the per-speaker random streams.

    length_norm : bool, default=False
        Scale the averaged vector to unit L2 norm.
    """

    n_farthest: int = DEFAULT_N_FARTHEST
    n_subset: int = DEFAULT_N_SUBSET
    distance: str = "cosine"
    rng_seed: int = DEFAULT_SEED
    length_norm: bool = False

    def __post_init__(self) -> None:
        if not 0 < self.n_subset <= self.n_farthest:
            raise ConfigurationError(
                f"voiceprivacy: pool selection requires 0 < n_subset <= n_farthest, got n_subset={self.n_subset}, n_farthest={self.n_farthest}"
            )
        if self.distance != "cosine":
            raise ConfigurationError(f"voiceprivacy: unsupported distance {self.distance!r}, only 'cosine' is available")


class SpeakerPool:
    def __init__(self, embeddings: Sequence[Embedding]) -> None:
        """
        External pool of candidate embeddings with precomputed unit-norm vectors.

        Parameters
        ----------
        embeddings : sequence of Embedding
            Pool entries. Keys (utterance id, else speaker id) must be unique and norms nonzero.
        """
        self.embeddings = list(embeddings)
        self.keys = [e.key for e in self.embeddings]
        if len(set(self.keys)) != len(self.keys):
            raise ValidationError("voiceprivacy: pool entries must have unique ids")
        self.speaker_ids = [e.speaker_id for e in self.embeddings]
        if self.embeddings:
            dims = {e.dim for e in self.embeddings}
            if len(dims) != 1:
                raise ContractError(f"voiceprivacy: pool embeddings have mixed dimensions {sorted(dims)}")
            self.matrix = np.vstack([e.vector for e in self.embeddings])
        else:
            self.matrix = np.zeros((0, 0))
        norms = np.linalg.norm(self.matrix, axis=1)
        if np.any(norms == 0):
            raise ContractError("voiceprivacy: pool embeddings must have nonzero norm")
        self.unit = self.matrix / norms[:, None] if self.embeddings else self.matrix
        self.index = {key: i for i, key in enumerate(self.keys)}

    def __len__(self) -> int:
        return len(self.embeddings)

    def vectors(self, keys: Iterable[str]) -> np.ndarray:
        return self.matrix[[self.index[k] for k in keys]]


PoolLike = Union[SpeakerPool, Sequence[Embedding]]


def _as_pool(pool: PoolLike) -> SpeakerPool:
    return pool if isinstance(pool, SpeakerPool) else SpeakerPool(pool)


def cosine_distance(a: Union[Sequence[float], np.ndarray], b: Union[Sequence[float], np.ndarray]) -> float:
    """
    Cosine distance 1 - a.b / (|a| |b|), in [0, 2].

    Raises
    ------
    ContractError
        If either vector has zero norm.
    """
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    norm_a, norm_b = np.linalg.norm(a), np.linalg.norm(b)
    if norm_a == 0 or norm_b == 0:
        raise ContractError("voiceprivacy: cosine distance is undefined for zero-norm vectors")
    return float(np.clip(1.0 - np.dot(a, b) / (norm_a * norm_b), 0.0, 2.0))


def farthest_candidates(source: Embedding, pool: PoolLike, n_farthest: int) -> List[str]:
    """
    The `n_farthest` pool ids with the largest cosine distance to `source`.

    Pool entries sharing the source's id or speaker are excluded. Ties are broken by
    lexicographic id order.
    """
    pool = _as_pool(pool)
    norm = np.linalg.norm(source.vector)
    if norm == 0:
        raise ContractError(f"voiceprivacy: source embedding {source.key} has zero norm")
    if len(pool) and pool.matrix.shape[1] != source.dim:
        raise ContractError(
            f"voiceprivacy: source dimension {source.dim} differs from pool dimension {pool.matrix.shape[1]}"
        )

    eligible = [
        i
        for i, (key, speaker) in enumerate(zip(pool.keys, pool.speaker_ids))
        if key != source.key and speaker != source.speaker_id
    ]
    if len(eligible) < n_farthest:
        raise ConfigurationError(
            f"voiceprivacy: pool too small, n_farthest={n_farthest} required but only {len(eligible)} candidates available"
        )
    distances = 1.0 - pool.unit[eligible] @ (source.vector / norm)
    ranked = sorted(range(len(eligible)), key=lambda j: (-distances[j], pool.keys[eligible[j]]))
    return [pool.keys[eligible[j]] for j in ranked[:n_farthest]]


def select_candidates(
    source: Embedding,
    pool: PoolLike,
    params: PoolSelectionParams,
    rng: np.random.Generator,
) -> List[str]:
    """
    Two-stage candidate selection.

    Stage 1 keeps the N pool entries farthest from `source`; stage 2 draws N* of them uniformly
    without replacement with `rng`.

    Returns
    -------
    list of str
        Selected pool ids, in stage-1 rank order.

    Raises
    ------
    ConfigurationError
        If fewer than N eligible pool entries exist.
    """
    stage1 = farthest_candidates(source, pool, params.n_farthest)
    chosen = np.sort(rng.choice(len(stage1), size=params.n_subset, replace=False))
    return [stage1[i] for i in chosen]


def pseudo_speaker_id(speaker_id: str, tag: str, seed: int) -> str:
    """Derived pseudo-speaker label `pseudo-<hash of speaker, tag and seed>`."""
    return f"pseudo-{stable_hash(speaker_id, tag, seed):016x}"


def anonymize_embedding(
    source: Embedding,
    pool: PoolLike,
    params: PoolSelectionParams,
    rng: Optional[np.random.Generator] = None,
    tag: str = "",
) -> Embedding:
    """
    Pseudo-speaker embedding: the mean of the candidates chosen by `select_candidates`.

    Parameters
    ----------
    source : Embedding
        Embedding to anonymize.

    pool : SpeakerPool or sequence of Embedding
        External speaker pool.

    params : PoolSelectionParams
        Selection settings.

    rng : numpy Generator, default=None
        Random stream for stage 2. If None, the first stream `assign_pseudo_speakers` would use
        for (speaker, tag).

    tag : str, default=''
        Subset tag folded into the pseudo-speaker id.

    Returns
    -------
    Embedding
        Averaged vector labelled with the derived pseudo-speaker id and the source's utterance id.
    """
    pool = _as_pool(pool)
    rng = rng if rng is not None else stream_rng(params.rng_seed, source.speaker_id, tag, 0)
    candidates = select_candidates(source, pool, params, rng)
    return _average(source, pool, candidates, params, tag)


def _average(source, pool: SpeakerPool, candidates, params, tag) -> Embedding:
    vector = pool.vectors(candidates).mean(axis=0)
    if params.length_norm:
        vector = vector / np.linalg.norm(vector)
    return Embedding(
        vector=vector,
        speaker_id=pseudo_speaker_id(source.speaker_id, tag, params.rng_seed),
        utterance_id=source.utterance_id,
    )


@dataclass
class PseudoSpeaker:
    """Pseudo-speaker of one (speaker, subset tag) with the pool ids it averages."""

    embedding: Embedding
    candidates: List[str]
    redraws: int = 0

    @property
    def pseudo_id(self) -> str:
        return self.embedding.speaker_id


@dataclass
class PseudoSpeakerAssignment:
    """Map from (speaker_id, subset tag) to the assigned pseudo-speaker."""

    entries: Dict[Tuple[str, str], PseudoSpeaker] = field(default_factory=dict)
    rng_seed: int = DEFAULT_SEED

    def __getitem__(self, key: Tuple[str, str]) -> PseudoSpeaker:
        return self.entries[key]

    def __contains__(self, key: Tuple[str, str]) -> bool:
        return key in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def mapping_records(
        self, utterances: Dict[str, Sequence[Embedding]]
    ) -> List[Tuple[str, str, str, str]]:
        """Per-utterance `(utterance_id, speaker_id, tag, pseudo_id)` records for the consistency validator."""
        records = []
        for (speaker_id, tag), pseudo in sorted(self.entries.items()):
            for embedding in utterances.get(speaker_id, []):
                records.append((embedding.key, speaker_id, tag, pseudo.pseudo_id))
        return records

    def to_audit(self) -> Dict[str, Any]:
        """JSON-serializable audit: seed, and per (speaker, tag) the pseudo id, candidates and redraws."""
        return {
            "rng_seed": self.rng_seed,
            "assignments": [
                {
                    "speaker_id": speaker_id,
                    "tag": tag,
                    "pseudo_id": pseudo.pseudo_id,
                    "redraws": pseudo.redraws,
                    "candidates": list(pseudo.candidates),
                }
                for (speaker_id, tag), pseudo in sorted(self.entries.items())
            ],
        }


def speaker_source(speaker_id: str, embeddings: Sequence[Embedding]) -> Embedding:
    """Speaker-level source vector: the mean of the speaker's utterance embeddings."""
    if not embeddings:
        raise ContractError(f"voiceprivacy: speaker {speaker_id} has no embeddings")
    return Embedding(vector=np.mean([e.vector for e in embeddings], axis=0), speaker_id=speaker_id)


def assign_pseudo_speakers(
    embeddings: Dict[str, Sequence[Embedding]],
    pool: PoolLike,
    params: PoolSelectionParams,
    tags: Sequence[str] = SUBSET_TAGS,
) -> PseudoSpeakerAssignment:
    """
    Assigns one pseudo-speaker per (speaker, tag).

    Speakers are processed in sorted order and tags in the given order. Each draw uses the
    stream seeded by (`params.rng_seed`, speaker, tag, counter). A draw whose candidate set equals
    one already assigned (to another speaker, or to the same speaker under another tag) is
    re-drawn with the counter incremented.

    Parameters
    ----------
    embeddings : dict of str to sequence of Embedding
        Utterance embeddings grouped by speaker.

    pool : SpeakerPool or sequence of Embedding
        External speaker pool.

    params : PoolSelectionParams
        Selection settings.

    tags : sequence of str, default=('enrollment', 'trial')
        Subset tags to assign.

    Raises
    ------
    ValidationError
        If a collision persists after 8 re-draws.
    """
    pool = _as_pool(pool)
    assignment = PseudoSpeakerAssignment(rng_seed=params.rng_seed)
    used: Dict[frozenset, Tuple[str, str]] = {}
    for speaker_id in sorted(embeddings):
        source = speaker_source(speaker_id, embeddings[speaker_id])
        stage1 = farthest_candidates(source, pool, params.n_farthest)
        for tag in tags:
            for counter in range(MAX_COLLISION_REDRAWS + 1):
                rng = stream_rng(params.rng_seed, speaker_id, tag, counter)
                chosen = np.sort(rng.choice(len(stage1), size=params.n_subset, replace=False))
                candidates = [stage1[i] for i in chosen]
                owner = used.get(frozenset(candidates))
                if owner is None:
                    break
                logger.debug(
                    "Candidate set of (%s, %s) collides with %s, re-drawing", speaker_id, tag, owner
                )
            else:
                raise ValidationError(
                    f"voiceprivacy: could not draw a distinct candidate set for ({speaker_id}, {tag}) after {MAX_COLLISION_REDRAWS} re-draws; the pool is too small or degenerate"
                )
            used[frozenset(candidates)] = (speaker_id, tag)
            assignment.entries[(speaker_id, tag)] = PseudoSpeaker(
                embedding=_average(source, pool, candidates, params, tag),
                candidates=candidates,
                redraws=counter,
            )
    return assignment


class PoolAnonymizer:
    def __init__(self, pool: PoolLike, params: Optional[PoolSelectionParams] = None) -> None:
        """
        Class for anonymizing speaker embeddings by averaging farthest pool candidates.

        Parameters
        ----------
        pool : SpeakerPool or sequence of Embedding
            External speaker pool.

        params : PoolSelectionParams, default=None
            Selection settings. If None, N=200, N*=100 and seed 0 are used.
        """
        self.pool = _as_pool(pool)
        self.params = params if params is not None else PoolSelectionParams()

    def anonymize(
        self, embeddings: Sequence[Embedding], tags: Sequence[str] = SUBSET_TAGS
    ) -> Tuple[PseudoSpeakerAssignment, Dict[str, List[Embedding]]]:
        """
        Anonymizes utterance embeddings with speaker-level consistency.

        Returns
        -------
        tuple
            The assignment, and for each tag the list of per-utterance pseudo embeddings
            (one per input utterance, labelled with the utterance id and pseudo-speaker id).
        """
        grouped: Dict[str, List[Embedding]] = {}
        for embedding in embeddings:
            grouped.setdefault(embedding.speaker_id, []).append(embedding)
        assignment = assign_pseudo_speakers(grouped, self.pool, self.params, tags=tags)
        outputs = {
            tag: [
                Embedding(
                    vector=assignment[(e.speaker_id, tag)].embedding.vector,
                    speaker_id=assignment[(e.speaker_id, tag)].pseudo_id,
                    utterance_id=e.utterance_id,
                )
                for e in embeddings
            ]
            for tag in tags
        }
        return assignment, outputs
