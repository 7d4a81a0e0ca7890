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

from voiceprivacy.anonymization.embedding import (
    Embedding,
    PoolAnonymizer,
    PoolSelectionParams,
    PseudoSpeakerAssignment,
    SpeakerPool,
    anonymize_embedding,
    assign_pseudo_speakers,
    cosine_distance,
    select_candidates,
)
from voiceprivacy.anonymization.mcadams import (
    McAdamsAnonymizer,
    McAdamsParams,
    anonymize_buffer,
    anonymize_corpus,
    anonymize_frame,
    draw_alpha,
    transform_poles,
)

__all__ = [
    "Embedding",
    "McAdamsAnonymizer",
    "McAdamsParams",
    "PoolAnonymizer",
    "PoolSelectionParams",
    "PseudoSpeakerAssignment",
    "SpeakerPool",
    "anonymize_buffer",
    "anonymize_corpus",
    "anonymize_embedding",
    "anonymize_frame",
    "assign_pseudo_speakers",
    "cosine_distance",
    "draw_alpha",
    "select_candidates",
    "transform_poles",
]
