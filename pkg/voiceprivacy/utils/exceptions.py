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

"""Exception hierarchy shared by all voiceprivacy modules."""

from typing import Any, Iterable, Optional, Sequence


class VoicePrivacyError(Exception):
    """Base class of all errors raised by voiceprivacy."""


class WavFormatError(VoicePrivacyError, ValueError):
    """Raised when a WAV file is not mono 16-bit signed PCM. `field` names the offending header field."""

    def __init__(self, message: str, field: str) -> None:
        super().__init__(message)
        self.field = field


class AudioIOError(VoicePrivacyError, OSError):
    """Raised when audio cannot be read (missing, truncated) or written."""


class ContractError(VoicePrivacyError, ValueError):
    """Raised when the inputs of an operation violate its preconditions."""


class NumericalError(VoicePrivacyError, ArithmeticError):
    """
    Raised when a numerical routine cannot produce a trustworthy result.

    Parameters
    ----------
    message : str
        Description of the failure.

    frame_index : int, default=None
        Index of the frame being processed, when known.

    coefficients : sequence of float, default=None
        Coefficients echoed for diagnosis.
    """

    def __init__(
        self,
        message: str,
        frame_index: Optional[int] = None,
        coefficients: Optional[Sequence[float]] = None,
    ) -> None:
        self.frame_index = frame_index
        self.coefficients = None if coefficients is None else [float(c) for c in coefficients]
        details = []
        if frame_index is not None:
            details.append(f"frame {frame_index}")
        if self.coefficients is not None:
            details.append(f"coefficients {self.coefficients}")
        super().__init__(message if not details else f"{message} ({'; '.join(details)})")

    def at_frame(self, frame_index: int) -> "NumericalError":
        """Returns a copy of this error tagged with a frame index."""
        base = str(self.args[0]).split(" (")[0]
        return NumericalError(base, frame_index=frame_index, coefficients=self.coefficients)


class ConfigurationError(VoicePrivacyError, ValueError):
    """Raised for invalid parameters, e.g. a speaker pool smaller than the requested selection."""


class ParseError(VoicePrivacyError, ValueError):
    """Raised for a malformed line in a text input file."""

    def __init__(self, message: str, path: Any = None, line_number: Optional[int] = None) -> None:
        self.path = path
        self.line_number = line_number
        location = ""
        if path is not None:
            location = f"{path}:{line_number}: " if line_number is not None else f"{path}: "
        elif line_number is not None:
            location = f"line {line_number}: "
        super().__init__(f"{location}{message}")


class ValidationError(VoicePrivacyError, ValueError):
    """Raised when parsed data violates a structural rule (duplicates, unresolvable collisions)."""


class ReconciliationError(VoicePrivacyError, ValueError):
    """Raised when two keyed inputs do not match. `keys` lists the offending keys."""

    def __init__(self, message: str, keys: Iterable[Any] = ()) -> None:
        self.keys = list(keys)
        shown = ", ".join(str(k) for k in self.keys[:20])
        more = f" (+{len(self.keys) - 20} more)" if len(self.keys) > 20 else ""
        super().__init__(f"{message}: {shown}{more}" if self.keys else message)
