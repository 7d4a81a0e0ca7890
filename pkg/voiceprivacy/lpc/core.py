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
from typing import Optional, Sequence, Union

import numpy as np
from scipy.signal import lfilter, lfiltic

from voiceprivacy.constants.defaults import PRE_EMPHASIS, SILENCE_THRESHOLD
from voiceprivacy.utils.exceptions import ContractError, NumericalError

logger = logging.getLogger(__name__)

ArrayLike = Union[Sequence[float], np.ndarray]


@dataclass
class LpcModel:
    """
    All-pole model with prediction polynomial A(z) = 1 - sum_k a_k z^-k.

    Parameters
    ----------
    coeffs : array-like of float
        Prediction coefficients a_1..a_p.

    gain : float, default=1.0
        Residual RMS of the frame the model was fitted on.

    reflection : array-like of float, default=None
        Reflection coefficients k_1..k_p produced by the Levinson-Durbin recursion.

    error : float, default=0.0
        Final prediction-error energy.

    degenerate : bool, default=False
        True when the model was fitted on a silent frame; such frames pass through unmodified.

    poles : np.ndarray, default=None
        Poles of 1/A(z) when they are already known (set by `poles_to_coeffs`).
    """

    coeffs: np.ndarray
    gain: float = 1.0
    reflection: Optional[np.ndarray] = None
    error: float = 0.0
    degenerate: bool = False
    poles: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(self.coeffs)):
            raise ContractError("voiceprivacy: LPC coefficients must be finite")

    @property
    def order(self) -> int:
        return self.coeffs.shape[0]

    @property
    def polynomial(self) -> np.ndarray:
        """Coefficients [1, -a_1, ..., -a_p] of A(z), usable as an `lfilter` denominator."""
        return np.concatenate([[1.0], -self.coeffs])

    def max_pole_modulus(self) -> float:
        """Largest pole modulus of 1/A(z); 0 for an order-0 model."""
        if self.order == 0:
            return 0.0
        poles = self.poles if self.poles is not None else np.roots(self.polynomial)
        return float(np.max(np.abs(poles)))


def autocorrelate(frame: ArrayLike, max_lag: int) -> np.ndarray:
    """
    Biased autocorrelation r[k] = sum_n x[n] x[n+k] for k = 0..max_lag.

    Lags at or beyond the frame length are 0, so an empty frame yields all zeros.
    """
    x = np.asarray(frame, dtype=np.float64).reshape(-1)
    r = np.zeros(max_lag + 1)
    n = x.shape[0]
    if n == 0:
        return r
    full = np.correlate(x, x, mode="full")[n - 1 :]
    upto = min(max_lag + 1, n)
    r[:upto] = full[:upto]
    return r


def levinson_durbin(
    autocorr: ArrayLike,
    order: int,
    n_samples: Optional[int] = None,
    frame_index: Optional[int] = None,
) -> LpcModel:
    """
    Solves the Toeplitz normal equations for the prediction coefficients.

    Parameters
    ----------
    autocorr : array-like of float
        Autocorrelation sequence r[0..], at least `order` + 1 values.

    order : int
        Prediction order p >= 0.

    n_samples : int, default=None
        Frame length used to turn the final prediction-error energy into a residual RMS
        (gain = sqrt(E_p / n_samples)). If None, gain = sqrt(E_p).

    frame_index : int, default=None
        Reported in numerical errors.

    Returns
    -------
    LpcModel
        Minimum-phase model (all reflection coefficients strictly inside (-1, 1)). A frame with
        r[0] below the silence threshold yields a zero-coefficient model flagged `degenerate`.

    Raises
    ------
    NumericalError
        If the sequence is not positive definite (a reflection coefficient reaches magnitude 1).
    """
    r = np.asarray(autocorr, dtype=np.float64).reshape(-1)
    assert order >= 0, "voiceprivacy: LPC order must be non-negative"
    if r.shape[0] < order + 1:
        raise ContractError(
            f"voiceprivacy: levinson_durbin needs {order + 1} autocorrelation values, got {r.shape[0]}"
        )
    if r[0] < SILENCE_THRESHOLD:
        return LpcModel(
            coeffs=np.zeros(order), gain=0.0, reflection=np.zeros(order), error=0.0, degenerate=True
        )

    a = np.zeros(order)
    k = np.zeros(order)
    error = r[0]
    for i in range(order):
        acc = r[i + 1] - np.dot(a[:i], r[i:0:-1])
        k_i = acc / error
        if not np.isfinite(k_i) or abs(k_i) >= 1.0:
            raise NumericalError(
                "autocorrelation sequence is not positive definite",
                frame_index=frame_index,
                coefficients=r[: order + 1],
            )
        previous = a[:i].copy()
        a[:i] = previous - k_i * previous[::-1]
        a[i] = k_i
        k[i] = k_i
        error *= 1.0 - k_i * k_i

    norm = n_samples if n_samples else 1
    return LpcModel(coeffs=a, gain=float(np.sqrt(error / norm)), reflection=k, error=float(error))


def _history(values: Optional[ArrayLike], order: int) -> np.ndarray:
    """Most recent `order` past samples, newest first, zero-filled."""
    past = np.zeros(order)
    if values is None or order == 0:
        return past
    v = np.asarray(values, dtype=np.float64).reshape(-1)[-order:][::-1]
    past[: v.shape[0]] = v
    return past


def inverse_filter(
    frame: ArrayLike, model: LpcModel, history: Optional[ArrayLike] = None
) -> np.ndarray:
    """
    Prediction residual e[n] = x[n] - sum_k a_k x[n-k].

    Parameters
    ----------
    frame : array-like of float
        Input samples.

    model : LpcModel
        Prediction model.

    history : array-like of float, default=None
        Input samples preceding the frame in chronological order. None means zero initial state.

    Returns
    -------
    np.ndarray
        Residual of the same length as `frame`.
    """
    x = np.asarray(frame, dtype=np.float64).reshape(-1)
    if model.order == 0 or x.shape[0] == 0:
        return x.copy()
    b = model.polynomial
    if history is None:
        return lfilter(b, [1.0], x)
    zi = lfiltic(b, [1.0], np.zeros(1), _history(history, model.order))
    return lfilter(b, [1.0], x, zi=zi)[0]


def synthesis_filter(
    residual: ArrayLike,
    model: LpcModel,
    initial_state: Optional[ArrayLike] = None,
    check_stability: bool = True,
) -> np.ndarray:
    """
    All-pole synthesis y[n] = e[n] + sum_k a_k y[n-k], the inverse of `inverse_filter`.

    Parameters
    ----------
    residual : array-like of float
        Excitation signal.

    model : LpcModel
        Synthesis model. Must be stable unless the caller has already bounded its poles.

    initial_state : array-like of float, default=None
        Output samples preceding the frame in chronological order. None means zero state.

    check_stability : bool, default=True
        Whether to reject models with a pole on or outside the unit circle.

    Raises
    ------
    NumericalError
        If `check_stability` is set and the model is unstable.
    """
    e = np.asarray(residual, dtype=np.float64).reshape(-1)
    if model.order == 0 or e.shape[0] == 0:
        return e.copy()
    if check_stability:
        modulus = model.max_pole_modulus()
        if modulus >= 1.0:
            raise NumericalError(
                f"unstable synthesis filter, max pole modulus {modulus:.6f} >= 1",
                coefficients=model.coeffs,
            )
    a = model.polynomial
    if initial_state is None:
        return lfilter([1.0], a, e)
    zi = lfiltic([1.0], a, _history(initial_state, model.order))
    return lfilter([1.0], a, e, zi=zi)[0]


def pre_emphasis(x: ArrayLike, coef: float = PRE_EMPHASIS) -> np.ndarray:
    """First-order pre-emphasis y[n] = x[n] - coef * x[n-1] with zero initial state."""
    return lfilter([1.0, -coef], [1.0], np.asarray(x, dtype=np.float64))


def de_emphasis(y: ArrayLike, coef: float = PRE_EMPHASIS) -> np.ndarray:
    """Inverse of `pre_emphasis`."""
    return lfilter([1.0], [1.0, -coef], np.asarray(y, dtype=np.float64))


def analyze(
    frame: ArrayLike, order: int, frame_index: Optional[int] = None
) -> LpcModel:
    """
    Autocorrelation-method LPC fit of one frame.

    A frame with at most `order` nonzero samples (e.g. the tail of a signal) is returned as
    degenerate, like a silent one.
    """
    x = np.asarray(frame, dtype=np.float64).reshape(-1)
    if np.count_nonzero(x) <= order:
        return LpcModel(
            coeffs=np.zeros(order), gain=0.0, reflection=np.zeros(order), error=0.0, degenerate=True
        )
    r = autocorrelate(x, order)
    return levinson_durbin(r, order, n_samples=max(x.shape[0], 1), frame_index=frame_index)
