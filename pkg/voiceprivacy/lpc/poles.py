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

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from voiceprivacy.constants.defaults import CONJUGATE_TOL, ROOT_RESIDUAL_TOL
from voiceprivacy.lpc.core import LpcModel
from voiceprivacy.utils.exceptions import ContractError, NumericalError

NEWTON_STEPS = 3


@dataclass
class PoleSet:
    """
    Poles of an all-pole filter, stored as a complex array.

    A pole set describing a real-coefficient filter is closed under complex conjugation.
    Representatives of conjugate pairs are the poles with positive imaginary part.
    """

    poles: np.ndarray

    def __post_init__(self) -> None:
        self.poles = np.asarray(self.poles, dtype=np.complex128).reshape(-1)

    def __len__(self) -> int:
        return self.poles.shape[0]

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.poles)

    @property
    def angles(self) -> np.ndarray:
        """Angles in (-pi, pi]."""
        return np.angle(self.poles)

    def real_mask(self, tol: float = CONJUGATE_TOL) -> np.ndarray:
        return np.abs(self.poles.imag) <= tol * np.maximum(1.0, np.abs(self.poles))

    def is_conjugate_closed(self, tol: float = CONJUGATE_TOL) -> bool:
        """True if every non-real pole has a distinct partner equal to its conjugate within `tol`."""
        real = self.real_mask(tol)
        upper = self.poles[~real & (self.poles.imag > 0)]
        lower = list(self.poles[~real & (self.poles.imag < 0)])
        if len(upper) != len(lower):
            return False
        for p in upper:
            if not lower:
                return False
            distances = np.abs(np.conj(p) - np.asarray(lower))
            best = int(np.argmin(distances))
            if distances[best] > tol * max(1.0, abs(p)):
                return False
            lower.pop(best)
        return True

    def sorted(self) -> "PoleSet":
        """Canonical order: real poles ascending, then conjugate pairs by angle (upper pole first)."""
        real = self.real_mask()
        reals = np.sort(self.poles[real].real).astype(np.complex128)
        upper = self.poles[~real & (self.poles.imag > 0)]
        upper = upper[np.lexsort((np.abs(upper), np.angle(upper)))]
        pairs = np.column_stack([upper, np.conj(upper)]).reshape(-1)
        return PoleSet(np.concatenate([reals, pairs]))


def _residual_scale(polynomial: np.ndarray, root: complex) -> float:
    powers = np.abs(root) ** np.arange(polynomial.shape[0] - 1, -1, -1)
    return float(np.dot(np.abs(polynomial), powers))


def _newton_polish(polynomial: np.ndarray, root: complex) -> complex:
    derivative = np.polyder(polynomial)
    for _ in range(NEWTON_STEPS):
        slope = np.polyval(derivative, root)
        if slope == 0:
            break
        root = root - np.polyval(polynomial, root) / slope
    return root


def find_poles(model: LpcModel) -> PoleSet:
    """
    Roots of z^p - a_1 z^(p-1) - ... - a_p, paired into conjugate pairs.

    Roots come from the companion-matrix eigenvalues (`numpy.roots`); each root must satisfy
    |A(root)| <= 1e-8 times the polynomial's magnitude scale at |root|, otherwise it is polished
    by a few Newton steps and checked again.

    Raises
    ------
    ContractError
        If the model has order 0.
    NumericalError
        If a root fails the residual certificate or the roots cannot be paired.
    """
    if model.order < 1:
        raise ContractError("voiceprivacy: find_poles requires a model of order >= 1")
    polynomial = model.polynomial
    try:
        roots = np.roots(polynomial)
    except np.linalg.LinAlgError as err:
        raise NumericalError(f"root finder did not converge: {err}", coefficients=model.coeffs)

    certified = []
    for root in roots:
        if abs(np.polyval(polynomial, root)) > ROOT_RESIDUAL_TOL * _residual_scale(polynomial, root):
            root = _newton_polish(polynomial, root)
            if abs(np.polyval(polynomial, root)) > ROOT_RESIDUAL_TOL * _residual_scale(polynomial, root):
                raise NumericalError(
                    f"root {root} fails the polynomial residual check", coefficients=model.coeffs
                )
        certified.append(root)
    roots = np.asarray(certified, dtype=np.complex128)

    real = np.abs(roots.imag) <= CONJUGATE_TOL * np.maximum(1.0, np.abs(roots))
    reals = roots[real].real.astype(np.complex128)
    upper = roots[~real & (roots.imag > 0)]
    lower = roots[~real & (roots.imag < 0)]
    if upper.shape[0] != lower.shape[0]:
        raise NumericalError("roots are not closed under conjugation", coefficients=model.coeffs)
    # Pair each upper root with its exact conjugate so the set stays closed.
    return PoleSet(np.concatenate([reals, upper, np.conj(upper)])).sorted()


def poles_to_coeffs(poleset: Union[PoleSet, Sequence[complex]], gain: float = 1.0) -> LpcModel:
    """
    Expands a conjugate-closed pole set into prediction coefficients.

    Parameters
    ----------
    poleset : PoleSet or sequence of complex
        Poles of the all-pole filter.

    gain : float, default=1.0
        Gain carried onto the returned model.

    Returns
    -------
    LpcModel
        Model whose monic polynomial has exactly these roots; an empty set gives order 0.

    Raises
    ------
    ContractError
        If the set is not closed under conjugation.
    """
    if not isinstance(poleset, PoleSet):
        poleset = PoleSet(poleset)
    if len(poleset) == 0:
        return LpcModel(coeffs=np.zeros(0), gain=gain, poles=poleset.poles)
    if not poleset.is_conjugate_closed():
        raise ContractError("voiceprivacy: pole set is not closed under complex conjugation")

    expanded = np.poly(poleset.poles)
    imag = np.max(np.abs(expanded.imag))
    if imag > CONJUGATE_TOL * max(1.0, float(np.max(np.abs(expanded.real)))):
        raise NumericalError(
            f"expanded coefficients have imaginary parts up to {imag:.3e}",
            coefficients=expanded.real[1:],
        )
    return LpcModel(coeffs=-expanded.real[1:], gain=gain, poles=poleset.poles)
