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

import numpy as np
import pytest
from scipy.signal import lfilter

from voiceprivacy.lpc import (
    LpcModel,
    PoleSet,
    analyze,
    autocorrelate,
    de_emphasis,
    find_poles,
    inverse_filter,
    levinson_durbin,
    poles_to_coeffs,
    pre_emphasis,
    synthesis_filter,
)
from voiceprivacy.utils.exceptions import ContractError, NumericalError


def random_stable_poles(rng, order, max_modulus=0.95):
    n_pairs, n_real = order // 2, order % 2
    radius = rng.uniform(0.1, max_modulus, size=n_pairs)
    angle = rng.uniform(0.05, np.pi - 0.05, size=n_pairs)
    upper = radius * np.exp(1j * angle)
    reals = rng.uniform(-max_modulus, max_modulus, size=n_real)
    return np.concatenate([reals, upper, np.conj(upper)])


def match_poles(a, b):
    """Greedy nearest matching of two pole sets; returns the largest distance."""
    remaining = list(b)
    worst = 0.0
    for p in a:
        j = int(np.argmin([abs(p - q) for q in remaining]))
        worst = max(worst, abs(p - remaining.pop(j)))
    return worst


def test_autocorrelate_impulse_and_ones():
    np.testing.assert_array_equal(autocorrelate([1.0, 0, 0, 0, 0], 3), [1.0, 0, 0, 0])
    np.testing.assert_array_equal(autocorrelate(np.ones(8), 4), [8, 7, 6, 5, 4])
    np.testing.assert_array_equal(autocorrelate(np.ones(2), 4), [2, 1, 0, 0, 0])
    np.testing.assert_array_equal(autocorrelate([], 2), [0, 0, 0])


def test_autocorrelate_double_loop():
    x = np.random.default_rng(0).normal(size=64)
    expected = [sum(x[n] * x[n + k] for n in range(64 - k)) for k in range(11)]
    np.testing.assert_allclose(autocorrelate(x, 10), expected, atol=1e-12)


def test_levinson_recovers_ar2():
    a1, a2 = 2 * 0.9 * np.cos(0.3), -0.81
    impulse = np.zeros(4000)
    impulse[0] = 1.0
    x = lfilter([1.0], [1.0, -a1, -a2], impulse)
    model = analyze(x, 2)
    np.testing.assert_allclose(model.coeffs, [a1, a2], atol=1e-3)
    assert model.reflection.shape == (2,)
    assert model.error > 0


def test_levinson_order_zero_and_silence():
    model = levinson_durbin([4.0, 1.0], 0, n_samples=4)
    assert model.order == 0 and model.gain == 1.0
    silent = analyze(np.zeros(320), 20)
    assert silent.degenerate and silent.order == 20 and not np.any(silent.coeffs)


def test_levinson_minimum_phase_on_random_frames():
    rng = np.random.default_rng(1)
    for _ in range(50):
        frame = rng.normal(size=320) * np.hanning(320)
        model = analyze(frame, int(rng.integers(1, 25)))
        assert model.max_pole_modulus() < 1.0
        assert np.all(np.abs(model.reflection) < 1.0)


def test_levinson_rejects_indefinite_sequence():
    with pytest.raises(NumericalError) as info:
        levinson_durbin([1.0, 1.0, 0.5], 2, frame_index=7)
    assert info.value.frame_index == 7
    assert "frame 7" in str(info.value)
    with pytest.raises(ContractError):
        levinson_durbin([1.0, 0.5], 4)


def test_inverse_filter_recovers_excitation():
    rng = np.random.default_rng(2)
    excitation = rng.normal(size=2000)
    model = LpcModel(coeffs=[2 * 0.9 * np.cos(0.3), -0.81])
    x = lfilter([1.0], model.polynomial, excitation)
    np.testing.assert_allclose(inverse_filter(x, model), excitation, atol=1e-10)
    frame = rng.normal(size=16)
    np.testing.assert_array_equal(inverse_filter(frame, LpcModel(coeffs=[])), frame)
    assert not np.any(inverse_filter(np.zeros(32), model))


def test_analysis_synthesis_round_trip_with_state():
    rng = np.random.default_rng(3)
    for _ in range(20):
        order = int(rng.integers(1, 21))
        model = poles_to_coeffs(random_stable_poles(rng, order))
        x = rng.normal(size=400)
        past, frame = x[:200], x[200:]
        residual = inverse_filter(frame, model, history=past)
        np.testing.assert_allclose(synthesis_filter(residual, model, initial_state=past), frame, atol=1e-10)
        np.testing.assert_allclose(synthesis_filter(inverse_filter(x, model), model), x, atol=1e-10)


def test_synthesis_zero_and_unstable():
    model = LpcModel(coeffs=[0.5])
    assert not np.any(synthesis_filter(np.zeros(10), model))
    with pytest.raises(NumericalError):
        synthesis_filter(np.ones(10), LpcModel(coeffs=[1.05]))


def test_find_poles_real_and_pair():
    poles = find_poles(LpcModel(coeffs=[0.9]))
    np.testing.assert_allclose(poles.poles, [0.9])

    pair = 0.95 * np.exp(1.2j)
    model = poles_to_coeffs([pair, np.conj(pair)])
    recovered = find_poles(model)
    assert len(recovered) == 2 and recovered.is_conjugate_closed()
    assert match_poles(recovered.poles, [pair, np.conj(pair)]) <= 1e-8


def test_find_poles_residual_certificate():
    rng = np.random.default_rng(4)
    for _ in range(30):
        model = poles_to_coeffs(random_stable_poles(rng, 20))
        model = LpcModel(coeffs=model.coeffs)
        scale = np.sum(np.abs(model.polynomial))
        for root in find_poles(model).poles:
            assert abs(np.polyval(model.polynomial, root)) <= 1e-8 * scale


def test_find_poles_order_zero():
    with pytest.raises(ContractError):
        find_poles(LpcModel(coeffs=[]))


def test_poles_to_coeffs():
    np.testing.assert_allclose(poles_to_coeffs([0.9]).coeffs, [0.9])
    assert poles_to_coeffs(PoleSet(np.zeros(0, dtype=complex))).order == 0
    with pytest.raises(ContractError):
        poles_to_coeffs([0.5 + 0.5j])


def test_pole_round_trip():
    rng = np.random.default_rng(5)
    for _ in range(30):
        poles = random_stable_poles(rng, int(rng.integers(1, 21)))
        model = LpcModel(coeffs=poles_to_coeffs(poles).coeffs)
        assert np.all(np.isreal(model.coeffs))
        assert match_poles(find_poles(model).poles, poles) <= 1e-5


def test_pre_emphasis_inverse():
    x = np.random.default_rng(6).normal(size=500)
    np.testing.assert_allclose(de_emphasis(pre_emphasis(x)), x, atol=1e-12)
    np.testing.assert_allclose(pre_emphasis([1.0, 1.0], coef=0.5), [1.0, 0.5])
