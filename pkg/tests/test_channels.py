import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmultihop.channels import (
    NoiseKind,
    amplitude_bracket,
    amplitude_kraus,
    apply_channel,
    apply_channel_many,
    coherent_noise,
    dressed_coefficients,
    gamma,
    kraus_set,
    mirrored,
    phase_bracket,
    phase_kraus,
)
from qmultihop.qmath import basis_ket, dm, is_psd
from qmultihop.states import ClusterParams, make_cluster
from qmultihop.teleport import noisy_cluster_ket

XI = [i / 10 for i in range(11)]
taus = st.tuples(*[st.floats(0.05, 1.0)] * 4)


def random_dm(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(2**n, 2**n)) + 1j * rng.normal(size=(2**n, 2**n))
    r = a @ a.conj().T
    return r / np.trace(r)


class TestKraus:
    @pytest.mark.parametrize("xi", XI)
    def test_completeness(self, xi):
        for kind in ("amp", "phase"):
            assert kraus_set(NoiseKind(kind, xi)).completeness_error() < 1e-12

    def test_out_of_range_rate(self):
        with pytest.raises(ValueError):
            NoiseKind.amplitude(1.2)
        with pytest.raises(ValueError):
            NoiseKind("phase", -0.1)
        assert amplitude_kraus(1.5).completeness_error() > 0.1

    def test_full_amplitude_damping_resets(self):
        out = apply_channel(dm(basis_ket("1")), 0, amplitude_kraus(1.0))
        np.testing.assert_allclose(out, dm(basis_ket("0")), atol=1e-15)

    def test_mirrored_relaxes_to_one(self):
        out = apply_channel(dm(basis_ket("0")), 0, mirrored(amplitude_kraus(1.0)))
        np.testing.assert_allclose(out, dm(basis_ket("1")), atol=1e-15)

    def test_phase_damping_scales_coherence(self):
        plus = np.array([1, 1]) / np.sqrt(2)
        out = apply_channel(dm(plus), 0, phase_kraus(0.3))
        assert abs(out[0, 1] - 0.5 * 0.7) < 1e-12
        assert abs(out[0, 0] - 0.5) < 1e-12

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0, 1), st.sampled_from(["amp", "phase"]), st.integers(0, 2**31),
           st.lists(st.integers(0, 2), min_size=1, max_size=3, unique=True))
    def test_cptp_properties(self, xi, kind, seed, qubits):
        rho = random_dm(3, seed)
        out = apply_channel_many(rho, qubits, kraus_set(NoiseKind(kind, xi)))
        assert abs(np.trace(out) - 1) < 1e-10
        np.testing.assert_allclose(out, out.conj().T, atol=1e-12)
        assert is_psd(out)


class TestCoherentBookkeeping:
    """Same Kraus index on all four cluster qubits, amplitudes summed."""

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0, 1), taus)
    def test_amplitude_coefficients(self, xi, tau):
        t0, t1, t2, t3 = tau
        xb = 1 - xi
        cs = noisy_cluster_ket(ClusterParams(tau), NoiseKind.amplitude(xi))
        expect = np.zeros(16)
        expect[0b0000] = xb**2 * t0
        expect[0b0011] = xb * t1
        expect[0b1100] = xb * t2
        expect[0b1111] = xi**2 * t0 - t3
        np.testing.assert_allclose(cs, expect, atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0, 1), taus)
    def test_bracket_is_squared_norm(self, xi, tau):
        c = ClusterParams(tau)
        a = noisy_cluster_ket(c, NoiseKind.amplitude(xi))
        p = noisy_cluster_ket(c, NoiseKind.phase(xi))
        assert abs(np.vdot(a, a).real - amplitude_bracket(xi, tau)) < 1e-12
        assert abs(np.vdot(p, p).real - phase_bracket(xi, tau)) < 1e-12

    def test_subset_only_touches_listed_qubits(self):
        cs = make_cluster(ClusterParams.balanced())
        out = coherent_noise(cs, [], amplitude_kraus(0.4))
        np.testing.assert_allclose(out, 2 * cs)  # two Kraus indices, each the identity on nothing


class TestBrackets:
    def test_spot_values(self):
        tau = (0.5,) * 4
        assert abs(amplitude_bracket(0.5, tau) - 0.28125) < 1e-15
        assert amplitude_bracket(0.0, tau) == 1.0
        assert amplitude_bracket(1.0, tau) == 0.0
        assert phase_bracket(0.0, tau) == 1.0

    def test_phase_bracket_hand_expansion(self):
        xi, (t0, t1, t2, t3) = 0.2, (0.1, 0.7, 0.5, 0.5)
        xb = 0.8
        hand = t0**2 * (xb**2 + xi**2) ** 2 + (t1**2 + t2**2 + t3**2) * xb**4 + 2 * t3**2 * xi**2 * xb**2 + xi**4 * t3**2
        assert abs(phase_bracket(xi, (t0, t1, t2, t3)) - hand) < 1e-15

    def test_dressed_and_gamma(self):
        tau = (0.5,) * 4
        assert dressed_coefficients(NoiseKind.amplitude(0.5), tau) == (0.25, 0.25)
        assert dressed_coefficients(NoiseKind.phase(0.2), tau) == pytest.approx((0.32, 0.32))
        assert gamma(*dressed_coefficients(NoiseKind.phase(0.2), tau)) == pytest.approx(19.53125)
        assert gamma(0.5, 0.5) == 8.0
        assert gamma(0.0, 0.5) == float("inf")
