import math

import numpy as np
import pytest

from qmultihop.channels import NoiseKind
from qmultihop.oracle import (
    BLOCK_SIZE,
    build_instrument,
    coherent_vs_cptp,
    exact_hop,
    exact_route,
    noisy_subset_scan,
    oracle_one_hop,
    run_trials,
)
from qmultihop.qmath import is_psd
from qmultihop.states import ClusterParams, InputParams


def random_dm(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    r = a @ a.conj().T
    return r / np.trace(r)


@pytest.fixture(scope="module")
def noisy_inst():
    return build_instrument(ClusterParams.balanced(), NoiseKind.amplitude(0.3), policy="all")


class TestInstrument:
    def test_trace_preserving(self, noisy_inst):
        for seed in range(5):
            assert noisy_inst.probabilities(random_dm(seed)).sum() == pytest.approx(1, abs=1e-12)

    def test_outputs_positive(self, noisy_inst):
        rho = random_dm(9)
        for o in range(len(noisy_inst.labels)):
            out = noisy_inst.apply(o, rho)
            np.testing.assert_allclose(out, out.conj().T, atol=1e-12)
            assert is_psd(out)

    def test_noiseless_exact(self, balanced, noiseless):
        inp = InputParams(0.6, 0.8)
        p, f = exact_hop(build_instrument(balanced, noiseless), inp)
        assert p == pytest.approx(1 / 16, abs=1e-12) and f == pytest.approx(1, abs=1e-12)
        p_all, f_all = exact_hop(build_instrument(balanced, noiseless, policy="all"), inp)
        assert p_all == pytest.approx(1, abs=1e-12) and f_all == pytest.approx(1, abs=1e-12)

    def test_bad_policy(self, balanced, noiseless):
        with pytest.raises(ValueError):
            build_instrument(balanced, noiseless, policy="some")


class TestSampling:
    def test_one_hop_noiseless(self, balanced, noiseless, equal_input):
        res = oracle_one_hop(equal_input, balanced, noiseless, seed=1, trials=50_000)
        sigma = math.sqrt((1 / 16) * (15 / 16) / 50_000)
        assert abs(res.psuc - 1 / 16) < 3 * sigma
        assert res.fid_min == pytest.approx(1, abs=1e-10) and res.fid_max == pytest.approx(1, abs=1e-10)
        assert res.closed_form_psuc == 1 / 16
        assert res.report["per_branch"]["Psi+/Phi-"]["conditional_success"] == pytest.approx(1)

    def test_workers_do_not_change_counts(self, noisy_inst):
        inp = InputParams(0.6, 0.8)
        trials = 2 * BLOCK_SIZE + 17
        a = run_trials(noisy_inst, inp, 3, "sequential", trials, seed=7, workers=1)
        b = run_trials(noisy_inst, inp, 3, "sequential", trials, seed=7, workers=3)
        assert a.trials == trials == b.trials
        assert a.successes == b.successes and a.fid_sum == b.fid_sum
        np.testing.assert_array_equal(a.outcome_counts, b.outcome_counts)
        np.testing.assert_array_equal(a.hop_attempts, b.hop_attempts)

    @pytest.mark.parametrize("semantics", ["sequential", "any"])
    def test_sampling_matches_exact(self, noisy_inst, semantics):
        inp = InputParams(0.6, 0.8)
        p, f = exact_route(noisy_inst, inp, 2, semantics)
        st = run_trials(noisy_inst, inp, 2, semantics, 60_000, seed=3)
        sigma = math.sqrt(p * (1 - p) / 60_000)
        assert abs(st.rate - p) < 4 * sigma
        assert abs(st.mean_fidelity - f) < 0.01

    def test_any_route_law(self, noisy_inst):
        inp = InputParams(0.6, 0.8)
        p1, _ = exact_hop(noisy_inst, inp)
        p3, _ = exact_route(noisy_inst, inp, 3, "any")
        assert p3 == pytest.approx(1 - (1 - p1) ** 3, abs=1e-12)


class TestModelComparison:
    def test_coherent_equals_cptp_without_noise(self, balanced, noiseless):
        cmp = coherent_vs_cptp(InputParams(0.6, 0.8), balanced, noiseless)
        assert cmp["coherent_weight"] == pytest.approx(cmp["cptp_weight"], abs=1e-12)
        assert cmp["state_overlap"] == pytest.approx(1, abs=1e-12)

    def test_coherent_and_cptp_diverge_with_noise(self, balanced):
        cmp = coherent_vs_cptp(InputParams(0.6, 0.8), balanced, NoiseKind.amplitude(0.3))
        assert abs(cmp["coherent_weight"] - cmp["cptp_weight"]) > 1e-3

    def test_subset_scan_is_sorted(self, balanced):
        rows = noisy_subset_scan(InputParams(0.6, 0.8), balanced, NoiseKind.amplitude(0.3))
        assert len(rows) == 30
        d = [r["distance"] for r in rows]
        assert d == sorted(d)
