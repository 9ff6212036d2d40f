import math

import numpy as np
import pytest

from qmultihop.states import BellKind, ClusterParams, InputParams, make_bell, make_cluster, make_input


class TestBell:
    def test_orthonormal_basis(self):
        m = np.stack([make_bell(k) for k in BellKind])
        np.testing.assert_allclose(m @ m.conj().T, np.eye(4), atol=1e-12)

    def test_explicit_vectors(self):
        s = 1 / math.sqrt(2)
        np.testing.assert_allclose(make_bell(BellKind.PHI_MINUS), [s, 0, 0, -s])
        np.testing.assert_allclose(make_bell(BellKind.PSI_PLUS), [0, s, s, 0])

    def test_labels_round_trip(self):
        for k in BellKind:
            assert BellKind.from_label(k.label) is k


class TestInput:
    def test_normalization(self):
        p = InputParams(3, 4)
        assert p.norm_sq == 25 and not p.is_normalized
        assert p.normalized().is_normalized

    def test_make_input(self):
        psi, rho = make_input(InputParams(0.6, 0.8))
        np.testing.assert_allclose(psi, [0.6, 0, 0, 0.8])
        np.testing.assert_allclose(rho, np.outer(psi, psi))


class TestCluster:
    def test_signs_and_support(self):
        cs = make_cluster(ClusterParams((0.1, 0.7, 0.5, 0.5)))
        assert cs[0b0000] == 0.1 and cs[0b0011] == 0.7 and cs[0b1100] == 0.5 and cs[0b1111] == -0.5
        assert np.count_nonzero(cs) == 4

    def test_balanced_is_normalized(self):
        c = ClusterParams.balanced()
        assert c.is_balanced and c.is_normalized
        assert abs(np.linalg.norm(make_cluster(c)) - 1) < 1e-15

    @pytest.mark.parametrize("tau", [(0.5, 0.5, 0.5), (1, 0, 0, 0), (0.5, 0.5, float("nan"), 0.5)])
    def test_rejects(self, tau):
        with pytest.raises(ValueError):
            ClusterParams(tau)

    def test_require_normalized(self):
        with pytest.raises(ValueError):
            ClusterParams((1, 1, 1, 1)).require_normalized()
