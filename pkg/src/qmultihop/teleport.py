"""One noisy hop: double Bell measurement, Pauli fix-up, ancilla/CNOT copy and
the unambiguous-discrimination POVM that recovers a0|00> + d0|11>.

Register layout for a hop (qubit index -> role)::

    0 S1   1 S2   (input a0|00> + d0|11>)
    2 S3   3 E1   4 E3   5 E2   (cluster, in that order)

Bell measurements act on (S1, S3) and (S2, E3); the residual lives on
(E1, E2). The recovery appends ancillas D, E as qubits 2, 3 of the
(E1, E2, D, E) register.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .channels import (
    Channel,
    NoiseKind,
    amplitude_bracket,
    coherent_noise,
    dressed_coefficients,
    gamma,
    kraus_set,
    mirrored,
)
from .qmath import (
    CNOT,
    Z,
    apply_on_qubits,
    basis_ket,
    pauli_string_op,
    pauli_strings,
    project_measure,
    tensor,
)
from .states import BellKind, ClusterParams, InputParams, make_bell, make_cluster, make_input

S1, S2, S3, E1, E3, E2 = range(6)
CLUSTER_QUBITS = (S3, E1, E3, E2)
ALL_CLUSTER = (0, 1, 2, 3)


class DegenerateBranchError(ValueError):
    pass


class PositivityError(ValueError):
    def __init__(self, msg: str, min_rho: float):
        super().__init__(msg)
        self.min_rho = min_rho


class UnsupportedVariantError(ValueError):
    pass


@dataclass(frozen=True)
class BsmOutcome:
    first: BellKind  # on (S1, S3)
    second: BellKind  # on (S2, E3)

    @property
    def label(self) -> str:
        return f"{self.first.label}/{self.second.label}"


ALL_OUTCOMES = tuple(BsmOutcome(a, b) for a in BellKind for b in BellKind)
# the outcome worked through explicitly in the protocol description
DESIGNATED = BsmOutcome(BellKind.PSI_PLUS, BellKind.PHI_MINUS)


@dataclass(frozen=True)
class HopBranch:
    outcome: BsmOutcome
    residual: np.ndarray  # unnormalized, on (E1, E2)
    weight: float
    a_unit: np.ndarray  # residual for a0=1, d0=0
    d_unit: np.ndarray  # residual for a0=0, d0=1


def noisy_cluster_ket(
    cluster: ClusterParams,
    noise: NoiseKind,
    noisy_qubits: Sequence[int] = ALL_CLUSTER,
    ground_state: int = 1,
) -> np.ndarray:
    """Cluster ket after coherent Kraus bookkeeping on ``noisy_qubits``.

    ``ground_state`` picks the level amplitude damping relaxes toward; with
    the default 1 and all four qubits noisy the result is
    xb^2 t0|0000> + xb t1|0011> + xb t2|1100> + (xi^2 t0 - t3)|1111>.
    """
    ks = kraus_set(noise)
    if noise.kind is Channel.AMPLITUDE and ground_state == 1:
        ks = mirrored(ks)
    return coherent_noise(make_cluster(cluster), list(noisy_qubits), ks)


def _branch_residual(full: np.ndarray, outcome: BsmOutcome) -> np.ndarray:
    proj = tensor(make_bell(outcome.first), make_bell(outcome.second))
    # remaining qubits E1 (3), E2 (5) stay in order
    _, post = project_measure(full, proj, [S1, S3, S2, E3])
    return post


def hop_branches(
    inp: InputParams,
    cluster: ClusterParams,
    noise: NoiseKind,
    noisy_qubits: Sequence[int] = ALL_CLUSTER,
    ground_state: int = 1,
) -> list[HopBranch]:
    """All 16 double-BSM branches of |chi> (x) |CS'>.

    Each residual carries the 1/2 from the two Bell projections and is not
    renormalized; ``weight`` is its squared norm.
    """
    cs = noisy_cluster_ket(cluster, noise, noisy_qubits, ground_state)
    full_a = tensor(basis_ket("00"), cs)
    full_d = tensor(basis_ket("11"), cs)
    out = []
    for oc in ALL_OUTCOMES:
        a = _branch_residual(full_a, oc)
        d = _branch_residual(full_d, oc)
        r = inp.a0 * a + inp.d0 * d
        out.append(HopBranch(oc, r, float(np.vdot(r, r).real), a, d))
    return out


def branch(inp, cluster, noise, outcome: BsmOutcome = DESIGNATED, **kw) -> HopBranch:
    for b in hop_branches(inp, cluster, noise, **kw):
        if b.outcome == outcome:
            return b
    raise KeyError(outcome)


def _pauli_weight(s) -> int:
    return sum(c != "I" for c in s)


def find_pre_correction(a_unit: np.ndarray, d_unit: np.ndarray) -> tuple[str, str]:
    """Smallest Pauli string on (E1, E2) sending the a0 part to |00> and the d0 part to |11>."""
    na, nd = np.linalg.norm(a_unit), np.linalg.norm(d_unit)
    if na < 1e-14 and nd < 1e-14:
        raise DegenerateBranchError("branch residual vanishes")
    cands = sorted(pauli_strings(2), key=_pauli_weight)
    for s in cands:
        u = pauli_string_op(s)
        ok = True
        if na >= 1e-14:
            ok &= abs(abs((u @ a_unit)[0b00]) - na) < 1e-12 * max(1, na)
        if nd >= 1e-14:
            ok &= abs(abs((u @ d_unit)[0b11]) - nd) < 1e-12 * max(1, nd)
        if ok:
            return s
    raise DegenerateBranchError("no Pauli string maps the residual onto |00>, |11>")


@dataclass(frozen=True)
class Recovery:
    correction: tuple[str, str]
    G0: np.ndarray
    G1: np.ndarray
    G2: np.ndarray
    c1: float  # |coefficient| of d0|11>, without the Bell 1/2
    c2: float  # |coefficient| of a0|00>
    sign: int  # relative sign between the two, +1 or -1

    def __iter__(self):
        return iter((self.G0, self.G1, self.G2))


def _relative_sign(alpha: complex, beta: complex) -> int:
    if alpha == 0 or beta == 0:
        return 1
    r = beta / alpha
    return 1 if r.real >= 0 else -1


def recovery_pipeline(hb: HopBranch, cluster: ClusterParams | None = None,
                      noise: NoiseKind | None = None) -> Recovery:
    """Pauli fix-up, ancilla preparation and CNOT copy for one branch.

    ``cluster`` and ``noise`` are accepted for symmetry with the rest of the
    hop API; everything needed is already in the branch.
    """
    if np.linalg.norm(hb.residual) < 1e-14:
        raise DegenerateBranchError(f"branch {hb.outcome.label} has zero residual")
    corr = find_pre_correction(hb.a_unit, hb.d_unit)
    u = pauli_string_op(corr)
    g0 = u @ hb.residual
    g1 = tensor(g0, basis_ket("00"))
    g2 = apply_on_qubits(CNOT, g1, [0, 2])
    g2 = apply_on_qubits(CNOT, g2, [1, 3])
    alpha = 2 * (u @ hb.a_unit)[0b00]
    beta = 2 * (u @ hb.d_unit)[0b11]
    return Recovery(corr, g0, g1, g2, float(abs(beta)), float(abs(alpha)),
                    _relative_sign(alpha, beta))


@dataclass(frozen=True)
class PovmParams:
    rho_param: float
    c1: float
    c2: float

    @property
    def gamma(self) -> float:
        return gamma(self.c1, self.c2)

    @classmethod
    def from_noise(cls, noise: NoiseKind, cluster: ClusterParams, rho_param: float = 1.0):
        c1, c2 = dressed_coefficients(noise, cluster.tau)
        return cls(rho_param, c1, c2)

    @classmethod
    def from_recovery(cls, rec: Recovery, rho_param: float = 1.0):
        return cls(rho_param, rec.c1, rec.c2)


@dataclass(frozen=True)
class PovmSet:
    P1: np.ndarray
    P2: np.ndarray
    P3: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    rho_param: float

    @property
    def elements(self):
        return (self.P1, self.P2, self.P3)


def _lambdas(c1: float, c2: float) -> tuple[np.ndarray, np.ndarray]:
    if c1 == 0 or c2 == 0:
        raise DegenerateBranchError("dressed coefficients must be nonzero")
    g = gamma(c1, c2)
    l1 = np.array([1 / c2, 0, 0, -1 / c1], dtype=complex) / math.sqrt(g)
    l2 = np.array([1 / c2, 0, 0, 1 / c1], dtype=complex) / math.sqrt(g)
    return l1, l2


def min_admissible_rho(c1: float, c2: float) -> float:
    """Smallest rho keeping I - (|L1><L1| + |L2><L2|)/rho positive semidefinite."""
    l1, l2 = _lambdas(c1, c2)
    s = np.outer(l1, l1.conj()) + np.outer(l2, l2.conj())
    return float(np.linalg.eigvalsh(s).max())


def povm_set(p: PovmParams) -> PovmSet:
    l1, l2 = _lambdas(p.c1, p.c2)
    p1 = np.outer(l1, l1.conj()) / p.rho_param
    p2 = np.outer(l2, l2.conj()) / p.rho_param
    p3 = np.eye(4) - p1 - p2
    lo = float(np.linalg.eigvalsh(p3).min())
    if lo < -1e-9:
        rmin = min_admissible_rho(p.c1, p.c2)
        raise PositivityError(
            f"P3 not positive at rho={p.rho_param} (min eigenvalue {lo:.3e}); "
            f"need rho >= {rmin:.12g}",
            rmin,
        )
    return PovmSet(p1, p2, p3, l1, l2, p.rho_param)


def povm_weights(g2: np.ndarray, povm: PovmSet) -> np.ndarray:
    """Unnormalized Born weights <G2|(I (x) P_i)|G2> for i = 1, 2, 3."""
    return np.array(
        [np.vdot(g2, apply_on_qubits(p, g2, [2, 3])).real for p in povm.elements]
    )


def needs_z(outcome: int, sign: int) -> bool:
    """P1 leaves a0|00> - s d0|11>, P2 leaves a0|00> + s d0|11>."""
    return (outcome == 1 and sign == 1) or (outcome == 2 and sign == -1)


@dataclass(frozen=True)
class PovmResult:
    outcome: int  # 1, 2 or 3
    post_state: np.ndarray
    prob: float  # unnormalized Born weight of the sampled outcome
    weights: np.ndarray

    @property
    def succeeded(self) -> bool:
        return self.outcome != 3


def povm_measure(g2: np.ndarray, povm: PovmSet, rng: np.random.Generator,
                 sign: int = -1) -> PovmResult:
    """Sample the recovery POVM on the ancilla pair of ``g2``.

    On P1/P2 the returned state is the normalized (E1, E2) ket after the
    I (x) Z fix-up required by ``sign`` (see :class:`Recovery`). On P3 the
    normalized four-qubit post-measurement ket is returned untouched.
    """
    w = povm_weights(g2, povm)
    total = float(np.vdot(g2, g2).real)
    if abs(w.sum() - total) > 1e-8:
        raise RuntimeError(f"POVM weights sum to {w.sum()!r}, expected {total!r}")
    k = int(rng.choice(3, p=np.clip(w, 0, None) / w.clip(0).sum())) + 1
    if k == 3:
        vals, vecs = np.linalg.eigh(povm.P3)
        root = (vecs * np.sqrt(np.clip(vals, 0, None))) @ vecs.conj().T
        post = apply_on_qubits(root, g2, [2, 3])
        post = post / np.linalg.norm(post)
    else:
        lam = povm.lambda1 if k == 1 else povm.lambda2
        _, post = project_measure(g2, lam, [2, 3], normalize_post=True)
        if needs_z(k, sign):
            post = apply_on_qubits(Z, post, [1])
    return PovmResult(k, post, float(w[k - 1]), w)


def hop_success_prob(p: PovmParams) -> float:
    """1 / (2 rho gamma); zero when either dressed coefficient vanishes."""
    c1s, c2s = p.c1 * p.c1, p.c2 * p.c2
    if c1s + c2s == 0:
        return 0.0
    return c1s * c2s / (2 * p.rho_param * (c1s + c2s))


def hop_output_density(inp: InputParams, cluster: ClusterParams, xi_a: float) -> np.ndarray:
    """Delivered density with the diagonal corners scaled by the amplitude bracket.

    The off-diagonal corners are left as in the input and nothing is
    renormalized.
    """
    b = amplitude_bracket(xi_a, cluster.tau)
    _, rho = make_input(inp)
    rho = rho.copy()
    rho[0, 0] *= b
    rho[3, 3] *= b
    return rho


def hop_fidelity(inp: InputParams, cluster: ClusterParams, noise: NoiseKind,
                 hops: int = 1) -> float:
    """Closed-form fidelity after one hop (bracket) or two hops (bracket cubed)."""
    if noise.kind is not Channel.AMPLITUDE:
        raise UnsupportedVariantError(
            "per-hop fidelity is only available for amplitude damping; "
            "use network.total_fidelity for phase damping"
        )
    if hops not in (1, 2):
        raise ValueError("hops must be 1 or 2")
    b = amplitude_bracket(noise.xi, cluster.tau)
    return b ** (1 if hops == 1 else 3) * inp.norm_sq**2


@lru_cache(maxsize=64)
def branch_corrections(tau: tuple) -> dict:
    """Pre-POVM Pauli fix-up per BSM outcome, from the noiseless branch structure."""
    cl = ClusterParams(tau)
    bs = hop_branches(InputParams(1, 1), cl, NoiseKind.amplitude(0.0))
    return {b.outcome: find_pre_correction(b.a_unit, b.d_unit) for b in bs}
