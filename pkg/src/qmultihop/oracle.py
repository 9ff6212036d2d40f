"""Brute-force density-matrix model of a hop and the Monte Carlo engine.

A hop is compiled once into an instrument: for each (Bell outcome, POVM
outcome) pair a superoperator acting on the vectorized 2-qubit input. The
superoperators come from running the full CPTP pipeline (channel on the
cluster, Bell projections, Pauli fix-up, ancilla + CNOTs, POVM, final Z) on
the 16 matrix units, so sampling a trial costs a small matrix product.

Trials are processed in fixed-size blocks; block ``i`` draws from
``SeedSequence(seed, spawn_key=(i,))``, which makes results independent of
how many worker threads process the blocks.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channels import (
    Channel,
    NoiseKind,
    amplitude_bracket,
    apply_channel_many,
    kraus_set,
    mirrored,
)
from .qmath import CNOT, Z, apply_on_qubits, dm, partial_trace, pauli_string_op, project_measure, tensor
from .states import ClusterParams, InputParams, make_bell, make_cluster, make_input
from .teleport import (
    ALL_OUTCOMES,
    DESIGNATED,
    E3,
    S1,
    S2,
    S3,
    BsmOutcome,
    DegenerateBranchError,
    PovmParams,
    branch_corrections,
    hop_branches,
    hop_success_prob,
    min_admissible_rho,
    needs_z,
    povm_set,
    recovery_pipeline,
)

BLOCK_SIZE = 8192
TRANSMITTED = (1, 2, 3)  # E1, E3, E2 within the cluster
POLICIES = ("designated", "all")


@dataclass(frozen=True)
class HopInstrument:
    labels: tuple[tuple[BsmOutcome, int], ...]
    superops: np.ndarray  # (48, 16, 16) on row-major vec(rho)
    success: np.ndarray  # (48,) bool
    trace_rows: np.ndarray  # (48, 16): tr(S_o rho) = trace_rows[o] @ vec(rho)

    def probabilities(self, rho: np.ndarray) -> np.ndarray:
        return (self.trace_rows @ rho.reshape(-1)).real

    def apply(self, o: int, rho: np.ndarray) -> np.ndarray:
        return (self.superops[o] @ rho.reshape(-1)).reshape(4, 4)


def _branch_povm(oc: BsmOutcome, cluster: ClusterParams, noise: NoiseKind,
                 rho_param: float, policy: str):
    """Measurement operators, sign and success flag for one Bell outcome."""
    if policy == "designated" and oc != DESIGNATED:
        return None
    hb = next(b for b in hop_branches(InputParams(1, 1), cluster, noise) if b.outcome == oc)
    try:
        rec = recovery_pipeline(hb)
        if rec.c1 == 0 or rec.c2 == 0:
            raise DegenerateBranchError(oc.label)
    except DegenerateBranchError:
        return None
    rho = rho_param
    if oc != DESIGNATED:
        rho = max(rho_param, min_admissible_rho(rec.c1, rec.c2))
    pov = povm_set(PovmParams(rho, rec.c1, rec.c2))
    vals, vecs = np.linalg.eigh(pov.P3)
    m3 = (vecs * np.sqrt(np.clip(vals, 0, None))) @ vecs.conj().T
    ms = (np.outer(pov.lambda1, pov.lambda1.conj()) / math.sqrt(rho),
          np.outer(pov.lambda2, pov.lambda2.conj()) / math.sqrt(rho), m3)
    return ms, rec.sign


def build_instrument(
    cluster: ClusterParams,
    noise: NoiseKind,
    noisy_qubits: Sequence[int] = TRANSMITTED,
    rho_param: float = 1.0,
    policy: str = "designated",
    relax_to: int = 0,
) -> HopInstrument:
    """Compile one hop into 48 superoperators.

    ``policy="designated"`` only recovers the Bell outcome (Psi+, Phi-) and
    counts every other outcome as a failed hop; ``"all"`` recovers every
    outcome with a POVM matched to its own residual. ``relax_to`` chooses
    the level amplitude damping decays toward.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}")
    ks = kraus_set(noise)
    if noise.kind is Channel.AMPLITUDE and relax_to == 1:
        ks = mirrored(ks)
    sigma = apply_channel_many(dm(make_cluster(cluster)), list(noisy_qubits), ks)
    corrections = branch_corrections(cluster.tau)
    anc = dm(np.array([1, 0, 0, 0], dtype=complex))
    none_ms = (np.zeros((4, 4)), np.zeros((4, 4)), np.eye(4))

    labels, ops, succ = [], [], []
    for oc in ALL_OUTCOMES:
        got = _branch_povm(oc, cluster, noise, rho_param, policy)
        ms, sign = got if got else (none_ms, 1)
        u = pauli_string_op(corrections[oc])
        proj = tensor(make_bell(oc.first), make_bell(oc.second))
        sup = np.zeros((3, 16, 16), dtype=complex)
        for col in range(16):
            unit = np.zeros(16, dtype=complex)
            unit[col] = 1
            full = tensor(unit.reshape(4, 4), sigma)
            _, r = project_measure(full, proj, [S1, S3, S2, E3])
            r = u @ r @ u.conj().T
            g = apply_on_qubits(CNOT, tensor(r, anc), [0, 2])
            g = apply_on_qubits(CNOT, g, [1, 3])
            for k, m in enumerate(ms):
                post = partial_trace(apply_on_qubits(m, g, [2, 3]), [0, 1])
                if k < 2 and needs_z(k + 1, sign):
                    post = apply_on_qubits(Z, post, [1])
                sup[k, :, col] = post.reshape(-1)
        for k in range(3):
            labels.append((oc, k + 1))
            ops.append(sup[k])
            succ.append(got is not None and k < 2)
    superops = np.stack(ops)
    diag = [i * 4 + i for i in range(4)]
    trace_rows = superops[:, diag, :].sum(axis=1)
    return HopInstrument(tuple(labels), superops, np.array(succ), trace_rows)


@dataclass
class TrialStats:
    """Mergeable counters for a batch of trials."""

    n_hops: int
    trials: int = 0
    successes: int = 0
    fid_sum: float = 0.0
    fid_min: float = math.inf
    fid_max: float = -math.inf
    hop_attempts: np.ndarray = None
    hop_successes: np.ndarray = None
    outcome_counts: np.ndarray = None  # first-hop (Bell, POVM) outcome histogram

    def __post_init__(self):
        if self.hop_attempts is None:
            self.hop_attempts = np.zeros(self.n_hops, dtype=np.int64)
            self.hop_successes = np.zeros(self.n_hops, dtype=np.int64)
            self.outcome_counts = np.zeros(48, dtype=np.int64)

    def merge(self, other: "TrialStats") -> "TrialStats":
        self.trials += other.trials
        self.successes += other.successes
        self.fid_sum += other.fid_sum
        self.fid_min = min(self.fid_min, other.fid_min)
        self.fid_max = max(self.fid_max, other.fid_max)
        self.hop_attempts += other.hop_attempts
        self.hop_successes += other.hop_successes
        self.outcome_counts += other.outcome_counts
        return self

    @property
    def rate(self) -> float:
        return self.successes / self.trials if self.trials else 0.0

    @property
    def mean_fidelity(self) -> float | None:
        return self.fid_sum / self.successes if self.successes else None


def _sample(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One categorical draw per row of ``probs`` (rows need not be normalized)."""
    cum = np.cumsum(probs, axis=1)
    u = rng.random(len(probs)) * cum[:, -1]
    idx = (cum < u[:, None]).sum(axis=1)
    return np.minimum(idx, probs.shape[1] - 1)


def _fidelities(vecs: np.ndarray, psi: np.ndarray) -> np.ndarray:
    rhos = vecs.reshape(-1, 4, 4)
    tr = np.einsum("tii->t", rhos).real
    f = np.einsum("i,tij,j->t", psi.conj(), rhos, psi).real
    return f / tr


def run_block(inst: HopInstrument, rho_in: np.ndarray, psi: np.ndarray, n_hops: int,
              semantics: str, trials: int, rng: np.random.Generator) -> TrialStats:
    st = TrialStats(n_hops, trials=trials)
    vec_in = rho_in.reshape(-1).astype(complex)
    if semantics == "sequential":
        vecs = np.tile(vec_in, (trials, 1))
        alive = np.arange(trials)
        for h in range(n_hops):
            if alive.size == 0:
                break
            probs = np.clip((vecs[alive] @ inst.trace_rows.T).real, 0, None)
            ch = _sample(probs, rng)
            st.hop_attempts[h] += alive.size
            if h == 0:
                st.outcome_counts += np.bincount(ch, minlength=48)
            ok = inst.success[ch]
            st.hop_successes[h] += int(ok.sum())
            keep, keep_ch = alive[ok], ch[ok]
            for o in np.unique(keep_ch):
                sel = keep[keep_ch == o]
                out = vecs[sel] @ inst.superops[o].T
                tr = out[:, [0, 5, 10, 15]].sum(axis=1).real
                vecs[sel] = out / tr[:, None]
            alive = keep
        if alive.size:
            f = _fidelities(vecs[alive], psi)
            st.successes = int(alive.size)
            st.fid_sum = float(f.sum())
            st.fid_min, st.fid_max = float(f.min()), float(f.max())
    elif semantics == "any":
        probs = np.clip(inst.probabilities(rho_in), 0, None)
        fid_of = np.full(len(inst.labels), np.nan)
        for o in np.flatnonzero(inst.success):
            if probs[o] > 0:
                fid_of[o] = _fidelities(inst.apply(o, rho_in).reshape(1, -1), psi)[0]
        pending = np.arange(trials)
        first = np.full(trials, -1)
        for h in range(n_hops):
            if pending.size == 0:
                break
            ch = _sample(np.broadcast_to(probs, (pending.size, probs.size)), rng)
            st.hop_attempts[h] += pending.size
            if h == 0:
                st.outcome_counts += np.bincount(ch, minlength=48)
            ok = inst.success[ch]
            st.hop_successes[h] += int(ok.sum())
            first[pending[ok]] = ch[ok]
            pending = pending[~ok]
        won = first[first >= 0]
        if won.size:
            f = fid_of[won]
            st.successes = int(won.size)
            st.fid_sum = float(f.sum())
            st.fid_min, st.fid_max = float(f.min()), float(f.max())
    else:
        raise ValueError(f"unknown semantics {semantics!r}")
    return st


def run_trials(inst: HopInstrument, inp: InputParams, n_hops: int, semantics: str,
               trials: int, seed: int, workers: int = 1) -> TrialStats:
    """Run ``trials`` independent trials split into seeded blocks."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    psi, rho = make_input(inp.normalized())
    sizes = [BLOCK_SIZE] * (trials // BLOCK_SIZE)
    if trials % BLOCK_SIZE:
        sizes.append(trials % BLOCK_SIZE)

    def job(i):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
        return run_block(inst, rho, psi, n_hops, semantics, sizes[i], rng)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(job, range(len(sizes))))
    else:
        parts = [job(i) for i in range(len(sizes))]
    total = TrialStats(n_hops)
    for p in parts:
        total.merge(p)
    return total


@dataclass
class OracleResult:
    psuc: float
    sigma: float  # standard error of psuc
    fidelity: float | None
    fid_min: float
    fid_max: float
    closed_form_psuc: float
    exact_psuc: float  # exact success probability of the compiled instrument
    exact_fidelity: float | None
    stats: TrialStats
    report: dict = field(default_factory=dict)

    @property
    def ci(self) -> tuple[float, float]:
        return self.psuc - 3 * self.sigma, self.psuc + 3 * self.sigma


def exact_hop(inst: HopInstrument, inp: InputParams) -> tuple[float, float | None]:
    """Success probability and success-conditioned fidelity, no sampling."""
    psi, rho = make_input(inp.normalized())
    p = inst.probabilities(rho)
    tot, fsum = 0.0, 0.0
    for o in np.flatnonzero(inst.success):
        if p[o] <= 0:
            continue
        out = inst.apply(o, rho)
        tot += p[o]
        fsum += np.vdot(psi, out @ psi).real
    return float(tot), (float(fsum / tot) if tot > 0 else None)


def oracle_one_hop(
    inp: InputParams,
    cluster: ClusterParams,
    noise: NoiseKind,
    noisy_qubits: Sequence[int] = TRANSMITTED,
    seed: int = 0,
    trials: int = 100_000,
    rho_param: float = 1.0,
    policy: str = "designated",
    workers: int = 1,
) -> OracleResult:
    """Monte Carlo of one hop under the CPTP noise model, compared with closed forms."""
    inst = build_instrument(cluster, noise, noisy_qubits, rho_param, policy)
    st = run_trials(inst, inp, 1, "sequential", trials, seed, workers)
    p_hat = st.rate
    cf = hop_success_prob(PovmParams.from_noise(noise, cluster, rho_param))
    ex_p, ex_f = exact_hop(inst, inp)
    per_branch = {}
    for oc in ALL_OUTCOMES:
        idx = [i for i, (o, _) in enumerate(inst.labels) if o == oc]
        n_oc = int(st.outcome_counts[idx].sum())
        n_ok = int(sum(st.outcome_counts[i] for i in idx if inst.success[i]))
        per_branch[oc.label] = {
            "rate": n_oc / st.trials,
            "success_rate": n_ok / st.trials,
            "conditional_success": (n_ok / n_oc) if n_oc else None,
        }
    report = {
        "policy": policy,
        "noisy_qubits": list(noisy_qubits),
        "per_branch": per_branch,
        "exact_psuc": ex_p,
        "closed_form_psuc": cf,
        "cptp_fidelity": ex_f,
    }
    if noise.kind is Channel.AMPLITUDE:
        report["closed_form_fidelity"] = amplitude_bracket(noise.xi, cluster.tau) * inp.norm_sq**2
    return OracleResult(
        psuc=p_hat,
        sigma=math.sqrt(max(p_hat * (1 - p_hat), 0) / st.trials),
        fidelity=st.mean_fidelity,
        fid_min=st.fid_min,
        fid_max=st.fid_max,
        closed_form_psuc=cf,
        exact_psuc=ex_p,
        exact_fidelity=ex_f,
        stats=st,
        report=report,
    )


def noisy_subset_scan(inp: InputParams, cluster: ClusterParams, noise: NoiseKind,
                      rho_param: float = 1.0) -> list[dict]:
    """Exact CPTP hop for every noisy-qubit subset and damping direction.

    Rows are sorted by distance to the closed forms (success probability plus
    fidelity where one exists), best match first.
    """
    cf_p = hop_success_prob(PovmParams.from_noise(noise, cluster, rho_param))
    cf_f = None
    if noise.kind is Channel.AMPLITUDE:
        cf_f = amplitude_bracket(noise.xi, cluster.tau) * inp.norm_sq**2
    directions = (0, 1) if noise.kind is Channel.AMPLITUDE else (0,)
    rows = []
    for r in range(1, 5):
        for subset in itertools.combinations(range(4), r):
            for d in directions:
                inst = build_instrument(cluster, noise, subset, rho_param, "designated", d)
                p, f = exact_hop(inst, inp)
                dist = abs(p - cf_p) + (abs((f or 0) - cf_f) if cf_f is not None else 0)
                rows.append({"noisy_qubits": subset, "relax_to": d, "psuc": p,
                             "fidelity": f, "distance": dist})
    rows.sort(key=lambda x: (x["distance"], len(x["noisy_qubits"]), x["noisy_qubits"], x["relax_to"]))
    return rows


def coherent_vs_cptp(inp: InputParams, cluster: ClusterParams, noise: NoiseKind) -> dict:
    """Designated-branch weight and state: coherent bookkeeping vs CPTP on all four qubits."""
    hb = next(b for b in hop_branches(inp, cluster, noise) if b.outcome == DESIGNATED)
    _, rho_in = make_input(inp)
    ks = kraus_set(noise)
    if noise.kind is Channel.AMPLITUDE:
        ks = mirrored(ks)
    sigma = apply_channel_many(dm(make_cluster(cluster)), [0, 1, 2, 3], ks)
    proj = tensor(make_bell(DESIGNATED.first), make_bell(DESIGNATED.second))
    w, r = project_measure(tensor(rho_in, sigma), proj, [S1, S3, S2, E3])
    overlap = None
    if w > 0 and hb.weight > 0:
        overlap = float(np.vdot(hb.residual, r @ hb.residual).real / (w * hb.weight))
    return {"coherent_weight": hb.weight, "cptp_weight": w, "state_overlap": overlap}


def exact_route(inst: HopInstrument, inp: InputParams, n_hops: int,
                semantics: str) -> tuple[float, float | None]:
    """Exact counterpart of ``run_trials``: (success probability, mean fidelity)."""
    if semantics == "any":
        p, f = exact_hop(inst, inp)
        return float(-np.expm1(n_hops * np.log1p(-p))) if p < 1 else 1.0, f
    if semantics != "sequential":
        raise ValueError(f"unknown semantics {semantics!r}")
    psi, rho = make_input(inp.normalized())
    s_ok = inst.superops[inst.success].sum(axis=0)
    v = rho.reshape(-1)
    for _ in range(n_hops):
        v = s_ok @ v
    out = v.reshape(4, 4)
    p = float(np.trace(out).real)
    return p, (float(np.vdot(psi, out @ psi).real / p) if p > 0 else None)
