"""Entanglement swapping between two cluster resources at an intermediate node.

Register layout (qubit index -> role)::

    0 I1   1 I3   2 I2   3 R4     left cluster
    4 I4   5 D1   6 D2   7 D3     right cluster

The node measures (I3, I4) and (I1, I2) in the Bell basis; the survivors
(R4, D1, D2, D3) carry a cluster state up to a Pauli string.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .qmath import PAULI_LETTERS, pauli_string_op, pauli_strings, project_measure, tensor
from .states import BellKind, ClusterParams, make_bell, make_cluster

I1, I3, I2, R4, I4, D1, D2, D3 = range(8)
MEASURED = (I3, I4, I1, I2)
SURVIVORS = ("R4", "D1", "D2", "D3")


class SwapFailure(RuntimeError):
    def __init__(self, msg: str, entry: "CorrectionEntry | None" = None):
        super().__init__(msg)
        self.entry = entry


@dataclass(frozen=True)
class SwapOutcome:
    pair34: BellKind
    pair12: BellKind

    @property
    def label(self) -> str:
        return f"{self.pair34.label}/{self.pair12.label}"


ALL_SWAP_OUTCOMES = tuple(SwapOutcome(a, b) for a in BellKind for b in BellKind)


@dataclass(frozen=True)
class CorrectionEntry:
    outcome: SwapOutcome | None
    pauli_string: tuple[str, str, str, str]
    achieved_fidelity: float
    global_phase: complex

    @property
    def pauli_label(self) -> str:
        return ",".join(self.pauli_string)


def swap_residual(left: np.ndarray, right: np.ndarray, outcome: SwapOutcome) -> tuple[float, np.ndarray]:
    """Project the two resources onto ``outcome``; returns (weight, residual on R4 D1 D2 D3)."""
    proj = tensor(make_bell(outcome.pair34), make_bell(outcome.pair12))
    return project_measure(tensor(left, right), proj, list(MEASURED))


def swap_branches(cluster: ClusterParams) -> list[tuple[SwapOutcome, np.ndarray, float]]:
    cs = make_cluster(cluster)
    out = []
    for oc in ALL_SWAP_OUTCOMES:
        w, r = swap_residual(cs, cs, oc)
        out.append((oc, r, w))
    return out


def _search_key(s):
    # fewest non-identity factors, then corrections on earlier qubits (R4 first)
    pos = tuple(i for i, c in enumerate(s) if c != "I")
    return (len(pos), pos, tuple(PAULI_LETTERS.index(c) for c in s))


_ORDERED_STRINGS = sorted(pauli_strings(4), key=_search_key)
_STRING_OPS = np.stack([pauli_string_op(s) for s in _ORDERED_STRINGS])


def find_correction(residual: np.ndarray, cluster: ClusterParams,
                    outcome: SwapOutcome | None = None) -> CorrectionEntry:
    """Exhaustive search over the 256 Pauli strings on (R4, D1, D2, D3).

    Picks the string maximizing |<CS|U r>|^2 for the normalized residual r.
    Ties (within 1e-12) go to the earliest string in search order: fewest
    non-identity factors, then factors on earlier qubits, then I < X < Z < XZ.
    """
    nrm = np.linalg.norm(residual)
    if nrm < 1e-14:
        raise SwapFailure("residual vanishes; no correction exists")
    r = residual / nrm
    target = make_cluster(cluster)
    target = target / np.linalg.norm(target)
    amps = (_STRING_OPS @ r) @ target.conj()
    fids = np.abs(amps) ** 2
    best = int(np.flatnonzero(fids >= fids.max() - 1e-12)[0])
    a = amps[best]
    phase = a / abs(a) if abs(a) > 0 else 1.0 + 0j
    return CorrectionEntry(outcome, _ORDERED_STRINGS[best], float(min(fids[best], 1.0)), complex(phase))


def correction_table(cluster: ClusterParams) -> list[CorrectionEntry]:
    return [find_correction(r, cluster, oc) for oc, r, _ in swap_branches(cluster)]


def correction_table_csv(entries: list[CorrectionEntry]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["outcome_pair34", "outcome_pair12", "pauli_string", "fidelity"])
    for e in entries:
        w.writerow([e.outcome.pair34.label, e.outcome.pair12.label,
                    e.pauli_label, format(e.achieved_fidelity, ".12g")])
    return buf.getvalue()


@dataclass
class SwapRecord:
    outcome: SwapOutcome
    correction: CorrectionEntry
    fidelity_after: float


@dataclass
class SwapChainResult:
    state: np.ndarray
    log: list[SwapRecord] = field(default_factory=list)


def swap_chain(n_segments: int, cluster: ClusterParams, rng: np.random.Generator,
               min_fidelity: float = 1 - 1e-6) -> SwapChainResult:
    """Join ``n_segments`` cluster links into one by ``n_segments - 1`` swaps.

    Every swap samples its Bell outcomes with Born weights, applies the
    looked-up Pauli correction and checks the survivors against |CS>.
    """
    if n_segments < 1:
        raise ValueError("need at least one segment")
    cs = make_cluster(cluster)
    cs = cs / np.linalg.norm(cs)
    table = {e.outcome: e for e in correction_table(cluster)}
    res = SwapChainResult(cs.copy())
    for _ in range(n_segments - 1):
        branches = [(oc, *swap_residual(res.state, cs, oc)) for oc in ALL_SWAP_OUTCOMES]
        w = np.array([b[1] for b in branches])
        k = int(rng.choice(len(branches), p=w / w.sum()))
        oc, wk, r = branches[k]
        entry = table[oc]
        if entry.achieved_fidelity < min_fidelity:
            raise SwapFailure(
                f"swap outcome {oc.label} only reaches fidelity {entry.achieved_fidelity:.3e}",
                entry,
            )
        state = pauli_string_op(entry.pauli_string) @ (r / np.sqrt(wk))
        fid = float(abs(np.vdot(cs, state)) ** 2)
        if fid < min_fidelity:
            raise SwapFailure(f"swap outcome {oc.label} left fidelity {fid:.3e}", entry)
        res.log.append(SwapRecord(oc, entry, fid))
        res.state = state
    return res
