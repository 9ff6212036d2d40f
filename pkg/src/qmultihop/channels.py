"""Amplitude- and phase-damping noise as Kraus sets.

Two ways of using a Kraus set are provided. :func:`apply_channel` is the
CPTP map rho -> sum_k K rho K^dag. :func:`coherent_noise` instead applies the
same Kraus index to every listed qubit and adds the resulting kets, which is
the amplitude-level bookkeeping behind the closed-form branch coefficients.
The two generally disagree; see ``oracle.noisy_subset_scan``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .qmath import X, apply_on_qubits, dm


class Channel(str, enum.Enum):
    AMPLITUDE = "amp"
    PHASE = "phase"


@dataclass(frozen=True)
class NoiseKind:
    kind: Channel
    xi: float

    def __post_init__(self):
        object.__setattr__(self, "kind", Channel(self.kind))
        xi = float(self.xi)
        if not (0.0 <= xi <= 1.0):
            raise ValueError(f"decoherence rate must lie in [0, 1], got {xi!r}")
        object.__setattr__(self, "xi", xi)

    @property
    def xi_bar(self) -> float:
        return 1.0 - self.xi

    @classmethod
    def amplitude(cls, xi: float) -> "NoiseKind":
        return cls(Channel.AMPLITUDE, xi)

    @classmethod
    def phase(cls, xi: float) -> "NoiseKind":
        return cls(Channel.PHASE, xi)


@dataclass(frozen=True)
class KrausSet:
    ops: tuple[np.ndarray, ...]

    def completeness_error(self) -> float:
        """Max entrywise deviation of sum K^dag K from the identity."""
        s = sum(k.conj().T @ k for k in self.ops)
        return float(np.abs(s - np.eye(s.shape[0])).max())

    def __len__(self):
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)


def amplitude_kraus(xi: float) -> KrausSet:
    """Relaxation |1> -> |0> with probability ``xi``.

    No range check: values outside [0, 1] give a set that fails completeness,
    which the verification report uses as a negative control.
    """
    k0 = np.array([[1, 0], [0, np.sqrt(complex(1 - xi))]], dtype=complex)
    k1 = np.array([[0, np.sqrt(complex(xi))], [0, 0]], dtype=complex)
    return KrausSet((k0, k1))


def phase_kraus(xi: float) -> KrausSet:
    k0 = np.sqrt(complex(1 - xi)) * np.eye(2, dtype=complex)
    k1 = np.sqrt(complex(xi)) * np.diag([1, 0]).astype(complex)
    k2 = np.sqrt(complex(xi)) * np.diag([0, 1]).astype(complex)
    return KrausSet((k0, k1, k2))


def kraus_set(n: NoiseKind) -> KrausSet:
    if n.kind is Channel.AMPLITUDE:
        return amplitude_kraus(n.xi)
    return phase_kraus(n.xi)


def mirrored(ks: KrausSet) -> KrausSet:
    """Conjugate every operator by X, e.g. amplitude damping toward |1>."""
    return KrausSet(tuple(X @ k @ X for k in ks))


def apply_channel(rho: np.ndarray, qubit: int, ks: KrausSet) -> np.ndarray:
    out = np.zeros_like(rho, dtype=complex)
    for k in ks:
        out += apply_on_qubits(k, rho, [qubit])
    return out


def apply_channel_many(rho: np.ndarray, qubits: Sequence[int], ks: KrausSet) -> np.ndarray:
    """Independent copies of the channel on each listed qubit."""
    for q in qubits:
        rho = apply_channel(rho, q, ks)
    return rho


def apply_kraus_branch(psi: np.ndarray, qubit: int, k: np.ndarray) -> np.ndarray:
    """K|psi> on one qubit; the result is not renormalized."""
    return apply_on_qubits(k, psi, [qubit])


def coherent_noise(psi: np.ndarray, qubits: Sequence[int], ks: KrausSet) -> np.ndarray:
    """sum_k (K_k on every listed qubit)|psi>, a single unnormalized ket."""
    out = np.zeros_like(psi, dtype=complex)
    for k in ks:
        branch = psi
        for q in qubits:
            branch = apply_kraus_branch(branch, q, k)
        out += branch
    return out


def noisy_cluster_dm(cluster_ket: np.ndarray, qubits: Sequence[int], ks: KrausSet) -> np.ndarray:
    return apply_channel_many(dm(cluster_ket), qubits, ks)


def amplitude_bracket(xi: float, tau: Sequence[float]) -> float:
    """tau0^2 (xb^4 + xi^4) + (tau1^2 + tau2^2) xb^2 - 2 tau0 tau3 xi^2 + tau3^2."""
    t0, t1, t2, t3 = tau
    xb = 1.0 - xi
    return (
        t0 * t0 * (xb**4 + xi**4)
        + (t1 * t1 + t2 * t2) * xb**2
        - 2 * t0 * t3 * xi**2
        + t3 * t3
    )


def phase_bracket(xi: float, tau: Sequence[float]) -> float:
    t0, t1, t2, t3 = tau
    xb = 1.0 - xi
    return (
        t0 * t0 * (xb**2 + xi**2) ** 2
        + (t1 * t1 + t2 * t2 + t3 * t3) * xb**4
        + 2 * t3 * t3 * xi**2 * xb**2
        + xi**4 * t3 * t3
    )


def dressed_coefficients(noise: NoiseKind, tau: Sequence[float]) -> tuple[float, float]:
    """Noise-scaled (c1, c2) multiplying tau1 and tau2 in the recovered branch."""
    _, t1, t2, _ = tau
    xb = noise.xi_bar
    scale = xb if noise.kind is Channel.AMPLITUDE else xb * xb
    return scale * t1, scale * t2


def gamma(c1: float, c2: float) -> float:
    """1/c1^2 + 1/c2^2 (infinite when either coefficient vanishes)."""
    if c1 == 0 or c2 == 0:
        return math.inf
    return 1.0 / (c1 * c1) + 1.0 / (c2 * c2)
