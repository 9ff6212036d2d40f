"""Canonical states: the two-qubit input, the Bell basis and the 4-qubit cluster."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .qmath import dm

_S = 1 / math.sqrt(2)


class BellKind(enum.Enum):
    """Bell states; ``sign`` is the relative sign, ``parity`` 0 for Phi, 1 for Psi."""

    PHI_PLUS = ("Phi+", 0, +1)
    PHI_MINUS = ("Phi-", 0, -1)
    PSI_PLUS = ("Psi+", 1, +1)
    PSI_MINUS = ("Psi-", 1, -1)

    def __init__(self, label: str, parity: int, sign: int):
        self.label = label
        self.parity = parity
        self.sign = sign

    @property
    def family(self) -> str:
        return "Psi" if self.parity else "Phi"

    @classmethod
    def from_label(cls, label: str) -> "BellKind":
        for k in cls:
            if k.label == label or k.name == label:
                return k
        raise ValueError(f"unknown Bell state {label!r}")


def make_bell(kind: BellKind) -> np.ndarray:
    """(|00> +- |11>)/sqrt2 for Phi, (|01> +- |10>)/sqrt2 for Psi."""
    psi = np.zeros(4, dtype=complex)
    if kind.parity == 0:
        psi[0b00], psi[0b11] = _S, kind.sign * _S
    else:
        psi[0b01], psi[0b10] = _S, kind.sign * _S
    return psi


@dataclass(frozen=True)
class InputParams:
    """Amplitudes of the source state a0|00> + d0|11>.

    Unnormalized pairs are accepted; closed forms carry ``norm_sq ** 2``.
    """

    a0: complex
    d0: complex

    def __post_init__(self):
        for v in (self.a0, self.d0):
            if not np.isfinite(complex(v)):
                raise ValueError("input amplitudes must be finite")

    @property
    def norm_sq(self) -> float:
        return abs(self.a0) ** 2 + abs(self.d0) ** 2

    @property
    def is_normalized(self) -> bool:
        return abs(self.norm_sq - 1) <= 1e-10

    def normalized(self) -> "InputParams":
        n = math.sqrt(self.norm_sq)
        return InputParams(self.a0 / n, self.d0 / n)


def make_input(p: InputParams) -> tuple[np.ndarray, np.ndarray]:
    """Return the ket a0|00> + d0|11> and its density matrix."""
    psi = np.zeros(4, dtype=complex)
    psi[0b00], psi[0b11] = p.a0, p.d0
    return psi, dm(psi)


@dataclass(frozen=True)
class ClusterParams:
    """Real coefficients of tau0|0000> + tau1|0011> + tau2|1100> - tau3|1111>.

    tau1 and tau2 must be nonzero since the recovery measurement divides by
    them. Normalization (sum of squares equal to one) is checked by
    :meth:`require_normalized` where it matters.
    """

    tau: tuple[float, float, float, float] = (0.5, 0.5, 0.5, 0.5)

    def __post_init__(self):
        tau = tuple(float(t) for t in self.tau)
        if len(tau) != 4:
            raise ValueError(f"need four cluster coefficients, got {len(tau)}")
        if not all(math.isfinite(t) for t in tau):
            raise ValueError("cluster coefficients must be finite")
        if tau[1] == 0 or tau[2] == 0:
            raise ValueError("tau1 and tau2 must be nonzero")
        object.__setattr__(self, "tau", tau)

    @classmethod
    def balanced(cls) -> "ClusterParams":
        return cls((0.5, 0.5, 0.5, 0.5))

    @property
    def norm_sq(self) -> float:
        return sum(t * t for t in self.tau)

    @property
    def is_normalized(self) -> bool:
        return abs(self.norm_sq - 1) <= 1e-10

    def require_normalized(self) -> "ClusterParams":
        if not self.is_normalized:
            raise ValueError(
                f"cluster coefficients not normalized: sum tau^2 = {self.norm_sq!r}"
            )
        return self

    @property
    def is_balanced(self) -> bool:
        return all(abs(t - 0.5) <= 1e-12 for t in self.tau)


def make_cluster(c: ClusterParams) -> np.ndarray:
    t0, t1, t2, t3 = c.tau
    psi = np.zeros(16, dtype=complex)
    psi[0b0000] = t0
    psi[0b0011] = t1
    psi[0b1100] = t2
    psi[0b1111] = -t3
    return psi
