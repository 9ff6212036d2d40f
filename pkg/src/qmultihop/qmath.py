"""Dense complex linear algebra on small multi-qubit registers.

Kets are 1-D complex arrays, operators and density matrices are square 2-D
arrays. Qubit 0 is the leftmost symbol of a ket label and the most
significant bit of the amplitude index, so ``basis_ket("01")`` has its single
nonzero amplitude at index 1.
"""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

ATOL = 1e-10

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def num_qubits(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 2 or 1 << n != dim:
        raise ValueError(f"dimension {dim} is not a power of two >= 2")
    return n


def _nq(x: np.ndarray) -> int:
    return num_qubits(x.shape[0])


def basis_ket(label: str) -> np.ndarray:
    """Computational basis ket from a bit string, e.g. ``"0110"``."""
    if not label or set(label) - {"0", "1"}:
        raise ValueError(f"bad basis label {label!r}")
    psi = np.zeros(2 ** len(label), dtype=complex)
    psi[int(label, 2)] = 1.0
    return psi


def ket_from_terms(terms: dict[str, complex]) -> np.ndarray:
    """Build an (unnormalized) ket from ``{"0011": amp, ...}``."""
    sizes = {len(k) for k in terms}
    if len(sizes) != 1:
        raise ValueError("all labels must have the same length")
    psi = np.zeros(2 ** sizes.pop(), dtype=complex)
    for label, amp in terms.items():
        psi += amp * basis_ket(label)
    return psi


def dm(psi: np.ndarray) -> np.ndarray:
    """|psi><psi|."""
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def normalize(x: np.ndarray) -> np.ndarray:
    """Unit-norm ket or unit-trace density matrix."""
    x = np.asarray(x, dtype=complex)
    if x.ndim == 1:
        nrm = np.linalg.norm(x)
    else:
        nrm = np.trace(x).real
    if nrm < 1e-300:
        raise ValueError("cannot normalize a zero state")
    return x / nrm


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; the left factor holds the most significant qubits.

    Both operands must be the same kind (ket with ket, matrix with matrix).
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != b.ndim or a.ndim not in (1, 2):
        raise ValueError(
            f"tensor of mismatched kinds: ndim {a.ndim} and ndim {b.ndim}"
        )
    for x in (a, b):
        num_qubits(x.shape[0])
        if x.ndim == 2 and x.shape[0] != x.shape[1]:
            raise ValueError(f"non-square operator of shape {x.shape}")
    return np.kron(a, b)


def tensor_all(*factors: np.ndarray) -> np.ndarray:
    out = factors[0]
    for f in factors[1:]:
        out = tensor(out, f)
    return out


def _check_qubits(qubits: Sequence[int], n: int) -> list[int]:
    qs = [int(q) for q in qubits]
    if not qs:
        raise ValueError("empty qubit list")
    if len(set(qs)) != len(qs):
        raise ValueError(f"duplicate qubit index in {qs}")
    for q in qs:
        if not 0 <= q < n:
            raise ValueError(f"qubit index {q} out of range for {n} qubits")
    return qs


def _apply_left(op: np.ndarray, t: np.ndarray, qs: list[int], n: int, offset: int = 0):
    """Contract op (2^k x 2^k) into axes ``offset + q`` of tensor t."""
    k = len(qs)
    op_t = op.reshape((2,) * (2 * k))
    axes = [offset + q for q in qs]
    out = np.tensordot(op_t, t, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


def apply_on_qubits(op: np.ndarray, target: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """Apply ``op`` to the listed qubits of a ket (U|psi>) or density matrix (U rho U^dag).

    ``op`` acts on ``qubits`` in the listed order, so ``CNOT`` on ``[3, 1]``
    uses qubit 3 as control.
    """
    op = np.asarray(op, dtype=complex)
    target = np.asarray(target, dtype=complex)
    n = _nq(target)
    qs = _check_qubits(qubits, n)
    if op.shape != (2 ** len(qs), 2 ** len(qs)):
        raise ValueError(
            f"operator of shape {op.shape} does not act on {len(qs)} qubits"
        )
    if target.ndim == 1:
        t = target.reshape((2,) * n)
        return _apply_left(op, t, qs, n).reshape(-1)
    if target.ndim != 2 or target.shape[0] != target.shape[1]:
        raise ValueError(f"target of shape {target.shape} is neither ket nor square matrix")
    t = target.reshape((2,) * (2 * n))
    t = _apply_left(op, t, qs, n)
    t = _apply_left(op.conj(), t, qs, n, offset=n)
    return t.reshape(2**n, 2**n)


def project_measure(
    state: np.ndarray,
    projector_ket: np.ndarray,
    qubits: Sequence[int],
    normalize_post: bool = False,
) -> tuple[float, np.ndarray]:
    """Project ``qubits`` onto ``projector_ket`` and remove them from the register.

    Returns ``(prob, post)`` where ``prob`` is the squared norm (ket) or trace
    (density matrix) of the projected branch. ``post`` is unnormalized unless
    ``normalize_post`` is set; it lives on the remaining qubits in their
    original order. Measuring every qubit leaves a 0-d array holding the
    overlap amplitude (ket) or the probability (density matrix).
    """
    state = np.asarray(state, dtype=complex)
    proj = np.asarray(projector_ket, dtype=complex)
    n = _nq(state)
    qs = _check_qubits(qubits, n)
    if proj.shape != (2 ** len(qs),):
        raise ValueError(
            f"projector of dimension {proj.shape} does not match {len(qs)} qubits"
        )
    k = len(qs)
    bra = proj.conj().reshape((2,) * k)
    if state.ndim == 1:
        t = state.reshape((2,) * n)
        post = np.tensordot(bra, t, axes=(list(range(k)), qs))
        post = post.reshape(-1) if post.ndim else post
        prob = float(np.vdot(post, post).real)
    else:
        t = state.reshape((2,) * (2 * n))
        rest = n - k
        t = np.tensordot(bra, t, axes=(list(range(k)), qs))
        # remaining column axes shifted down by the k removed row axes
        cols = [n - k + q for q in qs]
        t = np.tensordot(proj.reshape((2,) * k), t, axes=(list(range(k)), cols))
        post = t.reshape(2**rest, 2**rest) if rest else t
        prob = float(np.trace(np.atleast_2d(post)).real)
    if normalize_post:
        if prob <= 0:
            raise ValueError("cannot normalize a zero-probability branch")
        post = post / (np.sqrt(prob) if state.ndim == 1 else prob)
    return prob, post


def fidelity_pure(rho: np.ndarray, psi: np.ndarray) -> float:
    """<psi|rho|psi> for a pure target state."""
    rho = np.asarray(rho, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    if rho.ndim != 2 or psi.ndim != 1 or rho.shape != (psi.size, psi.size):
        raise ValueError(f"dimension mismatch: rho {rho.shape}, psi {psi.shape}")
    val = np.vdot(psi, rho @ psi)
    if abs(val.imag) > ATOL:
        raise ValueError(f"fidelity has imaginary part {val.imag:.3e}; rho not Hermitian?")
    return float(val.real)


def partial_trace(rho: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix on ``keep`` (in the listed order)."""
    rho = np.asarray(rho, dtype=complex)
    n = _nq(rho)
    ks = _check_qubits(keep, n)
    drop = [q for q in range(n) if q not in ks]
    t = rho.reshape((2,) * (2 * n))
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = list(letters[:n])
    cols = list(letters[n : 2 * n])
    for q in drop:
        cols[q] = rows[q]
    out = "".join(rows[q] for q in ks) + "".join(cols[q] for q in ks)
    red = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    d = 2 ** len(ks)
    return red.reshape(d, d)


def is_hermitian(m: np.ndarray, atol: float = 1e-9) -> bool:
    return bool(np.allclose(m, m.conj().T, atol=atol, rtol=0))


def min_eigenvalue(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh((m + m.conj().T) / 2).min())


def is_psd(m: np.ndarray, tol: float = 1e-9) -> bool:
    return is_hermitian(m, tol) and min_eigenvalue(m) >= -tol


def is_unitary(u: np.ndarray, atol: float = ATOL) -> bool:
    return bool(np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=atol, rtol=0))


PAULI_LETTERS = ("I", "X", "Z", "XZ")
_PAULI = {"I": I2, "X": X, "Z": Z, "XZ": X @ Z}


def pauli(letter: str) -> np.ndarray:
    """Single-qubit element of {I, X, Z, XZ}; ``XZ`` means Z applied first, then X."""
    return _PAULI[letter]


def pauli_string_op(letters: Sequence[str]) -> np.ndarray:
    return tensor_all(*(pauli(c) for c in letters))


def pauli_strings(n: int):
    """All 4^n strings over {I, X, Z, XZ} as tuples, in lexicographic order."""
    return itertools.product(PAULI_LETTERS, repeat=n)
