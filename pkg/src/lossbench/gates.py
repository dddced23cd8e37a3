"""Finite unitary gate sets and sequence algebra.

Provides the single-qubit Pauli set (a unitary 1-design) and the 24-element
single-qubit Clifford group (a unitary 2-design), plus the group-average
(twirl) map, sequence composition/inversion, and the qutrit embedding used
to study leakage outside the qubit subspace.

Global phase is physically irrelevant and is quotiented everywhere: gates
are stored in a canonical form whose first nonzero entry is real positive,
and equality tests compare |<A, B>|/d against 1.
"""

from dataclasses import dataclass

import numpy as np

UNITARITY_ATOL = 1e-12
PHASE_MATCH_ATOL = 1e-10

_H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / np.sqrt(2.0)
_S = np.array([[1.0, 0.0], [0.0, 1.0j]], dtype=np.complex128)

_PAULIS = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128),
}


@dataclass(frozen=True)
class GateSet:
    """An ordered, immutable collection of d x d unitaries.

    ``design_order`` declares the strongest unitary-design property the set
    is known to have (0 = none claimed, 1 or 2).  Sequence indices are
    0-based positions into ``gates``; ``labels`` give the stable names used
    in run logs.
    """

    dim: int
    gates: tuple
    design_order: int
    labels: tuple

    def __post_init__(self):
        gates = tuple(np.array(g, dtype=np.complex128) for g in self.gates)
        if not gates:
            raise ValueError("GateSet needs at least one gate")
        if self.design_order not in (0, 1, 2):
            raise ValueError(f"design_order must be 0, 1 or 2, got {self.design_order}")
        eye = np.eye(self.dim)
        for i, g in enumerate(gates):
            if g.shape != (self.dim, self.dim):
                raise ValueError(
                    f"gate {i}: expected {self.dim}x{self.dim}, got {g.shape}"
                )
            dev = np.max(np.abs(g.conj().T @ g - eye))
            if dev > UNITARITY_ATOL:
                raise ValueError(f"gate {i} is not unitary (deviation {dev:.3e})")
            g.setflags(write=False)
        labels = tuple(str(s) for s in self.labels)
        if len(labels) != len(gates):
            raise ValueError("labels and gates must have the same length")
        if len(set(labels)) != len(labels):
            raise ValueError("labels must be unique")
        object.__setattr__(self, "gates", gates)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.gates)


def canonical_phase(u: np.ndarray) -> np.ndarray:
    """Rescale a unitary so its first nonzero entry is real positive."""
    flat = u.ravel()
    idx = int(np.argmax(np.abs(flat) > 1e-9))
    pivot = flat[idx]
    return u * (abs(pivot) / pivot)


def phase_equal(a: np.ndarray, b: np.ndarray, atol: float = PHASE_MATCH_ATOL) -> bool:
    """True when a = e^{i phi} b for some global phase phi."""
    d = a.shape[0]
    return abs(abs(np.trace(a.conj().T @ b)) / d - 1.0) < atol


def pauli_gateset() -> GateSet:
    """The four single-qubit Paulis {I, X, Y, Z}, a unitary 1-design."""
    names = ("I", "X", "Y", "Z")
    return GateSet(2, tuple(_PAULIS[n] for n in names), 1, names)


def clifford_gateset() -> GateSet:
    """The 24 single-qubit Clifford unitaries, a unitary 2-design.

    Enumerated as products of {I, H, S} words, reduced up to global phase;
    each element is stored in canonical phase and labeled by the shortest
    generating word found.
    """
    generators = {"H": _H, "S": _S}
    elements = {_phase_key(np.eye(2, dtype=np.complex128)): ("I", np.eye(2, dtype=np.complex128))}
    frontier = [("I", np.eye(2, dtype=np.complex128))]
    while frontier:
        new_frontier = []
        for word, mat in frontier:
            for gname, gmat in generators.items():
                prod = canonical_phase(gmat @ mat)
                key = _phase_key(prod)
                if key not in elements:
                    new_word = gname if word == "I" else gname + word
                    elements[key] = (new_word, prod)
                    new_frontier.append((new_word, prod))
        frontier = new_frontier
    if len(elements) != 24:
        raise RuntimeError(f"Clifford enumeration produced {len(elements)} elements")
    items = sorted(elements.values(), key=lambda kv: (len(kv[0]), kv[0]))
    labels = tuple(word for word, _ in items)
    gates = tuple(mat for _, mat in items)
    return GateSet(2, gates, 2, labels)


def _phase_key(u: np.ndarray) -> bytes:
    # Canonical-phase entries of Clifford matrices sit on a coarse grid,
    # so rounding to 9 decimals is collision- and split-free.  Adding 0.0
    # folds -0.0 into +0.0, which would otherwise split keys.
    return (np.round(canonical_phase(u), 9) + 0.0).tobytes()


def twirl(gateset: GateSet, a: np.ndarray) -> np.ndarray:
    """Group average |G|^-1 sum_g U_g A U_g^H.

    For any unitary 1-design this projects A onto Tr(A) * identity / d.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.shape != (gateset.dim, gateset.dim):
        raise ValueError(
            f"dimension mismatch: gate set dim {gateset.dim}, matrix shape {a.shape}"
        )
    out = np.zeros_like(a)
    for u in gateset.gates:
        out += u @ a @ u.conj().T
    return out / len(gateset)


def compose_sequence(gateset: GateSet, indices) -> np.ndarray:
    """Product U_{k_m} ... U_{k_1} for a 0-based index sequence.

    The first index acts first (rightmost factor).  An empty sequence
    composes to the identity.
    """
    out = np.eye(gateset.dim, dtype=np.complex128)
    n = len(gateset)
    for k in indices:
        if not 0 <= k < n:
            raise IndexError(f"gate index {k} out of range [0, {n})")
        out = gateset.gates[k] @ out
    return out


def inverse_gate(gateset: GateSet, indices) -> int:
    """Index of the gate undoing a sequence up to global phase.

    Returns j such that U_j @ compose_sequence(gateset, indices) is
    proportional to the identity.  Requires the set to be closed under
    inversion (true for the Pauli and Clifford sets); raises otherwise.
    """
    seq = compose_sequence(gateset, indices)
    d = gateset.dim
    # U_j = phase * seq^H  <=>  |Tr(U_j seq)| = d
    overlaps = [abs(np.trace(u @ seq)) / d for u in gateset.gates]
    best = int(np.argmax(overlaps))
    if abs(overlaps[best] - 1.0) > PHASE_MATCH_ATOL:
        raise ValueError(
            "gate set contains no inverse for this sequence (not closed under "
            f"inversion; best overlap {overlaps[best]!r})"
        )
    return best


def embed_in_qutrit(u: np.ndarray, theta: float) -> np.ndarray:
    """Block-embed a qubit unitary into a qutrit: U (+) e^{i theta}.

    The extra level picks up only the relative phase theta, so the embedded
    gate acts trivially on population outside the qubit subspace.
    """
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (2, 2):
        raise ValueError(f"expected a 2x2 unitary, got shape {u.shape}")
    out = np.zeros((3, 3), dtype=np.complex128)
    out[:2, :2] = u
    out[2, 2] = np.exp(1j * theta)
    return out


def embed_gateset(gateset: GateSet, theta: float) -> GateSet:
    """Embed every gate of a qubit set into a qutrit with one shared phase.

    The embedded set is not a unitary design on d=3, so design_order is 0.
    """
    if gateset.dim != 2:
        raise ValueError("only qubit gate sets can be embedded into a qutrit")
    gates = tuple(embed_in_qutrit(u, theta) for u in gateset.gates)
    return GateSet(3, gates, 0, gateset.labels)


def pad_to_qutrit(matrix: np.ndarray) -> np.ndarray:
    """Pad a 2x2 operator with a zero row/column for the leakage level."""
    matrix = np.asarray(matrix, dtype=np.complex128)
    if matrix.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {matrix.shape}")
    out = np.zeros((3, 3), dtype=np.complex128)
    out[:2, :2] = matrix
    return out
