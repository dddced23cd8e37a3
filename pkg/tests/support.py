"""Shared oracles and random-object factories for the test suite.

Everything here is deliberately independent of the library internals it is
used to check: the sequence averages are computed by brute-force branching
over every gate word, and the survival statistics by direct Monte Carlo
over Haar-random pure states.
"""

import itertools

import numpy as np

import lossbench as lb
from lossbench.core import _apply_kraus, hermitian_part


def enumerate_average(gateset, channel, rho, q, m):
    """Signal averaged over all |G|^m gate words, by breadth-first branching.

    Carries every branch of the sequence tree as a stacked array of
    (unnormalized) states, applying the channel to all branches at once and
    then fanning each branch out across the gate set.  Memory grows as
    |G|^m, so keep m small.
    """
    gates = np.stack(gateset.gates)
    kraus = np.stack(channel.kraus)
    states = rho.matrix[np.newaxis]
    for _ in range(m):
        states = np.einsum("kij,sjl,kml->sim", kraus, states, kraus.conj())
        states = np.einsum("gai,sij,gbj->gsab", gates, states, gates.conj())
        states = states.reshape(-1, rho.dim, rho.dim)
    return float(np.mean(np.real(np.einsum("ij,sji->s", q.matrix, states))))


def enumerate_average_naive(gateset, channel, rho, q, m):
    """Same average as enumerate_average, one sequence at a time."""
    values = []
    for word in itertools.product(range(len(gateset)), repeat=m):
        mat = rho.matrix
        for k in word:
            mat = _apply_kraus(channel.kraus, mat)
            u = gateset.gates[k]
            mat = u @ mat @ u.conj().T
        values.append(float(np.real(np.trace(q.matrix @ mat))))
    return float(np.mean(values))


def haar_states(dim, n, seed):
    """n Haar-random pure state vectors, rows of shape (n, dim)."""
    rng = lb.stream(seed)
    v = rng.normal(size=(n, dim)) + 1j * rng.normal(size=(n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_density(dim, seed, pure=False):
    """Random full-rank (or pure) density matrix."""
    rng = lb.stream(seed)
    if pure:
        v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        v /= np.linalg.norm(v)
        return lb.DensityMatrix(dim, np.outer(v, v.conj()))
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    mat = a @ a.conj().T
    return lb.DensityMatrix(dim, mat / np.trace(mat))


def random_povm(dim, seed):
    """Random measurement operator with eigenvalues drawn from [0, 1]."""
    basis = lb.random_orthonormal_basis(dim, seed)
    eigs = lb.stream(seed, 77).uniform(0.0, 1.0, size=dim)
    mat = basis @ np.diag(eigs).astype(complex) @ basis.conj().T
    return lb.MeasurementOperator(dim, hermitian_part(mat))
