"""The fully-connected Hamiltonian, its exact propagator, and eigenbases.

The model is ``H = -J E`` with ``E`` the all-ones matrix.  Since
``E^k = N^(k-1) E``, the propagator has the rank-1 closed form
``U_t = 1 + b_t E`` which is what every hot path in this package uses;
generic dense eigendecomposition exists for arbitrary Hermitian matrices
(and doubles as a cross-check of the closed forms in the test suite).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .states import PROJECTOR_TOL

#: Relative tolerance (times the spectral radius) used to decide that two
#: eigenvalues belong to the same degenerate group.
CLUSTER_RTOL = 1e-8


@dataclass(frozen=True)
class AllToAllModel:
    """Uniform hopping between every pair of sites with amplitude ``coupling``.

    ``coupling = 0`` freezes the dynamics entirely and is rejected.
    """

    n_sites: int
    coupling: float

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("n_sites must be positive")
        if self.coupling == 0.0:
            raise ValueError("coupling must be nonzero")

    def hamiltonian(self) -> np.ndarray:
        return -self.coupling * np.ones((self.n_sites, self.n_sites))


def b_coefficient(t: float, model: AllToAllModel) -> complex:
    """Scalar weight of the all-ones matrix in ``U_t = 1 + b_t E``.

    ``b_t = (exp(i J N t) - 1) / N``, so ``1 + N b_t`` always has unit
    modulus.
    """
    if t < 0:
        raise ValueError("time must be nonnegative")
    n = model.n_sites
    return (np.exp(1j * model.coupling * n * t) - 1.0) / n


def propagator(t: float, model: AllToAllModel) -> np.ndarray:
    """Unitary time-evolution matrix ``U_t`` via the rank-1 closed form."""
    n = model.n_sites
    return np.eye(n, dtype=np.complex128) + b_coefficient(t, model) * np.ones((n, n))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Orthonormal eigendecomposition with degeneracy bookkeeping.

    ``eigenvalues`` are the Hamiltonian eigenvalues and ``eigenvectors[:, k]``
    is the eigenvector for ``eigenvalues[k]``.  ``degeneracy_groups`` is a
    partition of the column indices; eigenvalues inside one group coincide up
    to the clustering tolerance.  For the fully-connected model
    ``e_eigenvalues`` additionally carries the eigenvalues of the bare
    all-ones matrix (``N`` once, ``0`` with multiplicity ``N - 1``); it is
    ``None`` for generic Hamiltonians.  Keeping both labellings explicit
    avoids sign slips between ``E`` and ``H = -J E``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    degeneracy_groups: tuple[tuple[int, ...], ...]
    e_eigenvalues: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.eigenvectors.shape[0]


def all_ones_eigenvectors(n_sites: int) -> np.ndarray:
    """Orthonormal eigenvectors of the all-ones matrix, as columns.

    Column 0 is the uniform vector (eigenvalue ``N``).  Column ``l`` for
    ``l = 1..N-1`` is the zero-eigenvalue vector with entries ``-C_l`` on the
    first ``l`` sites, ``l C_l`` on site ``l+1`` and zero beyond, where
    ``C_l = 1/sqrt(l(l+1))``.
    """
    vecs = np.zeros((n_sites, n_sites), dtype=np.complex128)
    vecs[:, 0] = 1.0 / np.sqrt(n_sites)
    for l in range(1, n_sites):
        c = 1.0 / np.sqrt(l * (l + 1))
        vecs[:l, l] = -c
        vecs[l, l] = l * c
    return vecs


def closed_form_eigenbasis(model: AllToAllModel) -> Spectrum:
    """Exact eigenbasis of the fully-connected Hamiltonian.

    The all-ones matrix has eigenvalue ``N`` on the uniform vector and a
    ``0`` eigenspace of dimension ``N - 1``; the Hamiltonian eigenvalues are
    ``-J`` times those.
    """
    n = model.n_sites
    vecs = all_ones_eigenvectors(n)
    e_vals = np.zeros(n)
    e_vals[0] = n
    h_vals = -model.coupling * e_vals
    if n == 1:
        groups: tuple[tuple[int, ...], ...] = ((0,),)
    else:
        groups = ((0,), tuple(range(1, n)))
    return Spectrum(h_vals, vecs, groups, e_eigenvalues=e_vals)


def generic_eigenbasis(hmat: np.ndarray, cluster_tol: float | None = None) -> Spectrum:
    """Dense eigendecomposition of an arbitrary Hermitian matrix.

    Eigenvalues closer than ``cluster_tol`` (default: ``CLUSTER_RTOL`` times
    the spectral radius) are merged into one degeneracy group; the grouping
    is by chaining over the sorted spectrum.
    """
    hmat = np.asarray(hmat, dtype=np.complex128)
    if hmat.ndim != 2 or hmat.shape[0] != hmat.shape[1]:
        raise ValueError("Hamiltonian must be a square matrix")
    if np.max(np.abs(hmat - hmat.conj().T)) > PROJECTOR_TOL:
        raise ValueError("Hamiltonian is not Hermitian")
    vals, vecs = np.linalg.eigh(hmat)
    if cluster_tol is None:
        scale = float(np.max(np.abs(vals))) if vals.size else 0.0
        cluster_tol = CLUSTER_RTOL * scale
    groups: list[tuple[int, ...]] = []
    current = [0]
    for k in range(1, vals.size):
        if vals[k] - vals[k - 1] <= cluster_tol:
            current.append(k)
        else:
            groups.append(tuple(current))
            current = [k]
    groups.append(tuple(current))
    return Spectrum(vals, vecs, tuple(groups))
