"""Complex state vectors, site windows, and the projectors built from them.

Sites are labelled ``1..N`` in every public interface, matching the physics
convention for the lattice; the underlying numpy arrays are 0-indexed and that
offset is never exposed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: Tolerance on |norm - 1| below which a vector counts as normalized, and on
#: the max-norm defects of projector matrices.  All matrices here are tiny
#: (N up to a few hundred), so there is ample headroom above machine epsilon.
NORM_TOL = 1e-10
PROJECTOR_TOL = 1e-10


def _as_complex_vector(values) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128).reshape(-1)
    if arr.size == 0:
        raise ValueError("state vector needs at least one amplitude")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitudes over the lattice sites.

    The ``normalized`` flag is computed once at construction.  Vectors are
    deliberately *not* renormalized: the conditional (post-measurement,
    pre-normalization) amplitudes that drive the survival probability are
    meaningful precisely because their norm decays.
    """

    amplitudes: np.ndarray
    normalized: bool = field(init=False)

    def __post_init__(self):
        arr = _as_complex_vector(self.amplitudes)
        object.__setattr__(self, "amplitudes", arr)
        object.__setattr__(
            self, "normalized", abs(np.linalg.norm(arr) - 1.0) <= NORM_TOL
        )

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def amplitude(self, site: int) -> complex:
        """Amplitude on the 1-indexed ``site``."""
        if not 1 <= site <= self.dim:
            raise ValueError(f"site {site} outside [1, {self.dim}]")
        return complex(self.amplitudes[site - 1])


def site_state(n_sites: int, site: int) -> StateVector:
    """Basis state localized on one 1-indexed site."""
    if not 1 <= site <= n_sites:
        raise ValueError(f"site {site} outside [1, {n_sites}]")
    amp = np.zeros(n_sites, dtype=np.complex128)
    amp[site - 1] = 1.0
    return StateVector(amp)


def uniform_state(n_sites: int) -> StateVector:
    """The normalized constant vector (1, ..., 1)/sqrt(N)."""
    return StateVector(np.full(n_sites, 1.0 / np.sqrt(n_sites), dtype=np.complex128))


@dataclass(frozen=True)
class SiteWindow:
    """Partition of sites ``1..n_sites`` at ``cut``.

    The detector probes the block of sites ``cut+1 .. n_sites``; the first
    ``cut`` sites form the unmeasured complement.  Both blocks must be
    nonempty, so ``1 <= cut <= n_sites - 1``.
    """

    n_sites: int
    cut: int

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValueError("need at least two sites to define a window")
        if not 1 <= self.cut <= self.n_sites - 1:
            raise ValueError(
                f"cut must lie in [1, {self.n_sites - 1}], got {self.cut}"
            )

    @property
    def target_size(self) -> int:
        return self.n_sites - self.cut

    @property
    def complement_size(self) -> int:
        return self.cut

    def target_sites(self) -> range:
        """1-indexed monitored sites."""
        return range(self.cut + 1, self.n_sites + 1)

    def complement_sites(self) -> range:
        """1-indexed unmeasured sites."""
        return range(1, self.cut + 1)


@dataclass(frozen=True, eq=False)
class Projector:
    """Hermitian idempotent matrix, validated at construction."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("projector matrix must be square")
        if np.max(np.abs(mat - mat.conj().T)) > PROJECTOR_TOL:
            raise ValueError("projector matrix is not Hermitian")
        if np.max(np.abs(mat @ mat - mat)) > PROJECTOR_TOL:
            raise ValueError("projector matrix is not idempotent")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.matrix).real))

    def apply(self, vec: np.ndarray | StateVector) -> np.ndarray:
        arr = vec.amplitudes if isinstance(vec, StateVector) else np.asarray(vec)
        return self.matrix @ arr


def window_projectors(window: SiteWindow) -> tuple[Projector, Projector]:
    """Projectors onto the monitored block and its complement.

    Returns ``(P_target, P_complement)``: diagonal 0/1 matrices that sum to
    the identity exactly.
    """
    diag = np.zeros(window.n_sites)
    diag[window.cut:] = 1.0
    return Projector(np.diag(diag)), Projector(np.diag(1.0 - diag))


def window_sums(psi: StateVector, window: SiteWindow) -> tuple[complex, complex]:
    """Amplitude sums over the two blocks of the window.

    Returns ``(c_target, c_complement)``, the plain (unweighted) sums of the
    amplitudes over the monitored sites and over the complement.  These two
    numbers determine every closed-form detection statistic of the
    fully-connected model.
    """
    if psi.dim != window.n_sites:
        raise ValueError(
            f"state has {psi.dim} sites but window expects {window.n_sites}"
        )
    m = window.cut
    return (
        complex(psi.amplitudes[m:].sum()),
        complex(psi.amplitudes[:m].sum()),
    )
