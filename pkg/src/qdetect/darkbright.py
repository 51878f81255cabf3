"""Dark and bright subspaces of a monitored Hamiltonian.

A dark state is a combination of energy eigenstates that each carry zero
weight on the monitored block; such states survive the measurement protocol
forever.  The bright subspace is the orthogonal complement.  For degenerate
eigenspaces darkness is a property of the *span*, not of any particular
basis: the dark combinations are found from the kernel of the matrix whose
columns are the projected eigenvectors of one degenerate group.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import Spectrum, all_ones_eigenvectors
from .states import Projector, SiteWindow, StateVector

#: A vector with population below this tolerance inside the monitored block
#: (or inside the dark sector) counts as having none.
DARK_TOL = 1e-9

#: Singular values below this fraction of the largest one are treated as
#: zero when extracting the kernel of a projected degenerate group.
KERNEL_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class DarkBrightDecomposition:
    """Orthonormal dark/bright bases and their projectors.

    ``dark_basis`` and ``bright_basis`` hold basis vectors as columns;
    either may have zero columns.  The two projectors always sum to the
    identity.
    """

    dark_basis: np.ndarray
    bright_basis: np.ndarray
    p_dark: Projector
    p_bright: Projector

    @property
    def dark_dim(self) -> int:
        return self.dark_basis.shape[1]

    @property
    def bright_dim(self) -> int:
        return self.bright_basis.shape[1]


def _orthonormalize(columns: np.ndarray) -> np.ndarray:
    if columns.shape[1] == 0:
        return columns
    q, _ = np.linalg.qr(columns)
    return q


def _assemble(dim: int, dark_cols: list[np.ndarray], bright_cols: list[np.ndarray]):
    dark = (
        np.column_stack(dark_cols)
        if dark_cols
        else np.zeros((dim, 0), dtype=np.complex128)
    )
    bright = (
        np.column_stack(bright_cols)
        if bright_cols
        else np.zeros((dim, 0), dtype=np.complex128)
    )
    p_dark = Projector(dark @ dark.conj().T)
    p_bright = Projector(bright @ bright.conj().T)
    return DarkBrightDecomposition(dark, bright, p_dark, p_bright)


def decompose(
    spectrum: Spectrum, p_target: Projector, tol: float = DARK_TOL
) -> DarkBrightDecomposition:
    """Split a spectrum into dark and bright sectors for one monitored block.

    Nondegenerate eigenvectors are classified directly by the norm of their
    projection onto the monitored block.  For a degenerate group of size
    ``g``, the dark combinations are the kernel vectors of the ``N x g``
    matrix whose columns are the projected group eigenvectors; the kernel is
    extracted by SVD with a rank cut at ``KERNEL_RTOL`` times the largest
    singular value, mapped back to state space and re-orthonormalized.
    """
    if spectrum.dim != p_target.dim:
        raise ValueError("spectrum and projector dimensions differ")
    dark_cols: list[np.ndarray] = []
    bright_cols: list[np.ndarray] = []
    for group in spectrum.degeneracy_groups:
        vecs = spectrum.eigenvectors[:, list(group)]
        if len(group) == 1:
            if np.linalg.norm(p_target.matrix @ vecs[:, 0]) <= tol:
                dark_cols.append(vecs)
            else:
                bright_cols.append(vecs)
            continue
        projected = p_target.matrix @ vecs
        _, sing, vh = np.linalg.svd(projected, full_matrices=True)
        smax = sing[0] if sing.size else 0.0
        if smax <= 1e-12:
            rank = 0
        else:
            rank = int(np.sum(sing > KERNEL_RTOL * smax))
        kernel_coeffs = vh[rank:].conj().T
        range_coeffs = vh[:rank].conj().T
        if kernel_coeffs.shape[1]:
            dark_cols.append(_orthonormalize(vecs @ kernel_coeffs))
        if range_coeffs.shape[1]:
            bright_cols.append(_orthonormalize(vecs @ range_coeffs))
    return _assemble(spectrum.dim, dark_cols, bright_cols)


def bright_basis_all_to_all(window: SiteWindow) -> DarkBrightDecomposition:
    """Closed-form decomposition for the fully-connected model.

    The zero-eigenvalue vectors supported entirely on the first ``m`` sites
    (those with ``l < m``) are dark; the uniform vector and the remaining
    zero modes are bright.  No numerical kernel computation is involved.
    """
    n, m = window.n_sites, window.cut
    vecs = all_ones_eigenvectors(n)
    dark = vecs[:, 1:m]
    bright = np.column_stack([vecs[:, :1], vecs[:, m:]])
    p_dark = Projector(dark @ dark.conj().T)
    p_bright = Projector(bright @ bright.conj().T)
    return DarkBrightDecomposition(dark, bright, p_dark, p_bright)


def eventual_detection_probability(
    psi0: StateVector, decomposition: DarkBrightDecomposition
) -> float:
    """Probability that the protocol ever detects the state.

    Equal to one minus the dark-sector population of the initial state; the
    dark component is conserved by the monitored evolution and is never
    seen by the detector.
    """
    dark_weight = float(
        np.linalg.norm(decomposition.p_dark.apply(psi0)) ** 2
    )
    return 1.0 - min(dark_weight, 1.0)


def is_bright(
    psi0: StateVector, decomposition: DarkBrightDecomposition, tol: float = DARK_TOL
) -> bool:
    """Whether the state has no dark component (up to ``tol``)."""
    return float(np.linalg.norm(decomposition.p_dark.apply(psi0))) <= tol


def special_state(window: SiteWindow) -> StateVector:
    """The unique bright state carried entirely by the unmeasured block.

    Amplitude ``1/sqrt(m)`` on the first ``m`` sites and zero on the
    monitored block; equivalently the normalized restriction of the uniform
    eigenvector to the complement.  It is the one bright state the detector
    cannot see at time zero, which is what makes its early detection
    probability grow quadratically instead of starting at a constant.
    """
    amp = np.zeros(window.n_sites, dtype=np.complex128)
    amp[: window.cut] = 1.0 / np.sqrt(window.cut)
    return StateVector(amp)


def random_bright_state(window: SiteWindow, seed: int) -> StateVector:
    """Normalized complex-normal combination over the bright basis."""
    rng = np.random.default_rng(seed)
    dec = bright_basis_all_to_all(window)
    coeff = rng.normal(size=dec.bright_dim) + 1j * rng.normal(size=dec.bright_dim)
    vec = dec.bright_basis @ coeff
    return StateVector(vec / np.linalg.norm(vec))
