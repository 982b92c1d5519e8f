"""Dense Hermitian/unitary helpers and exact randomness primitives.

Matrices are plain complex ``numpy`` arrays; the ``check_*`` functions play
the role of constructors and enforce the structural invariants.
"""

from typing import NamedTuple

import numpy as np

from .exceptions import DomainError, StructureError

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10


def as_generator(random_state=None):
    """Turn ``None``, an int seed, a ``SeedSequence`` or a ``Generator`` into a ``Generator``."""
    if isinstance(random_state, np.random.Generator):
        return random_state
    return np.random.default_rng(random_state)


def check_hermitian(H, tol=HERMITIAN_TOL):
    """Validate ``H`` as a Hermitian matrix and return a normalized copy.

    The copy is exactly Hermitian: it is replaced by ``(H + H^*)/2`` so the
    diagonal is real. ``tol`` is an absolute per-entry tolerance, scaled by
    ``1 + max|H_ij|`` so matrices produced by floating point products pass.

    Raises
    ------
    StructureError
        If ``H`` is not square or deviates from its conjugate transpose.
    """
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1] or H.shape[0] == 0:
        raise StructureError(f"expected a non-empty square matrix, got shape {H.shape}")
    H = H.astype(complex)
    scale = 1.0 + np.max(np.abs(H))
    dev = np.max(np.abs(H - H.conj().T))
    if dev > tol * scale:
        raise StructureError(f"matrix is not Hermitian (max deviation {dev:.3e})")
    H = 0.5 * (H + H.conj().T)
    H[np.diag_indices_from(H)] = H.diagonal().real
    return H


def check_unitary(U, tol=UNITARY_TOL):
    """Validate ``U`` as unitary (``U U^* = I`` up to ``tol`` max-abs) and return it."""
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1] or U.shape[0] == 0:
        raise StructureError(f"expected a non-empty square matrix, got shape {U.shape}")
    dev = np.max(np.abs(U @ U.conj().T - np.eye(U.shape[0])))
    if dev > tol:
        raise StructureError(f"matrix is not unitary (max deviation {dev:.3e})")
    return U


class SpectralDecomposition(NamedTuple):
    """Eigenvalues sorted non-increasing and the matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        U, vals = self.eigenvectors, self.eigenvalues
        return (U * vals) @ U.conj().T


def _fix_phases(V, tol=1e-12):
    # First component with modulus above tol becomes real positive.
    idx = np.argmax(np.abs(V) > tol, axis=-2)
    pivot = np.take_along_axis(V, idx[..., None, :], axis=-2)
    phase = pivot / np.abs(pivot)
    return V / phase


def hermitian_eigendecompose(H):
    """Eigendecomposition ``H = U diag(vals) U^*`` with a deterministic phase convention.

    Eigenvalues come out non-increasing; in every eigenvector column the
    first non-negligible component is made real positive.

    Examples
    --------
    >>> d = hermitian_eigendecompose([[0, 1], [1, 0]])
    >>> d.eigenvalues
    array([ 1., -1.])
    """
    H = check_hermitian(H)
    vals, vecs = np.linalg.eigh(H)
    vals, vecs = vals[::-1], vecs[:, ::-1]
    return SpectralDecomposition(vals.copy(), _fix_phases(vecs))


def sample_haar_unitary(n, random_state=None, size=None):
    """Draw Haar-distributed unitary matrices.

    Uses the QR factorisation of a complex Ginibre matrix with the phases of
    ``diag(R)`` pushed into ``Q``; this is Gram-Schmidt on Gaussian columns.

    Parameters
    ----------
    n : int
        Matrix dimension, at least 1.
    random_state : None, int or numpy.random.Generator
    size : int, optional
        Number of matrices. ``None`` returns a single ``(n, n)`` matrix,
        otherwise an array of shape ``(size, n, n)``.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"dimension must be a positive integer, got {n}")
    n = int(n)
    rng = as_generator(random_state)
    shape = (n, n) if size is None else (int(size), n, n)
    Z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R, axis1=-2, axis2=-1)
    return Q * (d / np.abs(d))[..., None, :]


def sample_complex_sphere(dim, radius, random_state=None):
    """Uniform point on the sphere of the given radius in ``C^dim``."""
    if int(dim) != dim or dim < 1:
        raise DomainError(f"dimension must be a positive integer, got {dim}")
    if not radius >= 0:
        raise DomainError(f"radius must be nonnegative, got {radius}")
    rng = as_generator(random_state)
    z = rng.standard_normal(int(dim)) + 1j * rng.standard_normal(int(dim))
    if radius == 0:
        return np.zeros(int(dim), dtype=complex)
    return z * (radius / np.linalg.norm(z))


def inner(A, B):
    """Frobenius inner product ``Tr(A^* B)``, real part (both arguments Hermitian)."""
    return float(np.real(np.vdot(A, B)))
