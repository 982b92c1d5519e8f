"""Uniform sampling from the fiber of the Rayleigh map over a triangle.

The matrix is grown one leading submatrix at a time. Given ``S[k-1]`` with
spectrum ``row_{k-1}``, every ``k x k`` Hermitian extension with spectrum
``row_k`` is ``[[S[k-1], U v], [(U v)^*, c]]`` where ``U`` diagonalizes
``S[k-1]``, ``c`` is fixed by the trace, and the blocks of ``v`` belonging
to each distinct eigenvalue of ``S[k-1]`` lie on complex spheres of known
radii. Drawing those blocks uniformly gives the uniform law on the fiber.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, InconsistentTriangleError
from .linalg import (_fix_phases, as_generator, check_hermitian, hermitian_eigendecompose,
                     sample_complex_sphere)
from .polytope import RayleighTriangle, _infer_n

RADICAND_TOL = 1e-12


def default_cluster_tol(*rows):
    values = np.concatenate([np.atleast_1d(np.asarray(r, dtype=float)) for r in rows])
    return 1e-8 * (1.0 + float(values.max() - values.min()))


@dataclass(frozen=True)
class ReducedSpectrum:
    """Distinct values ``deltas`` of the lower row with multiplicities, and the reduced upper row ``mu``."""

    deltas: np.ndarray
    mults: np.ndarray
    mu: np.ndarray

    @property
    def offsets(self):
        return np.concatenate([[0], np.cumsum(self.mults)[:-1]]).astype(int)


@dataclass(frozen=True)
class FiberStep:
    """Data drawn in one extension: new diagonal entry, sphere radii and the vector ``v``."""

    c: float
    radii: np.ndarray
    v: np.ndarray
    reduced: ReducedSpectrum


def reduced_spectrum(row_k, row_km1, tol=None):
    """Cluster ``row_km1`` into distinct values and strip the matching copies from ``row_k``.

    Each distinct value ``delta_i`` of multiplicity ``n_i`` must occur at
    least ``n_i - 1`` times in ``row_k``; the nearest such copies are
    removed, leaving ``mu`` with ``m + 1`` entries.

    Raises
    ------
    InconsistentTriangleError
        If a required copy is missing or the result does not interlace.
    """
    row_k = np.sort(np.asarray(row_k, dtype=float).reshape(-1))[::-1]
    row_km1 = np.sort(np.asarray(row_km1, dtype=float).reshape(-1))[::-1]
    if row_k.size != row_km1.size + 1:
        raise DomainError(f"rows of lengths {row_k.size} and {row_km1.size} are not consecutive")
    if tol is None:
        tol = default_cluster_tol(row_k, row_km1)

    deltas, mults = [], []
    start = 0
    for i in range(1, row_km1.size + 1):
        if i == row_km1.size or row_km1[i - 1] - row_km1[i] > tol:
            deltas.append(row_km1[start:i].mean())
            mults.append(i - start)
            start = i

    remaining = list(row_k)
    for delta, mult in zip(deltas, mults):
        for _ in range(mult - 1):
            dist = np.abs(np.array(remaining) - delta)
            j = int(np.argmin(dist))
            if dist[j] > tol:
                raise InconsistentTriangleError(
                    f"value {delta:.6g} has multiplicity {mult} below but too few copies above")
            remaining.pop(j)
    mu = np.array(sorted(remaining, reverse=True))

    deltas = np.array(deltas)
    # mu_1 >= delta_1 >= mu_2 >= ... >= delta_m >= mu_{m+1}
    if np.any(mu[:-1] < deltas - tol) or np.any(deltas < mu[1:] - tol):
        raise InconsistentTriangleError("rows do not interlace")
    return ReducedSpectrum(deltas=deltas, mults=np.array(mults, dtype=int), mu=mu)


def sphere_radii(rs):
    """Radii ``r_i = sqrt(-prod_j (delta_i - mu_j) / prod_{j != i} (delta_i - delta_j))``.

    Slightly negative radicands (above ``-1e-12`` times the squared scale of
    the data) are rounding noise and clamp to 0.
    """
    d, mu = rs.deltas, rs.mu
    num = np.prod(d[:, None] - mu[None, :], axis=1)
    diff = d[:, None] - d[None, :]
    np.fill_diagonal(diff, 1.0)
    radicand = -num / np.prod(diff, axis=1)
    scale = 1.0 + max(np.max(np.abs(d)), np.max(np.abs(mu)))
    if np.any(radicand < -RADICAND_TOL * scale**2):
        raise InconsistentTriangleError(f"negative radicand {radicand.min():.3e}")
    return np.sqrt(np.maximum(radicand, 0.0))


def extend_submatrix(S_prev, row_k, row_km1, random_state=None, tol=None, return_step=False):
    """Draw a uniform ``k x k`` Hermitian extension of ``S_prev`` with spectrum ``row_k``.

    ``S_prev`` must have spectrum ``row_km1`` (checked to ``1e-8`` relative).
    With ``return_step=True`` the drawn :class:`FiberStep` is returned too.
    """
    rng = as_generator(random_state)
    S_prev = check_hermitian(np.atleast_2d(S_prev))
    row_k = np.sort(np.asarray(row_k, dtype=float).reshape(-1))[::-1]
    row_km1 = np.sort(np.asarray(row_km1, dtype=float).reshape(-1))[::-1]
    if row_km1.size != S_prev.shape[0]:
        raise DomainError("row_km1 length does not match S_prev")
    dec = hermitian_eigendecompose(S_prev)
    scale = 1.0 + np.max(np.abs(row_km1))
    if np.max(np.abs(dec.eigenvalues - row_km1)) > 1e-8 * scale:
        raise DomainError("spectrum of S_prev does not match row_km1")

    rs = reduced_spectrum(row_k, row_km1, tol)
    radii = sphere_radii(rs)
    v = np.concatenate([sample_complex_sphere(int(m), r, rng) for m, r in zip(rs.mults, radii)])
    c = float(row_k.sum() - row_km1.sum())

    k = row_k.size
    S = np.empty((k, k), dtype=complex)
    S[:-1, :-1] = S_prev
    col = dec.eigenvectors @ v
    S[:-1, -1] = col
    S[-1, :-1] = col.conj()
    S[-1, -1] = c
    if return_step:
        return S, FiberStep(c=c, radii=radii, v=v, reduced=rs)
    return S


def _triangle_rows(P):
    if isinstance(P, RayleighTriangle):
        return P.rows
    P = np.asarray(P, dtype=float).reshape(-1)
    return RayleighTriangle(_infer_n(P.size), P).rows


def sample_fiber(P, random_state=None, tol=None):
    """Uniform random Hermitian matrix whose Rayleigh triangle is ``P``."""
    rng = as_generator(random_state)
    rows = _triangle_rows(P)
    S = np.array([[rows[0][0]]], dtype=complex)
    for k in range(2, len(rows) + 1):
        S = extend_submatrix(S, rows[k - 1], rows[k - 2], rng, tol)
    return S


def _extend_distinct(S, row_k, row_km1, rng):
    # Batched extension when every row_km1 has distinct entries: each sphere is a circle.
    vals, vecs = np.linalg.eigh(S)
    vals, vecs = vals[:, ::-1], _fix_phases(vecs[:, :, ::-1])
    scale = 1.0 + np.max(np.abs(row_km1), axis=1)
    if np.any(np.max(np.abs(vals - row_km1), axis=1) > 1e-8 * scale):
        raise DomainError("spectrum of S_prev does not match row_km1")
    tol = 1e-8 * (1.0 + row_k[:, 0] - row_k[:, -1])
    if np.any(row_k[:, :-1] < row_km1 - tol[:, None]) or np.any(row_km1 < row_k[:, 1:] - tol[:, None]):
        raise InconsistentTriangleError("rows do not interlace")
    num = np.prod(row_km1[:, :, None] - row_k[:, None, :], axis=2)
    diff = row_km1[:, :, None] - row_km1[:, None, :]
    diff[:, np.arange(diff.shape[1]), np.arange(diff.shape[1])] = 1.0
    radicand = -num / np.prod(diff, axis=2)
    scale = 1.0 + np.maximum(np.max(np.abs(row_k), axis=1), np.max(np.abs(row_km1), axis=1))
    if np.any(radicand < -RADICAND_TOL * scale[:, None] ** 2):
        raise InconsistentTriangleError(f"negative radicand {radicand.min():.3e}")
    phase = np.exp(2j * np.pi * rng.random(radicand.shape))
    v = np.sqrt(np.maximum(radicand, 0.0)) * phase
    B, k = row_k.shape
    out = np.empty((B, k, k), dtype=complex)
    out[:, :-1, :-1] = S
    col = np.einsum("bij,bj->bi", vecs, v)
    out[:, :-1, -1] = col
    out[:, -1, :-1] = col.conj()
    out[:, -1, -1] = row_k.sum(axis=1) - row_km1.sum(axis=1)
    return out


def sample_fiber_batch(flat_triangles, random_state=None, tol=None):
    """:func:`sample_fiber` applied to each row of a ``(B, N)`` array; returns ``(B, n, n)``.

    Triangles whose lower rows have distinct entries (the generic case for
    MCMC output) are extended together; the rest go through
    :func:`extend_submatrix` one at a time.
    """
    rng = as_generator(random_state)
    flat = np.atleast_2d(np.asarray(flat_triangles, dtype=float))
    B = flat.shape[0]
    n = _infer_n(flat.shape[1])
    S = flat[:, :1, None].astype(complex)
    for k in range(2, n + 1):
        row_km1 = -np.sort(-flat[:, (k - 2) * (k - 1) // 2:(k - 1) * k // 2], axis=1)
        row_k = -np.sort(-flat[:, (k - 1) * k // 2:k * (k + 1) // 2], axis=1)
        spread = (row_k[:, 0] - row_k[:, -1]) if tol is None else None
        gap_tol = 1e-8 * (1.0 + spread) if tol is None else np.full(B, tol)
        generic = np.all(-np.diff(row_km1, axis=1) > gap_tol[:, None], axis=1)
        nxt = np.empty((B, k, k), dtype=complex)
        if np.any(generic):
            nxt[generic] = _extend_distinct(S[generic], row_k[generic], row_km1[generic], rng)
        for b in np.flatnonzero(~generic):
            nxt[b] = extend_submatrix(S[b], row_k[b], row_km1[b], rng, tol)
        S = nxt
    return S


def charpoly_residual(S_prev, S_new, row_k, row_km1, t, tol=None):
    """Relative mismatch of the reduced characteristic-polynomial identity at points ``t``.

    Left side ``prod_i (t - mu_i)``; right side
    ``(t - c) prod_j (t - delta_j) - sum_i |v_i|^2 prod_{j != i} (t - delta_j)``,
    with ``v = U^* S_new[:-1, -1]`` recovered from the extension itself and
    ``|v_i|^2`` its squared norm on block ``i``.
    """
    rs = reduced_spectrum(row_k, row_km1, tol)
    dec = hermitian_eigendecompose(S_prev)
    v = dec.eigenvectors.conj().T @ S_new[:-1, -1]
    c = float(np.real(S_new[-1, -1]))
    block = np.array([np.sum(np.abs(v[o:o + m]) ** 2) for o, m in zip(rs.offsets, rs.mults)])
    t = np.atleast_1d(np.asarray(t, dtype=float))
    lhs = np.prod(t[:, None] - rs.mu[None, :], axis=1)
    td = t[:, None] - rs.deltas[None, :]
    lead = (t - c) * np.prod(td, axis=1)
    terms = [block[i] * np.prod(np.delete(td, i, axis=1), axis=1) for i in range(rs.deltas.size)]
    rhs = lead - np.sum(terms, axis=0)
    # relative to the magnitude of the summands, so cancellation near roots is not penalized
    scale = np.abs(lhs) + np.abs(lead) + np.sum(np.abs(terms), axis=0)
    return np.abs(lhs - rhs) / np.maximum(scale, np.finfo(float).tiny)
