"""Rayleigh triangles and Gelfand-Tsetlin polytopes.

A triangle ``R = (R[i, j])`` with ``1 <= i <= j <= n`` is stored as a flat
vector, row ``j = 1`` first and the top row ``j = n`` last, entries of a row
in order ``i = 1..j``. Entry ``(i, j)`` therefore sits at flat position
``j (j - 1) / 2 + i - 1`` and the rows below the top occupy the first
``n (n - 1) / 2`` slots.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm

import numpy as np

from .exceptions import DomainError
from .linalg import as_generator, check_hermitian, sample_haar_unitary

MEMBERSHIP_TOL = 1e-10
DENOMINATOR_CAP = 10**6


def triangle_size(n):
    return n * (n + 1) // 2


def flat_index(i, j):
    """Flat position of the 1-based entry ``(i, j)``."""
    return j * (j - 1) // 2 + i - 1


def _infer_n(length):
    n = int(round((np.sqrt(8 * length + 1) - 1) / 2))
    if triangle_size(n) != length:
        raise DomainError(f"{length} values do not form a triangle")
    return n


@dataclass(frozen=True)
class RayleighTriangle:
    """Triangular array of reals; ``rows[j-1]`` has ``j`` entries and ``rows[-1]`` is the top row."""

    n: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.size != triangle_size(self.n):
            raise DomainError(f"expected {triangle_size(self.n)} values for n={self.n}, got {values.size}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_rows(cls, rows):
        rows = [np.atleast_1d(np.asarray(r, dtype=float)) for r in rows]
        for j, r in enumerate(rows, start=1):
            if r.size != j:
                raise DomainError(f"row {j} must have {j} entries, got {r.size}")
        return cls(len(rows), np.concatenate(rows) if rows else np.zeros(0))

    @classmethod
    def from_flat(cls, values):
        values = np.asarray(values, dtype=float).reshape(-1)
        return cls(_infer_n(values.size), values)

    def row(self, j):
        start = j * (j - 1) // 2
        return self.values[start:start + j]

    @property
    def rows(self):
        return [self.row(j) for j in range(1, self.n + 1)]

    def __getitem__(self, ij):
        i, j = ij
        if not 1 <= i <= j <= self.n:
            raise IndexError(f"no entry ({i}, {j}) in a triangle of size {self.n}")
        return self.values[flat_index(i, j)]

    def interlacing_violation(self):
        """Largest violation of the interlacing inequalities (0 when they all hold)."""
        return float(np.max(_interlacing_residuals(self.values[None, :], self.n), initial=0.0))


def _interlacing_pairs(n):
    # Each pair (a, b) encodes the inequality R[a] <= R[b] on flat positions.
    pairs = []
    for j in range(2, n + 1):
        for i in range(1, j):
            pairs.append((flat_index(i, j - 1), flat_index(i, j)))
            pairs.append((flat_index(i + 1, j), flat_index(i, j - 1)))
    return np.array(pairs, dtype=int).reshape(-1, 2)


def _interlacing_residuals(flat, n):
    pairs = _interlacing_pairs(n)
    if pairs.size == 0:
        return np.zeros(flat.shape[:-1] + (0,))
    return flat[..., pairs[:, 0]] - flat[..., pairs[:, 1]]


def _cluster_runs(values, tol):
    """Split a non-increasing vector into maximal runs of (near-)equal entries."""
    runs, start = [], 0
    for k in range(1, len(values) + 1):
        if k == len(values) or values[k - 1] - values[k] > tol:
            runs.append((start, k))
            start = k
    return runs


def _rational_denominator(values, tol, cap=DENOMINATOR_CAP):
    """Smallest common denominator ``q`` of a rational reconstruction, or ``None``."""
    fracs = []
    for v in values:
        f = Fraction(float(v)).limit_denominator(cap)
        if abs(float(f) - v) > tol:
            return None, None
        fracs.append(f)
    q = 1
    for f in fracs:
        q = lcm(q, f.denominator)
        if q > cap:
            return None, None
    return q, fracs


@dataclass(frozen=True, eq=False)
class GTPolytope:
    """The polytope of Rayleigh triangles with top row ``lambda_``.

    Attributes
    ----------
    lambda_ : ndarray
        Non-increasing top row (runs of near-equal values snapped to their mean).
    fixed_mask : ndarray of bool
        Over the ``n (n - 1) / 2`` entries below the top row; true where the
        entry is forced by a repeated value of ``lambda_``.
    free_index : ndarray of int
        Flat positions of the free coordinates, in flat (row-major) order.
    q : int or None
        Common denominator of ``lambda_`` when it is rational with ``q <= 10**6``.
    A, b : ndarray
        Interlacing inequalities restricted to the free coordinates, ``A x <= b``.
    """

    lambda_: np.ndarray
    n: int
    fixed_mask: np.ndarray
    free_index: np.ndarray
    q: int | None
    base: np.ndarray = field(repr=False)
    A: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    runs: tuple = field(repr=False)
    _fractions: tuple | None = field(default=None, repr=False)

    @property
    def dim(self):
        return int(self.free_index.size)

    @property
    def is_point(self):
        return self.dim == 0

    def to_free(self, flat):
        return np.asarray(flat, dtype=float)[..., self.free_index]

    def from_free(self, x):
        x = np.asarray(x, dtype=float)
        out = np.broadcast_to(self.base, x.shape[:-1] + self.base.shape).copy()
        out[..., self.free_index] = x
        return out

    def triangle(self, x):
        return RayleighTriangle(self.n, self.from_free(x))


def build_polytope(lambda_, equality_tol=None):
    """Build ``GT(lambda_)``: fixed entries, free coordinates and inequality system.

    Entries ``R[i, j]`` with ``p <= i <= q' + j - n`` are fixed to ``lambda_p``
    for each maximal run ``lambda_p = ... = lambda_q'``. Runs are detected
    with ``equality_tol`` (default ``1e-9 (1 + lambda_1 - lambda_n)``).
    """
    lam = np.asarray(lambda_, dtype=float).reshape(-1)
    if lam.size == 0:
        raise DomainError("lambda must be non-empty")
    if not np.all(np.isfinite(lam)):
        raise DomainError("lambda must be finite")
    if np.any(np.diff(lam) > 0):
        raise DomainError("lambda must be sorted non-increasing")
    n = lam.size
    spread = lam[0] - lam[-1]
    if equality_tol is None:
        equality_tol = 1e-9 * (1.0 + spread)
    runs = _cluster_runs(lam, equality_tol)
    lam = lam.copy()
    for s, e in runs:
        lam[s:e] = lam[s:e].mean()

    m = n * (n - 1) // 2
    fixed_mask = np.zeros(m, dtype=bool)
    base = np.zeros(triangle_size(n))
    base[m:] = lam
    for s, e in runs:
        p, qq = s + 1, e
        for j in range(1, n):
            for i in range(p, min(qq + j - n, j) + 1):
                fixed_mask[flat_index(i, j)] = True
                base[flat_index(i, j)] = lam[s]
    free_index = np.flatnonzero(~fixed_mask)

    column = -np.ones(triangle_size(n), dtype=int)
    column[free_index] = np.arange(free_index.size)
    rows_A, rows_b = [], []
    for a, c in _interlacing_pairs(n):
        # R[a] - R[c] <= 0 with fixed entries moved to the right-hand side
        coeff = np.zeros(free_index.size)
        rhs = 0.0
        for pos, sign in ((a, 1.0), (c, -1.0)):
            if column[pos] >= 0:
                coeff[column[pos]] += sign
            else:
                rhs -= sign * base[pos]
        if np.any(coeff != 0):
            rows_A.append(coeff)
            rows_b.append(rhs)
    A = np.array(rows_A, dtype=float).reshape(len(rows_A), free_index.size)
    b = np.array(rows_b, dtype=float)

    # a few ulps: any real is within ~1/q^2 of some fraction, so a looser test would accept everything
    q, fracs = _rational_denominator(lam, tol=4 * np.finfo(float).eps * (1.0 + np.max(np.abs(lam))))
    return GTPolytope(
        lambda_=lam, n=n, fixed_mask=fixed_mask, free_index=free_index, q=q,
        base=base, A=A, b=b, runs=tuple(runs),
        _fractions=None if fracs is None else tuple(fracs),
    )


def _check_triangle(poly, P):
    if isinstance(P, RayleighTriangle):
        if P.n != poly.n:
            raise DomainError(f"triangle of size {P.n} does not match polytope of size {poly.n}")
        return P.values
    flat = np.asarray(P, dtype=float)
    if flat.shape[-1] != triangle_size(poly.n):
        raise DomainError(f"expected flat triangles of length {triangle_size(poly.n)}")
    return flat


def membership(poly, P, tol=MEMBERSHIP_TOL):
    """Membership oracle: top row equals ``lambda_`` and interlacing holds, both within ``tol``.

    ``P`` may be a :class:`RayleighTriangle` (returns a bool) or an array of
    flat triangles (returns a boolean array).
    """
    flat = _check_triangle(poly, P)
    m = poly.n * (poly.n - 1) // 2
    top_ok = np.all(np.abs(flat[..., m:] - poly.lambda_) <= tol, axis=-1)
    inter_ok = np.all(_interlacing_residuals(flat, poly.n) <= tol, axis=-1)
    ok = top_ok & inter_ok
    return bool(ok) if np.ndim(ok) == 0 else ok


def _leading_eigenvalues(X):
    # X has shape (..., n, n); returns flat triangles (..., n(n+1)/2)
    n = X.shape[-1]
    parts = [np.linalg.eigvalsh(X[..., :k, :k])[..., ::-1] for k in range(1, n + 1)]
    return np.concatenate(parts, axis=-1)


def rayleigh_map(X):
    """Eigenvalues of all leading principal submatrices, as a :class:`RayleighTriangle`."""
    X = check_hermitian(X)
    return RayleighTriangle(X.shape[0], _leading_eigenvalues(X))


def rayleigh_map_batch(X):
    """Vectorized :func:`rayleigh_map` over a stack ``(..., n, n)``; returns flat triangles."""
    return _leading_eigenvalues(np.asarray(X, dtype=complex))


def type_vector(P):
    """Successive differences of row sums; equals ``diag(X)`` when ``P = R(X)``.

    Accepts a :class:`RayleighTriangle` or flat triangles of shape ``(..., N)``.
    """
    if isinstance(P, RayleighTriangle):
        flat, n = P.values, P.n
    else:
        flat = np.asarray(P, dtype=float)
        n = _infer_n(flat.shape[-1])
    sums = np.stack([flat[..., j * (j - 1) // 2: j * (j + 1) // 2].sum(axis=-1)
                     for j in range(1, n + 1)], axis=-1)
    return np.diff(sums, axis=-1, prepend=0.0)


@dataclass(frozen=True)
class ExponentSpec:
    """Log-linear exponent on ``GT(lambda)``.

    ``y_delta`` has one entry per position below the top row, equal to
    ``y_j - y_{j+1}`` for an entry in row ``j``; ``const_term`` collects
    ``y_n sum(lambda)`` and the contribution of fixed entries, so that
    ``<y, type(P)> = <y_delta, P_free> + const_term``.
    """

    y: np.ndarray
    y_delta: np.ndarray
    const_term: float

    def live_weights(self, poly):
        return self.y_delta[poly.free_index]

    def rows(self):
        n = self.y.size
        return [self.y_delta[j * (j - 1) // 2: j * (j + 1) // 2] for j in range(1, n)]


def reduce_exponent(y, lambda_, equality_tol=None, poly=None):
    """Rewrite ``<y, type(P)>`` as a linear form in the free entries of ``P`` plus a constant."""
    y = np.asarray(y, dtype=float).reshape(-1)
    lam = np.asarray(lambda_, dtype=float).reshape(-1)
    if y.size != lam.size:
        raise DomainError(f"y has length {y.size} but lambda has length {lam.size}")
    if np.any(np.diff(y) > 0):
        raise DomainError("y must be sorted non-increasing")
    if poly is None:
        poly = build_polytope(lam, equality_tol)
    n = y.size
    y_delta = np.concatenate([np.full(j, y[j - 1] - y[j]) for j in range(1, n)]) if n > 1 else np.zeros(0)
    m = y_delta.size
    fixed = poly.fixed_mask
    const = y[-1] * poly.lambda_.sum() + float(y_delta[fixed] @ poly.base[:m][fixed])
    return ExponentSpec(y=y, y_delta=y_delta, const_term=float(const))


def log_density(spec, poly, P):
    """Unnormalized log-density ``<y_delta, P>`` over the free coordinates of a member ``P``."""
    flat = _check_triangle(poly, P)
    ok = membership(poly, flat)
    if not np.all(ok):
        raise DomainError("triangle is not a member of the polytope")
    val = poly.to_free(flat) @ spec.live_weights(poly)
    return float(val) if np.ndim(val) == 0 else val


def outer_radius(poly):
    """Radius ``sqrt(n) (lambda_1 - lambda_n)`` of a Euclidean ball containing ``GT(lambda)``."""
    return float(np.sqrt(poly.n) * (poly.lambda_[0] - poly.lambda_[-1]))


def _rational_center(poly):
    n, q = poly.n, poly.q
    P = {(i, n): poly._fractions[i - 1] for i in range(1, n + 1)}
    fixed = {}
    for s, e in poly.runs:
        for j in range(1, n):
            for i in range(s + 1, min(e + j - n, j) + 1):
                fixed[(i, j)] = poly._fractions[s]
    for j in range(1, n):
        k = n - j
        denom = (j + 1) * q
        for i in range(1, k + 1):
            if (i, k) in fixed:
                P[(i, k)] = fixed[(i, k)]
                continue
            lo, hi = P[(i + 1, k + 1)], P[(i, k + 1)]
            first = (lo * denom).__floor__() + 1
            last = (hi * denom).__ceil__() - 1
            target = ((lo + hi) / 2 * denom)
            m = min(max(round(target), first), last)
            P[(i, k)] = Fraction(m, denom)
    return np.array([float(P[(i, j)]) for j in range(1, n + 1) for i in range(1, j + 1)])


def _midpoint_center(poly):
    n = poly.n
    flat = poly.base.copy()
    for j in range(n - 1, 0, -1):
        for i in range(1, j + 1):
            flat[flat_index(i, j)] = 0.5 * (flat[flat_index(i, j + 1)] + flat[flat_index(i + 1, j + 1)])
    return flat


def inner_ball(poly):
    """Center and radius of an ``l_inf`` ball inside ``GT(lambda)`` (within its affine span).

    For rational ``lambda`` with denominator ``q`` the center is built row by
    row from the top, row ``n - j`` taking multiples of ``1 / ((j + 1) q)``,
    and the radius is ``1 / (8 n^2 q)``. Otherwise each entry is the midpoint
    of its two upper neighbours and the radius is half the smallest slack.
    A point polytope gets radius 0.
    """
    if poly.is_point:
        return RayleighTriangle(poly.n, poly.base), 0.0
    if poly.q is not None:
        center = _rational_center(poly)
        radius = 1.0 / (8 * poly.n**2 * poly.q)
    else:
        center = _midpoint_center(poly)
        slack = poly.b - poly.A @ poly.to_free(center)
        radius = 0.5 * float(slack.min())
    return RayleighTriangle(poly.n, center), radius


def uniform_gt_sample(poly, random_state=None, size=None):
    """Uniform sample(s) from ``GT(lambda)`` as Rayleigh triangles of ``U diag(lambda) U^*``.

    Fixed entries and the top row are snapped to their exact values. Returns
    a :class:`RayleighTriangle` when ``size`` is ``None``, else an array of
    flat triangles with shape ``(size, N)``.
    """
    rng = as_generator(random_state)
    count = 1 if size is None else int(size)
    U = sample_haar_unitary(poly.n, rng, size=count)
    X = (U * poly.lambda_[None, None, :]) @ np.conj(np.swapaxes(U, -1, -2))
    flat = _leading_eigenvalues(X)
    flat = poly.from_free(poly.to_free(flat))
    if size is None:
        return RayleighTriangle(poly.n, flat[0])
    return flat
