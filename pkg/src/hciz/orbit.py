"""End-to-end sampling on a unitary orbit and the HCIZ partition function."""

from dataclasses import dataclass, replace
from math import comb, factorial, lgamma

import numpy as np

from .exceptions import DomainError
from .fiber import sample_fiber_batch
from .linalg import as_generator, check_hermitian, hermitian_eigendecompose
from .mcmc import SamplerConfig, run_sampler
from .polytope import build_polytope, reduce_exponent


@dataclass(frozen=True)
class OrbitProblem:
    """Target ``exp(<Y, X>)`` on the orbit of Hermitian matrices with spectrum ``lambda_``.

    ``Y`` is either a real vector (meaning ``diag(Y)``) or a Hermitian
    matrix. ``mode`` and ``xi`` override the corresponding fields of the
    sampler configuration passed to :func:`sample_orbit`.
    """

    lambda_: np.ndarray
    Y: np.ndarray
    mode: str = "tv"
    xi: float = 0.01

    def __post_init__(self):
        lam = np.asarray(self.lambda_, dtype=float).reshape(-1)
        if lam.size == 0 or not np.all(np.isfinite(lam)):
            raise DomainError("lambda must be a non-empty finite vector")
        if np.any(np.diff(lam) > 0):
            raise DomainError("lambda must be sorted non-increasing")
        Y = np.asarray(self.Y)
        if Y.ndim == 1:
            Y = Y.astype(float)
            if Y.size != lam.size:
                raise DomainError(f"y has length {Y.size}, expected {lam.size}")
        else:
            Y = check_hermitian(Y)
            if Y.shape[0] != lam.size:
                raise DomainError(f"Y has size {Y.shape[0]}, expected {lam.size}")
        if self.mode not in ("tv", "inf"):
            raise DomainError(f"mode must be 'tv' or 'inf', got {self.mode!r}")
        if not self.xi > 0:
            raise DomainError(f"xi must be positive, got {self.xi}")
        object.__setattr__(self, "lambda_", lam)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self):
        return self.lambda_.size

    def diagonal_frame(self):
        """Return ``(y, U)`` with ``y`` non-increasing and ``Y = U diag(y) U^*``."""
        Y = self.Y
        if Y.ndim == 2:
            off = Y - np.diag(Y.diagonal())
            if np.any(off != 0):
                dec = hermitian_eigendecompose(Y)
                return dec.eigenvalues, dec.eigenvectors
            Y = Y.diagonal().real
        order = np.argsort(-Y, kind="stable")
        return Y[order], np.eye(self.n)[:, order].astype(complex)


def sample_orbit(problem, cfg=None, random_state=None, size=None, return_run=False):
    """Approximate draws from ``exp(<Y, X>)`` on the orbit of ``diag(lambda_)``.

    The diagonal case runs polytope MCMC on ``GT(lambda_)`` and lifts each
    triangle to a matrix by exact fiber sampling; a general ``Y`` is
    diagonalized first and the output conjugated back.

    Returns one ``(n, n)`` matrix for ``size=None``, otherwise an array of
    shape ``(size, n, n)``. With ``return_run=True`` the underlying
    :class:`~hciz.mcmc.ChainRun` is returned as well.
    """
    cfg = SamplerConfig() if cfg is None else cfg
    cfg = replace(cfg, mode=problem.mode, xi=problem.xi)
    rng = as_generator(random_state if random_state is not None else cfg.seed)
    count = 1 if size is None else int(size)
    if count < 1:
        raise DomainError(f"size must be positive, got {size}")

    y, U = problem.diagonal_frame()
    poly = build_polytope(problem.lambda_)
    spec = reduce_exponent(y, poly.lambda_, poly=poly)
    run = run_sampler(poly, spec, cfg, rng, count)
    X = sample_fiber_batch(poly.from_free(run.samples), rng)
    X = U @ X @ U.conj().T
    X = 0.5 * (X + X.conj().transpose(0, 2, 1))
    out = X[0] if size is None else X
    return (out, run) if return_run else out


def _clusters(values, tol):
    # (value, multiplicity) for runs of a sorted copy
    v = np.sort(values)[::-1]
    out, start = [], 0
    for i in range(1, v.size + 1):
        if i == v.size or v[i - 1] - v[i] > tol:
            out.append((float(v[start:i].mean()), i - start))
            start = i
    return out


def _confluent_parts(clusters):
    # expand each (value, m) into (value, derivative order s)
    return [(a, s) for a, m in clusters for s in range(m)]


def _log_vandermonde(clusters):
    total = 0.0
    for i, (a, ma) in enumerate(clusters):
        for b, mb in clusters[i + 1:]:
            total += ma * mb * np.log(abs(a - b))
    return total


def log_partition(y, lambda_, tol=None):
    """Logarithm of the HCIZ integral ``Z(y, lambda) = int exp(<diag(y), U diag(lambda) U^*>) dU``.

    ``dU`` is the Haar probability measure. For distinct entries

        Z = prod_{p<n} p! * det[exp(y_i lambda_j)] / (Vandermonde(y) Vandermonde(lambda)).

    Coincident values (within ``tol``, default ``1e-9 (1 + spread)``) use the
    confluent limit: the rows and columns of a repeated value are replaced
    by Taylor coefficients ``d^s/dy^s d^t/dlambda^t exp(y lambda) / (s! t!)``
    and the Vandermonde products run over distinct pairs with multiplicity.
    ``y`` may also be a Hermitian matrix, in which case its eigenvalues are
    used.

    Examples
    --------
    >>> round(float(log_partition([1.0, 0.0], [1.0, 0.0])), 6)
    0.541325
    """
    y = np.asarray(y)
    if y.ndim == 2:
        y = hermitian_eigendecompose(y).eigenvalues
    y = np.asarray(y, dtype=float).reshape(-1)
    lam = np.asarray(lambda_, dtype=float).reshape(-1)
    if y.size != lam.size or y.size == 0:
        raise DomainError(f"y and lambda must have equal positive length, got {y.size} and {lam.size}")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(lam))):
        raise DomainError("y and lambda must be finite")
    n = y.size

    def cluster(v):
        t = 1e-9 * (1.0 + float(np.ptp(v))) if tol is None else tol
        return _clusters(v, t)

    cy, cl = cluster(y), cluster(lam)
    rows, cols = _confluent_parts(cy), _confluent_parts(cl)
    M = np.empty((n, n))
    log_scale = np.empty(n)
    for i, (a, s) in enumerate(rows):
        exponents = np.array([a * b for b, _ in cols])
        log_scale[i] = exponents.max()
        for j, (b, t) in enumerate(cols):
            poly = sum(comb(s, r) * factorial(t) / factorial(t - r) * a ** (t - r) * b ** (s - r)
                       for r in range(min(s, t) + 1))
            M[i, j] = poly / (factorial(s) * factorial(t)) * np.exp(exponents[j] - log_scale[i])
    sign, logdet = np.linalg.slogdet(M)
    if sign == 0:
        raise DomainError("determinant underflowed; inputs too close to resolve")
    log_c = sum(lgamma(p + 1) for p in range(1, n))
    return float(log_c + logdet + log_scale.sum() - _log_vandermonde(cy) - _log_vandermonde(cl))


def expected_inner_product(y, lambda_, h=1e-4, richardson=False):
    """``E <diag(y), X>`` under the HCIZ law, as ``d/dt log Z(t y, lambda)`` at ``t = 1``.

    Uses a central difference with relative step ``h``; ``richardson=True``
    combines steps ``h`` and ``h/2`` to cancel the ``O(h^2)`` term.
    """
    if not h > 0:
        raise DomainError(f"step must be positive, got {h}")
    y = np.asarray(y, dtype=float)

    def central(step):
        return (log_partition((1 + step) * y, lambda_)
                - log_partition((1 - step) * y, lambda_)) / (2 * step)

    if not richardson:
        return central(h)
    return (4.0 * central(h / 2) - central(h)) / 3.0
