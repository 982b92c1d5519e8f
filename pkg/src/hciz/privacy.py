"""Differentially private rank-k approximation through the exponential mechanism.

The mechanism draws a rank-``k`` orthogonal projection ``P`` with density
proportional to ``exp(epsilon / (4 sigma) <A, P>)`` using the orbit sampler
in infinity-divergence mode, since projections of rank ``k`` form the orbit
of ``diag(1, ..., 1, 0, ..., 0)``.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, StructureError
from .linalg import check_hermitian, hermitian_eigendecompose, inner
from .mcmc import SamplerConfig
from .orbit import OrbitProblem, sample_orbit

PROJECTION_TOL = 1e-8


@dataclass(frozen=True)
class DPConfig:
    """Mechanism parameters.

    Attributes
    ----------
    epsilon : float
        Privacy budget, positive.
    k : int
        Rank of the released projection.
    sensitivity : float
        Bound on ``|<A, P> - <A', P>|`` over neighbouring inputs; 1 for
        neighbours that swap one vector of norm at most 1.
    delta : float
        Failure probability used by :func:`utility_threshold`, in ``(0, 1)``.
    C : float
        Constant of the utility threshold.
    xi : float or None
        Infinity-divergence budget of the sampler. ``None`` means
        ``epsilon / 4``, which together with the ``epsilon / 2`` spread of
        the exact mechanism gives ``(epsilon, 0)``-privacy.
    """

    epsilon: float
    k: int = 1
    sensitivity: float = 1.0
    delta: float = 0.1
    C: float = 16.0
    xi: float | None = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")
        if int(self.k) != self.k or self.k < 1:
            raise DomainError(f"k must be a positive integer, got {self.k}")
        if not self.sensitivity > 0:
            raise DomainError(f"sensitivity must be positive, got {self.sensitivity}")
        if not 0 < self.delta < 1:
            raise DomainError(f"delta must lie in (0, 1), got {self.delta}")
        if not self.C > 0:
            raise DomainError(f"C must be positive, got {self.C}")
        if self.xi is not None and not self.xi > 0:
            raise DomainError(f"xi must be positive, got {self.xi}")

    @property
    def sampler_xi(self):
        return self.epsilon / 4.0 if self.xi is None else self.xi


def check_projection(P, rank, tol=PROJECTION_TOL):
    """Verify ``P^2 = P``, ``P^* = P`` and ``tr P = rank`` for one matrix or a stack."""
    P = np.asarray(P, dtype=complex)
    stack = P if P.ndim == 3 else P[None]
    if stack.ndim != 3 or stack.shape[1] != stack.shape[2]:
        raise StructureError(f"expected square matrices, got shape {P.shape}")
    herm = np.max(np.abs(stack - stack.conj().transpose(0, 2, 1)))
    idem = np.max(np.abs(stack @ stack - stack))
    trace = np.max(np.abs(np.trace(stack, axis1=1, axis2=2) - rank))
    if max(herm, idem, trace) > tol:
        raise StructureError(
            f"not a rank-{rank} projection (hermitian {herm:.1e}, idempotent {idem:.1e}, trace {trace:.1e})")
    return P


@dataclass(frozen=True)
class ProjectionSample:
    """Released projection(s): ``P`` is ``(d, d)`` or a stack ``(m, d, d)``."""

    P: np.ndarray
    rank: int

    def __post_init__(self):
        object.__setattr__(self, "P", check_projection(self.P, self.rank))

    def score(self, A):
        """``<A, P>`` for each released projection."""
        A = np.asarray(A)
        if self.P.ndim == 2:
            return inner(A, self.P)
        return np.real(np.einsum("ij,bij->b", A.conj(), self.P))


def check_psd(A, tol=1e-9):
    """Validate a Hermitian positive semidefinite matrix; returns its decomposition."""
    A = check_hermitian(A)
    dec = hermitian_eigendecompose(A)
    if dec.eigenvalues[-1] < -tol * (1.0 + abs(dec.eigenvalues[0])):
        raise DomainError(f"matrix is not positive semidefinite (min eigenvalue {dec.eigenvalues[-1]:.3e})")
    return A, dec


def dp_rank_k_projection(A, cfg, sampler=None, random_state=None, size=None):
    """Release a rank-``k`` projection ``P`` with density ``~ exp(epsilon/(4 sigma) <A, P>)``.

    Parameters
    ----------
    A : array_like, shape (d, d)
        Hermitian (or real symmetric) positive semidefinite matrix.
    cfg : DPConfig
    sampler : SamplerConfig, optional
        Walk parameters; the mode is always ``"inf"`` and ``xi`` comes from ``cfg``.
    size : int, optional
        Number of independent releases (stacked in the returned sample).
    """
    A, dec = check_psd(A)
    d = A.shape[0]
    if cfg.k > d:
        raise DomainError(f"k={cfg.k} exceeds the dimension {d}")
    gamma = np.maximum(dec.eigenvalues, 0.0)
    lam = np.concatenate([np.ones(cfg.k), np.zeros(d - cfg.k)])
    y = cfg.epsilon / (4.0 * cfg.sensitivity) * gamma
    problem = OrbitProblem(lam, y, mode="inf", xi=cfg.sampler_xi)
    X = sample_orbit(problem, sampler or SamplerConfig(mode="inf"), random_state, size)
    U = dec.eigenvectors
    P = U @ X @ U.conj().T
    P = 0.5 * (P + np.swapaxes(P.conj(), -1, -2))
    return ProjectionSample(P, cfg.k)


def sensitivity_check(A, A_prime, P, tol=1e-9):
    """``|<A, P> - <A', P>|`` for neighbours ``A' = A - v1 v1^* + v2 v2^*``, ``|v1|, |v2| <= 1``.

    The neighbour relation is checked through the spectrum of ``A' - A``:
    at most one positive and one negative eigenvalue, each of modulus at
    most 1.
    """
    A = check_hermitian(A)
    A_prime = check_hermitian(A_prime)
    if A.shape != A_prime.shape:
        raise DomainError("A and A_prime differ in shape")
    diff = np.linalg.eigvalsh(A_prime - A)
    scale = tol * (1.0 + np.max(np.abs(A)))
    pos, neg = diff[diff > scale], diff[diff < -scale]
    if pos.size > 1 or neg.size > 1 or np.any(np.abs(diff) > 1.0 + scale):
        raise DomainError("A_prime is not a neighbour of A")
    P = P.P if isinstance(P, ProjectionSample) else np.asarray(P)
    return abs(inner(A, P) - inner(A_prime, P))


def covering_bound(d, k, zeta):
    """Logarithm of ``(1 + 8/zeta)^(2 d k)``, the covering number of rank-``k`` projections."""
    if not zeta > 0:
        raise DomainError(f"zeta must be positive, got {zeta}")
    return 2.0 * d * k * np.log1p(8.0 / zeta)


def utility_threshold(d, k, cfg):
    """``C d k log(1/delta) / (epsilon delta)``: spectral mass above which utility is guaranteed."""
    return cfg.C * d * k * np.log(1.0 / cfg.delta) / (cfg.epsilon * cfg.delta)
