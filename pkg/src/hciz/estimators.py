"""scikit-learn style front ends for the orbit sampler and the private projection."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import DomainError
from .linalg import as_generator, check_hermitian
from .mcmc import SamplerConfig
from .orbit import OrbitProblem, log_partition, sample_orbit
from .polytope import build_polytope, rayleigh_map_batch
from .privacy import DPConfig, check_psd, dp_rank_k_projection


def _as_complex_2d(X, name="X"):
    # check_array rejects complex input, so validate by hand
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise DomainError(f"{name} must be a non-empty 2-D array, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DomainError(f"{name} contains non-finite values")
    return X


class HCIZSampler(BaseEstimator):
    """Sampler for the density ``exp(<Y, X>)`` on Hermitian matrices with spectrum ``spectrum``.

    ``fit`` takes ``Y`` as a real vector (``diag(Y)``) or a Hermitian matrix.

    Parameters
    ----------
    spectrum : array_like
        Eigenvalues ``lambda`` of the orbit, non-increasing.
    mode : {"tv", "inf"}
        Error notion of the polytope walk.
    xi : float
        Error target of the walk.
    burn_in, thinning, chains : int, optional
        Walk schedule; defaults depend on the polytope dimension.
    random_state : None, int or numpy.random.Generator

    Attributes
    ----------
    problem_ : OrbitProblem
    log_partition_ : float
        Logarithm of the normalizing constant with respect to the Haar orbit measure.
    n_features_in_ : int
    """

    def __init__(self, spectrum=None, mode="tv", xi=0.01, burn_in=None, thinning=None,
                 chains=None, random_state=None):
        self.spectrum = spectrum
        self.mode = mode
        self.xi = xi
        self.burn_in = burn_in
        self.thinning = thinning
        self.chains = chains
        self.random_state = random_state

    def fit(self, Y, y=None):
        if self.spectrum is None:
            raise DomainError("spectrum must be set before fitting")
        self.problem_ = OrbitProblem(np.asarray(self.spectrum, dtype=float), Y,
                                     mode=self.mode, xi=self.xi)
        self.config_ = SamplerConfig(mode=self.mode, xi=self.xi, burn_in=self.burn_in,
                                     thinning=self.thinning, chains=self.chains)
        self.log_partition_ = log_partition(self.problem_.Y, self.problem_.lambda_)
        self.n_features_in_ = self.problem_.n
        self._rng = as_generator(self.random_state)
        return self

    def sample(self, n_samples=1):
        """Draw ``n_samples`` matrices, shape ``(n_samples, n, n)``."""
        check_is_fitted(self, "problem_")
        return sample_orbit(self.problem_, self.config_, self._rng, size=int(n_samples))

    def sample_triangles(self, n_samples=1):
        """Rayleigh triangles of fresh draws, flat layout ``(n_samples, n (n + 1) / 2)``."""
        return rayleigh_map_batch(self.sample(n_samples))

    def score_samples(self, X):
        """Log density ``<Y, X> - log Z`` relative to the uniform measure on the orbit."""
        check_is_fitted(self, "problem_")
        X = np.asarray(X)
        stack = X if X.ndim == 3 else X[None]
        lam = build_polytope(self.problem_.lambda_).lambda_
        for M in stack:
            vals = np.linalg.eigvalsh(check_hermitian(M))[::-1]
            if np.max(np.abs(vals - lam)) > 1e-8 * (1.0 + np.max(np.abs(lam))):
                raise DomainError("matrix does not lie on the orbit")
        Y = self.problem_.Y
        Ym = np.diag(Y) if Y.ndim == 1 else Y
        scores = np.real(np.einsum("ij,bij->b", Ym.conj(), stack)) - self.log_partition_
        return scores if X.ndim == 3 else float(scores[0])


class DPLowRankApproximation(TransformerMixin, BaseEstimator):
    """Differentially private rank-``k`` subspace of ``A = X^* X`` (or of ``A`` itself).

    Neighbouring datasets differ by replacing one row of norm at most 1,
    which changes ``A`` by ``-v1 v1^* + v2 v2^*``; rows of larger norm void
    the privacy guarantee.

    Parameters
    ----------
    n_components : int
        Rank ``k`` of the released projection.
    epsilon : float
        Privacy budget.
    sensitivity : float
    xi : float, optional
        Sampler budget; defaults to ``epsilon / 4``.
    burn_in, thinning, chains : int, optional
    precomputed : bool
        If true, ``fit`` receives the PSD matrix ``A`` directly.
    random_state : None, int or numpy.random.Generator

    Attributes
    ----------
    projection_ : ndarray, shape (d, d)
        Released projection ``P``.
    components_ : ndarray, shape (n_components, d)
        Orthonormal rows spanning the range of ``P``.
    score_ : float
        ``<A, P>``.
    """

    def __init__(self, n_components=1, epsilon=1.0, sensitivity=1.0, xi=None, burn_in=None,
                 thinning=None, chains=None, precomputed=False, random_state=None):
        self.n_components = n_components
        self.epsilon = epsilon
        self.sensitivity = sensitivity
        self.xi = xi
        self.burn_in = burn_in
        self.thinning = thinning
        self.chains = chains
        self.precomputed = precomputed
        self.random_state = random_state

    def fit(self, X, y=None):
        X = _as_complex_2d(X)
        A = X if self.precomputed else X.conj().T @ X
        A, _ = check_psd(A)
        cfg = DPConfig(epsilon=self.epsilon, k=self.n_components, sensitivity=self.sensitivity,
                       xi=self.xi)
        sampler = SamplerConfig(mode="inf", xi=cfg.sampler_xi, burn_in=self.burn_in,
                                thinning=self.thinning, chains=self.chains)
        release = dp_rank_k_projection(A, cfg, sampler, self.random_state)
        P = release.P
        _, vecs = np.linalg.eigh(P)
        top = vecs[:, ::-1][:, :self.n_components]
        self.projection_ = P
        self.components_ = top.conj().T
        self.score_ = release.score(A)
        self.n_features_in_ = A.shape[0]
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = _as_complex_2d(X)
        if X.shape[1] != self.n_features_in_:
            raise DomainError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return X @ self.components_.conj().T

    def inverse_transform(self, Z):
        check_is_fitted(self, "components_")
        return np.asarray(Z) @ self.components_
