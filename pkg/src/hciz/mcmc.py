"""MCMC for log-linear densities ``exp(<ell, x>)`` on ``GT(lambda)``.

Two walks are provided, both run as a batch of independent chains advanced
together with vectorized numpy operations:

* ``hit_and_run_sample`` (mode ``"tv"``): uniform random direction, chord
  through the polytope, exact draw from the 1-D exponential law on the chord.
* ``grid_walk_sample`` (mode ``"inf"``): a walk on the cells of a lattice of
  pitch ``h`` whose cells lie entirely inside the polytope. Each step picks a
  lattice axis and redraws the coordinate exactly from the discrete
  exponential law on the feasible run of cells; the output is a uniform point
  of the final cell. The stationary law is the target restricted to the
  union of cells with the density flattened inside each cell.
"""

from dataclasses import dataclass, replace

import numpy as np

from .exceptions import DomainError
from .linalg import as_generator
from .polytope import (RayleighTriangle, inner_ball, membership, outer_radius,
                       uniform_gt_sample)

_TINY = 1e-300


@dataclass(frozen=True)
class SamplerConfig:
    """Walk parameters.

    ``burn_in`` and ``thinning`` default to ``1000 d^2 max(1, log(1/xi)/log(100))``
    and ``100 d`` for a polytope with ``d`` free coordinates. ``chains``
    defaults to ``min(size, 1000)``. ``grid_resolution`` (pitch, ``"inf"``
    mode) defaults to ``min(xi, 1) r / (4 (1 + |ell|))`` with ``r`` the inner
    radius. ``chord="bisection"`` locates chords through the membership
    oracle only instead of the explicit inequalities. ``rounding`` selects the
    lattice frame for ``"inf"`` mode: ``"ball"`` (axis aligned) or
    ``"isotropic"`` (whitened by the covariance of a uniform pilot sample).
    """

    mode: str = "tv"
    xi: float = 0.01
    burn_in: int | None = None
    thinning: int | None = None
    chains: int | None = None
    seed: int | None = None
    grid_resolution: float | None = None
    chord: str = "analytic"
    rounding: str = "ball"

    def __post_init__(self):
        if self.mode not in ("tv", "inf"):
            raise DomainError(f"mode must be 'tv' or 'inf', got {self.mode!r}")
        if not self.xi > 0:
            raise DomainError(f"xi must be positive, got {self.xi}")
        for name in ("burn_in", "thinning", "chains"):
            value = getattr(self, name)
            if value is not None and (int(value) != value or value < 1):
                raise DomainError(f"{name} must be a positive integer, got {value}")
        if self.grid_resolution is not None and not self.grid_resolution > 0:
            raise DomainError(f"grid_resolution must be positive, got {self.grid_resolution}")
        if self.chord not in ("analytic", "bisection"):
            raise DomainError(f"chord must be 'analytic' or 'bisection', got {self.chord!r}")
        if self.rounding not in ("ball", "isotropic"):
            raise DomainError(f"rounding must be 'ball' or 'isotropic', got {self.rounding!r}")

    def resolved_burn_in(self, dim):
        if self.burn_in is not None:
            return int(self.burn_in)
        factor = max(1.0, np.log(1.0 / self.xi) / np.log(100.0))
        return int(np.ceil(1000 * dim**2 * factor))

    def resolved_thinning(self, dim):
        return int(self.thinning) if self.thinning is not None else 100 * dim


@dataclass(frozen=True)
class ChainDiagnostics:
    acceptance_rate: float
    psrf: float
    effective_sample_size: float
    chord_failures: int = 0


@dataclass
class ChainRun:
    """Output of a batch of chains: pooled samples in free coordinates plus traces."""

    samples: np.ndarray
    traces: np.ndarray
    move_rate: float
    chord_failures: int
    pitch: float | None = None

    def diagnostics(self):
        if self.traces.shape[0] < 2 or self.traces.shape[1] < 100:
            return None
        d = run_diagnostics(self.traces)
        return replace(d, acceptance_rate=self.move_rate, chord_failures=self.chord_failures)


def truncated_exponential(rate, lo, hi, u):
    """Inverse-CDF draw from the density ``~ exp(rate t)`` on ``[lo, hi]`` (vectorized)."""
    rate, lo, hi, u = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (rate, lo, hi, u)))
    length = hi - lo
    b = np.abs(rate)
    bl = b * length
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(bl > 1e-12, -np.log1p(u * np.expm1(-bl)) / np.maximum(b, _TINY), u * length)
    w = np.clip(w, 0.0, length)
    return np.where(rate > 0, hi - w, lo + w)


def truncated_geometric(rate, lo, hi, u):
    """Draw integers ``t`` in ``[lo, hi]`` with probability ``~ exp(rate t)`` (vectorized)."""
    rate, lo, hi, u = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (rate, lo, hi, u)))
    span = hi - lo + 1.0
    b = np.abs(rate)
    bs = b * span
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(bs > 1e-12, -np.log1p(u * np.expm1(-bs)) / np.maximum(b, _TINY), u * span)
    s = np.clip(np.floor(w), 0.0, span - 1.0)
    return np.where(rate > 0, hi - s, lo + s)


def _chords_analytic(A, b, X, D):
    slack = np.maximum(b[None, :] - X @ A.T, 0.0)
    AD = D @ A.T
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = slack / AD
    hi = np.min(np.where(AD > 1e-14, ratio, np.inf), axis=1)
    lo = np.max(np.where(AD < -1e-14, ratio, -np.inf), axis=1)
    return lo, hi


def chord_by_bisection(poly, x, direction, tol=1e-12):
    """Endpoints ``(t_lo, t_hi)`` of ``{t : x + t direction in GT}`` using only the membership oracle."""
    reach = outer_radius(poly) + 1.0

    def inside(t):
        return membership(poly, poly.from_free(x + t * direction), tol=0.0)

    ends = []
    for sign in (1.0, -1.0):
        good, bad = 0.0, sign * reach
        while abs(bad - good) > tol:
            mid = 0.5 * (good + bad)
            if inside(mid):
                good = mid
            else:
                bad = mid
        ends.append(good)
    return ends[1], ends[0]


def _prepare(poly, spec, cfg, size, rng):
    ell = spec.live_weights(poly)
    chains = cfg.chains if cfg.chains is not None else min(size, 1000)
    chains = max(1, min(int(chains), size))
    per_chain = -(-size // chains)
    return ell, chains, per_chain


def _pool(traces, size):
    chains, per_chain, d = traces.shape
    return traces.transpose(1, 0, 2).reshape(chains * per_chain, d)[:size]


def _point_run(poly, size):
    empty = np.zeros((1, size, 0))
    return ChainRun(samples=np.zeros((size, 0)), traces=empty, move_rate=0.0, chord_failures=0)


def run_hit_and_run(poly, spec, cfg, random_state=None, size=1, start=None):
    """Run hit-and-run chains and return a :class:`ChainRun` with ``size`` pooled samples.

    ``start`` optionally gives the initial free coordinates, one row per
    chain; by default chains start from independent uniform draws.
    """
    rng = as_generator(random_state if random_state is not None else cfg.seed)
    if poly.is_point:
        return _point_run(poly, size)
    ell, chains, per_chain = _prepare(poly, spec, cfg, size, rng)
    d = poly.dim
    burn, thin = cfg.resolved_burn_in(d), cfg.resolved_thinning(d)
    if start is None:
        X = poly.to_free(uniform_gt_sample(poly, rng, size=chains))
    else:
        X = np.array(start, dtype=float).reshape(chains, d)
    traces = np.empty((chains, per_chain, d))
    failures = 0
    total = burn + per_chain * thin
    for step in range(1, total + 1):
        D = rng.standard_normal((chains, d))
        D /= np.linalg.norm(D, axis=1, keepdims=True)
        if cfg.chord == "analytic":
            lo, hi = _chords_analytic(poly.A, poly.b, X, D)
        else:
            lo, hi = np.empty(chains), np.empty(chains)
            for c in range(chains):
                lo[c], hi[c] = chord_by_bisection(poly, X[c], D[c])
        ok = np.isfinite(lo) & np.isfinite(hi) & (hi >= lo)
        failures += int(np.count_nonzero(~ok))
        t = truncated_exponential(D @ ell, np.where(ok, lo, 0.0), np.where(ok, hi, 0.0),
                                  rng.random(chains))
        X = X + np.where(ok, t, 0.0)[:, None] * D
        if step > burn and (step - burn) % thin == 0:
            traces[:, (step - burn) // thin - 1] = X
    return ChainRun(samples=_pool(traces, size), traces=traces, move_rate=1.0,
                    chord_failures=failures)


def default_pitch(poly, spec, xi):
    _, r = inner_ball(poly)
    ell = spec.live_weights(poly)
    return min(xi, 1.0) * r / (4.0 * (1.0 + np.linalg.norm(ell)))


def _lattice_frame(poly, cfg, rng):
    d = poly.dim
    if cfg.rounding == "ball":
        return np.eye(d)
    pilot = poly.to_free(uniform_gt_sample(poly, rng, size=max(1000, 20 * d * d)))
    L = np.linalg.cholesky(np.cov(pilot, rowvar=False).reshape(d, d) + 1e-15 * np.eye(d))
    return L / np.linalg.norm(L, 2)


def run_grid_walk(poly, spec, cfg, random_state=None, size=1):
    """Run lattice-walk chains and return a :class:`ChainRun` with ``size`` pooled samples."""
    rng = as_generator(random_state if random_state is not None else cfg.seed)
    if poly.is_point:
        return _point_run(poly, size)
    ell, chains, per_chain = _prepare(poly, spec, cfg, size, rng)
    d = poly.dim
    burn, thin = cfg.resolved_burn_in(d), cfg.resolved_thinning(d)
    center_tri, _ = inner_ball(poly)
    center = poly.to_free(center_tri.values)
    T = _lattice_frame(poly, cfg, rng)
    h = cfg.grid_resolution if cfg.grid_resolution is not None else default_pitch(poly, spec, cfg.xi)

    AT = poly.A @ T
    slack_c = poly.b - poly.A @ center
    while True:
        # cells z + [-1/2, 1/2]^d must sit inside the polytope
        Az = h * AT
        bz = slack_c - 0.5 * h * np.abs(AT).sum(axis=1)
        if np.all(bz >= 0):
            break
        h *= 0.5
    rates = h * (T.T @ ell)

    start = poly.to_free(uniform_gt_sample(poly, rng, size=chains))
    Z = np.rint(np.linalg.solve(T, (start - center).T).T / h)
    feasible = np.all(Z @ Az.T <= bz + 1e-9, axis=1)
    Z[~feasible] = 0.0

    traces = np.empty((chains, per_chain, d))
    moves = 0
    total = burn + per_chain * thin
    rows = np.arange(chains)
    for step in range(1, total + 1):
        axis = rng.integers(d, size=chains)
        col = Az[:, axis].T
        slack = bz[None, :] - Z @ Az.T
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = slack / col
        t_hi = np.floor(np.min(np.where(col > 1e-14, ratio, np.inf), axis=1) + 1e-9)
        t_lo = np.ceil(np.max(np.where(col < -1e-14, ratio, -np.inf), axis=1) - 1e-9)
        t_hi, t_lo = np.maximum(t_hi, 0.0), np.minimum(t_lo, 0.0)
        t = truncated_geometric(rates[axis], t_lo, t_hi, rng.random(chains))
        moves += int(np.count_nonzero(t))
        Z[rows, axis] += t
        if step > burn and (step - burn) % thin == 0:
            jitter = rng.random((chains, d)) - 0.5
            traces[:, (step - burn) // thin - 1] = center + h * (Z + jitter) @ T.T
    return ChainRun(samples=_pool(traces, size), traces=traces,
                    move_rate=moves / (total * chains), chord_failures=0, pitch=h)


def _as_triangles(poly, run, size):
    flat = poly.from_free(run.samples)
    if size is None:
        return RayleighTriangle(poly.n, flat[0])
    return flat


def hit_and_run_sample(poly, spec, cfg, random_state=None, size=None):
    """Approximate draw(s) from ``exp(<y_delta, P>)`` on ``GT(lambda)`` in total variation.

    Returns a :class:`RayleighTriangle` for ``size=None``, otherwise flat
    triangles of shape ``(size, N)``.
    """
    run = run_hit_and_run(poly, spec, cfg, random_state, 1 if size is None else int(size))
    return _as_triangles(poly, run, size)


def grid_walk_sample(poly, spec, cfg, random_state=None, size=None):
    """Approximate draw(s) from ``exp(<y_delta, P>)`` on ``GT(lambda)`` in infinity divergence."""
    run = run_grid_walk(poly, spec, cfg, random_state, 1 if size is None else int(size))
    return _as_triangles(poly, run, size)


def run_sampler(poly, spec, cfg, random_state=None, size=1):
    """Dispatch on ``cfg.mode``."""
    if cfg.mode == "tv":
        return run_hit_and_run(poly, spec, cfg, random_state, size)
    return run_grid_walk(poly, spec, cfg, random_state, size)


def _autocov(x):
    # x: (chains, n); biased autocovariance per chain via FFT
    n = x.shape[1]
    xc = x - x.mean(axis=1, keepdims=True)
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, size, axis=1)
    return np.fft.irfft(f * np.conj(f), size, axis=1)[:, :n] / n


def _psrf_ess(chains):
    m, n = chains.shape
    means = chains.mean(axis=1)
    W = chains.var(axis=1, ddof=1).mean()
    B = n * means.var(ddof=1)
    V = W * (n - 1) / n + B * (m + 1) / (m * n)
    if W <= 0:
        return (1.0 if B <= 0 else np.inf), float(m * n)
    psrf = float(np.sqrt(V / W))
    acov = _autocov(chains)
    var_plus = W * (n - 1) / n + B / n
    rho = 1.0 - (W - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0
    # Geyer's initial monotone positive sequence
    tau, prev = -1.0, np.inf
    for k in range(0, n - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair <= 0:
            break
        pair = min(pair, prev)
        tau += 2.0 * pair
        prev = pair
    return psrf, float(m * n / max(tau, 1.0 / np.log10(max(m * n, 10))))


def run_diagnostics(chains):
    """Potential scale reduction and effective sample size, worst case over coordinates.

    Parameters
    ----------
    chains : array_like, shape (n_chains, n_samples) or (n_chains, n_samples, d)
        Retained samples of each chain. At least 2 chains of 100 samples.
    """
    x = np.asarray(chains, dtype=float)
    if x.ndim == 2:
        x = x[:, :, None]
    if x.ndim != 3 or x.shape[0] < 2 or x.shape[1] < 100:
        raise DomainError("need at least 2 chains with 100 retained samples each")
    psrf, ess = -np.inf, np.inf
    for k in range(x.shape[2]):
        p, e = _psrf_ess(x[:, :, k])
        psrf, ess = max(psrf, p), min(ess, e)
    if x.shape[2] == 0:
        psrf, ess = 1.0, float(x.shape[0] * x.shape[1])
    return ChainDiagnostics(acceptance_rate=1.0, psrf=float(psrf), effective_sample_size=float(ess))
