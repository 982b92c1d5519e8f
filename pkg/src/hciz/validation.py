"""Statistical validation suites.

Each suite runs one family of checks against an independent oracle (closed
form densities, the determinant formula for the partition function, direct
Haar conjugation) and returns a :class:`ValidationReport`. Runs with fewer
samples than a suite's nominal size carry a failing ``sample-size`` check so
a shortened run can never pass silently.
"""

import time
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .fiber import charpoly_residual, extend_submatrix, sample_fiber_batch
from .linalg import as_generator, sample_haar_unitary
from .mcmc import SamplerConfig, run_diagnostics
from .orbit import OrbitProblem, expected_inner_product, log_partition, sample_orbit
from .polytope import build_polytope, rayleigh_map_batch, uniform_gt_sample
from .privacy import DPConfig, dp_rank_k_projection, sensitivity_check


@dataclass
class Check:
    name: str
    statistic: float
    threshold: float
    passed: bool
    detail: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        text = f"[{status}] {self.name}: {self.statistic:.6g} (threshold {self.threshold:.6g})"
        return f"{text} {self.detail}".rstrip()


@dataclass
class ValidationReport:
    suite: str
    checks: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    elapsed: float = 0.0
    series: dict = field(default_factory=dict)

    @property
    def passed(self):
        return bool(self.checks) and all(c.passed for c in self.checks)

    def add(self, name, statistic, threshold, passed, detail=""):
        self.checks.append(Check(name, float(statistic), float(threshold), bool(passed), detail))

    def to_dict(self):
        return {
            "suite": self.suite,
            "passed": self.passed,
            "elapsed_seconds": self.elapsed,
            "checks": [vars(c) for c in self.checks],
            "diagnostics": self.diagnostics,
        }


def _size_check(report, num, nominal):
    report.add("sample-size", num, nominal, num >= nominal,
               "" if num >= nominal else "under-sampled run")


def _record_run(report, key, run):
    diag = run.diagnostics()
    if diag is not None:
        report.diagnostics[key] = {"psrf": diag.psrf, "ess": diag.effective_sample_size,
                                   "move_rate": diag.acceptance_rate,
                                   "chord_failures": diag.chord_failures}
        return diag
    return None


def _histogram_series(x, edges, target):
    counts, _ = np.histogram(x, bins=edges)
    return {"bin_left": edges[:-1], "bin_right": edges[1:],
            "empirical": counts / max(x.size, 1), "target": target}


def _exp_cdf(beta):
    # CDF of the density ~ exp(beta x) on [0, 1]
    if beta == 0:
        return lambda x: np.clip(x, 0.0, 1.0)
    return lambda x: np.expm1(beta * np.clip(x, 0.0, 1.0)) / np.expm1(beta)


def _exp_mean(beta):
    if abs(beta) < 1e-8:
        return 0.5
    return 1.0 / -np.expm1(-beta) - 1.0 / beta


def spectrum_suite(num=1000, seed=0, cfg=None, problems=20):
    """Every emitted matrix has spectrum ``lambda`` (max relative error ``1e-8``)."""
    report = ValidationReport("spectrum")
    rng = as_generator(seed)
    cfg = cfg or SamplerConfig(burn_in=200, thinning=10)
    worst = 0.0
    for p in range(problems):
        n = int(rng.integers(2, 7))
        lam = np.sort(rng.normal(size=n) * 3)[::-1]
        if p % 4 == 3:
            lam[1] = lam[0]
        y = np.sort(rng.normal(size=n))[::-1]
        problem = OrbitProblem(lam, y, mode="inf" if p % 2 else "tv", xi=0.1)
        X = sample_orbit(problem, cfg, rng, size=num)
        vals = np.linalg.eigvalsh(X)[:, ::-1]
        worst = max(worst, np.max(np.abs(vals - lam)) / max(1.0, np.max(np.abs(lam))))
    _size_check(report, num, 1000)
    report.add("spectrum-exactness", worst, 1e-8, worst <= 1e-8, f"{problems} problems")
    return report


def fiber_suite(num=1000, seed=0, steps=10_000):
    """Round trip through the Rayleigh map and the characteristic-polynomial identity."""
    report = ValidationReport("fiber")
    rng = as_generator(seed)
    worst = 0.0
    for lam in [(1, 0), (2, 1, 0), (1, 1, 0), (3, 1, 1, 0)]:
        poly = build_polytope(lam)
        P = uniform_gt_sample(poly, rng, size=num)
        S = sample_fiber_batch(P, rng)
        worst = max(worst, np.max(np.abs(rayleigh_map_batch(S) - P)))
    _size_check(report, num, 1000)
    report.add("rayleigh-round-trip", worst, 1e-8, worst <= 1e-8)

    worst_cp = 0.0
    for _ in range(steps):
        k = int(rng.integers(2, 7))
        lam = np.sort(rng.integers(0, 4, size=k).astype(float))[::-1]
        if rng.random() < 0.5:
            lam = np.sort(rng.normal(size=k))[::-1]
        poly = build_polytope(lam)
        if poly.is_point:
            continue
        rows = uniform_gt_sample(poly, rng).rows
        S_prev = _matrix_with_triangle(rows[:-1], rng)
        S_new = extend_submatrix(S_prev, rows[-1], rows[-2], rng)
        m = np.unique(np.round(rows[-2], 8)).size
        t = rng.uniform(lam[-1] - 1, lam[0] + 1, size=m + 2)
        worst_cp = max(worst_cp, np.max(charpoly_residual(S_prev, S_new, rows[-1], rows[-2], t)))
    report.add("charpoly-identity", worst_cp, 1e-8, worst_cp <= 1e-8, f"{steps} steps")
    return report


def _matrix_with_triangle(rows, rng):
    # Hermitian matrix whose Rayleigh triangle has the given rows
    flat = np.concatenate(rows)
    return sample_fiber_batch(flat[None], rng)[0]


def haar_suite(num=100_000, seed=0, cfg=None):
    """``y = 0`` on ``lambda = (1, 0)``: mean of ``X11`` and two-sample KS against Haar conjugation."""
    report = ValidationReport("haar")
    rng = as_generator(seed)
    X, run = sample_orbit(OrbitProblem([1.0, 0.0], [0.0, 0.0]), cfg, rng, size=num, return_run=True)
    _record_run(report, "walk", run)
    x11 = X[:, 0, 0].real
    U = sample_haar_unitary(2, rng, size=num)
    direct = np.abs(U[:, 0, 0]) ** 2
    sigma = np.sqrt(1.0 / 12.0 / num)
    _size_check(report, num, 100_000)
    report.add("haar-mean-x11", abs(x11.mean() - 0.5) / sigma, 3.0,
               abs(x11.mean() - 0.5) <= 3 * sigma, f"mean {x11.mean():.5f}")
    ks = stats.ks_2samp(x11, direct)
    report.add("haar-ks-pvalue", ks.pvalue, 0.01, ks.pvalue > 0.01)
    edges = np.linspace(0, 1, 21)
    report.series["haar_x11"] = _histogram_series(x11, edges, np.full(20, 0.05))
    return report


def rank_one_suite(num=100_000, seed=0, cfg=None, betas=(1.0, 5.0, 20.0)):
    """``X11`` under ``y = (beta, 0)`` against the density ``~ exp(beta x)`` on ``[0, 1]``."""
    report = ValidationReport("rank-one")
    rng = as_generator(seed)
    _size_check(report, num, 100_000)
    edges = np.linspace(0, 1, 21)
    for beta in betas:
        X, run = sample_orbit(OrbitProblem([1.0, 0.0], [beta, 0.0]), cfg, rng, size=num,
                              return_run=True)
        _record_run(report, f"beta={beta:g}", run)
        x11 = X[:, 0, 0].real
        cdf = _exp_cdf(beta)
        ks = stats.kstest(x11, cdf)
        report.add(f"rank-one-ks-beta{beta:g}", ks.pvalue, 0.01, ks.pvalue > 0.01,
                   f"mean {x11.mean():.5f} vs {_exp_mean(beta):.5f}")
        report.series[f"rank_one_beta{beta:g}"] = _histogram_series(x11, edges, np.diff(cdf(edges)))
    return report


def moments_suite(num=40_000, seed=0, cfg=None, mc_draws=1_000_000):
    """Moment of ``<Y, X>`` against the derivative of ``log Z``; ``log Z`` against its closed form and Monte Carlo."""
    report = ValidationReport("moments")
    rng = as_generator(seed)
    lam, y = np.array([1.0, 0.5, 0.0]), np.array([1.0, 0.4, 0.0])
    cfg = cfg or SamplerConfig(chains=200)
    X, run = sample_orbit(OrbitProblem(lam, y), cfg, rng, size=num, return_run=True)
    diag = _record_run(report, "walk", run)
    stat = np.einsum("i,bii->b", y, X).real
    ess = num
    if diag is not None:
        chains = run.traces.shape[0]
        usable = (num // chains) * chains
        per = stat[:usable].reshape(-1, chains).T
        if per.shape[1] >= 100:
            ess = min(num, run_diagnostics(per).effective_sample_size)
    sigma = stat.std(ddof=1) / np.sqrt(ess)
    target = expected_inner_product(y, lam, richardson=True)
    _size_check(report, num, 40_000)
    z = abs(stat.mean() - target) / sigma
    report.add("moment-inner-product", z, 3.0, z <= 3.0,
               f"mean {stat.mean():.5f} vs {target:.5f}, ess {ess:.0f}")

    exact = np.log(np.e - 1.0)
    err = abs(log_partition([1.0, 0.0], [1.0, 0.0]) - exact)
    report.add("log-partition-closed-form", err, 1e-9, err <= 1e-9)

    total, total_sq, done = 0.0, 0.0, 0
    while done < mc_draws:
        b = min(200_000, mc_draws - done)
        U = sample_haar_unitary(2, rng, size=b)
        w = np.exp(np.abs(U[:, 0, 0]) ** 2)
        total += w.sum()
        total_sq += (w**2).sum()
        done += b
    mean = total / done
    se = np.sqrt(max(total_sq / done - mean**2, 0.0) / done)
    z = abs(mean - (np.e - 1.0)) / se
    report.add("log-partition-monte-carlo", z, 3.0, z <= 3.0 and done >= 1_000_000,
               f"estimate {np.log(mean):.6f} from {done} draws")
    return report


def _binned_ratio(x, edges, target):
    counts, _ = np.histogram(x, bins=edges)
    emp = counts / x.size
    with np.errstate(divide="ignore"):
        ratio = np.abs(np.log(emp / target))
    slack = 4.0 * np.sqrt((1.0 - target) / (x.size * target))
    return ratio, slack


def inf_ratio_suite(num=1_000_000, seed=0, cfg=None, xi=0.1, rates=(0.0, 2.0), bins=20):
    """Binned log ratio of the infinity-divergence walk against the exact law of ``X11``."""
    report = ValidationReport("inf-ratio")
    rng = as_generator(seed)
    cfg = cfg or SamplerConfig(mode="inf", chains=10_000)
    edges = np.linspace(0, 1, bins + 1)
    _size_check(report, num, 1_000_000)
    for beta in rates:
        X, run = sample_orbit(OrbitProblem([1.0, 0.0], [beta, 0.0], mode="inf", xi=xi), cfg, rng,
                              size=num, return_run=True)
        _record_run(report, f"ydelta={beta:g}", run)
        x11 = X[:, 0, 0].real
        target = np.diff(_exp_cdf(beta)(edges))
        ratio, slack = _binned_ratio(x11, edges, target)
        excess = np.max(ratio - slack)
        report.add(f"inf-ratio-ydelta{beta:g}", excess, xi, excess <= xi,
                   f"max |log ratio| {ratio.max():.4f}, pitch {run.pitch:.2e}")
        report.series[f"inf_ratio_ydelta{beta:g}"] = {**_histogram_series(x11, edges, target),
                                                      "log_ratio": ratio, "slack": slack}
    return report


def adjacent_pair(d, m, rng):
    """PSD ``A = Z^* Z`` from ``m`` rows of norm at most 1 and its neighbour with one row replaced."""
    def row():
        v = rng.normal(size=d) + 1j * rng.normal(size=d)
        return v / np.linalg.norm(v) * rng.uniform(0, 1)

    Z = np.array([row() for _ in range(m)])
    A = Z.conj().T @ Z
    v1, v2 = Z[0], row()
    A_prime = A - np.outer(v1, v1.conj()) + np.outer(v2, v2.conj())
    return A, A_prime


def dp_sensitivity_suite(num=10_000, seed=0):
    """Fuzzed ``|<A, P> - <A', P>|`` over neighbouring PSD inputs and rank-k projections."""
    report = ValidationReport("dp-sensitivity")
    rng = as_generator(seed)
    worst = 0.0
    values = np.empty(num)
    for t in range(num):
        d = int(rng.integers(2, 7))
        k = int(rng.integers(1, d + 1))
        A, A_prime = adjacent_pair(d, int(rng.integers(1, 6)), rng)
        if t % 3 == 0:
            # saturate the bound: P projects onto the removed direction
            V = sample_haar_unitary(d, rng)
            v = V[:, 0]
            A = np.outer(v, v.conj())
            A_prime = np.zeros((d, d))
            P = np.outer(v, v.conj())
            if k > 1:
                P = P + V[:, 1:k] @ V[:, 1:k].conj().T
        else:
            V = sample_haar_unitary(d, rng)[:, :k]
            P = V @ V.conj().T
        values[t] = sensitivity_check(A, A_prime, P)
        worst = max(worst, values[t])
    _size_check(report, num, 10_000)
    report.add("dp-sensitivity-max", worst, 1.0 + 1e-9, worst <= 1.0 + 1e-9)
    report.series["dp_sensitivity"] = {"index": np.arange(num), "value": values}
    return report


def dp_limits_suite(num=20_000, seed=0, sampler=None):
    """Forced output at ``k = d``, concentration for large epsilon, uniformity for small epsilon."""
    report = ValidationReport("dp-limits")
    rng = as_generator(seed)
    _size_check(report, num, 20_000)
    A3 = np.diag([3.0, 2.0, 1.0])
    P = dp_rank_k_projection(A3, DPConfig(epsilon=1.0, k=3), sampler, rng).P
    dev = np.max(np.abs(P - np.eye(3)))
    report.add("dp-full-rank-identity", dev, 1e-12, dev <= 1e-12)

    gamma = np.array([2.0, 1.0])
    A = np.diag(gamma)
    eps = 400.0
    scores = dp_rank_k_projection(A, DPConfig(epsilon=eps), sampler, rng, size=num).score(A)
    beta = eps / 4.0 * (gamma[0] - gamma[1])
    oracle = gamma[1] + (gamma[0] - gamma[1]) * _exp_mean(beta)
    rel = abs(scores.mean() - gamma[0]) / gamma[0]
    report.add("dp-large-epsilon", rel, 0.01, rel <= 0.01,
               f"mean {scores.mean():.5f}, oracle {oracle:.5f}")

    scores = dp_rank_k_projection(A, DPConfig(epsilon=1e-6), sampler, rng, size=num).score(A)
    target = 0.5 * gamma.sum()
    z = abs(scores.mean() - target) / (scores.std(ddof=1) / np.sqrt(num))
    report.add("dp-small-epsilon", z, 3.0, z <= 3.0, f"mean {scores.mean():.5f} vs {target:.5f}")
    return report


def dp_ratio_suite(num=200_000, seed=0, epsilon=2.0, bins=20, sampler=None):
    """Binned log ratio of the law of ``P11`` under neighbouring inputs, ``d = 2``, ``k = 1``."""
    report = ValidationReport("dp-ratio")
    rng = as_generator(seed)
    # rows (1, 0) and (0, 0.5); the neighbour replaces (1, 0) by (0, 1)
    A = np.diag([1.0, 0.25])
    A_prime = np.diag([0.0, 1.25])
    cfg = DPConfig(epsilon=epsilon)
    sampler = sampler or SamplerConfig(mode="inf", chains=10_000)
    edges = np.linspace(0, 1, bins + 1)
    x = dp_rank_k_projection(A, cfg, sampler, rng, size=num).P[:, 0, 0].real
    x_prime = dp_rank_k_projection(A_prime, cfg, sampler, rng, size=num).P[:, 0, 0].real
    c, _ = np.histogram(x, bins=edges)
    c_prime, _ = np.histogram(x_prime, bins=edges)
    with np.errstate(divide="ignore"):
        ratio = np.abs(np.log(c / c_prime))
    slack = 4.0 * np.sqrt(1.0 / np.maximum(c, 1) + 1.0 / np.maximum(c_prime, 1))
    excess = np.max(ratio - slack)
    bound = epsilon + cfg.sampler_xi
    _size_check(report, num, 200_000)
    report.add("dp-ratio", excess, bound, excess <= bound, f"max |log ratio| {ratio.max():.4f}")
    report.series["dp_ratio"] = {"bin_left": edges[:-1], "bin_right": edges[1:],
                                 "count": c, "count_prime": c_prime, "log_ratio": ratio}
    return report


def reproducibility_suite(num=10, seed=7):
    """Two identical command-line runs produce byte-identical output."""
    from .cli import render

    report = ValidationReport("reproducibility")
    argv = ["sample-orbit", "--lambda", "1,0.5,0", "--y", "1,0.4,0", "--num", str(num),
            "--seed", str(seed)]
    outputs = []
    for fmt in ("json", "csv"):
        first = render(argv + ["--format", fmt])
        second = render(argv + ["--format", fmt])
        outputs.append(first == second)
    report.add("byte-identical", float(all(outputs)), 1.0, all(outputs), "json and csv")
    return report


SUITES = {
    "spectrum": spectrum_suite,
    "fiber": fiber_suite,
    "haar": haar_suite,
    "rank-one": rank_one_suite,
    "moments": moments_suite,
    "inf-ratio": inf_ratio_suite,
    "dp-sensitivity": dp_sensitivity_suite,
    "dp-limits": dp_limits_suite,
    "dp-ratio": dp_ratio_suite,
    "reproducibility": reproducibility_suite,
}


def validate(suite, num=None, seed=0, **kwargs):
    """Run a named suite and time it."""
    if suite not in SUITES:
        raise KeyError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    fn = SUITES[suite]
    start = time.perf_counter()
    report = fn(seed=seed, **kwargs) if num is None else fn(num=num, seed=seed, **kwargs)
    report.elapsed = time.perf_counter() - start
    return report
