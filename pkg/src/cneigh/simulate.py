"""Random-process generators and the coverage/error experiment harness.

Per-replication randomness comes from streams keyed by (seed, replication,
role), so all methods inside one replication see the same design, path and
noise, and replications can run in any order or in parallel without changing
the output.
"""

from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional, Sequence

import numpy as np
from scipy.special import zeta
from scipy.stats import norm

from cneigh._rng import DESIGN, NOISE, PATH, SUBSAMPLE, derive_rng, derive_seed
from cneigh.geometry import DesignSample, SamplingMeasure, unit_cube
from cneigh.infer import IntervalEstimate, SubsampleConfig, clt_ci, subsample_pi
from cneigh.integrate import (
    IntegrandEvaluations,
    integrate_mean,
    integrate_trapezoid,
)
from cneigh.weights import control_weights_unbiased

CSV_HEADER = (
    "scenario_id,rep,method,estimate,truth,abs_error,log_ratio_vs_nn,"
    "covered,length,seconds"
)


@dataclass
class Process1DConfig:
    """Truncated sine-series process on [0,1] with eigenvalue decay nu."""

    nu: float
    K: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError("decay exponent must be positive")
        if self.K < 1:
            raise ValueError("need at least one basis function")


@dataclass
class Process2DConfig:
    """Truncated cosine-series surface on [0,1]^2 with decays gamma1, gamma2."""

    gamma1: float
    gamma2: float
    K1: int = 12
    K2: int = 12
    seed: int = 0

    def __post_init__(self):
        if min(self.gamma1, self.gamma2) <= 0.5:
            raise ValueError("decay exponents must exceed 1/2")
        if min(self.K1, self.K2) < 1:
            raise ValueError("need at least one basis function per axis")


@dataclass
class SimulatedProcess:
    """A sampled random function: score array plus a pointwise evaluator."""

    scores: np.ndarray
    evaluate: Callable[[np.ndarray], np.ndarray]

    def diagonal_scores(self, count=3):
        """First scores on the diagonal of a 2-d score array."""
        if self.scores.ndim != 2:
            raise ValueError("diagonal scores are defined for surfaces")
        k = min(count, min(self.scores.shape))
        return np.array([self.scores[j, j] for j in range(k)])


def sine_basis(t, K):
    """e_k(t) = sqrt(2) sin((k - 1/2) pi t) for k = 1..K, as columns."""
    t = np.asarray(t, dtype=float)
    k = np.arange(1, K + 1)
    return np.sqrt(2.0) * np.sin(np.outer(t, k - 0.5) * np.pi)


def eigenvalues_1d(nu, K):
    """lambda_k = ((k - 1/2) pi)^-nu for k = 1..K."""
    k = np.arange(1, K + 1)
    return ((k - 0.5) * np.pi) ** (-nu)


def gen_design(M, b, seed) -> DesignSample:
    """M i.i.d. draws on [0,1] from the density 1 - b/2 + b t (b = 0: uniform)."""
    if M < 1:
        raise ValueError("need at least one design point")
    measure = SamplingMeasure.linear(b)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    pts = measure.sample(rng, M, unit_cube(1))
    return DesignSample(unit_cube(1), pts, measure, validate=False)


def gen_design_2d(M, seed) -> DesignSample:
    """M i.i.d. uniform draws on the unit square."""
    if M < 1:
        raise ValueError("need at least one design point")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return DesignSample(unit_cube(2), rng.random((M, 2)), validate=False)


def gen_path_1d(cfg: Process1DConfig, rng=None) -> SimulatedProcess:
    """Sample path X(t) = sum_k xi_k e_k(t) with xi_k = Z_k sqrt(lambda_k(nu))."""
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    lam = eigenvalues_1d(cfg.nu, cfg.K)
    scores = rng.standard_normal(cfg.K) * np.sqrt(lam)

    def evaluate(t):
        return sine_basis(t, cfg.K) @ scores

    return SimulatedProcess(scores, evaluate)


@dataclass
class SlopeRule:
    """Regression slope sum_k c_k e_k with c_k = 4 (-1)^(k+1) k^-p.

    Orthonormality of the basis gives the exact best prediction
    <alpha, X> = sum_k c_k xi_k directly from the scores.
    """

    coef: np.ndarray

    def alpha(self, t):
        return sine_basis(t, self.coef.size) @ self.coef

    def true_prediction(self, scores):
        k = min(self.coef.size, scores.shape[0])
        return float(self.coef[:k] @ scores[:k])


def slope_alpha(p, K) -> SlopeRule:
    """Slope coefficients with decay p > 1/2 on K basis functions."""
    if p <= 0.5:
        raise ValueError("p must exceed 1/2 for a square-summable slope")
    if K < 1:
        raise ValueError("need at least one coefficient")
    k = np.arange(1, K + 1)
    return SlopeRule(4.0 * (-1.0) ** (k + 1) * k ** (-float(p)))


def gen_surface_2d(cfg: Process2DConfig, rng=None) -> SimulatedProcess:
    """Centered random surface from the truncated cosine-series representation."""
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    k1 = np.arange(1, cfg.K1 + 1)
    k2 = np.arange(1, cfg.K2 + 1)
    omega = rng.standard_normal((cfg.K1, cfg.K2))
    scores = omega / np.outer((k1 * np.pi) ** cfg.gamma1, (k2 * np.pi) ** cfg.gamma2)

    def evaluate(t):
        t = np.asarray(t, dtype=float)
        e1 = np.sqrt(2.0) * np.cos(np.outer(t[:, 0], k1) * np.pi)
        e2 = np.sqrt(2.0) * np.cos(np.outer(t[:, 1], k2) * np.pi)
        return np.einsum("nk,kl,nl->n", e1, scores, e2)

    return SimulatedProcess(scores, evaluate)


def product_cosine_basis(j1, j2):
    """psi_{j1,j2}(t) = 2 cos(j1 pi t1) cos(j2 pi t2) on the unit square."""

    def psi(t):
        t = np.asarray(t, dtype=float)
        return 2.0 * np.cos(j1 * np.pi * t[:, 0]) * np.cos(j2 * np.pi * t[:, 1])

    return psi


def explained_variance_2d(K, gamma):
    """Percentage of total variance captured by a K x K truncation.

    Total variance over all modes factorizes into (sum_k (k pi)^-2gamma)^2;
    the infinite sum is zeta(2 gamma) up to the pi power.
    """
    k = np.arange(1, K + 1)
    partial = np.sum(k ** (-2.0 * gamma))
    return 100.0 * (partial / zeta(2.0 * gamma)) ** 2


def add_noise(values, sigma_fn, seed, coords=None):
    """Add centered Gaussian noise with per-point scale sigma_fn(T_m).

    Returns the noisy values together with the per-point scales (for the
    CLT intervals). ``sigma_fn`` may be a scalar, an array, or an evaluator
    of the coordinates.
    """
    values = np.asarray(values, dtype=float)
    if callable(sigma_fn):
        if coords is None:
            raise ValueError("coordinate array required for an evaluator scale")
        scales = np.asarray(sigma_fn(coords), dtype=float)
    else:
        scales = np.broadcast_to(np.asarray(sigma_fn, dtype=float), values.shape).copy()
    if np.any(scales < 0):
        raise ValueError("noise scales must be nonnegative")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return values + scales * rng.standard_normal(values.shape), scales


def log_ratio_risk(err_competitor, err_nn):
    """log|err_nn| - log|err_competitor|; negative means the NN rule won.

    A zero error on either side has no finite log-ratio; the record is
    censored as NaN.
    """
    err_nn = abs(float(err_nn))
    err_competitor = abs(float(err_competitor))
    if err_nn == 0.0 or err_competitor == 0.0:
        return math.nan
    return math.log(err_nn) - math.log(err_competitor)


@dataclass
class ExperimentRecord:
    """One method's result within one replication."""

    scenario_id: str
    rep: int
    method: str
    estimate: float
    truth: float
    abs_error: float
    log_ratio_vs_nn: float
    covered: Optional[bool]
    length: Optional[float]
    seconds: float

    def csv_row(self):
        def num(x):
            return "" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(x)

        covered = "" if self.covered is None else str(int(self.covered))
        return (
            f"{self.scenario_id},{self.rep},{self.method},{num(self.estimate)},"
            f"{num(self.truth)},{num(self.abs_error)},{num(self.log_ratio_vs_nn)},"
            f"{covered},{num(self.length)},{num(self.seconds)}"
        )


@dataclass
class Scenario:
    """One experiment configuration of the harness."""

    scenario_id: str = "scenario"
    dim: int = 1
    M: int = 50
    nu: float = 2.0
    gamma1: float = 1.0
    gamma2: float = 1.0
    b: float = 0.0
    sigma: float = 0.0
    methods: Sequence[str] = ("nn", "mean", "trapez", "ms")
    reps: int = 500
    B: int = 1000
    level: float = 0.95
    beta: Optional[float] = None
    mstar: Optional[int] = None
    seed: int = 0
    p_slope: float = 2.0
    K: int = 50
    K1: int = 12
    K2: int = 12
    score_j: int = 1
    timing: bool = False  # measured wall times break byte-identical output

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("harness scenarios are 1- or 2-dimensional")
        if self.reps < 0:
            raise ValueError("replication count cannot be negative")
        if self.M < 4:
            raise ValueError("scenarios need at least 4 design points")
        known = {"nn", "mean", "trapez", "ms", "nn-cond", "nn-lim"}
        bad = set(self.methods) - known
        if bad:
            raise ValueError(f"unknown methods {sorted(bad)}; known: {sorted(known)}")

    def beta_value(self):
        """Scenario rule: (nu-1)/2 capped at 1 in 1-d, min(gamma)-1/2 in 2-d."""
        if self.beta is not None:
            return self.beta
        if self.dim == 1:
            return max(min((self.nu - 1.0) / 2.0, 1.0), 0.05)
        return max(min(self.gamma1, self.gamma2) - 0.5, 0.05)


def _mean_clt_interval(values, level):
    """Gaussian-limit interval for the sample mean with empirical variance."""
    m = values.size
    z = float(norm.ppf(0.5 + level / 2.0))
    center = float(np.mean(values))
    half = z * math.sqrt(float(np.var(values, ddof=1)) / m)
    return center - half, center + half


def _record(scn, rep, method, estimate, truth, nn_error, interval, seconds):
    err = abs(estimate - truth)
    if method in ("nn", "nn-cond", "nn-lim"):
        ratio = 0.0 if err > 0 else math.nan
    else:
        ratio = log_ratio_risk(err, nn_error)
    covered = interval.covers(truth) if interval is not None else None
    length = interval.length if interval is not None else None
    return ExperimentRecord(
        scn.scenario_id, rep, method, estimate, truth, err, ratio,
        covered, length, seconds,
    )


def _run_rep_1d(scn: Scenario, rep: int):
    sample = gen_design(scn.M, scn.b, derive_rng(scn.seed, rep, DESIGN))
    path = gen_path_1d(
        Process1DConfig(scn.nu, scn.K), rng=derive_rng(scn.seed, rep, PATH)
    )
    rule = slope_alpha(scn.p_slope, scn.K)
    coords = sample.points[:, 0]
    f = sample.measure.density(sample.points)
    clean = rule.alpha(coords) * path.evaluate(coords) / f
    truth = rule.true_prediction(path.scores)
    beta = scn.beta_value()
    delta = 1.0 - scn.level

    records = []
    if scn.sigma > 0:
        # noise contaminates the covariate, and the integrand inherits it
        z, _ = add_noise(path.evaluate(coords), scn.sigma,
                         derive_rng(scn.seed, rep, NOISE))
        a_vals = rule.alpha(coords)
        ev = IntegrandEvaluations(
            sample, a_vals * z / f, noisy=True,
            noise_scale=np.abs(a_vals) * scn.sigma / f,
        )
        w = None
        nn_error = math.nan
        for method in scn.methods:
            t0 = time.perf_counter()
            if method in ("nn", "nn-cond", "nn-lim"):
                if w is None:
                    w = control_weights_unbiased(sample)
                mode = "limit-1d" if method == "nn-lim" else "conditional"
                iv = clt_ci(ev, w, delta, mode=mode)
                est = iv.point
                nn_error = abs(est - truth)
            elif method == "mean":
                est, iv = integrate_mean(ev), None
            elif method == "trapez":
                est, iv = integrate_trapezoid(ev), None
            else:
                warnings.warn(
                    f"method {method!r} not available in noisy scenarios; skipped"
                )
                continue
            records.append(
                _record(scn, rep, method, est, truth, nn_error, iv,
                        time.perf_counter() - t0 if scn.timing else 0.0)
            )
        return records

    ev = IntegrandEvaluations(sample, clean)
    cfg = SubsampleConfig(
        beta=beta, B=scn.B, mstar=scn.mstar,
        seed=derive_seed(scn.seed, rep, SUBSAMPLE),
    )
    nn_error = math.nan
    for method in scn.methods:
        t0 = time.perf_counter()
        if method == "nn":
            iv = subsample_pi(ev, "unbiased-loo", cfg, delta)
            est = iv.point
            nn_error = abs(est - truth)
        elif method == "mean":
            est = integrate_mean(ev)
            lo, hi = _mean_clt_interval(ev.values, scn.level)
            iv = IntervalEstimate(est, lo, hi, scn.level, "mean-clt")
        elif method == "trapez":
            iv = subsample_pi(ev, "trapezoid", cfg, delta, rate_exponent=beta)
            est = iv.point
        elif method == "ms":
            iv = subsample_pi(ev, "mean", cfg, delta, rate_exponent=0.5)
            est = iv.point
        else:
            raise ValueError(f"unknown method {method!r}")
        records.append(
            _record(scn, rep, method, est, truth, nn_error, iv,
                    time.perf_counter() - t0 if scn.timing else 0.0)
        )
    return records


def _run_rep_2d(scn: Scenario, rep: int):
    sample = gen_design_2d(scn.M, derive_rng(scn.seed, rep, DESIGN))
    surf = gen_surface_2d(
        Process2DConfig(scn.gamma1, scn.gamma2, scn.K1, scn.K2),
        rng=derive_rng(scn.seed, rep, PATH),
    )
    j = scn.score_j
    psi = product_cosine_basis(j, j)
    phi = surf.evaluate(sample.points) * psi(sample.points)
    truth = float(surf.scores[j - 1, j - 1])
    ev = IntegrandEvaluations(sample, phi)
    delta = 1.0 - scn.level
    cfg = SubsampleConfig(
        beta=scn.beta_value(), B=scn.B, mstar=scn.mstar,
        seed=derive_seed(scn.seed, rep, SUBSAMPLE),
    )

    records = []
    nn_error = math.nan
    for method in scn.methods:
        t0 = time.perf_counter()
        if method == "nn":
            iv = subsample_pi(ev, "nn-variant", cfg, delta)
            est = iv.point
            nn_error = abs(est - truth)
        elif method == "ms":
            iv = subsample_pi(ev, "mean", cfg, delta, rate_exponent=0.5)
            est = iv.point
        elif method == "mean":
            est = integrate_mean(ev)
            lo, hi = _mean_clt_interval(ev.values, scn.level)
            iv = IntervalEstimate(est, lo, hi, scn.level, "mean-clt")
        else:
            # e.g. the trapezoid has no multivariate counterpart
            warnings.warn(f"method {method!r} not available in 2-d scenarios; skipped")
            continue
        records.append(
            _record(scn, rep, method, est, truth, nn_error, iv,
                    time.perf_counter() - t0 if scn.timing else 0.0)
        )
    return records


def _run_rep(scn: Scenario, rep: int):
    if scn.dim == 1:
        return _run_rep_1d(scn, rep)
    return _run_rep_2d(scn, rep)


def run_experiment(scenario: Scenario, jobs=1) -> Iterator[ExperimentRecord]:
    """Run all replications, yielding records in replication order.

    With jobs > 1 the replications are distributed over processes; the
    role-keyed streams make the result independent of the schedule.
    """
    if jobs <= 1:
        for rep in range(scenario.reps):
            yield from _run_rep(scenario, rep)
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for batch in pool.map(
            _run_rep, [scenario] * scenario.reps, range(scenario.reps), chunksize=8
        ):
            yield from batch


def write_csv(records: Iterable[ExperimentRecord], path):
    """Write records under the fixed header; returns the number of rows."""
    count = 0
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for rec in records:
            fh.write(rec.csv_row() + "\n")
            count += 1
    return count


def summarize(records: Sequence[ExperimentRecord]):
    """Per-method coverage, mean interval length and median log-ratio."""
    out = {}
    methods = sorted({r.method for r in records})
    for method in methods:
        rows = [r for r in records if r.method == method]
        cov = [r.covered for r in rows if r.covered is not None]
        lengths = [r.length for r in rows if r.length is not None]
        ratios = [r.log_ratio_vs_nn for r in rows if not math.isnan(r.log_ratio_vs_nn)]
        out[method] = {
            "reps": len(rows),
            "coverage": float(np.mean(cov)) if cov else math.nan,
            "mean_length": float(np.mean(lengths)) if lengths else math.nan,
            "median_log_ratio": float(np.median(ratios)) if ratios else math.nan,
            "mean_abs_error": float(np.mean([r.abs_error for r in rows])),
        }
    return out
