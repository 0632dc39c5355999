"""Monte Carlo verification of every probabilistic claim about the models.

Determinism contract: every check is a pure function of its inputs including
the master seed.  Trial i uses the substream seed mix_seed(master_seed, i),
trials never share state, and reductions run in trial-index order, so reports
are bit-identical for any worker count.
"""
from __future__ import annotations

import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Callable, Sequence

import numpy as np

from .bounds import (
    BoundReport,
    KappaConvention,
    _first_feasible,
    deviation_bound,
    invert_bound_for_n,
)
from .errors import DimensionError, NotAchievableError
from .linalg import (
    SpdMatrix,
    as_matrix,
    canonical_dumps,
    check_seed,
    mix_seed,
    sample_standard_gaussian_matrix,
    spd_sqrt,
    spectral_norm,
)
from .model import (
    ShapeSpec,
    WishartModel,
    build_shape,
    expected_wishart,
    sample_decoupled,
    sample_wishart,
    shape_frobenius_norm,
    shape_spectral_norm,
)

__all__ = [
    "TrialConfig",
    "DeviationStats",
    "ConcentrationCheck",
    "ExpectationReport",
    "DominanceReport",
    "WishartDecouplingReport",
    "ChaosDecouplingReport",
    "LinearFormReport",
    "ScalingSweep",
    "ComplexityTable",
    "estimate_mean_deviation",
    "check_expectation",
    "check_bound_dominance",
    "check_wishart_decoupling",
    "check_chaos_decoupling",
    "check_linear_form_std",
    "conditional_std",
    "check_concentration",
    "count_lipschitz_violations",
    "sweep_scaling",
    "empirical_sample_complexity",
    "identity_theta_rule",
    "emit_report",
]

# Statistical acceptance margins: 3 standard errors for inequality checks,
# 4 for equality-of-means checks (false-failure probability < 1e-3 per check).
INEQUALITY_MARGIN = 3.0
EQUALITY_MARGIN = 4.0

SEARCH_CAP = 2**20


def _map_ordered(fn: Callable, items: Sequence, workers: int | None = 1) -> list:
    """Map preserving input order; workers > 1 uses a process pool.

    Results are independent of the worker count because every item is
    self-contained and ``ProcessPoolExecutor.map`` returns in input order.
    """
    items = list(items)
    if workers is None or workers <= 1 or len(items) < 2:
        return [fn(it) for it in items]
    chunk = max(1, len(items) // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=chunk))


def _trial_seeds(master_seed: int, trials: int) -> list[int]:
    master_seed = check_seed(master_seed)
    return [mix_seed(master_seed, i) for i in range(trials)]


@dataclass(frozen=True, eq=False)
class TrialConfig:
    """A model, a trial count, and the master seed driving all substreams."""

    model: WishartModel
    trials: int
    master_seed: int

    def __post_init__(self):
        if self.trials < 2:
            raise ValueError(f"need at least 2 trials for a standard error, got {self.trials}")
        check_seed(self.master_seed)


@dataclass(frozen=True)
class DeviationStats:
    """Summary of one scalar Monte Carlo sample: mean, stderr, max, count."""

    mean: float
    stderr: float
    max: float
    trials: int

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> "DeviationStats":
        samples = np.asarray(samples, dtype=np.float64)
        n = samples.size
        return cls(
            mean=float(samples.mean()),
            stderr=float(samples.std(ddof=1) / math.sqrt(n)),
            max=float(samples.max()),
            trials=n,
        )

    def to_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "max": self.max, "trials": self.trials}


# ---------------------------------------------------------------------------
# Mean deviation and the expectation formula
# ---------------------------------------------------------------------------

def _deviation_trial(payload, seed: int) -> float:
    model, root, w0 = payload
    return spectral_norm(sample_wishart(model, seed, _root=root) - w0)


def estimate_mean_deviation(cfg: TrialConfig, workers: int | None = 1) -> DeviationStats:
    """Monte Carlo statistics of ||W - E(W)|| over per-trial substreams."""
    model = cfg.model
    payload = (model, model.theta_sqrt(), expected_wishart(model))
    samples = _map_ordered(
        partial(_deviation_trial, payload), _trial_seeds(cfg.master_seed, cfg.trials), workers
    )
    return DeviationStats.from_samples(np.asarray(samples))


def _wishart_trial(payload, seed: int) -> np.ndarray:
    model, root = payload
    return sample_wishart(model, seed, _root=root)


@dataclass(frozen=True, eq=False)
class ExpectationReport:
    """Entrywise comparison of the Monte Carlo mean against (Tr B / n) theta."""

    mean_matrix: np.ndarray
    expected_matrix: np.ndarray
    stderr_matrix: np.ndarray
    trials: int
    margin: float
    holds: bool

    def to_dict(self) -> dict:
        dev = np.abs(self.mean_matrix - self.expected_matrix)
        return {
            "trials": self.trials,
            "margin": self.margin,
            "max_abs_deviation": float(dev.max()),
            "max_stderr": float(self.stderr_matrix.max()),
            "mean_matrix": [float(v) for v in self.mean_matrix.ravel()],
            "expected_matrix": [float(v) for v in self.expected_matrix.ravel()],
            "stderr_matrix": [float(v) for v in self.stderr_matrix.ravel()],
            "holds": self.holds,
        }


def check_expectation(cfg: TrialConfig, workers: int | None = 1) -> ExpectationReport:
    """Verify E(W) = (Tr B / n) theta entrywise within 4 standard errors."""
    model = cfg.model
    payload = (model, model.theta_sqrt())
    draws = _map_ordered(
        partial(_wishart_trial, payload), _trial_seeds(cfg.master_seed, cfg.trials), workers
    )
    stack = np.stack(draws)
    mean = stack.mean(axis=0)
    stderr = stack.std(axis=0, ddof=1) / math.sqrt(cfg.trials)
    expected = expected_wishart(model)
    holds = bool(np.all(np.abs(mean - expected) <= EQUALITY_MARGIN * stderr))
    return ExpectationReport(mean, expected, stderr, cfg.trials, EQUALITY_MARGIN, holds)


# ---------------------------------------------------------------------------
# Bound dominance
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DominanceReport:
    """Empirical mean deviation against the closed-form bound."""

    empirical: DeviationStats
    bound: BoundReport
    ratio: float
    holds: bool

    def to_dict(self) -> dict:
        return {
            "empirical": self.empirical.to_dict(),
            "bound": self.bound.to_dict(),
            "ratio": self.ratio,
            "holds": self.holds,
        }


def check_bound_dominance(
    cfg: TrialConfig,
    convention: KappaConvention = KappaConvention.FROBENIUS,
    workers: int | None = 1,
) -> DominanceReport:
    """Check empirical mean + 3 stderr <= bound_value."""
    stats = estimate_mean_deviation(cfg, workers)
    bound = deviation_bound(cfg.model, convention)
    ratio = stats.mean / bound.bound_value if bound.bound_value > 0 else 0.0
    holds = stats.mean + INEQUALITY_MARGIN * stats.stderr <= bound.bound_value
    return DominanceReport(stats, bound, ratio, holds)


# ---------------------------------------------------------------------------
# Decoupling checks
# ---------------------------------------------------------------------------

def _decoupling_trial(payload, seed: int) -> tuple[float, float]:
    model, root, w0 = payload
    lhs = spectral_norm(sample_wishart(model, seed, _root=root) - w0)
    rhs = spectral_norm(sample_decoupled(model, seed, _root=root))
    return lhs, rhs


@dataclass(frozen=True)
class WishartDecouplingReport:
    """Stats of ||W - E(W)|| against twice the decoupled ||W'||."""

    lhs: DeviationStats
    rhs: DeviationStats
    holds: bool

    def to_dict(self) -> dict:
        return {"lhs": self.lhs.to_dict(), "rhs": self.rhs.to_dict(), "holds": self.holds}


def check_wishart_decoupling(cfg: TrialConfig, workers: int | None = 1) -> WishartDecouplingReport:
    """Check mean||W - E(W)|| <= 2 mean||W'|| + 3 (se_lhs + 2 se_rhs)."""
    model = cfg.model
    payload = (model, model.theta_sqrt(), expected_wishart(model))
    pairs = _map_ordered(
        partial(_decoupling_trial, payload), _trial_seeds(cfg.master_seed, cfg.trials), workers
    )
    arr = np.asarray(pairs)
    lhs = DeviationStats.from_samples(arr[:, 0])
    rhs = DeviationStats.from_samples(arr[:, 1])
    holds = lhs.mean <= 2.0 * rhs.mean + INEQUALITY_MARGIN * (lhs.stderr + 2.0 * rhs.stderr)
    return WishartDecouplingReport(lhs, rhs, holds)


def _chaos_trial(payload, seed: int) -> tuple[float, float]:
    stack, root, traces, p = payload
    z = root @ sample_standard_gaussian_matrix(p, 1, mix_seed(seed, 0))[:, 0]
    z_prime = root @ sample_standard_gaussian_matrix(p, 1, mix_seed(seed, 1))[:, 0]
    bz = stack @ z
    lhs = float(np.max(np.abs(bz @ z - traces)))
    rhs = float(np.max(np.abs(bz @ z_prime)))
    return lhs, rhs


@dataclass(frozen=True)
class ChaosDecouplingReport:
    """Centered coupled chaos supremum against twice the decoupled one."""

    lhs: DeviationStats
    rhs: DeviationStats
    holds: bool

    def to_dict(self) -> dict:
        return {"lhs": self.lhs.to_dict(), "rhs": self.rhs.to_dict(), "holds": self.holds}


def check_chaos_decoupling(
    matrices: Sequence,
    theta: SpdMatrix,
    trials: int,
    seed: int,
    workers: int | None = 1,
) -> ChaosDecouplingReport:
    """Check E sup|(BZ, Z) - E(BZ, Z)| <= 2 E sup|(BZ, Z')| over a matrix list.

    The supremum over the finite list is computed exactly per draw, and
    E(BZ, Z) = Tr(B theta) in closed form.
    """
    mats = [as_matrix(m, f"matrices[{i}]") for i, m in enumerate(matrices)]
    if not mats or len(mats) > 16:
        raise ValueError(f"matrix list must have 1..16 members, got {len(mats)}")
    p = theta.p
    for i, m in enumerate(mats):
        if m.shape != (p, p):
            raise DimensionError(f"matrices[{i}] is {m.shape}, expected {(p, p)}")
    if trials < 2:
        raise ValueError(f"need at least 2 trials, got {trials}")
    stack = np.stack(mats)
    traces = np.einsum("kij,ji->k", stack, theta.array)
    payload = (stack, spd_sqrt(theta).array, traces, p)
    pairs = _map_ordered(
        partial(_chaos_trial, payload), _trial_seeds(seed, trials), workers
    )
    arr = np.asarray(pairs)
    lhs = DeviationStats.from_samples(arr[:, 0])
    rhs = DeviationStats.from_samples(arr[:, 1])
    holds = lhs.mean <= 2.0 * rhs.mean + INEQUALITY_MARGIN * (lhs.stderr + 2.0 * rhs.stderr)
    return ChaosDecouplingReport(lhs, rhs, holds)


# ---------------------------------------------------------------------------
# Linear forms and the conditional standard deviation
# ---------------------------------------------------------------------------

def _linear_form_trial(payload, seed: int) -> float:
    root, a, p = payload
    z = root @ sample_standard_gaussian_matrix(p, 1, seed)[:, 0]
    return float(a @ z)


@dataclass(frozen=True)
class LinearFormReport:
    """Sample standard deviation of (a, Z) against ||theta^{1/2} a||."""

    sample_std: float
    std_stderr: float
    target: float
    trials: int
    norm_inequality_ok: bool
    holds: bool

    def to_dict(self) -> dict:
        return {
            "sample_std": self.sample_std,
            "std_stderr": self.std_stderr,
            "target": self.target,
            "trials": self.trials,
            "norm_inequality_ok": self.norm_inequality_ok,
            "holds": self.holds,
        }


def check_linear_form_std(
    theta: SpdMatrix,
    a,
    trials: int,
    seed: int,
    workers: int | None = 1,
) -> LinearFormReport:
    """Check the standard deviation of (a, Z), Z ~ N(0, theta), is ||theta^{1/2} a||.

    Holds when the sample standard deviation sits within 5 of its own standard
    errors of the target; also records the bound ||theta^{1/2} a|| <=
    ||theta^{1/2}|| * ||a||.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    if a.size != theta.p:
        raise DimensionError(f"vector has length {a.size} but theta is {theta.p} x {theta.p}")
    if trials < 2:
        raise ValueError(f"need at least 2 trials, got {trials}")
    root = spd_sqrt(theta).array
    target = float(np.linalg.norm(root @ a))
    norm_ok = target <= spectral_norm(root) * float(np.linalg.norm(a)) + 1e-12
    samples = np.asarray(
        _map_ordered(partial(_linear_form_trial, (root, a, theta.p)),
                     _trial_seeds(seed, trials), workers)
    )
    sample_std = float(samples.std(ddof=1))
    # Gaussian-sample stderr of the standard deviation itself.
    std_stderr = sample_std / math.sqrt(2.0 * (trials - 1))
    holds = abs(sample_std - target) <= 5.0 * std_stderr
    return LinearFormReport(sample_std, std_stderr, target, trials, norm_ok, holds)


def conditional_std(b, x, direction) -> float:
    """Scaled norm (sqrt(p)/n) * ||B X^T x|| of the conditioned bilinear form.

    ``b`` is the n x n shape matrix, ``x`` the p x n Gaussian draw, and
    ``direction`` a unit p-vector.
    """
    b = as_matrix(b, "shape matrix")
    x = as_matrix(x, "sample matrix")
    d = np.asarray(direction, dtype=np.float64).ravel()
    p, n = x.shape
    if b.shape != (n, n):
        raise DimensionError(f"shape matrix is {b.shape} but the sample matrix has n = {n}")
    if d.size != p:
        raise DimensionError(f"direction has length {d.size} but the sample matrix has p = {p}")
    if abs(np.linalg.norm(d) - 1.0) > 1e-9:
        raise ValueError(f"direction must be a unit vector, got norm {np.linalg.norm(d)!r}")
    return float(math.sqrt(p) / n * np.linalg.norm(b @ (x.T @ d)))


# ---------------------------------------------------------------------------
# Concentration of the conditional standard deviation
# ---------------------------------------------------------------------------

def _sigma_trial(payload, seed: int) -> float:
    b, d, p, n = payload
    x = sample_standard_gaussian_matrix(p, n, seed)
    return float(math.sqrt(p) / n * np.linalg.norm(b @ (x.T @ d)))


@dataclass(frozen=True)
class ConcentrationCheck:
    """Tail comparison for the conditional standard deviation under theta = I.

    theoretical_tails[i] = 0.5 * exp(-t_i^2 / (2 * lipschitz^2)) is
    recomputable from the stored fields; tails with theoretical mass below
    10 / trials are recorded but not asserted.
    """

    direction: tuple[float, ...]
    t_grid: tuple[float, ...]
    lipschitz: float
    mean_bound: float
    empirical_tails: tuple[float, ...]
    theoretical_tails: tuple[float, ...]
    tail_stderr: tuple[float, ...]
    asserted: tuple[bool, ...]
    u_floor: float
    trials: int
    mean_value: float
    mean_stderr: float
    mean_ok: bool
    holds: bool

    def to_dict(self) -> dict:
        return {
            "direction": list(self.direction),
            "t_grid": list(self.t_grid),
            "lipschitz": self.lipschitz,
            "mean_bound": self.mean_bound,
            "empirical_tails": list(self.empirical_tails),
            "theoretical_tails": list(self.theoretical_tails),
            "tail_stderr": list(self.tail_stderr),
            "asserted": list(self.asserted),
            "u_floor": self.u_floor,
            "trials": self.trials,
            "mean_value": self.mean_value,
            "mean_stderr": self.mean_stderr,
            "mean_ok": self.mean_ok,
            "holds": self.holds,
        }


def check_concentration(
    model: WishartModel,
    direction,
    t_grid: Sequence[float],
    trials: int,
    seed: int,
    workers: int | None = 1,
) -> ConcentrationCheck:
    """Verify the sub-Gaussian tail of the conditional standard deviation.

    Requires theta = I (whiten first otherwise: replace theta by I and absorb
    theta^{1/2} into the deviation being studied).  Holds when the empirical
    tail stays below the theoretical one plus 3 binomial standard errors at
    every grid point with theoretical mass >= 10 / trials.
    """
    if not model.theta.is_identity():
        raise ValueError(
            "concentration check requires theta = I; whiten the model first "
            "(conjugate by theta^{-1/2}) and rerun"
        )
    d = np.asarray(direction, dtype=np.float64).ravel()
    if d.size != model.p:
        raise DimensionError(f"direction has length {d.size} but p = {model.p}")
    if abs(np.linalg.norm(d) - 1.0) > 1e-9:
        raise ValueError(f"direction must be a unit vector, got norm {np.linalg.norm(d)!r}")
    t_grid = tuple(float(t) for t in t_grid)
    if any(t < 0 for t in t_grid):
        raise ValueError(f"t grid must be nonnegative, got {t_grid}")
    if trials < 2:
        raise ValueError(f"need at least 2 trials, got {trials}")

    p, n = model.p, model.n
    b = build_shape(model.shape, n)
    lipschitz = math.sqrt(p) * shape_spectral_norm(model.shape, n) / n
    mean_bound = math.sqrt(p) * shape_frobenius_norm(model.shape, n) / n

    samples = np.asarray(
        _map_ordered(partial(_sigma_trial, (b, d, p, n)), _trial_seeds(seed, trials), workers)
    )
    empirical, theoretical, stderrs, asserted = [], [], [], []
    floor = 10.0 / trials
    holds = True
    for t in t_grid:
        emp = float(np.mean(samples >= mean_bound + t))
        if t == 0.0:
            theo = 0.5
        elif lipschitz == 0.0:
            theo = 0.0
        else:
            theo = 0.5 * math.exp(-t * t / (2.0 * lipschitz * lipschitz))
        se = math.sqrt(emp * (1.0 - emp) / trials)
        check_here = theo >= floor
        if check_here and emp > theo + INEQUALITY_MARGIN * se:
            holds = False
        empirical.append(emp)
        theoretical.append(theo)
        stderrs.append(se)
        asserted.append(check_here)

    mean_value = float(samples.mean())
    mean_stderr = float(samples.std(ddof=1) / math.sqrt(trials))
    mean_ok = mean_value <= mean_bound + INEQUALITY_MARGIN * mean_stderr
    return ConcentrationCheck(
        direction=tuple(float(v) for v in d),
        t_grid=t_grid,
        lipschitz=lipschitz,
        mean_bound=mean_bound,
        empirical_tails=tuple(empirical),
        theoretical_tails=tuple(theoretical),
        tail_stderr=tuple(stderrs),
        asserted=tuple(asserted),
        u_floor=3.0 * math.sqrt(p),
        trials=trials,
        mean_value=mean_value,
        mean_stderr=mean_stderr,
        mean_ok=mean_ok,
        holds=holds and mean_ok,
    )


def _lipschitz_trial(payload, seed: int) -> int:
    b, d, p, n, lipschitz = payload
    x1 = sample_standard_gaussian_matrix(p, n, mix_seed(seed, 0))
    x2 = sample_standard_gaussian_matrix(p, n, mix_seed(seed, 1))
    lhs = abs(
        float(np.linalg.norm(b @ (x1.T @ d))) - float(np.linalg.norm(b @ (x2.T @ d)))
    ) * math.sqrt(p) / n
    rhs = lipschitz * float(np.linalg.norm(x1 - x2))
    return int(lhs > rhs)


def count_lipschitz_violations(
    model: WishartModel,
    direction,
    pairs: int,
    seed: int,
    workers: int | None = 1,
) -> int:
    """Count pairs violating |s(X1) - s(X2)| <= (sqrt(p) ||B|| / n) ||X1 - X2||_F."""
    d = np.asarray(direction, dtype=np.float64).ravel()
    if d.size != model.p:
        raise DimensionError(f"direction has length {d.size} but p = {model.p}")
    b = build_shape(model.shape, model.n)
    lipschitz = math.sqrt(model.p) * shape_spectral_norm(model.shape, model.n) / model.n
    payload = (b, d, model.p, model.n, lipschitz)
    flags = _map_ordered(partial(_lipschitz_trial, payload), _trial_seeds(seed, pairs), workers)
    return int(sum(flags))


# ---------------------------------------------------------------------------
# Scaling sweeps and empirical sample complexity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    p: int
    n: int
    stats: DeviationStats
    bound_value: float
    ratio: float

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "n": self.n,
            "mean": self.stats.mean,
            "stderr": self.stats.stderr,
            "max": self.stats.max,
            "trials": self.stats.trials,
            "bound": self.bound_value,
            "ratio": self.ratio,
        }


@dataclass(frozen=True)
class ScalingSweep:
    """Mean deviation across an n grid plus the log-log slope."""

    rows: tuple[SweepRow, ...]
    slope: float | None
    degenerate: bool

    def to_dict(self) -> dict:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "slope": self.slope,
            "degenerate": self.degenerate,
        }


def sweep_scaling(
    p: int,
    n_grid: Sequence[int],
    shape_family: Callable[[int], ShapeSpec],
    theta: SpdMatrix,
    trials: int,
    seed: int,
    workers: int | None = 1,
) -> ScalingSweep:
    """Estimate mean deviation over an increasing n grid and fit the log-log slope.

    Each grid point runs under the substream seed mix_seed(seed, n), so the
    table is reproducible row by row.
    """
    n_grid = [int(n) for n in n_grid]
    if len(n_grid) < 3 or any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ValueError(f"n grid must be increasing with at least 3 points, got {n_grid}")
    rows = []
    for n in n_grid:
        model = WishartModel(p, n, theta, shape_family(n))
        stats = estimate_mean_deviation(
            TrialConfig(model, trials, mix_seed(seed, n)), workers
        )
        bound = deviation_bound(model).bound_value
        ratio = stats.mean / bound if bound > 0 else 0.0
        rows.append(SweepRow(p, n, stats, bound, ratio))
    means = np.array([r.stats.mean for r in rows])
    if np.any(means <= 0.0):
        return ScalingSweep(tuple(rows), None, True)
    slope = float(np.polyfit(np.log(n_grid), np.log(means), 1)[0])
    return ScalingSweep(tuple(rows), slope, False)


@dataclass(frozen=True)
class ComplexityRow:
    p: int
    empirical_n: int
    theoretical_n: int
    stats: DeviationStats

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "empirical_n": self.empirical_n,
            "theoretical_n": self.theoretical_n,
            "mean": self.stats.mean,
            "stderr": self.stats.stderr,
        }


@dataclass(frozen=True)
class ComplexityTable:
    rows: tuple[ComplexityRow, ...]
    tolerance: float

    def to_dict(self) -> dict:
        return {"tolerance": self.tolerance, "rows": [r.to_dict() for r in self.rows]}


def identity_theta_rule(p: int) -> SpdMatrix:
    return SpdMatrix.identity(p)


def empirical_sample_complexity(
    p_grid: Sequence[int],
    tolerance: float,
    shape_family: Callable[[int], ShapeSpec],
    theta_rule: Callable[[int], SpdMatrix],
    trials: int,
    seed: int,
    workers: int | None = 1,
    cap: int = SEARCH_CAP,
) -> ComplexityTable:
    """Doubling search for the smallest n with empirical mean + 2 stderr <= tolerance.

    Reports the accepted n per p next to the theoretical requirement from
    inverting the closed-form bound; the theoretical value dominates whenever
    the bound itself does.
    """
    if tolerance <= 0:
        raise ValueError(f"tolerance must be positive, got {tolerance!r}")
    rows = []
    for p in p_grid:
        theta = theta_rule(p)
        n = _first_feasible(shape_family, 1, cap)
        if n is None:
            raise ValueError("shape family has no feasible n below the cap")
        accepted = None
        while accepted is None:
            model = WishartModel(p, n, theta, shape_family(n))
            stats = estimate_mean_deviation(
                TrialConfig(model, trials, mix_seed(mix_seed(seed, p), n)), workers
            )
            if stats.mean + 2.0 * stats.stderr <= tolerance:
                accepted = (n, stats)
                break
            nxt = _first_feasible(shape_family, 2 * n, cap)
            if nxt is None or nxt > cap:
                raise NotAchievableError(
                    f"empirical deviation stays above tolerance {tolerance!r} "
                    f"up to the cap {cap} at p = {p}",
                    at_cap=stats.mean,
                )
            n = nxt
        theoretical = invert_bound_for_n(
            p, spectral_norm(theta.array), tolerance, shape_family, cap
        )
        rows.append(ComplexityRow(p, accepted[0], theoretical, accepted[1]))
    return ComplexityTable(tuple(rows), float(tolerance))


# ---------------------------------------------------------------------------
# Report envelope
# ---------------------------------------------------------------------------

def emit_report(check_name: str, config: dict, master_seed: int, payload: dict) -> dict:
    """Wrap a check result in the standard report envelope.

    The config digest is the truncated SHA-256 of the canonical JSON text of
    ``config``, so identical configurations always produce identical reports.
    """
    digest = hashlib.sha256(canonical_dumps(config).encode("utf-8")).hexdigest()[:16]
    report = {"check_name": check_name, "config_digest": digest, "master_seed": master_seed}
    report.update(payload)
    return report
