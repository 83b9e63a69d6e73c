"""Recursive multilevel Picard estimator for value and spatial gradient.

``mlp_estimate`` approximates the (d+1)-vector (u, grad u)(s, x) of a
semilinear heat equation

    du/dt + (1/2) Laplacian(u) + f(t, x, u, grad u) = 0,   u(T, .) = g,

by a telescoping Picard recursion: the estimate at level n combines a
control-variate Monte Carlo term for the terminal condition,

    (g(x), 0) + mean_i (g(x + dW_T) - g(x)) (1, dW_T / (T - s)),

with Gauss-Legendre-in-time sums over level differences of the
nonlinearity, each difference evaluated at a Brownian-shifted point and
multiplied by the gradient weight (1, dW_t / (t - s)).  Every Monte
Carlo sample owns a distinct multi-index key, so the whole tree of
draws is reproducible and independent of scheduling.

All user functions are evaluated on batches: ``g(x)`` maps (L, d) to
(L,), ``f(t, x, w, z)`` maps a scalar time plus (L, d), (L,), (L, d) to
(L,), and ``exact(t, x)`` maps a scalar time plus (L, d) to (L, d+1).

Cost accounting: counters tally every scalar Gaussian draw and every
f/g evaluation at sampled points.  The one terminal value g(x) at the
call's own center is shared across all samples of that call and carries
no marginal cost, which makes the realized counts match the cost
recursions of :mod:`mlpicard.analysis` exactly.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .analysis import cost_rn_exact
from .errors import BudgetError, EvaluationError
from .quadrature import GaussLegendreRule, build_rule
from .randomness import _extend_state, _standard_normals, derive_key, state_for_key

__all__ = [
    "CostCounters",
    "Estimate",
    "ErrorReport",
    "FkResidual",
    "Problem",
    "discrete_fk_residual",
    "mc_l2_error",
    "mlp_estimate",
]

DEFAULT_MAX_LEVEL = 6
DEFAULT_MAX_SAMPLES = 10**8
DEFAULT_MAX_GAUSSIANS = 10**8


@dataclass(frozen=True)
class Problem:
    """A semilinear heat problem on [0, horizon] x R^dim.

    ``lip_f`` holds the d+1 Lipschitz constants of the nonlinearity in
    (w, z), ``lip_g`` the d coordinate Lipschitz constants of the
    terminal condition (on the declared evaluation box when g is only
    locally Lipschitz).  ``sup_f0``, ``sup_u`` and ``deriv_ratio`` are
    optional analytic inputs for the error bounds; problems that cannot
    supply them leave them None and the bounds report "n/a".
    """

    horizon: float
    dim: int
    terminal: Callable[[np.ndarray], np.ndarray]
    nonlinearity: Callable[[float, np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    lip_f: np.ndarray
    lip_g: np.ndarray
    exact: Optional[Callable[[float, np.ndarray], np.ndarray]] = None
    sup_f0: Optional[float] = None
    sup_u: Optional[float] = None
    deriv_ratio: Optional[float] = None
    box_radius: float = 1.0
    name: str = ""

    def __post_init__(self):
        if not (math.isfinite(self.horizon) and self.horizon > 0.0):
            raise ValueError(f"horizon must be positive and finite, got {self.horizon}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        lip_f = np.asarray(self.lip_f, dtype=float)
        lip_g = np.asarray(self.lip_g, dtype=float)
        if lip_f.shape != (self.dim + 1,):
            raise ValueError(f"lip_f must have shape ({self.dim + 1},), got {lip_f.shape}")
        if lip_g.shape != (self.dim,):
            raise ValueError(f"lip_g must have shape ({self.dim},), got {lip_g.shape}")
        if np.any(lip_f < 0.0) or np.any(lip_g < 0.0):
            raise ValueError("Lipschitz constants must be nonnegative")
        object.__setattr__(self, "lip_f", lip_f)
        object.__setattr__(self, "lip_g", lip_g)


@dataclass(frozen=True)
class Estimate:
    """A (d+1)-vector: value estimate first, gradient estimate after."""

    components: np.ndarray

    @property
    def value(self) -> float:
        return float(self.components[0])

    @property
    def gradient(self) -> np.ndarray:
        return self.components[1:]


@dataclass
class CostCounters:
    """Realized counts of scalar Gaussian draws and f/g evaluations.

    Batched entry points accumulate totals over all lanes; every lane
    performs identical work, so totals are divisible by the lane count.
    """

    gaussians_drawn: int = 0
    f_evals: int = 0
    g_evals: int = 0

    @property
    def function_evals(self) -> int:
        return self.f_evals + self.g_evals

    def add(self, other: "CostCounters") -> None:
        self.gaussians_drawn += other.gaussians_drawn
        self.f_evals += other.f_evals
        self.g_evals += other.g_evals


@dataclass(frozen=True)
class ErrorReport:
    """Monte Carlo L2 errors of an estimator against the exact solution."""

    component_errors: np.ndarray
    component_ses: np.ndarray
    value_error: float
    value_se: float
    grad_error: float
    grad_se: float
    replications: int
    estimates: np.ndarray = field(repr=False, default=None)


@dataclass(frozen=True)
class FkResidual:
    """Difference of the two sides of the expectation recursion, with radii."""

    residual: np.ndarray
    radius: np.ndarray
    replications: int

    @property
    def within_radius(self) -> bool:
        return bool(np.all(np.abs(self.residual) <= self.radius))


def _check_budget(dim: int, n: int, M: int, Q: int, max_level: int, max_gaussians: int) -> None:
    if n < 0:
        raise ValueError(f"need level n >= 0, got {n}")
    if M < 1 or Q < 1:
        raise ValueError(f"need M >= 1 and Q >= 1, got M={M}, Q={Q}")
    if n > max_level:
        raise BudgetError(f"level n={n} exceeds the configured maximum {max_level}")
    if M**n > DEFAULT_MAX_SAMPLES:
        raise BudgetError(f"M^n = {M**n} exceeds the sample budget {DEFAULT_MAX_SAMPLES}")
    predicted = cost_rn_exact(n, M, Q, dim)
    if predicted > max_gaussians:
        raise BudgetError(
            f"predicted {predicted} scalar normal draws per estimate exceed the budget {max_gaussians}"
        )


def _validate_point(problem: Problem, s: float, x: np.ndarray) -> np.ndarray:
    if not 0.0 <= s < problem.horizon:
        raise ValueError(f"need 0 <= s < horizon={problem.horizon}, got s={s}")
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.dim,):
        raise ValueError(f"x must have shape ({problem.dim},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    return x


def _mlp_batch(
    problem: Problem,
    n: int,
    M: int,
    Q: int,
    rule: GaussLegendreRule,
    h0: np.ndarray,
    h1: np.ndarray,
    s: float,
    x: np.ndarray,
    counters: CostCounters,
) -> np.ndarray:
    """Level-n estimates for a batch of lanes.

    ``h0``/``h1`` are the per-lane key states and ``x`` the per-lane
    points, shape (B, d).  Returns (B, d+1).  Monte Carlo sample axes
    are folded into the lane axis for recursive calls, so the work per
    lane -- and hence every per-lane result -- is independent of how
    lanes are batched.
    """
    B, d = x.shape
    if n == 0:
        return np.zeros((B, d + 1))

    T = problem.horizon
    span = T - s
    out = np.zeros((B, d + 1))

    # center terminal value, shared by all samples of this call
    gx = np.asarray(problem.terminal(x), dtype=float).reshape(B)
    out[:, 0] = gx

    m = M**n
    labels = np.arange(1, m + 1, dtype=np.int64)[:, None]
    th0, th1 = _extend_state(h0, h1, 0)
    th0, th1 = _extend_state(th0, th1, -labels)  # (m, B): keys (key, 0, -i)
    z = _standard_normals(th0, th1, d).reshape(m, B, d)
    counters.gaussians_drawn += m * B * d
    dw = z * math.sqrt(span)
    gy = np.asarray(problem.terminal((x[None, :, :] + dw).reshape(m * B, d)), dtype=float).reshape(m, B)
    counters.g_evals += m * B
    diff = gy - gx[None, :]
    out[:, 0] += diff.sum(axis=0) / m
    out[:, 1:] += (diff[:, :, None] * dw).sum(axis=0) / (m * span)

    nodes = s + rule.nodes * span
    weights = rule.weights * span
    sqrt_dts = np.sqrt(np.diff(nodes, prepend=s))

    for level in range(n):
        m = M ** (n - level)
        labels = np.arange(1, m + 1, dtype=np.int64)[:, None]
        ph0, ph1 = _extend_state(h0, h1, level)
        ph0, ph1 = _extend_state(ph0, ph1, labels)  # (m, B): path keys (key, level, i)
        z = _standard_normals(ph0, ph1, Q * d).reshape(m, B, Q, d)
        counters.gaussians_drawn += m * B * Q * d
        dw_nodes = np.cumsum(z * sqrt_dts[None, None, :, None], axis=2)
        if level >= 1:
            nh0, nh1 = _extend_state(h0, h1, -level)
            nh0, nh1 = _extend_state(nh0, nh1, labels)  # (m, B): prefix (key, -level, i)
        for k in range(Q):
            t_k = float(nodes[k])
            dwk = dw_nodes[:, :, k, :]
            yk = (x[None, :, :] + dwk).reshape(m * B, d)

            ah0, ah1 = _extend_state(ph0, ph1, k + 1)  # keys (key, level, i, rank)
            inner = _mlp_batch(problem, level, M, Q, rule, ah0.reshape(-1), ah1.reshape(-1), t_k, yk, counters)
            fv = np.asarray(problem.nonlinearity(t_k, yk, inner[:, 0], inner[:, 1:]), dtype=float).reshape(m * B)
            counters.f_evals += m * B
            if level >= 1:
                bh0, bh1 = _extend_state(nh0, nh1, k + 1)  # keys (key, -level, i, rank)
                inner_lo = _mlp_batch(
                    problem, level - 1, M, Q, rule, bh0.reshape(-1), bh1.reshape(-1), t_k, yk, counters
                )
                fv = fv - np.asarray(
                    problem.nonlinearity(t_k, yk, inner_lo[:, 0], inner_lo[:, 1:]), dtype=float
                ).reshape(m * B)
                counters.f_evals += m * B

            fmat = fv.reshape(m, B)
            w_over_m = float(weights[k]) / m
            out[:, 0] += w_over_m * fmat.sum(axis=0)
            out[:, 1:] += (w_over_m / (t_k - s)) * (fmat[:, :, None] * dwk).sum(axis=0)
    return out


def mlp_estimate(
    problem: Problem,
    n: int,
    M: int,
    Q: int,
    key: Sequence[int] = (),
    seed: int = 0,
    s: float = 0.0,
    x=None,
    counters: Optional[CostCounters] = None,
    *,
    max_level: int = DEFAULT_MAX_LEVEL,
    max_gaussians: int = DEFAULT_MAX_GAUSSIANS,
) -> Estimate:
    """One realization of the level-n value-and-gradient estimate at (s, x).

    Pure function of (problem, n, M, Q, key, seed, s, x): repeated calls
    agree bitwise.  The predicted Gaussian count is checked against the
    budget before any work happens.

    Parameters
    ----------
    problem : Problem
    n, M, Q : int
        Picard level, sample base, and quadrature order.
    key : sequence of int
        Root multi-index of the realization.
    seed : int
        Global seed.
    s, x : float, array
        Space-time evaluation point with 0 <= s < horizon.
    counters : CostCounters, optional
        Accumulates realized costs; a fresh instance is used if omitted.

    Returns
    -------
    Estimate
    """
    x = _validate_point(problem, s, x)
    _check_budget(problem.dim, n, M, Q, max_level, max_gaussians)
    if counters is None:
        counters = CostCounters()
    h0, h1 = state_for_key(seed, derive_key((), tuple(key)))
    rule = build_rule(Q)
    components = _mlp_batch(problem, n, M, Q, rule, h0, h1, float(s), x[None, :], counters)[0]
    if not np.all(np.isfinite(components)):
        raise EvaluationError("estimator produced non-finite components")
    return Estimate(components=components)


def _replication_batch(
    problem: Problem,
    n: int,
    M: int,
    Q: int,
    rule: GaussLegendreRule,
    seed: int,
    key: Sequence[int],
    rep_lo: int,
    rep_hi: int,
    s: float,
    x: np.ndarray,
    counters: CostCounters,
) -> np.ndarray:
    """Estimates for replications rep_lo..rep_hi-1, keys ``key + (r,)``."""
    h0, h1 = state_for_key(seed, derive_key((), tuple(key)))
    reps = np.arange(rep_lo, rep_hi, dtype=np.int64)
    rh0, rh1 = _extend_state(h0, h1, reps)
    xs = np.repeat(x[None, :], rep_hi - rep_lo, axis=0)
    return _mlp_batch(problem, n, M, Q, rule, rh0, rh1, s, xs, counters)


def _run_replications(
    problem, n, M, Q, rule, seed, key, replications, s, x, counters, threads
) -> np.ndarray:
    """Concatenated per-replication estimates; identical for any thread count."""
    if threads <= 1:
        return _replication_batch(problem, n, M, Q, rule, seed, key, 0, replications, s, x, counters)
    bounds = np.linspace(0, replications, threads + 1).astype(int)
    chunk_counters = [CostCounters() for _ in range(threads)]

    def work(idx: int) -> np.ndarray:
        lo, hi = bounds[idx], bounds[idx + 1]
        if lo == hi:
            return np.zeros((0, problem.dim + 1))
        return _replication_batch(problem, n, M, Q, rule, seed, key, lo, hi, s, x, chunk_counters[idx])

    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(work, range(threads)))
    for c in chunk_counters:
        counters.add(c)
    return np.concatenate(parts, axis=0)


def _jackknife_se(stat_loo: np.ndarray) -> np.ndarray:
    """Jackknife standard error from leave-one-out statistics (R along axis 0)."""
    R = stat_loo.shape[0]
    centered = stat_loo - stat_loo.mean(axis=0)
    return np.sqrt((R - 1) / R * np.sum(centered**2, axis=0))


def mc_l2_error(
    problem: Problem,
    n: int,
    M: int,
    Q: int,
    s: float,
    x,
    replications: int,
    seed: int = 0,
    key: Sequence[int] = (),
    threads: int = 1,
    counters: Optional[CostCounters] = None,
    *,
    max_level: int = DEFAULT_MAX_LEVEL,
    max_gaussians: int = DEFAULT_MAX_GAUSSIANS,
) -> ErrorReport:
    """Empirical L2 error of the level-n estimator against ``problem.exact``.

    Runs ``replications`` independent estimates under keys ``key + (r,)``
    and reports, per component, the root mean square deviation from the
    exact solution together with a jackknife standard error; the
    gradient summary is the sup over gradient components.  Results are
    bitwise independent of ``threads``.
    """
    if problem.exact is None:
        raise ValueError("mc_l2_error requires a problem with an exact solution")
    if replications < 2:
        raise ValueError(f"need at least 2 replications, got {replications}")
    if threads < 1:
        raise ValueError(f"need threads >= 1, got {threads}")
    x = _validate_point(problem, s, x)
    _check_budget(problem.dim, n, M, Q, max_level, max_gaussians)
    if counters is None:
        counters = CostCounters()
    rule = build_rule(Q)
    estimates = _run_replications(problem, n, M, Q, rule, seed, key, replications, s, x, counters, threads)
    if not np.all(np.isfinite(estimates)):
        raise EvaluationError("estimator produced non-finite components")

    exact = np.asarray(problem.exact(float(s), x[None, :]), dtype=float).reshape(problem.dim + 1)
    sq = (estimates - exact[None, :]) ** 2  # (R, d+1)
    R = replications
    totals = sq.sum(axis=0)
    comp_err = np.sqrt(totals / R)
    loo = np.sqrt(np.maximum(totals[None, :] - sq, 0.0) / (R - 1))  # (R, d+1)
    comp_se = _jackknife_se(loo)
    grad_err = float(np.max(comp_err[1:]))
    grad_se = float(_jackknife_se(np.max(loo[:, 1:], axis=1)))
    return ErrorReport(
        component_errors=comp_err,
        component_ses=comp_se,
        value_error=float(comp_err[0]),
        value_se=float(comp_se[0]),
        grad_error=grad_err,
        grad_se=grad_se,
        replications=R,
        estimates=estimates,
    )


def discrete_fk_residual(
    problem: Problem,
    n: int,
    M: int,
    Q: int,
    s: float,
    x,
    replications: int,
    seed: int = 0,
    key: Sequence[int] = (),
) -> FkResidual:
    """Monte Carlo check of the expectation recursion satisfied by the scheme.

    The level-n estimator's mean equals the mean of the terminal weight
    term plus the quadrature sum of the nonlinearity applied to an
    independent level-(n-1) estimator along one shared Brownian path.
    Both sides are estimated with ``replications`` fresh-key samples;
    the returned radius is four combined standard errors per component,
    so ``within_radius`` is a statistical acceptance of unbiasedness.

    Restricted to small instances (d <= 3, n <= 2, M <= 3, Q <= 3).
    """
    if not 1 <= n <= 2:
        raise ValueError(f"residual check supports 1 <= n <= 2, got {n}")
    if M > 3 or Q > 3 or problem.dim > 3:
        raise ValueError(f"residual check guard: need M, Q <= 3 and d <= 3, got M={M}, Q={Q}, d={problem.dim}")
    if replications < 2:
        raise ValueError(f"need at least 2 replications, got {replications}")
    x = _validate_point(problem, s, x)
    d = problem.dim
    T = problem.horizon
    span = T - s
    R = replications
    rule = build_rule(Q)
    counters = CostCounters()
    base_key = derive_key((), tuple(key))

    lhs = _replication_batch(problem, n, M, Q, rule, seed, derive_key(base_key, (0,)), 0, R, float(s), x, counters)

    h0, h1 = state_for_key(seed, derive_key(base_key, (1,)))
    reps = np.arange(R, dtype=np.int64)
    rh0, rh1 = _extend_state(h0, h1, reps)
    nodes = s + rule.nodes * span
    times = np.append(nodes, T)
    z = _standard_normals(rh0, rh1, (Q + 1) * d).reshape(R, Q + 1, d)
    dw = np.cumsum(z * np.sqrt(np.diff(times, prepend=s))[None, :, None], axis=1)

    rhs = np.zeros((R, d + 1))
    dw_T = dw[:, Q, :]
    g_t = np.asarray(problem.terminal(x[None, :] + dw_T), dtype=float).reshape(R)
    rhs[:, 0] = g_t
    rhs[:, 1:] = g_t[:, None] * dw_T / span

    ih0, ih1 = state_for_key(seed, derive_key(base_key, (2,)))
    ih0, ih1 = _extend_state(ih0, ih1, reps)
    for k in range(Q):
        t_k = float(nodes[k])
        w_k = float(rule.weights[k]) * span
        y = x[None, :] + dw[:, k, :]
        kh0, kh1 = _extend_state(ih0, ih1, k + 1)
        inner = _mlp_batch(problem, n - 1, M, Q, rule, kh0, kh1, t_k, y, counters)
        fv = np.asarray(problem.nonlinearity(t_k, y, inner[:, 0], inner[:, 1:]), dtype=float).reshape(R)
        rhs[:, 0] += w_k * fv
        rhs[:, 1:] += (w_k / (t_k - s)) * fv[:, None] * dw[:, k, :]

    if not (np.all(np.isfinite(lhs)) and np.all(np.isfinite(rhs))):
        raise EvaluationError("residual estimation produced non-finite values")
    residual = lhs.mean(axis=0) - rhs.mean(axis=0)
    se = np.sqrt(lhs.var(axis=0, ddof=1) / R + rhs.var(axis=0, ddof=1) / R)
    return FkResidual(residual=residual, radius=4.0 * se, replications=R)
