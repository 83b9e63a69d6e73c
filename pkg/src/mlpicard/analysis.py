"""Closed-form error bounds, cost recursions and small special functions.

The bound formulas multiply factors like C^n 2^(n-1) e^M, which overflow
double precision quickly, so every bound is assembled in log space and
exponentiated once at the end.  The cost recursions are evaluated with
exact (arbitrary precision) integer arithmetic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "BoundInputs",
    "binomial",
    "bound_nmq",
    "bound_nnn",
    "constant_C",
    "cost_fe_exact",
    "cost_rn_exact",
    "iterated_gl_upper_bound",
    "log_bound_nmq",
    "log_bound_nnn",
    "log_gamma",
    "norm_log_subadditivity_check",
]


# Lanczos approximation, g = 7, 9 coefficients: relative accuracy of the
# log is around 1e-14 on (0, inf), comfortably inside the 1e-13 contract.
_LANCZOS_G = 7.0
_LANCZOS_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_TWO_PI = 0.9189385332046727


def log_gamma(x: float) -> float:
    """Natural log of the Gamma function for x > 0.

    Parameters
    ----------
    x : float
        Strictly positive argument.

    Returns
    -------
    float
        log(Gamma(x)), accurate to about 1e-13 relative error.
    """
    x = float(x)
    if not x > 0.0:
        raise ValueError(f"log_gamma requires x > 0, got {x}")
    if x < 0.5:
        # reflection keeps the Lanczos sum well conditioned near zero
        return math.log(math.pi / math.sin(math.pi * x)) - log_gamma(1.0 - x)
    a = _LANCZOS_COEFFS[0]
    for i, c in enumerate(_LANCZOS_COEFFS[1:], start=1):
        a += c / (x - 1.0 + i)
    t = x + _LANCZOS_G - 0.5
    return _HALF_LOG_TWO_PI + (x - 0.5) * math.log(t) - t + math.log(a)


def binomial(n: int, k: int) -> int:
    """Exact binomial coefficient C(n, k)."""
    if n < 0 or k < 0:
        raise ValueError(f"binomial requires n, k >= 0, got ({n}, {k})")
    return math.comb(n, k)


def count_increasing_chains(n: int, l0: int, j: int) -> int:
    """Number of integer chains l0 < l_1 < ... < l_j < n, by enumeration.

    Brute-force counterpart of ``binomial(n - l0 - 1, j)``; kept as an
    independent oracle for tests and the self-check.
    """
    if not 0 <= l0 < n:
        raise ValueError("need 0 <= l0 < n")
    candidates = range(l0 + 1, n)
    return sum(1 for _ in itertools.combinations(candidates, j))


def norm_log_subadditivity_check(x, y, p: int, ord: float = 2) -> bool:
    """True iff 1 + |x+y|^p <= (1 + |y|)^p (1 + |x|^p) for the given norm."""
    if p < 1:
        raise ValueError(f"need p >= 1, got {p}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("x and y must have the same shape")
    nx = np.linalg.norm(x, ord)
    ny = np.linalg.norm(y, ord)
    nxy = np.linalg.norm(x + y, ord)
    return bool(1.0 + nxy**p <= (1.0 + ny) ** p * (1.0 + nx**p))


def constant_C(T: float, t0: float, lip_f_l1: float) -> float:
    """Growth constant 2(sqrt(T-t0)+1) sqrt((T-t0) pi) (|L|_1 + 1) + 1."""
    if not t0 < T:
        raise ValueError(f"need t0 < T, got t0={t0}, T={T}")
    span = T - t0
    return 2.0 * (math.sqrt(span) + 1.0) * math.sqrt(span * math.pi) * (lip_f_l1 + 1.0) + 1.0


def iterated_gl_upper_bound(k: int, span: float) -> float:
    """Upper bound 2 (span*pi)^(k/2) / Gamma(k/2) for the iterated node sums."""
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    if span < 0:
        raise ValueError(f"need span >= 0, got {span}")
    if span == 0.0:
        return 0.0
    return math.exp(math.log(2.0) + 0.5 * k * math.log(span * math.pi) - log_gamma(0.5 * k))


@dataclass(frozen=True)
class BoundInputs:
    """Everything the a-priori error bound needs.

    ``sup_f0`` bounds |f(t, x, 0, 0)| over the time-space domain, ``sup_u``
    bounds the sup norm of the exact value-and-gradient pair, and
    ``deriv_ratio`` is the supremum over k >= 0 of the sup norm of
    (1, grad) applied to the k-fold heat operator image of the exact
    solution, scaled by (k!)^(3/4) -- the scaling that matches the
    default smoothness split alpha = 1/4.  Callers choosing another
    alpha must supply the ratio scaled by (k!)^(1 - alpha) instead.
    """

    T: float
    t0: float
    lip_f_l1: float
    lip_g_l1: float
    sup_f0: float
    sup_u: float
    deriv_ratio: float
    n: int
    M: int
    Q: int
    alpha: float = 0.25

    def validate(self) -> None:
        if not self.t0 < self.T:
            raise ValueError(f"need t0 < T, got t0={self.t0}, T={self.T}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"need alpha in [0, 1], got {self.alpha}")
        if self.n < 1 or self.Q < 1:
            raise ValueError("need n >= 1 and Q >= 1")
        for name in ("lip_f_l1", "lip_g_l1", "sup_f0", "sup_u", "deriv_ratio"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ValueError(f"{name} must be finite and nonnegative, got {v}")


def log_bound_nmq(inputs: BoundInputs) -> float:
    """Log of the (n, M, Q) error bound; -inf when the bound is exactly 0.

    The bound is the sum of a Monte Carlo term
    7 C^n 2^(n-1) e^M (sup_f0 + sup_u + max(sqrt(T-t0), sqrt(3)) |K|_1)
    / sqrt(M^(n-3)) and a quadrature term
    (14 (4C)^(n-1) + 1) T^(2Q+1) deriv_ratio / Q^(2 alpha Q).
    """
    inputs.validate()
    if inputs.M < 2:
        raise ValueError(f"need M >= 2, got {inputs.M}")
    n, M, Q = inputs.n, inputs.M, inputs.Q
    span = inputs.T - inputs.t0
    C = constant_C(inputs.T, inputs.t0, inputs.lip_f_l1)

    amplitude = inputs.sup_f0 + inputs.sup_u + max(math.sqrt(span), math.sqrt(3.0)) * inputs.lip_g_l1
    if amplitude > 0.0:
        log_mc = (
            math.log(7.0)
            + n * math.log(C)
            + (n - 1) * math.log(2.0)
            + M
            - 0.5 * (n - 3) * math.log(M)
            + math.log(amplitude)
        )
    else:
        log_mc = -math.inf

    if inputs.deriv_ratio > 0.0:
        log_coef = np.logaddexp(math.log(14.0) + (n - 1) * math.log(4.0 * C), 0.0)
        log_quad = (
            log_coef
            + (2 * Q + 1) * math.log(inputs.T)
            + math.log(inputs.deriv_ratio)
            - 2.0 * inputs.alpha * Q * math.log(Q)
        )
    else:
        log_quad = -math.inf

    return float(np.logaddexp(log_mc, log_quad))


def bound_nmq(inputs: BoundInputs) -> float:
    """The (n, M, Q) error bound itself.  See :func:`log_bound_nmq`."""
    return math.exp(log_bound_nmq(inputs))


def log_bound_nnn(inputs: BoundInputs) -> float:
    """Log of the diagonal bound: n = M = Q and alpha = 1/4."""
    if inputs.n < 2:
        raise ValueError(f"diagonal bound needs n >= 2, got {inputs.n}")
    diag = replace(inputs, M=inputs.n, Q=inputs.n, alpha=0.25)
    return log_bound_nmq(diag)


def bound_nnn(inputs: BoundInputs) -> float:
    """Diagonal error bound (n = M = Q, alpha = 1/4)."""
    return math.exp(log_bound_nnn(inputs))


def _validate_cost_args(n: int, M: int, Q: int) -> None:
    if n < 0:
        raise ValueError(f"need n >= 0, got {n}")
    if M < 1 or Q < 1:
        raise ValueError(f"need M >= 1 and Q >= 1, got M={M}, Q={Q}")


def cost_rn_exact(n: int, M: int, Q: int, d: int) -> int:
    """Exact count of scalar Gaussian draws made by one level-n estimate.

    Recursion: RN(0) = 0 and
    RN(n) = d M^n + sum_{l<n} Q M^(n-l) (d + RN(l) + [l>=1] RN(l-1)).
    """
    _validate_cost_args(n, M, Q)
    if d < 1:
        raise ValueError(f"need d >= 1, got {d}")
    rn = [0]
    for m in range(1, n + 1):
        total = d * M**m
        for l in range(m):
            inner = d + rn[l] + (rn[l - 1] if l >= 1 else 0)
            total += Q * M ** (m - l) * inner
        rn.append(total)
    return rn[n]


def cost_fe_exact(n: int, M: int, Q: int) -> int:
    """Exact count of f and g evaluations made by one level-n estimate.

    Recursion: FE(0) = 0 and
    FE(n) = M^n + sum_{l<n} Q M^(n-l) (1 + FE(l) + [l>=1] (1 + FE(l-1))).
    """
    _validate_cost_args(n, M, Q)
    fe = [0]
    for m in range(1, n + 1):
        total = M**m
        for l in range(m):
            inner = 1 + fe[l] + ((1 + fe[l - 1]) if l >= 1 else 0)
            total += Q * M ** (m - l) * inner
        fe.append(total)
    return fe[n]
