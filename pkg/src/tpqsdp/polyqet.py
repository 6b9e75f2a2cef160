"""Chebyshev polynomial machinery for the QET backend: bounded polynomial
approximations of e^{-beta(x+1)} and sgn(x), the parity-even composite
e^{-beta|x|}, matrix-polynomial application via Clenshaw recurrence, and the
exponential-kernel TPQ state with its success probability.

Coefficients come from a DCT of function samples at Chebyshev nodes,
truncated to the smallest degree that meets the requested grid tolerance.
Every construction is verified by a grid-sup check at build time; a failed
check raises instead of returning a silently-degraded polynomial.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy.fft import dct
from scipy.special import erf, erfcinv

from .operators import SparseOperator, spectral_norm_estimate

GRID_POINTS = 10_000
TRIM_TOL = 1e-15
_MAX_FIT_SAMPLES = 1 << 21


class PolynomialConstructionError(RuntimeError):
    """A polynomial failed its build-time grid verification."""


def _cheb_grid(num: int = GRID_POINTS) -> np.ndarray:
    """Chebyshev-distributed check grid on [-1, 1]; resolves degree-1e3
    oscillations at the default size."""
    k = np.arange(num)
    return np.cos(np.pi * (k + 0.5) / num)


def _cheb_coeffs(f, num_samples: int) -> np.ndarray:
    """Interpolation coefficients at the first-kind Chebyshev nodes, via a
    type-II DCT."""
    k = np.arange(num_samples)
    x = np.cos(np.pi * (k + 0.5) / num_samples)
    vals = f(x)
    c = dct(vals, type=2) / num_samples
    c[0] *= 0.5
    return c


def _trim_trailing(coef: np.ndarray, tol: float = TRIM_TOL) -> np.ndarray:
    scale = np.max(np.abs(coef)) if coef.size else 1.0
    keep = coef.size
    while keep > 1 and abs(coef[keep - 1]) < tol * max(1.0, scale):
        keep -= 1
    return np.asarray(coef[:keep], dtype=float)


@dataclass(frozen=True)
class ChebyshevPoly:
    """Real polynomial in the Chebyshev-T basis on [-1, 1] with sup norm <= 1.

    construction_degree is the degree of the defining construction (for a
    composition, the product of the factor degrees); it is the query-count
    quantity, while `degree` reflects the numerically trimmed coefficients.
    """

    coef: np.ndarray
    achieved_error: float = field(default=np.nan, compare=False)
    max_abs: float = field(default=np.nan, compare=False)
    construction_degree: int | None = field(default=None, compare=False)

    @property
    def degree(self) -> int:
        return len(self.coef) - 1

    def __call__(self, x):
        return cheb.chebval(x, self.coef)

    def truncated(self, degree: int) -> "ChebyshevPoly":
        return ChebyshevPoly(np.array(self.coef[: degree + 1]),
                             achieved_error=np.nan, max_abs=np.nan)


def _fit_to_tolerance(f, tol: float, degree_hint: int) -> np.ndarray:
    """Coefficients whose grid-sup interpolation error is <= tol.

    Sample counts grow geometrically until the coefficient tail is resolved,
    then the series is truncated to the smallest degree whose tail sum fits
    inside the tolerance.
    """
    num = 64
    while num < 4 * max(degree_hint, 8):
        num *= 2
    coef = None
    while num <= _MAX_FIT_SAMPLES:
        c = _cheb_coeffs(f, num)
        scale = max(1.0, np.max(np.abs(c)))
        tail = np.max(np.abs(c[-max(4, num // 16):]))
        if tail < TRIM_TOL * scale:
            coef = c
            break
        num *= 2
    if coef is None:
        raise PolynomialConstructionError("coefficient tail failed to resolve")
    coef = _trim_trailing(coef)
    # smallest truncation with tail-sum within half the budget
    tails = np.cumsum(np.abs(coef[::-1]))[::-1]  # tails[d] = sum_{k>=d} |c_k|
    ok = np.nonzero(tails <= 0.5 * tol)[0]
    keep = int(ok[0]) if ok.size else len(coef)
    return coef[:max(1, keep)]


def _grid_sup_error(coef: np.ndarray, target, grid: np.ndarray) -> float:
    return float(np.max(np.abs(cheb.chebval(grid, coef) - target(grid))))


def _rescale_into_unit_ball(coef: np.ndarray, grid: np.ndarray) -> tuple[np.ndarray, float]:
    max_abs = float(np.max(np.abs(cheb.chebval(grid, coef))))
    if max_abs > 1.0:
        coef = coef / max_abs
        max_abs = 1.0
    return coef, max_abs


def exp_poly(beta: float, mu: float) -> ChebyshevPoly:
    """Bounded polynomial with sup_{[-1,1]} |P(x) - e^{-beta(x+1)}| <= mu.

    The degree follows the sqrt(beta) law of the truncated Chebyshev series
    of the exponential.
    """
    if beta < 0 or not np.isfinite(beta):
        raise ValueError("beta must be finite and >= 0")
    if not 0 < mu <= 0.5:
        raise ValueError("mu must lie in (0, 1/2]")
    if beta == 0.0:
        return ChebyshevPoly(np.array([1.0]), achieved_error=0.0, max_abs=1.0)

    target = lambda x: np.exp(-beta * (x + 1.0))
    hint = int(np.sqrt(2.0 * beta * np.log(4.0 / mu))) + 16
    # fit at mu/2 so the unit-ball rescale below keeps the total within mu
    coef = _fit_to_tolerance(target, 0.5 * mu, hint)
    grid = _cheb_grid()
    coef, max_abs = _rescale_into_unit_ball(coef, grid)
    err = _grid_sup_error(coef, target, grid)
    if err > mu:
        raise PolynomialConstructionError(
            f"exp_poly grid error {err:.3e} exceeds mu={mu:.3e}")
    return ChebyshevPoly(coef, achieved_error=err, max_abs=max_abs)


def sign_poly(zeta: float, Delta: float) -> ChebyshevPoly:
    """Odd polynomial, |P| <= 1 on [-1,1], |sgn(x) - P(x)| <= zeta for
    |x| >= Delta/2.

    Realized as a Chebyshev fit of erf(k x) with k set so the smoothed sign
    meets the (Delta, zeta) window, then projected to exact odd parity.
    """
    if not 0 < zeta < 1:
        raise ValueError("zeta must lie in (0, 1)")
    if not 0 < Delta < 1:
        raise ValueError("Delta must lie in (0, 1)")
    k = 2.0 * float(erfcinv(zeta / 2.0)) / Delta
    target = lambda x: erf(k * x)
    hint = int(1.2 * k) + 32
    coef = _fit_to_tolerance(target, 0.25 * zeta, hint)
    coef[0::2] = 0.0  # exact odd parity
    coef = _trim_trailing(coef)
    grid = _cheb_grid()
    coef, max_abs = _rescale_into_unit_ball(coef, grid)
    outer = grid[np.abs(grid) >= Delta / 2.0]
    err = float(np.max(np.abs(cheb.chebval(outer, coef) - np.sign(outer))))
    if err > zeta:
        raise PolynomialConstructionError(
            f"sign_poly grid error {err:.3e} exceeds zeta={zeta:.3e}")
    return ChebyshevPoly(coef, achieved_error=err, max_abs=max_abs)


def composite_exp_poly(beta: float, mu: float, Delta: float) -> ChebyshevPoly:
    """Parity-even Q(x) = P_{beta/2}(2 P_sgn(x) x - 1) with
    sup_{[Delta/2, 1]} |Q(x) - e^{-beta |x|}| <= 2 mu.

    zeta for the inner sign polynomial is ln(1/(1-mu))/beta, which makes the
    two composition error terms equal.
    """
    if beta < 0 or not np.isfinite(beta):
        raise ValueError("beta must be finite and >= 0")
    if not 0 < mu <= 0.5:
        raise ValueError("mu must lie in (0, 1/2]")
    if beta == 0.0:
        return ChebyshevPoly(np.array([1.0]), achieved_error=0.0, max_abs=1.0)
    zeta = np.log(1.0 / (1.0 - mu)) / beta
    if zeta >= 1.0:
        zeta = 0.5
    p_sgn = sign_poly(zeta, Delta)
    p_exp = exp_poly(beta / 2.0, mu)

    def q(x):
        u = 2.0 * cheb.chebval(x, p_sgn.coef) * x - 1.0
        return cheb.chebval(u, p_exp.coef)

    full_degree = p_exp.degree * (p_sgn.degree + 1)
    num = 128
    while num < 2 * (full_degree + 8):
        num *= 2
    if num > _MAX_FIT_SAMPLES:
        raise PolynomialConstructionError("composite degree too large to sample")
    coef = _trim_trailing(_cheb_coeffs(q, num))
    coef[1::2] = 0.0  # exact even parity
    coef = _trim_trailing(coef)

    grid = _cheb_grid()
    coef, max_abs = _rescale_into_unit_ball(coef, grid)
    inner = grid[np.abs(grid) >= Delta / 2.0]
    target_vals = np.exp(-beta * np.abs(inner))
    err = float(np.max(np.abs(cheb.chebval(inner, coef) - target_vals)))
    if err > 2.0 * mu:
        raise PolynomialConstructionError(
            f"composite grid error {err:.3e} exceeds 2 mu = {2 * mu:.3e}")

    # shed trailing coefficients while the [Delta/2, 1] budget allows
    budget = 2.0 * mu
    tails = np.cumsum(np.abs(coef[::-1]))[::-1]
    ok = np.nonzero(err + tails <= 0.98 * budget)[0]
    if ok.size and ok[0] < len(coef):
        keep = max(1, int(ok[0]))
        cand = coef[:keep]
        cand_err = float(np.max(np.abs(cheb.chebval(inner, cand) - target_vals)))
        if cand_err <= budget:
            coef, err = cand, cand_err
            max_abs = float(np.max(np.abs(cheb.chebval(grid, coef))))
    return ChebyshevPoly(coef, achieved_error=err, max_abs=min(max_abs, 1.0),
                         construction_degree=full_degree)


def eigenvalue_step_poly(a: float, b: float, delta_prime: float):
    """Approximate step used for eigenvalue discrimination: a callable S with
    |S(y)| <= delta_prime on [0, a], S(y) >= 1 - delta_prime on [b, 1] and
    |S| <= 1 in between. Built as (1 + P_sgn(y - (a+b)/2))/2."""
    if not 0 < a < b <= 1:
        raise ValueError("need 0 < a < b <= 1")
    if not 0 < delta_prime < 0.5:
        raise ValueError("delta_prime must lie in (0, 1/2)")
    p = sign_poly(min(2.0 * delta_prime, 0.99), b - a)
    t = 0.5 * (a + b)

    def step(y):
        return 0.5 * (1.0 + cheb.chebval(np.asarray(y, dtype=float) - t, p.coef))

    step.sign_degree = p.degree
    step.threshold = t
    return step


def apply_poly(P: ChebyshevPoly, H: SparseOperator, v: np.ndarray,
               check_norm: bool = True) -> np.ndarray:
    """Clenshaw evaluation of P(H) v with degree-many sparse matvecs.

    Requires ||H|| <= 1 (power-iteration check with 1% slack) and unit v.
    v may be a single vector (N,) or a batch (N, k).
    """
    v = np.asarray(v, dtype=complex)
    if v.shape[0] != H.dim:
        raise ValueError("dimension mismatch")
    if check_norm:
        norm = spectral_norm_estimate(H)
        if norm > 1.01:
            raise ValueError(f"operator norm estimate {norm:.4f} exceeds 1")
        norms = np.linalg.norm(v, axis=0)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError("input states must be unit norm")
    c = P.coef
    if len(c) == 1:
        return c[0] * v
    b1 = np.zeros_like(v)
    b2 = np.zeros_like(v)
    for k in range(len(c) - 1, 0, -1):
        b1, b2 = c[k] * v + 2.0 * H.matvec(b1) - b2, b1
    return c[0] * v + H.matvec(b1) - b2


def qet_mu(n: int, xi: float) -> float:
    """QET polynomial tolerance (xi/8) * (2^{-n} e^{-1/2} / 2) that keeps the
    expectation-value perturbation below xi/2 whenever the success
    probability clears its lower bound."""
    return (xi / 8.0) * (2.0 ** (-n) * np.exp(-0.5) / 2.0)


def qet_tpq_state(H: SparseOperator, beta: float, Xi: float, xi: float,
                  v0: np.ndarray, poly: ChebyshevPoly | None = None
                  ) -> tuple[np.ndarray, float]:
    """Normalized P(K) v0 with K = H - (1 + Xi) I, plus the ancilla
    success probability p_exp = ||P(K) v0||^2 / 4.

    The polynomial approximates e^{-(beta/2)(x+1)} to qet_mu(n, xi), so
    P(K) v0 tracks e^{-(beta/2)(H - Xi)} v0.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    if beta == 0.0:
        return np.array(v0, dtype=complex), 0.25
    mu = qet_mu(H.n, xi)
    if poly is None:
        poly = exp_poly(beta / 2.0, mu)
    K = H.shifted(-(1.0 + Xi))
    w = apply_poly(poly, K, v0)
    norm_sq = float(np.real(np.vdot(w, w)))
    p_exp = 0.25 * norm_sq
    if p_exp < 1e-300:
        raise FloatingPointError("QET success probability underflow")
    return w / np.sqrt(norm_sq), p_exp
