"""Normal CDFs, exact KS distances and the explicit Berry-Esseen bound."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .errors import DeltaTooSmall, EmptySample, NonpositiveVariance
from .transfer import CoefficientSequence, TransferredSequence, transfer

HALF = 0.5
SQRT_PI = math.sqrt(math.pi)
LEMMA8_CONSTANT = 1.35


@dataclass(frozen=True)
class SampleBatch:
    """Monte Carlo draws.  Real batches are kept sorted, complex ones in draw order."""

    values: np.ndarray
    seed: int = 0
    count: int = field(init=False)

    def __post_init__(self):
        arr = np.asarray(self.values)
        if not np.iscomplexobj(arr):
            arr = np.sort(arr.astype(float))
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "count", int(arr.size))


@dataclass(frozen=True)
class BoundParams:
    delta: float = 1.0
    C_user: float = 1.0
    lam: complex = 0.0

    def __post_init__(self):
        if self.delta < 1:
            raise DeltaTooSmall(f"delta = {self.delta} < 1")
        if self.C_user <= 0:
            raise ValueError("C_user must be positive")
        if abs(self.lam) >= 1:
            raise ValueError("|lambda| must be < 1")


def normal_cdf(x, variance: float = HALF):
    """P(N(0, variance) <= x) via erfc, accurate in both tails."""
    if not variance > 0:
        raise NonpositiveVariance(f"variance = {variance}")
    out = 0.5 * erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0 * variance))
    return float(out) if out.ndim == 0 else out


def ks_distance(samples, cdf=normal_cdf) -> float:
    """Exact one-sample KS statistic sup_x |F_n(x) - F(x)|."""
    x = samples.values if isinstance(samples, SampleBatch) else np.sort(np.asarray(samples, float))
    n = x.size
    if n == 0:
        raise EmptySample("no samples")
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def cramer_wold_discrepancy(z_samples, alpha_count: int = 64, workers: int = 1) -> dict:
    """max over equispaced alpha in T of KS(Re(alpha Z), N(0, 1/2))."""
    z = z_samples.values if isinstance(z_samples, SampleBatch) else np.asarray(z_samples)
    z = np.asarray(z, dtype=complex)
    if z.size == 0:
        raise EmptySample("no samples")
    if alpha_count < 4:
        raise ValueError("alpha_count must be at least 4")
    alphas = np.exp(2j * np.pi * np.arange(alpha_count) / alpha_count)

    def one(alpha):
        return ks_distance(np.real(alpha * z))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            ks = list(pool.map(one, alphas))
    else:
        ks = [one(a) for a in alphas]
    k = int(np.argmax(ks))
    return {"sup_discrepancy": ks[k], "worst_alpha": complex(alphas[k])}


def _uniform_step(grid: np.ndarray) -> float:
    steps = np.diff(grid)
    h = float(steps.mean())
    if h <= 0 or np.max(np.abs(steps - h)) > 1e-9 * max(1.0, abs(h)):
        raise ValueError("x grid must be equispaced and increasing")
    return h


def lemma8_bound_check(p_grid, q_grid, x_grid) -> dict:
    """Grid search of |Phi(px+q) - Phi(x)| / (|p-1| + |q|), Phi the N(0,1/2) CDF.

    For fixed (p, q) the difference has at most two critical points, the roots
    of (1-p^2) x^2 - 2pq x + (log p - q^2) = 0.  It is monotone between them,
    so its maximum over the x grid sits at a grid point next to a root or at
    an end of the grid; only those points are evaluated.

    Also returns ``envelope_constant``: the maximum over the x grid of
    max(|x|, 1) exp(-m(x)^2) / sqrt(pi), m(x) = max(0, |x|/2 - 1), which is
    the mean-value bound that the 1.35 constant comes from.
    """
    p = np.asarray(p_grid, dtype=float)
    q = np.asarray(q_grid, dtype=float)
    x = np.asarray(x_grid, dtype=float)
    h = _uniform_step(x)
    P, Q = np.meshgrid(p, q, indexing="ij")
    P, Q = P.ravel(), Q.ravel()
    keep = (P != 1.0) | (Q != 0.0)
    P, Q = P[keep], Q[keep]

    A = 1.0 - P**2
    B = -2.0 * P * Q
    C = np.log(P) - Q**2
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = B**2 - 4 * A * C
        sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
        quad = np.abs(A) > 1e-14
        r1 = np.where(quad, (-B + sq) / (2 * A), -C / B)
        r2 = np.where(quad, (-B - sq) / (2 * A), np.nan)

    last = x.size - 1
    cands = [np.zeros(P.size, dtype=int), np.full(P.size, last)]
    for r in (r1, r2):
        pos = np.where(np.isfinite(r), (r - x[0]) / h, 0.0)
        lo = np.clip(np.floor(pos), 0, last).astype(int)
        cands += [lo, np.clip(lo + 1, 0, last)]
    idx = np.stack(cands, axis=1)
    xc = x[idx]
    diff = np.abs(normal_cdf(P[:, None] * xc + Q[:, None]) - normal_cdf(xc))
    best = diff.max(axis=1)
    ratio = best / (np.abs(P - 1.0) + np.abs(Q))
    k = int(np.argmax(ratio))
    xk = float(xc[k, int(np.argmax(diff[k]))])

    m = np.maximum(0.0, np.abs(x) / 2 - 1)
    env = np.maximum(np.abs(x), 1.0) * np.exp(-m**2) / SQRT_PI
    j = int(np.argmax(env))
    return {
        "max_ratio": float(ratio[k]),
        "argmax": (float(P[k]), float(Q[k]), xk),
        "envelope_constant": float(env[j]),
        "envelope_argmax": float(x[j]),
    }


def lemma8_ratio_bruteforce(p_grid, q_grid, x_grid) -> float:
    """Direct max over the full (p, q, x) product; for small grids only."""
    x = np.asarray(x_grid, dtype=float)
    best = 0.0
    Fx = normal_cdf(x)
    for p in np.asarray(p_grid, float):
        for q in np.asarray(q_grid, float):
            d = abs(p - 1) + abs(q)
            if d == 0:
                continue
            best = max(best, float(np.max(np.abs(normal_cdf(p * x + q) - Fx))) / d)
    return best


def bound_exponents(delta: float) -> tuple[float, float]:
    """Exponents of sum|a|^4 and of 1/sum|a|^2 in the martingale term."""
    return (1 + delta) / (6 + 4 * delta), (1 + delta) / (3 + 2 * delta)


def theorem1_terms(a, params: BoundParams, N: int | None = None) -> tuple[float, float]:
    """The two summands of the Berry-Esseen bound, without adding them."""
    if params.delta < 1:
        raise DeltaTooSmall(f"delta = {params.delta} < 1")
    a = a if isinstance(a, CoefficientSequence) else CoefficientSequence(a)
    N = len(a) if N is None else N
    a = a.head(N)
    e4, e2 = bound_exponents(params.delta)
    s2 = a.sum2
    first = params.C_user * a.sum4**e4 * s2 ** (-e2)
    lam = complex(params.lam)
    r = abs(lam)
    if r == 0:
        return first, 0.0
    powers = lam ** np.arange(N - 1, -1, -1)
    bN = abs(np.sum(powers * a.values))
    second = 2.7 * r / (1 - r) * bN / math.sqrt(s2)
    return first, second


def theorem1_rhs(a, params: BoundParams, N: int | None = None) -> float:
    first, second = theorem1_terms(a, params, N)
    return first + second


def haeusler_shift(tr: TransferredSequence) -> dict:
    """p_N = sigma_N / (sqrt(1-|lam|^2) rho_N) and the remainder bound q_N."""
    r2 = abs(tr.lam) ** 2
    p_N = tr.sigma_N / (math.sqrt(1 - r2) * tr.rho_N)
    q_N = math.sqrt(r2 / (1 - r2)) * abs(tr.b_N) / tr.rho_N
    return {"p_N": p_N, "q_N": q_N}


def second_bound_term(a, lam: complex, N: int | None = None) -> float:
    """2.7 |lam|/(1-|lam|) |b_N| / ||a||, with b_N taken from transfer()."""
    a = a if isinstance(a, CoefficientSequence) else CoefficientSequence(a)
    a = a.head(len(a) if N is None else N)
    tr = transfer(a, lam)
    r = abs(complex(lam))
    return 2.7 * r / (1 - r) * abs(tr.b_N) / a.l2
