"""Circle quadrature and conditional expectations onto sigma(eta).

The sigma-algebra generated by an inner function eta with eta(0) = 0 is
handled only through its orthonormal basis {eta^k}: conditioning on it is
the projection h -> sum_k <h, eta^k> eta^k, truncated to |k| <= K.

Integrals against normalised Lebesgue measure are replaced by the
equispaced rule on M nodes, which is exact for trigonometric polynomials of
degree < M and spectrally accurate for the rational functions used here.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .blaschke import BlaschkeProduct, as_unit, orbit_row, schwarz_pick_data
from .errors import GridMismatch, NyquistViolation

DEFAULT_M = 2**14
DEFAULT_K = 8


@dataclass(frozen=True)
class QuadratureGrid:
    M: int = DEFAULT_M

    def __post_init__(self):
        if self.M < 2**10 or self.M & (self.M - 1):
            raise ValueError("M must be a power of two and at least 2**10")

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.exp(2j * np.pi * np.arange(self.M) / self.M)

    def mean(self, values) -> complex:
        return complex(np.mean(self._check(values)))

    def _check(self, values) -> np.ndarray:
        arr = np.asarray(values)
        if arr.shape != (self.M,):
            raise GridMismatch(f"expected {self.M} grid values, got shape {arr.shape}")
        return arr

    def norm(self, values) -> float:
        arr = self._check(values)
        return float(np.sqrt(np.mean(np.abs(arr) ** 2)))


def inner_product(g, h, grid: QuadratureGrid) -> complex:
    """<g, h> = (1/M) sum g(w_j) conj(h(w_j))."""
    g = np.broadcast_to(np.asarray(g, dtype=complex), np.shape(g) or (grid.M,))
    h = np.broadcast_to(np.asarray(h, dtype=complex), np.shape(h) or (grid.M,))
    if g.shape != (grid.M,) or h.shape != (grid.M,):
        raise GridMismatch("grid functions sampled on different grids")
    return complex(np.vdot(h, g) / grid.M)


def fourier_coefficients(values, grid: QuadratureGrid) -> np.ndarray:
    """c[k] = <h, z^k> for k = 0..M-1; negative k sit at index M + k."""
    return np.fft.fft(grid._check(values)) / grid.M


def check_nyquist(bandwidth: int, grid: QuadratureGrid, factor: int = 4) -> None:
    if factor * bandwidth > grid.M:
        raise NyquistViolation(
            f"frequency content {bandwidth} too high for M = {grid.M}"
        )


def iterate_on_grid(f: BlaschkeProduct, n: int, grid: QuadratureGrid) -> np.ndarray:
    if n == 0:
        return grid.nodes.copy()
    return orbit_row(f, grid.nodes, n)[-1]


def power_inner_products(f: BlaschkeProduct, j: int, kmax: int,
                         grid: QuadratureGrid) -> np.ndarray:
    """[<z^j, f^k> for k = 1..kmax], with f^k the k-th power of f."""
    if j not in (1, 2):
        raise ValueError("j must be 1 or 2")
    check_nyquist(kmax * f.degree, grid)
    z = grid.nodes
    fz = f(z)
    zj = z**j
    out = np.empty(kmax, dtype=complex)
    fk = np.ones_like(fz)
    for k in range(kmax):
        fk = fk * fz
        out[k] = inner_product(zj, fk, grid)
    return out


@dataclass
class ProjectionResult:
    coefficients: dict[int, complex]
    projected_values: np.ndarray
    residual: float  # L2 size of the k = +-K coefficients

    def bessel_sum(self) -> float:
        return float(sum(abs(c) ** 2 for c in self.coefficients.values()))


def conditional_expectation(h, eta, K: int, grid: QuadratureGrid,
                            eta_degree: int | None = None) -> ProjectionResult:
    """Project h onto span{eta^k : |k| <= K}.

    Pass ``eta_degree`` to have the Nyquist rule 4 K deg(eta) <= M enforced.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    h = np.asarray(h, dtype=complex)
    eta = as_unit(grid._check(eta))
    if eta_degree is not None:
        check_nyquist(K * eta_degree, grid)
    coeffs = {}
    proj = np.zeros(grid.M, dtype=complex)
    pos = np.ones(grid.M, dtype=complex)
    coeffs[0] = inner_product(h, pos, grid)
    proj += coeffs[0]
    for k in range(1, K + 1):
        pos = pos * eta
        neg = pos.conj()
        coeffs[k] = inner_product(h, pos, grid)
        coeffs[-k] = inner_product(h, neg, grid)
        proj += coeffs[k] * pos + coeffs[-k] * neg
    tail = float(np.hypot(abs(coeffs[K]), abs(coeffs[-K])))
    return ProjectionResult(dict(sorted(coeffs.items())), proj, tail)


@dataclass
class MartingaleResiduals:
    abs_square: float       # E[|Y|^2 | F] against 1 - |lambda|^2
    square: float           # E[Y^2 | F] against mu f^(n+1)
    real_part: float        # E[(Re alpha Y)^2 | F] against its closed form
    mean_zero: float        # E[Y | F] against 0
    tail: float             # largest k = +-K coefficient size seen

    def worst(self) -> float:
        return max(self.abs_square, self.square, self.real_part, self.mean_zero)


def verify_martingale_identities(f: BlaschkeProduct, n: int, alpha: complex = 1.0,
                                 grid: QuadratureGrid | None = None,
                                 K: int = DEFAULT_K) -> MartingaleResiduals:
    """L2 residuals of the conditional moment identities of Y_n = f^n - lam f^(n+1)."""
    grid = grid or QuadratureGrid()
    if n < 1:
        raise ValueError("n must be positive")
    check_nyquist(K * f.degree ** (n + 1), grid)
    sp = schwarz_pick_data(f)
    lam, mu = sp.lam, sp.mu
    alpha = as_unit(alpha)

    rows = orbit_row(f, grid.nodes, n + 1)
    fn, eta = rows[n - 1], rows[n]
    Y = fn - lam * eta
    deg = f.degree ** (n + 1)

    def proj(h):
        return conditional_expectation(h, eta, K, grid, eta_degree=deg)

    p0 = proj(Y)
    p1 = proj(np.abs(Y) ** 2)
    p2 = proj(Y**2)
    p3 = proj(np.real(alpha * Y) ** 2)
    target3 = (1 - abs(lam) ** 2) * abs(alpha) ** 2 / 2 + np.real(alpha**2 * mu * eta) / 2
    return MartingaleResiduals(
        abs_square=grid.norm(p1.projected_values - (1 - abs(lam) ** 2)),
        square=grid.norm(p2.projected_values - mu * eta),
        real_part=grid.norm(p3.projected_values - target3),
        mean_zero=grid.norm(p0.projected_values),
        tail=max(p.residual for p in (p1, p2, p3)),
    )
