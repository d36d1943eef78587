"""Deterministic identity suites behind ``inner-clt verify``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blaschke import BlaschkeProduct, blaschke_eval, iterate_boundary, orbit_row, schwarz_pick_data
from .harmonic import (
    QuadratureGrid,
    conditional_expectation,
    inner_product,
    iterate_on_grid,
    power_inner_products,
    verify_martingale_identities,
)
from .transfer import generating_identity_check, invert_transfer, norm_bounds_check, transfer

ALPHAS = (1.0, 1j, np.exp(1j * np.pi / 5))


@dataclass
class Check:
    suite: str
    name: str
    residual: float
    tol: float

    @property
    def ok(self) -> bool:
        return bool(self.residual <= self.tol)


def blaschke_suite(f: BlaschkeProduct, seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    omega = np.exp(2j * np.pi * rng.random(10_000))
    raw = blaschke_eval(f, omega, renormalize=False)
    sp = schwarz_pick_data(f)
    h = 1e-5
    d1 = (f(h) - f(-h)) / (2 * h)
    d2 = (f(h) - 2 * f(0.0) + f(-h)) / (2 * h * h)
    fd = max(abs(np.conj(d1) - sp.lam), abs(np.conj(d2) - sp.mu))
    pts = omega[:50]
    rows = orbit_row(f, pts, 20)
    orbit = max(float(np.max(np.abs(rows[n - 1] - iterate_boundary(f, pts, n))))
                for n in range(1, 21))
    grid = QuadratureGrid()
    n_top = max(n for n in range(1, 5) if 4 * f.degree**n <= grid.M) if 4 * f.degree <= grid.M else 0
    means = [abs(grid.mean(iterate_on_grid(f, n, grid))) for n in range(1, n_top + 1)]
    return [
        Check("blaschke", "unimodular boundary values", float(np.max(np.abs(np.abs(raw) - 1))), 1e-12),
        Check("blaschke", "Schwarz-Pick vs finite differences", float(fd), 1e-6),
        Check("blaschke", "orbit_row vs iterate_boundary", orbit, 1e-12),
        Check("blaschke", "mean of iterates", max(means, default=0.0), 1e-8),
    ]


def harmonic_suite(f: BlaschkeProduct, grid: QuadratureGrid | None = None,
                   n_max: int = 3, K: int = 8) -> list[Check]:
    grid = grid or QuadratureGrid()
    sp = schwarz_pick_data(f)
    out = []
    p1 = power_inner_products(f, 1, 4, grid)
    p2 = power_inner_products(f, 2, 4, grid)
    want1 = np.array([sp.lam, 0, 0, 0])
    want2 = np.array([sp.mu, sp.lam**2, 0, 0])
    out.append(Check("harmonic", "<z, f^k> table", float(np.max(np.abs(p1 - want1))), 1e-7))
    out.append(Check("harmonic", "<z^2, f^k> table", float(np.max(np.abs(p2 - want2))), 1e-7))
    n_max = min(n_max, max(n for n in range(0, n_max + 1)
                           if n == 0 or 4 * K * f.degree ** (n + 1) <= grid.M))
    worst = 0.0
    for n in range(1, n_max + 1):
        for alpha in ALPHAS:
            worst = max(worst, verify_martingale_identities(f, n, alpha, grid, K).worst())
    out.append(Check("harmonic", f"conditional identities n<={n_max}", worst, 1e-6))
    eta = iterate_on_grid(f, 1, grid)
    powers = [eta**k if k >= 0 else np.conj(eta) ** (-k) for k in range(-K, K + 1)]
    gram = np.array([[inner_product(u, v, grid) for v in powers] for u in powers])
    out.append(Check("harmonic", "Gram matrix of eta^k",
                     float(np.max(np.abs(gram - np.eye(2 * K + 1)))), 1e-8))
    h = iterate_on_grid(f, 0, grid) ** 2
    once = conditional_expectation(h, eta, K, grid)
    twice = conditional_expectation(once.projected_values, eta, K, grid)
    idem = max(abs(once.coefficients[k] - twice.coefficients[k]) for k in once.coefficients)
    out.append(Check("harmonic", "projection idempotence", float(idem), 1e-10))
    return out


def transfer_suite(f: BlaschkeProduct, seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    sp = schwarz_pick_data(f)
    rt = 0.0
    for _ in range(200):
        N = int(rng.integers(1, 201))
        a = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        lam = 0.9 * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
        rt = max(rt, float(np.max(np.abs(invert_transfer(transfer(a, lam)).values - a))))
    a = rng.standard_normal(100) + 1j * rng.standard_normal(100)
    z = np.exp(2j * np.pi * rng.random(256))
    gen = generating_identity_check(a, 0.9, z) / np.sum(np.abs(a))
    bounds_bad = 0
    for _ in range(500):
        a = rng.standard_normal(int(rng.integers(1, 60))) * (1 + 0j)
        lam = 0.95 * rng.random() * np.exp(2j * np.pi * rng.random())
        rep = norm_bounds_check(a, lam)
        bounds_bad += not (rep.lower_ok and rep.upper_ok)

    grid = QuadratureGrid(2**16)
    n_top = max(n for n in range(1, 7) if 4 * f.degree**n <= grid.M)
    a = rng.standard_normal(n_top) + 1j * rng.standard_normal(n_top)
    rows = orbit_row(f, grid.nodes, n_top)
    total = np.tensordot(a, rows, axes=1)
    sig_rel = abs(grid.norm(total) - transfer(a, sp.lam).sigma_N) / transfer(a, sp.lam).sigma_N

    N = 50
    omega = np.exp(2j * np.pi * rng.random(1000))
    rows = orbit_row(f, omega, N + 1)
    a = np.ones(N)
    tr = transfer(a, sp.lam)
    Y = rows[:N] - sp.lam * rows[1:]
    lhs = np.tensordot(a, rows[:N], axes=1)
    rhs = np.tensordot(tr.values, Y, axes=1) + sp.lam * tr.b_N * rows[N]
    prop = float(np.max(np.abs(lhs - rhs)) / np.sum(np.abs(a)))
    return [
        Check("transfer", "invert(transfer(a)) round trip", rt, 1e-12),
        Check("transfer", "generating function identity / |a|_1", float(gen), 1e-10),
        Check("transfer", "norm bound violations", float(bounds_bad), 0.0),
        Check("transfer", f"sigma_N vs quadrature (N={n_top}), relative", float(sig_rel), 1e-6),
        Check("transfer", "iterate sum = martingale sum + remainder", prop, 1e-8),
    ]


def run_all(f: BlaschkeProduct, seed: int = 0) -> list[Check]:
    return blaschke_suite(f, seed) + harmonic_suite(f) + transfer_suite(f, seed)
