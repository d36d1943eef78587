"""End-to-end acceptance checks, one printed PASS/FAIL line per criterion."""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from inner_clt.blaschke import BlaschkeProduct, orbit_row, schwarz_pick_data
from inner_clt.cli import run
from inner_clt.experiments import (
    ExperimentConfig,
    boundary_points,
    brown_eagleson_diagnostics,
    clt_experiment,
    rate_fit,
    weak_law_experiment,
)
from inner_clt.harmonic import QuadratureGrid, power_inner_products, verify_martingale_identities
from inner_clt.stats import BoundParams, bound_exponents, lemma8_bound_check, theorem1_rhs
from inner_clt.transfer import invert_transfer, norm_bounds_check, transfer

PRODUCTS = [
    BlaschkeProduct.power(2),
    BlaschkeProduct.power(3),
    BlaschkeProduct((0.0, 0.5)),
    BlaschkeProduct((0.0, 0.3 + 0.4j)),
]
ALPHAS = (1.0, 1j, np.exp(1j * np.pi / 5))
CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def report(capsys):
    def emit(label, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
        assert ok, f"{label}: {detail}"
    return emit


def test_c01_martingale_identities(report):
    t0 = time.perf_counter()
    grid = QuadratureGrid(2**14)
    worst = max(verify_martingale_identities(f, n, a, grid).worst()
                for f in PRODUCTS for n in (1, 2, 3) for a in ALPHAS)
    dt = time.perf_counter() - t0
    report("1 martingale identities", worst <= 1e-6 and dt <= 10,
           f"worst residual {worst:.2e} (<= 1e-6), {dt:.1f} s (<= 10 s)")


def test_c02_inner_product_tables(report):
    grid = QuadratureGrid(2**14)
    worst = cross = 0.0
    for f in PRODUCTS:
        sp = schwarz_pick_data(f)
        p1 = power_inner_products(f, 1, 6, grid)
        p2 = power_inner_products(f, 2, 6, grid)
        worst = max(worst, np.max(np.abs(p1 - [sp.lam, 0, 0, 0, 0, 0])),
                    np.max(np.abs(p2 - [sp.mu, sp.lam**2, 0, 0, 0, 0])))
        cross = max(cross, abs(p1[0] - sp.lam), abs(p2[0] - sp.mu), abs(p2[1] - sp.lam**2))
    report("2 inner-product tables", worst <= 1e-7 and cross <= 1e-8,
           f"table error {worst:.2e} (<= 1e-7), cross-module {cross:.2e} (<= 1e-8)")


def test_c03_transfer_exactness(report):
    rng = np.random.default_rng(3)
    rt = 0.0
    for _ in range(1000):
        N = int(rng.integers(1, 201))
        a = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        lam = 0.9 * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
        rt = max(rt, float(np.max(np.abs(invert_transfer(transfer(a, lam)).values - a))))

    grid = QuadratureGrid(2**16)
    sig = 0.0
    for f in PRODUCTS:
        lam = schwarz_pick_data(f).lam
        rows = orbit_row(f, grid.nodes, 6)
        for N in range(1, 7):
            a = rng.standard_normal(N) + 1j * rng.standard_normal(N)
            quad = grid.norm(np.tensordot(a, rows[:N], axes=1))
            sigma = transfer(a, lam).sigma_N
            sig = max(sig, abs(quad - sigma) / sigma)

    bad = 0
    for _ in range(10_000):
        N = int(rng.integers(1, 100))
        a = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        lam = 0.99 * rng.random() * np.exp(2j * np.pi * rng.random())
        rep = norm_bounds_check(a, lam)
        bad += not (rep.lower_ok and rep.upper_ok)
    report("3 transfer exactness", rt <= 1e-12 and sig <= 1e-6 and bad == 0,
           f"round trip {rt:.1e} (<= 1e-12), sigma_N rel {sig:.1e} (<= 1e-6), "
           f"norm-bound violations {bad}/10000")


def test_c04_pointwise_decomposition(report):
    f = BlaschkeProduct((0.0, 0.5))
    lam = schwarz_pick_data(f).lam
    N = 50
    omega = boundary_points(4, 0, 1000)
    rows = orbit_row(f, omega, N + 1)
    a = np.ones(N)
    tr = transfer(a, lam)
    lhs = np.tensordot(a, rows[:N], axes=1)
    rhs = np.tensordot(tr.values, rows[:N] - lam * rows[1:], axes=1) + lam * tr.b_N * rows[N]
    rel = float(np.max(np.abs(lhs - rhs)) / np.sum(np.abs(a)))
    kernel = clt_experiment(ExperimentConfig(N_grid=[N], samples=1000, seed=4)).rows[0]
    ok = rel <= 1e-8 and kernel["martingale_residual"] <= 1e-8
    report("4 iterate sum = martingale sum + remainder", ok,
           f"relative residual {rel:.1e}, sampling kernel {kernel['martingale_residual']:.1e} (<= 1e-8)")


@pytest.fixture(scope="module")
def lemma8():
    t0 = time.perf_counter()
    res = lemma8_bound_check(np.linspace(0.5, 1.5, 1001), np.linspace(-1, 1, 2001),
                             np.linspace(-10, 10, 20001))
    res["seconds"] = time.perf_counter() - t0
    return res


def test_c05a_shift_ratio_grid_max_in_band(report, lemma8):
    r = lemma8["max_ratio"]
    report("5a normal-shift ratio grid max in [1.33, 1.35]", 1.33 <= r <= 1.35,
           f"max ratio {r:.6f} at (p, q, x) = {tuple(round(v, 4) for v in lemma8['argmax'])}; "
           f"true supremum is 1/sqrt(pi) = {1 / math.sqrt(math.pi):.6f}")


def test_c05b_shift_ratio_never_exceeds(report, lemma8):
    r = lemma8["max_ratio"]
    ok = r <= 1.35 and lemma8["seconds"] <= 60
    report("5b normal-shift ratio never exceeds 1.35", ok,
           f"max ratio {r:.6f}, {lemma8['seconds']:.1f} s (<= 60 s)")


def test_c05c_shift_envelope_constant(report, lemma8):
    c = lemma8["envelope_constant"]
    report("5c normal-shift mean-value constant in [1.33, 1.35]", 1.33 <= c <= 1.35,
           f"envelope {c:.6f} at x = {lemma8['envelope_argmax']:.3f}")


def test_c06_bound_exponents(report):
    err = max(abs(theorem1_rhs(np.ones(N), BoundParams(1, 1, 0)) - N ** -0.2) for N in (10, 100, 1000))
    e4, e2 = bound_exponents(1e3)
    lim = max(abs(e4 - 0.25), abs(e2 - 0.5))
    report("6 bound-exponent arithmetic", err <= 1e-12 and lim <= 1e-3,
           f"|rhs - N^-1/5| {err:.1e} (<= 1e-12), exponent gap at delta=1e3 {lim:.1e} (<= 1e-3)")


def test_c07_clt_convergence(report):
    t0 = time.perf_counter()
    rep = clt_experiment(ExperimentConfig(N_grid=[10, 100, 1000], samples=100_000), workers=4)
    dt = time.perf_counter() - t0
    ks = rep.column("ks_sup")
    ok = bool(np.all(np.diff(ks) < 0)) and ks[-1] <= 0.02 and dt <= 300
    report("7 CLT convergence", ok,
           f"ks_sup {', '.join(f'{k:.4f}' for k in ks)} (decreasing, last <= 0.02), {dt:.1f} s")


def test_c08_rate_consistency(report):
    cfg = ExperimentConfig(N_grid=[100, 316, 1000, 3162], samples=400_000)
    rep = clt_experiment(cfg)
    fit = rate_fit(rep)
    report("8 rate consistency", fit["exponent"] <= -0.15,
           f"exponent {fit['exponent']:.3f} +- {fit['stderr']:.3f} over {fit['points']} points (<= -0.15)")


def test_c09_brown_eagleson(report):
    cfg = ExperimentConfig(N_grid=[1000], samples=100_000, epsilon=0.1)
    d = brown_eagleson_diagnostics(cfg, 1000)
    gap = abs(d["VN2_est"] - d["VN2_target"])
    ok = gap <= 3 * d["VN2_se"] and d["mN_est"] <= d["mN_bound"] and d["lindeberg_term"] == 0
    report("9 Brown-Eagleson diagnostics", ok,
           f"VN2 {d['VN2_est']:.6f} vs {d['VN2_target']} (gap {gap:.1e} <= 3se {3 * d['VN2_se']:.1e}), "
           f"mN {d['mN_est']:.2e} <= {d['mN_bound']:.2e}, (C3) frequency {d['lindeberg_term']}")


def test_c10_weak_law(report):
    families = ["ones", "sqrt", "geometric 0.5", "power 0.3", "power -1", "random 1", "random 2"]
    bad = []
    ones_env = 0.0
    for fam in families:
        rows = weak_law_experiment(ExperimentConfig(family=fam, N_grid=[10, 100, 1000], samples=50_000))
        bad += [(fam, r["N"]) for r in rows if not r["ok"]]
        if fam == "ones":
            ones_env = max(abs(r["envelope"] - 3 / r["N"]) for r in rows)
    report("10 weak law", not bad and ones_env <= 1e-15,
           f"envelope violations {bad or 'none'} over {len(families)} families; "
           f"a=1 envelope vs 3/N {ones_env:.1e}")


def test_c11_determinism(report, tmp_path, monkeypatch):
    outputs = {}
    for threads in ("1", "2", "8", "1"):
        monkeypatch.setenv("INNER_CLT_THREADS", threads)
        out = tmp_path / f"run{len(outputs)}_{threads}"
        assert run(["simulate", "--config", str(CONFIGS / "default.toml"), "--out", str(out)]) == 0
        outputs[out.name] = (out / "results.csv").read_bytes()
    same = len(set(outputs.values())) == 1
    report("11 determinism", same, f"results.csv identical across threads 1, 2, 8 and a repeat: {same}")
