"""Seeded Monte Carlo experiments on sums of iterates.

Boundary points are drawn from a counter-based generator: sample i always
takes the i-th 64-bit output of Philox keyed by the seed, whichever chunk or
worker ends up computing it.  Work is split into fixed-size chunks and
every reduction runs over chunks in index order, so results are bit-identical
for any worker count.
"""

from __future__ import annotations

import json
import math
import os
import platform
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from . import __version__
from .blaschke import BlaschkeProduct, schwarz_pick_data
from .errors import ConfigError, DegenerateSigma, NoiseFloor, TruncationTooCoarse
from .stats import BoundParams, SampleBatch, cramer_wold_discrepancy, theorem1_rhs
from .transfer import (
    coefficient_family,
    family_tail_mass,
    lindeberg_ratios,
    parse_family,
    transfer,
)

CHUNK = 2**14
THREADS_ENV = "INNER_CLT_THREADS"
CSV_COLUMNS = ("N", "sigma_N", "rho_N", "abs_b_N", "ks_sup", "rhs_bound",
               "mN_est", "VN2_est", "weak_law_moment")


class LindebergWarning(UserWarning):
    """The coefficient family does not look negligible-summand."""


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        try:
            workers = int(os.environ.get(THREADS_ENV, "0"))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer")
    if workers < 0:
        raise ConfigError("worker count must be >= 0")
    return workers or (os.cpu_count() or 1)


def uniform_block(seed: int, start: int, count: int) -> np.ndarray:
    """Uniforms on [0, 1) for sample indices start..start+count-1."""
    bg = np.random.Philox(key=seed)
    bg.advance(start // 4)
    skip = start % 4
    raw = bg.random_raw(count + skip)[skip:]
    return (raw >> np.uint64(11)).astype(float) * 2.0**-53


def boundary_points(seed: int, start: int, count: int) -> np.ndarray:
    return np.exp(2j * np.pi * uniform_block(seed, start, count))


@dataclass
class ExperimentConfig:
    f: BlaschkeProduct = field(default_factory=lambda: BlaschkeProduct((0.0, 0.5)))
    family: str = "ones"
    N_grid: list = field(default_factory=lambda: [10, 100, 1000])
    samples: int = 100_000
    seed: int = 20240601
    alpha_count: int = 64
    delta: float = 1.0
    C_user: float = 1.0
    alpha: complex = 1.0
    epsilon: float = 0.1
    tail_start: int | None = None
    truncation: int | None = None

    def __post_init__(self):
        if isinstance(self.f, dict):
            self.f = BlaschkeProduct.from_dict(self.f)
        self.N_grid = [int(n) for n in self.N_grid]
        if not self.N_grid or self.N_grid[0] < 1:
            raise ConfigError("N_grid must be a nonempty list of positive integers")
        if any(b <= a for a, b in zip(self.N_grid, self.N_grid[1:])):
            raise ConfigError("N_grid must be strictly increasing")
        if self.samples < 1000:
            raise ConfigError("samples must be at least 1000")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        self.seed = int(self.seed)
        if self.alpha_count < 4:
            raise ConfigError("alpha_count must be at least 4")
        if isinstance(self.alpha, (list, tuple)):
            self.alpha = complex(*self.alpha)
        self.alpha = complex(self.alpha)
        if abs(abs(self.alpha) - 1) > 1e-12:
            raise ConfigError("alpha must be unimodular")
        try:
            parse_family(self.family)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except (TypeError, ValueError, KeyError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None

    def to_mapping(self) -> dict:
        d = asdict(self)
        d["f"] = self.f.to_dict()
        d["alpha"] = [self.alpha.real, self.alpha.imag]
        return d

    @property
    def lam(self) -> complex:
        return schwarz_pick_data(self.f).lam

    def coefficients(self, N: int | None = None):
        return coefficient_family(self.family, N or self.N_grid[-1])


def load_config(path) -> ExperimentConfig:
    """Read an ExperimentConfig from a TOML or JSON file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(text)
        else:
            import tomli
            data = tomli.loads(text)
    except Exception as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return ExperimentConfig.from_mapping(data)


# --- orbit engine ---

@dataclass
class _Plan:
    f: BlaschkeProduct
    a: np.ndarray        # a_1..a_Nmax
    b: np.ndarray        # transferred coefficients, same length
    lam: complex
    mu: complex
    alpha: complex
    N_grid: list
    seed: int


@dataclass
class _ChunkOut:
    sums: np.ndarray       # (len(N_grid), count) sum_{n<=N} a_n f^n
    tsums: np.ndarray      # (len(N_grid), count) sum_{n<=N} b_n^2 f^(n+1)
    ymax: np.ndarray       # (len(N_grid), count) max_{n<=N} |Re(alpha b_n Y_n)|
    msums: np.ndarray      # (len(N_grid), count) sum b_n Y_n + lam b_N f^(N+1)
    cond: np.ndarray       # (Nmax,) sum over chunk of Re(alpha^2 mu b_n^2 f^(n+1))


@njit(cache=True, nogil=True)
def _orbit_kernel(omega, zeros, scales, rotation, a, b, lam, alpha, am, slot,
                  sums, tsums, ymax, msums, cond):
    count = omega.size
    Nmax = a.size
    d = zeros.size
    x = omega.real.copy()
    y = omega.imag.copy()
    acc = np.zeros(count, dtype=np.complex128)
    tacc = np.zeros(count, dtype=np.complex128)
    macc = np.zeros(count, dtype=np.complex128)
    ymx = np.zeros(count)
    # (x, y) holds f^(n-1); stepping to f^n finishes index n-1, which needs f^n.
    # Samples are the inner loop so independent orbits pipeline.
    for n in range(1, Nmax + 2):
        m = n - 1
        bm = b[m - 1] if n >= 2 else 0j
        an = a[n - 1] if n <= Nmax else 0j
        ks = slot[m] if n >= 2 else -1
        ka = slot[n] if n <= Nmax else -1
        csum = 0.0
        for i in range(count):
            zp = complex(x[i], y[i])
            # on the circle (a - z) / (1 - conj(a) z) = -conj(z) w^2 / |w|^2, w = z - a
            z = rotation
            zc = zp.conjugate()
            for j in range(d):
                aj = zeros[j]
                if aj == 0:
                    z *= zp
                else:
                    w = zp - aj
                    z *= -scales[j] * zc * (w * w) / (w.real * w.real + w.imag * w.imag)
            z *= 1.0 / math.sqrt(z.real * z.real + z.imag * z.imag)
            if n >= 2:
                ym = bm * (zp - lam * z)
                macc[i] += ym
                v = abs((alpha * ym).real)
                if v > ymx[i]:
                    ymx[i] = v
                term = bm * bm * z
                tacc[i] += term
                csum += (am * term).real
                if ks >= 0:
                    tsums[ks, i] = tacc[i]
                    ymax[ks, i] = ymx[i]
                    msums[ks, i] = macc[i] + lam * bm * z
            if n <= Nmax:
                acc[i] += an * z
                if ka >= 0:
                    sums[ka, i] = acc[i]
            x[i] = z.real
            y[i] = z.imag
        if n >= 2:
            cond[m - 1] = csum


def _run_chunk(plan: _Plan, start: int, count: int) -> _ChunkOut:
    Nmax = plan.a.size
    G = len(plan.N_grid)
    slot = np.full(Nmax + 2, -1, dtype=np.int64)
    for k, N in enumerate(plan.N_grid):
        slot[N] = k
    zeros = np.array(plan.f.zeros, dtype=complex)
    scales = np.array([abs(z) / z if z != 0 else 1.0 for z in plan.f.zeros], dtype=complex)
    out = _ChunkOut(
        np.empty((G, count), dtype=complex),
        np.empty((G, count), dtype=complex),
        np.empty((G, count)),
        np.empty((G, count), dtype=complex),
        np.zeros(Nmax),
    )
    _orbit_kernel(boundary_points(plan.seed, start, count), zeros, scales,
                  complex(plan.f.rotation), plan.a, plan.b, complex(plan.lam),
                  complex(plan.alpha), complex(plan.alpha**2 * plan.mu), slot,
                  out.sums, out.tsums, out.ymax, out.msums, out.cond)
    return out


def _run_plan(plan: _Plan, samples: int, workers: int | None = None) -> _ChunkOut:
    starts = list(range(0, samples, CHUNK))
    jobs = [(s, min(CHUNK, samples - s)) for s in starts]
    nw = min(resolve_workers(workers), len(jobs))
    if nw > 1:
        with ThreadPoolExecutor(nw) as pool:
            outs = list(pool.map(lambda j: _run_chunk(plan, *j), jobs))
    else:
        outs = [_run_chunk(plan, *j) for j in jobs]
    cond = np.zeros(plan.a.size)
    for o in outs:
        cond += o.cond
    return _ChunkOut(
        np.concatenate([o.sums for o in outs], axis=1),
        np.concatenate([o.tsums for o in outs], axis=1),
        np.concatenate([o.ymax for o in outs], axis=1),
        np.concatenate([o.msums for o in outs], axis=1),
        cond,
    )


def _plan(config: ExperimentConfig, a_values: np.ndarray, N_grid) -> _Plan:
    sp = schwarz_pick_data(config.f)
    tr = transfer(a_values, sp.lam)
    return _Plan(config.f, np.asarray(a_values, complex), np.asarray(tr.values),
                 sp.lam, sp.mu, config.alpha, list(N_grid), config.seed)


# --- public experiments ---

def sample_ZN(config: ExperimentConfig, N: int, workers: int | None = None) -> SampleBatch:
    """Draws of Z_N = sigma_N^-1 sum_{n<=N} a_n f^n(omega), omega uniform on T."""
    a = config.coefficients(N)
    tr = transfer(a, config.lam)
    if tr.sigma_N == 0:
        raise DegenerateSigma("sigma_N = 0")
    out = _run_plan(_plan(config, a.values, [N]), config.samples, workers)
    return SampleBatch(out.sums[0] / tr.sigma_N, seed=config.seed)


@dataclass
class ExperimentReport:
    rows: list
    fitted_exponent: float | None = None
    stderr: float | None = None
    metadata: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    def csv_text(self) -> str:
        lines = [",".join(CSV_COLUMNS)]
        for r in self.rows:
            cells = [str(int(r["N"]))]
            cells += [format(float(r[c]), ".17g") for c in CSV_COLUMNS[1:]]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def write(self, outdir) -> tuple[Path, Path]:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        csv_path = outdir / "results.csv"
        meta_path = outdir / "metadata.json"
        csv_path.write_text(self.csv_text())
        meta = dict(self.metadata)
        meta["fitted_exponent"] = self.fitted_exponent
        meta["stderr"] = self.stderr
        meta["diagnostics"] = [
            {k: v for k, v in r.items() if k not in CSV_COLUMNS or k == "N"}
            for r in self.rows
        ]
        meta_path.write_text(json.dumps(meta, indent=2, default=_jsonable))
        return csv_path, meta_path


def _jsonable(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(type(obj))


def read_results_csv(path) -> list[dict]:
    import csv
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ConfigError(f"{path}: unexpected columns {reader.fieldnames}")
        return [{k: float(v) for k, v in row.items()} for row in reader]


def _check_lindeberg(config: ExperimentConfig) -> None:
    first = lindeberg_ratios(config.coefficients(config.N_grid[0]))["max_ratio"]
    last = lindeberg_ratios(config.coefficients(config.N_grid[-1]))["max_ratio"]
    if last > 0.1 or (len(config.N_grid) > 1 and last > 0.5 * first):
        warnings.warn(
            f"coefficient family {config.family!r} keeps max_n |a_n|^2 / sum |a_n|^2 "
            f"at {last:.3g}; the normal limit need not hold",
            LindebergWarning, stacklevel=3,
        )


def clt_experiment(config: ExperimentConfig, workers: int | None = None) -> ExperimentReport:
    """Per-N discrepancy, bound and Brown-Eagleson diagnostics in one orbit pass."""
    t0 = time.perf_counter()
    _check_lindeberg(config)
    a_full = config.coefficients()
    plan = _plan(config, a_full.values, config.N_grid)
    out = _run_plan(plan, config.samples, workers)
    nw = resolve_workers(workers)
    lam = plan.lam
    S = config.samples
    rows = []
    for i, N in enumerate(config.N_grid):
        a = a_full.head(N)
        tr = transfer(a, lam)
        if tr.sigma_N == 0:
            raise DegenerateSigma(f"sigma_N = 0 at N = {N}")
        Z = out.sums[i] / tr.sigma_N
        cw = cramer_wold_discrepancy(Z, config.alpha_count, workers=nw)
        rhs = theorem1_rhs(a, BoundParams(config.delta, config.C_user, lam))
        diag = _diagnostics(plan, out, i, N, tr, S, config)
        wl = _weak_law_row(out.sums[i], a, lam)
        rows.append({
            "N": N,
            "sigma_N": tr.sigma_N,
            "rho_N": tr.rho_N,
            "abs_b_N": abs(tr.b_N),
            "ks_sup": cw["sup_discrepancy"],
            "rhs_bound": float(rhs),
            "mN_est": diag["mN_est"],
            "VN2_est": diag["VN2_est"],
            "weak_law_moment": wl["second_moment"],
            "worst_alpha": cw["worst_alpha"],
            "VN2_se": diag["VN2_se"],
            "lindeberg_term": diag["lindeberg_term"],
            "khintchine_ratio": diag["khintchine_ratio"],
            "weak_law_se": wl["se"],
            "weak_law_envelope": wl["envelope"],
            "ks_over_rhs": cw["sup_discrepancy"] / rhs,
            "martingale_residual": diag["martingale_residual"],
        })
    report = ExperimentReport(rows)
    report.metadata = _metadata(config, time.perf_counter() - t0, nw)
    try:
        fit = rate_fit(report, S)
        report.fitted_exponent, report.stderr = fit["exponent"], fit["stderr"]
    except NoiseFloor:
        pass
    return report


def _metadata(config: ExperimentConfig, wall: float, workers: int) -> dict:
    return {
        "config": config.to_mapping(),
        "versions": {"inner_clt": __version__, "numpy": np.__version__,
                     "python": platform.python_version()},
        "wall_time_s": wall,
        "workers": workers,
        "noise_floor": 1.5 / math.sqrt(config.samples),
    }


def _diagnostics(plan: _Plan, out: _ChunkOut, i: int, N: int, tr, S: int,
                 config: ExperimentConfig) -> dict:
    r2 = abs(plan.lam) ** 2
    rho2 = tr.rho_N**2
    a_l1 = float(np.sum(np.abs(plan.a[:N])))
    b = plan.b[:N]
    per_n = (1 - r2) * np.abs(b) ** 2 / 2 + out.cond[:N] / S / 2
    mN = float(np.max(per_n) / rho2)
    am = plan.alpha**2 * plan.mu
    vn2 = (1 - r2) / 2 + np.real(am * out.tsums[i]) / (2 * rho2)
    lind = float(np.mean(out.ymax[i] / tr.rho_N > config.epsilon))
    d = config.delta
    kh_num = np.mean(np.abs(out.tsums[i] / rho2) ** (1 + d))
    kh_den = math.fsum(np.abs(b) ** 4) ** ((1 + d) / 2) * tr.rho_N ** (-2 - 2 * d)
    return {
        "mN_est": mN,
        "mN_bound": float(np.max(np.abs(b) ** 2) / rho2),
        "VN2_est": float(np.mean(vn2)),
        "VN2_se": float(np.std(vn2, ddof=1) / math.sqrt(S)),
        "VN2_target": (1 - r2) / 2,
        "lindeberg_term": lind,
        "khintchine_ratio": float(kh_num / kh_den) if kh_den > 0 else math.nan,
        "martingale_residual": float(
            np.max(np.abs(out.msums[i] - out.sums[i])) / max(a_l1, 1e-300)
        ),
    }


def brown_eagleson_diagnostics(config: ExperimentConfig, N: int,
                               workers: int | None = None) -> dict:
    """Monte Carlo estimates of m_N, V_N^2 and the (C3) exceedance frequency."""
    a = config.coefficients(N)
    plan = _plan(config, a.values, [N])
    out = _run_plan(plan, config.samples, workers)
    tr = transfer(a, plan.lam)
    return _diagnostics(plan, out, 0, N, tr, config.samples, config)


def _weak_law_row(sums: np.ndarray, a, lam: complex) -> dict:
    S_N = a.S_N
    vals = np.abs(sums) ** 2 / S_N**2
    r = abs(lam)
    tr = transfer(a, lam)
    return {
        "second_moment": float(np.mean(vals)),
        "se": float(np.std(vals, ddof=1) / math.sqrt(vals.size)),
        "envelope": (1 + r) / (1 - r) * a.sum2 / S_N**2,
        "exact": tr.sigma2 / S_N**2,
        "ratio_sum2_S2": a.sum2 / S_N**2,
    }


def weak_law_experiment(config: ExperimentConfig, workers: int | None = None) -> list[dict]:
    """E|S_N^-1 sum a_n f^n|^2 against ((1+|lam|)/(1-|lam|)) sum|a_n|^2 / S_N^2."""
    a_full = config.coefficients()
    if a_full.head(config.N_grid[0]).S_N == 0:
        raise DegenerateSigma("S_N = 0")
    plan = _plan(config, a_full.values, config.N_grid)
    out = _run_plan(plan, config.samples, workers)
    rows = []
    for i, N in enumerate(config.N_grid):
        row = {"N": N, **_weak_law_row(out.sums[i], a_full.head(N), plan.lam)}
        row["ok"] = row["second_moment"] <= row["envelope"] + 3 * row["se"]
        rows.append(row)
    return rows


def rate_fit(report, samples: int | None = None) -> dict:
    """Least-squares slope of log ks_sup against log N, above the noise floor."""
    if isinstance(report, ExperimentReport):
        N = report.column("N")
        ks = report.column("ks_sup")
        if samples is None:
            samples = report.metadata.get("config", {}).get("samples")
    else:
        N = np.array([r["N"] for r in report], dtype=float)
        ks = np.array([r["ks_sup"] for r in report], dtype=float)
    floor = 1.5 / math.sqrt(samples) if samples else 0.0
    keep = ks > floor
    if keep.sum() < 4:
        raise NoiseFloor(f"only {int(keep.sum())} grid points above floor {floor:.3g}")
    x, y = np.log(N[keep]), np.log(ks[keep])
    X = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = x.size - 2
    s2 = float(resid @ resid) / dof
    se = math.sqrt(s2 / float(np.sum((x - x.mean()) ** 2)))
    return {"exponent": float(coef[1]), "stderr": se, "intercept": float(coef[0]),
            "points": int(keep.sum())}


def tail_clt_experiment(config: ExperimentConfig, tail_start: int | None = None,
                        truncation: int | None = None, family=None,
                        max_discard: float = 1e-4, workers: int | None = None) -> dict:
    """Normalised truncated tail sum_{n=N}^{M} a_n f^n against CN(0, 1)."""
    family = family if family is not None else config.family
    N = tail_start if tail_start is not None else config.tail_start
    M = truncation if truncation is not None else config.truncation
    if N is None or M is None or not 1 <= N < M:
        raise ConfigError("need 1 <= tail_start < truncation")
    total = family_tail_mass(family, N)
    if not math.isfinite(total) or total <= 0:
        raise TruncationTooCoarse(f"family {family!r} has no closed-form l2 tail")
    discarded = family_tail_mass(family, M + 1) / total
    if discarded > max_discard:
        raise TruncationTooCoarse(
            f"discarded tail mass ratio {discarded:.3g} exceeds {max_discard:g}"
        )
    a = coefficient_family(family, M).values.copy()
    a[: N - 1] = 0.0
    lam = schwarz_pick_data(config.f).lam
    shifted = transfer(a[N - 1:], lam)
    plan = _plan(config, a, [M])
    out = _run_plan(plan, config.samples, workers)
    sums = out.sums[0]
    Z = sums / shifted.sigma_N
    cw = cramer_wold_discrepancy(Z, config.alpha_count, workers=resolve_workers(workers))
    return {
        "ks_sup": cw["sup_discrepancy"],
        "worst_alpha": cw["worst_alpha"],
        "sigma_tail": shifted.sigma_N,
        "sigma_tail_mc": float(np.sqrt(np.mean(np.abs(sums) ** 2))),
        "discarded_ratio": discarded,
        "lindeberg_tail_ratio": float(abs(a[N - 1]) ** 2 / total),
    }
