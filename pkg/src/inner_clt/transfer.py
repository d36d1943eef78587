"""Coefficient transfer a -> b and the variance bookkeeping built on it.

With b_n = sum_{k<=n} lam^(n-k) a_k, a linear combination of iterates
sum a_n f^n equals sum b_n Y_n + lam b_N f^(N+1), where the Y_n are
orthogonal with E|Y_n|^2 = 1 - |lam|^2.  Everything in this module is the
finite-N algebra of that rewrite.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .errors import AllZero, LambdaNotContractive


def _fsum_abs_pow(values: np.ndarray, p: int) -> float:
    return math.fsum(np.abs(values) ** p)


@dataclass(frozen=True)
class CoefficientSequence:
    """Finite complex sequence a_1..a_N (stored 0-based)."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.atleast_1d(np.asarray(self.values, dtype=complex))
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("coefficient sequence must be a nonempty 1-d array")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size

    def head(self, N: int) -> "CoefficientSequence":
        if not 1 <= N <= len(self):
            raise ValueError(f"N = {N} outside 1..{len(self)}")
        return CoefficientSequence(self.values[:N])

    @property
    def S_N(self) -> float:
        return math.fsum(np.abs(self.values))

    @property
    def sum2(self) -> float:
        return _fsum_abs_pow(self.values, 2)

    @property
    def sum4(self) -> float:
        return _fsum_abs_pow(self.values, 4)

    @property
    def l2(self) -> float:
        return math.sqrt(self.sum2)


@dataclass(frozen=True)
class TransferredSequence:
    values: np.ndarray
    lam: complex
    rho_N: float
    sigma_N: float
    sigma2: float

    @property
    def b_N(self) -> complex:
        return complex(self.values[-1])


def _as_seq(a) -> CoefficientSequence:
    return a if isinstance(a, CoefficientSequence) else CoefficientSequence(a)


def transfer(a, lam: complex) -> TransferredSequence:
    """b_1 = a_1, b_n = lam b_{n-1} + a_n, plus rho_N and sigma_N."""
    a = _as_seq(a)
    lam = complex(lam)
    if abs(lam) >= 1.0:
        raise LambdaNotContractive(f"|lambda| = {abs(lam)} >= 1")
    b = lfilter([1.0], [1.0, -lam], a.values)
    b = np.asarray(b, dtype=complex)
    b.setflags(write=False)
    rho2 = _fsum_abs_pow(b, 2)
    sigma2 = (1.0 - abs(lam) ** 2) * rho2 + abs(lam) ** 2 * abs(b[-1]) ** 2
    sigma2 = float(sigma2)
    return TransferredSequence(b, lam, math.sqrt(rho2), math.sqrt(sigma2), sigma2)


def invert_transfer(b: TransferredSequence) -> CoefficientSequence:
    vals = np.array(b.values, dtype=complex)
    vals[1:] -= b.lam * b.values[:-1]
    return CoefficientSequence(vals)


@dataclass
class NormBoundsReport:
    lower_ok: bool
    upper_ok: bool
    ratios: dict


def norm_bounds_check(a, lam: complex) -> NormBoundsReport:
    """Two-sided l2 bounds between a and b, and between |a| and sigma_N.

    ||a||/(1+|lam|) <= ||b|| <= ||a||/(1-|lam|) hold exactly at finite N.
    For sigma_N^2 the lower bound (1-|lam|)/(1+|lam|) ||a||^2 is exact, while
    the upper bound carries the boundary term |lam|^2 |b_N|^2 as slack.
    """
    a = _as_seq(a)
    tr = transfer(a, lam)
    r = abs(complex(lam))
    na = a.l2
    rel = 1e-12
    b_lo, b_hi = na / (1 + r), na / (1 - r)
    s_lo = (1 - r) / (1 + r) * a.sum2
    s_hi = (1 + r) / (1 - r) * a.sum2 + r**2 * abs(tr.b_N) ** 2
    lower_ok = tr.rho_N >= b_lo * (1 - rel) and tr.sigma2 >= s_lo * (1 - rel)
    upper_ok = tr.rho_N <= b_hi * (1 + rel) and tr.sigma2 <= s_hi * (1 + rel)
    ratios = {
        "b_over_a": tr.rho_N / na if na else math.nan,
        "b_lower": 1 / (1 + r),
        "b_upper": 1 / (1 - r),
        "sigma2_over_a2": tr.sigma2 / a.sum2 if na else math.nan,
        "sigma2_lower": (1 - r) / (1 + r),
        "sigma2_upper": (1 + r) / (1 - r),
    }
    return NormBoundsReport(bool(lower_ok), bool(upper_ok), ratios)


def lindeberg_ratios(a) -> dict:
    """|a_N|^2 / sum |a_n|^2 and max_n |a_n|^2 / sum |a_n|^2."""
    a = _as_seq(a)
    s2 = a.sum2
    if s2 == 0.0:
        raise AllZero("all coefficients vanish")
    sq = np.abs(a.values) ** 2
    return {"last_ratio": float(sq[-1] / s2), "max_ratio": float(sq.max() / s2)}


def lindeberg_transfer_bound(a, lam: complex) -> float:
    """Upper bound for max_ratio(b) in terms of max_ratio(a).

    Uses max|b_n| <= max|a_n| / (1-|lam|) and the finite-N lower bound
    ||b|| >= (||a|| - |lam| max|a_n| / (1-|lam|)) / (1+|lam|).  Returns inf
    when that lower bound is not positive.
    """
    a = _as_seq(a)
    r = abs(complex(lam))
    eps = lindeberg_ratios(a)["max_ratio"]
    denom = 1.0 - r * math.sqrt(eps) / (1 - r)
    if denom <= 0:
        return math.inf
    return ((1 + r) / (1 - r)) ** 2 * eps / denom**2


def generating_identity_check(a, lam: complex, z_samples) -> float:
    """max |A_N(z) - (1 - lam z) B_N(z) - lam b_N z^(N+1)| over the samples."""
    a = _as_seq(a)
    tr = transfer(a, lam)
    z = np.asarray(z_samples, dtype=complex)
    # polyval wants highest degree first; both polynomials have no constant term
    A = z * np.polyval(a.values[::-1], z)
    B = z * np.polyval(tr.values[::-1], z)
    N = len(a)
    res = A - (1 - tr.lam * z) * B - tr.lam * tr.b_N * z ** (N + 1)
    return float(np.max(np.abs(res)))


# --- coefficient families and the CSV schema ``n, re_a, im_a`` ---

def coefficient_family(spec, N: int) -> CoefficientSequence:
    """Build a_1..a_N for a named family.

    ``spec`` is a string such as ``"ones"``, ``"sqrt"``, ``"geometric 0.5"``,
    ``"power 3"`` (a_n = n^-3), ``"random 7"`` or ``"delta"`` (1, 0, 0, ...),
    or a mapping ``{"name": ..., "param": ...}``.
    """
    name, param = parse_family(spec)
    n = np.arange(1, N + 1, dtype=float)
    if name == "ones":
        vals = np.ones(N)
    elif name == "sqrt":
        vals = np.sqrt(n)
    elif name == "geometric":
        vals = float(param) ** n
    elif name == "power":
        vals = n ** (-float(param))
    elif name == "delta":
        vals = np.zeros(N)
        vals[0] = 1.0
    elif name == "random":
        rng = np.random.default_rng(int(param))
        vals = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    else:
        raise ValueError(f"unknown coefficient family {name!r}")
    return CoefficientSequence(vals)


_PARAM_DEFAULTS = {"ones": None, "sqrt": None, "delta": None,
                   "geometric": 0.5, "power": 1.0, "random": 0}


def parse_family(spec) -> tuple[str, object]:
    if isinstance(spec, dict):
        name, param = spec.get("name"), spec.get("param")
    else:
        parts = str(spec).split()
        if not parts:
            raise ValueError("empty coefficient family")
        name, param = parts[0], (parts[1] if len(parts) > 1 else None)
    if name not in _PARAM_DEFAULTS:
        raise ValueError(f"unknown coefficient family {name!r}")
    if param is None:
        param = _PARAM_DEFAULTS[name]
    if name == "geometric" and not 0 < abs(float(param)) < 1:
        raise ValueError("geometric ratio must lie in (0, 1)")
    return name, param


def family_tail_mass(spec, start: int) -> float:
    """sum_{n >= start} |a_n|^2 in closed form, for families where it is known."""
    name, param = parse_family(spec)
    if name == "geometric":
        r2 = abs(float(param)) ** 2
        return r2**start / (1 - r2)
    if name == "power":
        from scipy.special import zeta
        p2 = 2 * float(param)
        if p2 <= 1:
            return math.inf
        return float(zeta(p2, start))
    if name == "delta":
        return 1.0 if start <= 1 else 0.0
    return math.inf


def write_coefficients_csv(a, path) -> None:
    a = _as_seq(a)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "re_a", "im_a"])
        for n, v in enumerate(a.values, start=1):
            w.writerow([n, format(v.real, ".17g"), format(v.imag, ".17g")])


def read_coefficients_csv(path) -> CoefficientSequence:
    rows = []
    with open(Path(path), newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            if row[0].strip() == "n":
                continue
            n, re, im = (row + ["0"])[:3]
            rows.append((int(n), complex(float(re), float(im))))
    if not rows:
        raise ValueError(f"{path}: no coefficient rows")
    rows.sort()
    if [n for n, _ in rows] != list(range(1, len(rows) + 1)):
        raise ValueError(f"{path}: indices must run 1..N without gaps")
    return CoefficientSequence(np.array([v for _, v in rows]))
