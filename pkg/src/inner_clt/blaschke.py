"""Finite Blaschke products vanishing at the origin and their boundary dynamics.

A product is stored by its zeros and a unimodular rotation.  Each nonzero
zero ``a`` contributes the factor ``(|a|/a) (a - z) / (1 - conj(a) z)``, which
maps 0 to ``|a| > 0``; a zero at the origin contributes ``z``.

Everything here is vectorised over the evaluation point, so orbits of many
boundary points can be advanced together.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import RotationInput, ZeroOnBoundary

DEFAULT_MAX_MODULUS = 0.95
UNIT_TOL = 1e-12


def as_unit(value, tol: float = 1e-6):
    """Project ``value`` (scalar or array) onto the unit circle.

    Raises ValueError if some entry is further than ``tol`` from the circle,
    which would mean the caller passed a point that is not on it at all.
    """
    arr = np.asarray(value, dtype=complex)
    mod = np.abs(arr)
    if np.any(np.abs(mod - 1.0) > tol):
        raise ValueError("point is not on the unit circle")
    out = arr / mod
    return complex(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SchwarzPickData:
    lam: complex
    mu: complex

    def __post_init__(self):
        if not abs(self.lam) < 1.0:
            raise RotationInput(f"|lambda| = {abs(self.lam)} is not < 1")
        if abs(self.mu) > 1.0 - abs(self.lam) ** 2 + 1e-10:
            raise ValueError("Schwarz-Pick bound |mu| <= 1 - |lambda|^2 violated")


@dataclass(frozen=True)
class BlaschkeProduct:
    """Finite Blaschke product f with f(0) = 0 and degree >= 2."""

    zeros: tuple[complex, ...]
    rotation: complex = 1.0 + 0.0j
    max_modulus: float = field(default=DEFAULT_MAX_MODULUS, compare=False, repr=False)

    def __post_init__(self):
        zeros = tuple(complex(a) for a in self.zeros)
        object.__setattr__(self, "zeros", zeros)
        object.__setattr__(self, "rotation", complex(self.rotation))
        for a in zeros:
            if abs(a) >= 1.0:
                raise ZeroOnBoundary(f"zero {a} is not inside the unit disc")
            if abs(a) > self.max_modulus:
                raise ValueError(
                    f"zero {a} exceeds the modulus cap {self.max_modulus}"
                )
        if not any(a == 0 for a in zeros):
            raise ValueError("at least one zero must be exactly 0 so that f(0) = 0")
        if abs(abs(self.rotation) - 1.0) > UNIT_TOL:
            raise ValueError("rotation must have modulus 1")
        if len(zeros) < 2:
            raise RotationInput("degree-1 products are rotations")

    @property
    def degree(self) -> int:
        return len(self.zeros)

    @classmethod
    def power(cls, k: int) -> "BlaschkeProduct":
        """The monomial z**k."""
        return cls((0.0,) * k)

    @classmethod
    def from_zeros(cls, zeros: Sequence[complex], rotation: complex = 1.0, **kw):
        return cls(tuple(zeros), rotation, **kw)

    def __call__(self, z):
        return blaschke_eval(self, z)

    # JSON form: {"zeros": [[re, im], ...], "rotation": [re, im]}
    def to_dict(self) -> dict:
        return {
            "zeros": [[a.real, a.imag] for a in self.zeros],
            "rotation": [self.rotation.real, self.rotation.imag],
        }

    @classmethod
    def from_dict(cls, data: dict, **kw) -> "BlaschkeProduct":
        zeros = tuple(complex(re, im) for re, im in data["zeros"])
        rot = data.get("rotation", [1.0, 0.0])
        return cls(zeros, complex(rot[0], rot[1]), **kw)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str, **kw) -> "BlaschkeProduct":
        return cls.from_dict(json.loads(text), **kw)


def random_blaschke(rng: np.random.Generator, max_degree: int = 5,
                    max_modulus: float = DEFAULT_MAX_MODULUS) -> BlaschkeProduct:
    """Draw a valid product: a zero at 0 plus up to max_degree - 1 random zeros."""
    degree = int(rng.integers(2, max_degree + 1))
    r = max_modulus * np.sqrt(rng.random(degree - 1))
    theta = 2 * np.pi * rng.random(degree - 1)
    zeros = (0.0,) + tuple(r * np.exp(1j * theta))
    rotation = np.exp(2j * np.pi * rng.random())
    return BlaschkeProduct(zeros, rotation, max_modulus=max_modulus)


def _raw_eval(f: BlaschkeProduct, z: np.ndarray) -> np.ndarray:
    out = np.full(z.shape, f.rotation, dtype=complex)
    for a in f.zeros:
        if a == 0:
            out *= z
        else:
            out *= (abs(a) / a) * (a - z) / (1.0 - a.conjugate() * z)
    return out


def blaschke_eval(f: BlaschkeProduct, z, renormalize: bool = True):
    """Evaluate f at points of the closed disc.

    Points lying on the circle (within 1e-12) have their images projected
    back onto the circle unless ``renormalize`` is False.
    """
    arr = np.asarray(z, dtype=complex)
    if np.any(np.abs(arr) > 1.0 + UNIT_TOL):
        raise ValueError("evaluation point outside the closed unit disc")
    out = _raw_eval(f, arr)
    if renormalize:
        on_circle = np.abs(np.abs(arr) - 1.0) <= UNIT_TOL
        if np.any(on_circle):
            out = np.where(on_circle, out / np.abs(out), out)
    return complex(out) if out.ndim == 0 else out


def schwarz_pick_data(f: BlaschkeProduct) -> SchwarzPickData:
    """lambda = conj f'(0) and mu = conj f''(0) / 2 from the factorisation.

    Writing f = c z^k prod phi_a with phi_a(0) = |a| and
    phi_a'(0) / phi_a(0) = (|a|^2 - 1) / a gives the two Taylor
    coefficients in closed form.
    """
    if f.degree < 2:
        raise RotationInput("degree-1 products are rotations")
    k = sum(1 for a in f.zeros if a == 0)
    others = [a for a in f.zeros if a != 0]
    g0 = f.rotation * np.prod([abs(a) for a in others]) if others else f.rotation
    if k == 1:
        d1 = g0
        d2 = g0 * sum((abs(a) ** 2 - 1.0) / a for a in others)
    elif k == 2:
        d1, d2 = 0.0, g0
    else:
        d1, d2 = 0.0, 0.0
    return SchwarzPickData(complex(d1).conjugate(), complex(d2).conjugate())


def iterate_boundary(f: BlaschkeProduct, omega, n: int):
    """f composed n times, applied to boundary point(s) omega."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    z = np.asarray(as_unit(omega), dtype=complex)
    for _ in range(n):
        z = _raw_eval(f, z)
        z = z / np.abs(z)
    return complex(z) if z.ndim == 0 else z


def orbit_row(f: BlaschkeProduct, omega, N: int) -> np.ndarray:
    """Array of shape (N, *omega.shape) holding f^1(omega), ..., f^N(omega).

    One sequential pass; row n-1 is exactly what iterate_boundary returns
    for n.
    """
    if N < 1:
        raise ValueError("N must be positive")
    z = np.asarray(as_unit(omega), dtype=complex)
    out = np.empty((N,) + z.shape, dtype=complex)
    for n in range(N):
        z = _raw_eval(f, z)
        z = z / np.abs(z)
        out[n] = z
    return out
