"""Parameter algebra for LOMSE data ``(n, p, k)``.

A LOMSE of type ``(n, p, k)`` maps the unit sphere S^n into some S^m with
``p`` equal nonzero singular values ``lambda`` and ``n - p`` zero ones.  Every
downstream computation depends only on ``(n, p, lambda**2)``; ``k`` is an
entry point that fixes ``lambda**2 = k (k + n - 1) / p``.

Rational arithmetic (:class:`fractions.Fraction`) is used wherever the
quantities are rational, so boundary tests such as ``p * lambda**2 == n`` are
exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

import numpy as np

from .errors import LomseDomainError, NoConeError

__all__ = [
    "LomseParams",
    "lambda_from_npk",
    "solve_theta",
    "slope_equation_residual",
    "sphere_volume",
    "link_volume_profile",
    "link_volume_argmax",
    "validate_lomse",
    "is_hopf_pair",
    "hopf_partners",
]


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, Rational):
        return Fraction(value)
    f = float(value)
    if not math.isfinite(f):
        raise LomseDomainError(f"lambda_sq must be finite, got {value!r}")
    return Fraction(f)


def _check_np(n: int, p: int) -> None:
    if int(n) != n or int(p) != p:
        raise LomseDomainError(f"n and p must be integers, got n={n!r}, p={p!r}")
    if n < 2:
        raise LomseDomainError(f"n must be >= 2, got {n}")
    if not 1 <= p < n:
        raise LomseDomainError(f"p must satisfy 1 <= p < n, got p={p}, n={n}")


def lambda_from_npk(n: int, p: int, k: int) -> Fraction:
    """Return ``lambda**2 = k (k + n - 1) / p`` as an exact fraction."""
    _check_np(n, p)
    if int(k) != k or k < 1:
        raise LomseDomainError(f"k must be a positive integer, got {k!r}")
    return Fraction(k * (k + n - 1), p)


def _theta_exact(n: int, p: int, lambda_sq: Fraction) -> tuple[Fraction, Fraction]:
    _check_np(n, p)
    if lambda_sq <= 0:
        raise LomseDomainError(f"lambda_sq must be positive, got {lambda_sq}")
    if p * lambda_sq <= n:
        raise NoConeError(
            f"NoCone: p*lambda^2 = {float(p * lambda_sq):g} <= n = {n}; "
            "the slope equation only has the flat root cos^2(theta) = 1"
        )
    # Cleared of denominators the slope equation is a quadratic in c with
    # roots c = 1 and the value below.
    c = (n - p) * lambda_sq / (n * (lambda_sq - 1))
    tan_sq = (p * lambda_sq - n) / ((n - p) * lambda_sq)
    return c, tan_sq


def solve_theta(n: int, p: int, lambda_sq) -> tuple[float, float]:
    """Solve the slope equation for the cone angle.

    Returns ``(cos2_theta, phi0)`` where ``c = cos2_theta`` is the root in
    (0, 1) of ``(n-p)/c + p/(c + lambda_sq (1-c)) = n`` and
    ``phi0 = tan(theta)`` is the slope of the cone ray.

    Raises :class:`NoConeError` when ``p * lambda_sq <= n``.
    """
    c, tan_sq = _theta_exact(n, p, _as_fraction(lambda_sq))
    return float(c), math.sqrt(float(tan_sq))


def slope_equation_residual(n: int, p: int, lambda_sq, c) -> float:
    """Relative residual of the slope equation at ``cos2_theta = c``."""
    lam = float(lambda_sq)
    c = float(c)
    lhs = (n - p) / c + p / (c + lam * (1.0 - c))
    return (lhs - n) / n


def sphere_volume(n: int) -> float:
    """Volume of the unit n-sphere, ``2 pi^((n+1)/2) / Gamma((n+1)/2)``."""
    half = 0.5 * (n + 1)
    return math.exp(math.log(2.0) + half * math.log(math.pi) - math.lgamma(half))


@dataclass(frozen=True)
class LomseParams:
    """Algebraic identity of one Lawson-Osserman cone.

    Build with :meth:`from_npk` or :meth:`from_lambda`; the derived fields are
    filled in by ``__post_init__`` and the constructor raises
    :class:`NoConeError` for parameters without a cone.
    """

    n: int
    p: int
    lambda_sq_exact: Fraction
    k: int | None = None
    cos2_theta_exact: Fraction = field(init=False, repr=False)
    tan2_theta_exact: Fraction = field(init=False, repr=False)
    lambda_sq: float = field(init=False)
    cos2_theta: float = field(init=False)
    phi0: float = field(init=False)
    sigma0: float = field(init=False)

    def __post_init__(self):
        lam = _as_fraction(self.lambda_sq_exact)
        c, tan_sq = _theta_exact(self.n, self.p, lam)
        object.__setattr__(self, "lambda_sq_exact", lam)
        object.__setattr__(self, "cos2_theta_exact", c)
        object.__setattr__(self, "tan2_theta_exact", tan_sq)
        object.__setattr__(self, "lambda_sq", float(lam))
        object.__setattr__(self, "cos2_theta", float(c))
        object.__setattr__(self, "phi0", math.sqrt(float(tan_sq)))
        object.__setattr__(self, "sigma0", sphere_volume(self.n))

    @classmethod
    def from_npk(cls, n: int, p: int, k: int) -> "LomseParams":
        return cls(n, p, lambda_from_npk(n, p, k), k=k)

    @classmethod
    def from_lambda(cls, n: int, p: int, lambda_sq) -> "LomseParams":
        return cls(n, p, _as_fraction(lambda_sq))

    @property
    def theta(self) -> float:
        return math.atan(self.phi0)

    @property
    def sec_theta(self) -> float:
        return math.sqrt(1.0 + self.phi0 * self.phi0)

    @property
    def cone_factor(self) -> float:
        """``1 + lambda^2 tan^2(theta)``, exact value ``p (lambda^2 - 1) / (n - p)``."""
        return float(1 + self.lambda_sq_exact * self.tan2_theta_exact)

    def label(self) -> str:
        if self.k is not None:
            return f"({self.n},{self.p},{self.k})"
        return f"(n={self.n},p={self.p},lambda^2={self.lambda_sq:g})"

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "k": self.k,
            "lambda_sq": self.lambda_sq,
        }


def link_volume_profile(params: LomseParams, alpha):
    """Relative volume of the spherical-graph link at height ``alpha``.

    ``V(alpha) = alpha^(n-p) (alpha^2 + lambda^2 (1 - alpha^2))^(p/2)``, the
    volume of ``{(alpha x, sqrt(1-alpha^2) eta(x))}`` up to a constant.
    Accepts scalars or arrays with entries in (0, 1).
    """
    a = np.asarray(alpha, dtype=float)
    if np.any((a <= 0.0) | (a >= 1.0)):
        raise LomseDomainError("alpha must lie in the open interval (0, 1)")
    n, p, lam = params.n, params.p, params.lambda_sq
    v = a ** (n - p) * (a * a + lam * (1.0 - a * a)) ** (0.5 * p)
    return v if v.ndim else float(v)


def link_volume_argmax(params: LomseParams, xatol: float = 1e-12) -> float:
    """Maximiser of :func:`link_volume_profile` by bounded scalar search."""
    from scipy.optimize import minimize_scalar

    res = minimize_scalar(
        lambda a: -math.log(link_volume_profile(params, a)),
        bounds=(1e-9, 1.0 - 1e-12),
        method="bounded",
        options={"xatol": xatol},
    )
    return float(res.x)


def is_hopf_pair(n: int, p: int) -> bool:
    """True for the Hopf fibration dimensions (2a+1, 2a), (4a+3, 4a), (15, 8)."""
    if n == 15 and p == 8:
        return True
    if p >= 2 and p % 2 == 0 and n == p + 1:
        return True
    if p >= 4 and p % 4 == 0 and n == p + 3:
        return True
    return False


def hopf_partners(n: int) -> list[int]:
    """All ``p`` with ``(n, p)`` of Hopf type, in increasing order."""
    return [p for p in range(1, n) if is_hopf_pair(n, p)]


def validate_lomse(n: int, p: int, k: int) -> list[str]:
    """Warnings for triples with no known LOMSE realisation.

    Never raises; the dynamical system is defined for abstract ``(n, p,
    lambda)`` regardless of these warnings.
    """
    warnings = []
    if k % 2:
        warnings.append("k odd: no LOMSE realization known")
    if not is_hopf_pair(n, p):
        warnings.append("(n,p) not of Hopf fibration type")
    return warnings
