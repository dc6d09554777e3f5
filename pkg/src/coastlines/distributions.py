"""Closed-form and tabulated densities: modified Cauchy, Cauchy, Gaussian, arcsine."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from .errors import DegenerateInputError, DomainError

NORMALIZATION_POINTS = 2048


@dataclass(frozen=True)
class ModCauchyParams:
    """Shape/scale of ``beta / (beta + |x|**alpha)`` restricted to ``support``."""

    beta: float
    alpha: float
    support: tuple[float, float]

    def __post_init__(self):
        a, b = self.support
        if not (self.beta > 0 and self.alpha > 0):
            raise DomainError(f"modified Cauchy needs beta > 0 and alpha > 0, got {self.beta}, {self.alpha}")
        if not a < b:
            raise DomainError(f"support must satisfy a < b, got {self.support}")
        object.__setattr__(self, "support", (float(a), float(b)))


@lru_cache(maxsize=256)
def _modcauchy_normalizer(beta, alpha, a, b):
    xs = np.linspace(a, b, NORMALIZATION_POINTS)
    return float(np.trapezoid(beta / (beta + np.abs(xs) ** alpha), xs))


def modcauchy_density(x, p: ModCauchyParams, normalized=False):
    """Modified Cauchy density; value 1 at x=0 unless ``normalized``.

    The normalized form divides by a trapezoid integral over ``p.support``
    on a uniform 2048-point grid. Accepts scalars or arrays.
    """
    xa = np.asarray(x, dtype=float)
    val = p.beta / (p.beta + np.abs(xa) ** p.alpha)
    if normalized:
        a, b = p.support
        if np.any((xa < a) | (xa > b)):
            raise DomainError(f"x outside support {p.support}")
        val = val / _modcauchy_normalizer(p.beta, p.alpha, a, b)
    return float(val) if val.ndim == 0 else val


def fwhm(p: ModCauchyParams) -> float:
    return p.beta ** (1.0 / p.alpha)


def heavy_tail_ratio(x, p: ModCauchyParams):
    """Ratio of the modified Cauchy shape to the Cauchy shape, ``beta(1+x^2)/(beta+|x|^alpha)``.

    Grows without bound for 0 < alpha < 2.
    """
    xa = np.asarray(x, dtype=float)
    val = p.beta * (1.0 + xa**2) / (p.beta + np.abs(xa) ** p.alpha)
    return float(val) if val.ndim == 0 else val


# analytic families


@dataclass(frozen=True)
class Gaussian:
    mean: float = 0.0
    stddev: float = 1.0

    def __post_init__(self):
        if not self.stddev > 0:
            raise DomainError(f"stddev must be positive, got {self.stddev}")


@dataclass(frozen=True)
class StandardCauchy:
    pass


@dataclass(frozen=True)
class ModCauchy:
    params: ModCauchyParams


@dataclass(frozen=True)
class Arcsine:
    """Arcsine law on [-1, 1]."""


AnalyticPdf = Union[Gaussian, StandardCauchy, ModCauchy, Arcsine]


def eval_pdf(f: AnalyticPdf, x):
    xa = np.asarray(x, dtype=float)
    if isinstance(f, Gaussian):
        z = (xa - f.mean) / f.stddev
        val = np.exp(-0.5 * z * z) / (f.stddev * math.sqrt(2.0 * math.pi))
    elif isinstance(f, StandardCauchy):
        val = 1.0 / (math.pi * (1.0 + xa * xa))
    elif isinstance(f, ModCauchy):
        return modcauchy_density(x, f.params, normalized=True)
    elif isinstance(f, Arcsine):
        if np.any(np.abs(xa) >= 1.0):
            raise DomainError("arcsine density needs |x| < 1")
        val = 1.0 / (math.pi * np.sqrt(1.0 - xa * xa))
    else:
        raise TypeError(f"unknown pdf family {f!r}")
    return float(val) if val.ndim == 0 else val


# tabulated densities


@dataclass(frozen=True, eq=False)
class PdfGrid:
    xs: np.ndarray
    ps: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ps = np.asarray(self.ps, dtype=float)
        if xs.ndim != 1 or xs.shape != ps.shape:
            raise DegenerateInputError("xs and ps must be 1-D and the same length")
        if len(xs) < 2:
            raise DegenerateInputError("a PdfGrid needs at least 2 nodes")
        if np.any(np.diff(xs) <= 0):
            raise DegenerateInputError("xs must be strictly increasing")
        if np.any(ps < 0) or not np.all(np.isfinite(ps)):
            raise DegenerateInputError("ps must be finite and non-negative")
        xs.flags.writeable = False
        ps.flags.writeable = False
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ps", ps)

    def __len__(self):
        return len(self.xs)

    def integral(self) -> float:
        return float(np.trapezoid(self.ps, self.xs))

    def cdf(self) -> np.ndarray:
        """Cumulative trapezoid integral at the nodes, starting at 0."""
        steps = 0.5 * (self.ps[1:] + self.ps[:-1]) * np.diff(self.xs)
        return np.concatenate(([0.0], np.cumsum(steps)))

    def __call__(self, x):
        """Piecewise-linear interpolation; zero outside the grid."""
        return np.interp(x, self.xs, self.ps, left=0.0, right=0.0)


def tabulate(f: AnalyticPdf, xs) -> PdfGrid:
    xs = np.asarray(xs, dtype=float)
    return PdfGrid(xs, eval_pdf(f, xs))


def normalize_on_support(g: PdfGrid) -> PdfGrid:
    total = g.integral()
    if not total > 0:
        raise DegenerateInputError(f"cannot normalize a density with integral {total}")
    return PdfGrid(g.xs, g.ps / total)


def grid_to_csv(g: PdfGrid) -> str:
    buf = io.StringIO()
    buf.write("x,p\n")
    for x, p in zip(g.xs, g.ps):
        buf.write(f"{x:.17g},{p:.17g}\n")
    return buf.getvalue()


def grid_from_csv(text: str) -> PdfGrid:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["x", "p"]:
        raise DegenerateInputError("expected a CSV with header 'x,p'")
    data = np.array([[float(c) for c in r] for r in rows[1:] if r], dtype=float)
    if data.size == 0:
        raise DegenerateInputError("empty density CSV")
    return PdfGrid(data[:, 0], data[:, 1])
