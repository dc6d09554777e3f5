"""Coastline -> distribution: azimuths, the generalized Cauchy density, and a lighthouse sampler.

The lighthouse sits at ``(0, y0)``. Azimuths are measured from straight down,
positive toward +x, so the flat coastline ``y = 0`` seen from ``(0, 1)`` maps
``theta`` to ``x = tan(theta)``.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .distributions import PdfGrid
from .errors import (
    DegenerateInputError,
    DomainError,
    GeometryError,
    NoIntersectionError,
)

HALF_PI = 0.5 * math.pi
ON_GRAPH_TOL = 1e-12
SAMPLE_CHUNK = 1 << 16


def _out(val):
    return float(val) if np.ndim(val) == 0 else val


@dataclass(frozen=True)
class AzimuthalBounds:
    lo: float
    hi: float

    def __post_init__(self):
        if not (-math.pi <= self.lo < self.hi <= math.pi):
            raise DomainError(f"azimuthal bounds need -pi <= lo < hi <= pi, got ({self.lo}, {self.hi})")

    @property
    def width(self) -> float:
        return self.hi - self.lo


# coastlines


class Coastline:
    """A curve ``y = f(x)`` on ``domain``; subclasses provide ``f`` and ``slope``."""

    name = "coastline"
    domain: tuple[float, float] = (-math.inf, math.inf)

    def f(self, x):
        raise NotImplementedError

    def slope(self, x):
        raise NotImplementedError

    def check_domain(self, x):
        a, b = self.domain
        xa = np.asarray(x, dtype=float)
        if np.any((xa < a) | (xa > b)) or np.any(np.isnan(xa)):
            raise DomainError(f"x outside the {self.name} domain [{a}, {b}]")
        return xa

    def endpoint_azimuths(self, y0: float) -> tuple[float, float]:
        """Limits of theta at the two ends of the domain."""
        raise NotImplementedError

    def ray_intersect(self, y0: float, theta):
        raise NotImplementedError


class _Line(Coastline):
    m = 0.0

    def f(self, x):
        return _out(self.m * self.check_domain(x))

    def slope(self, x):
        return _out(np.full_like(self.check_domain(x), self.m))

    def endpoint_azimuths(self, y0):
        # far along the line the ray direction is (+-1, +-m) regardless of y0
        return (math.atan2(-1.0, self.m), math.atan2(1.0, -self.m))

    def ray_intersect(self, y0, theta):
        th = np.asarray(theta, dtype=float)
        denom = np.cos(th) + self.m * np.sin(th)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = y0 / denom
        if np.any(~np.isfinite(r) | (r <= 0)):
            raise NoIntersectionError(f"ray misses the {self.name} coastline")
        return _out(r * np.sin(th))

    def __repr__(self):
        return f"{type(self).__name__}()"

    def __eq__(self, other):
        return type(self) is type(other)

    def __hash__(self):
        return hash(type(self))


class Flat(_Line):
    name = "flat"
    m = 0.0


class Line45(_Line):
    name = "line45"
    m = 1.0


class Line135(_Line):
    name = "line135"
    m = -1.0


class LowerSemicircle(Coastline):
    """Lower half of the unit circle centred at (0, 1): ``f(x) = 1 - sqrt(1 - x^2)``."""

    name = "semicircle"
    domain = (-1.0, 1.0)

    def f(self, x):
        xa = self.check_domain(x)
        return _out(1.0 - np.sqrt(1.0 - xa * xa))

    def slope(self, x):
        xa = self.check_domain(x)
        with np.errstate(divide="ignore"):
            return _out(xa / np.sqrt(1.0 - xa * xa))

    def endpoint_azimuths(self, y0):
        return (math.atan2(-1.0, y0 - 1.0), math.atan2(1.0, y0 - 1.0))

    def ray_intersect(self, y0, theta):
        th = np.asarray(theta, dtype=float)
        s, c = np.sin(th), np.cos(th)
        if y0 == 1.0:
            if np.any(np.abs(th) > HALF_PI):
                raise NoIntersectionError("ray misses the lower semicircle")
            return _out(s)
        # |L + r d - (0, 1)|^2 = 1 along the ray d = (sin, -cos)
        k = y0 - 1.0
        disc = c * c * k * k - k * k + 1.0
        with np.errstate(invalid="ignore"):
            root = np.sqrt(disc)
        best = np.full(th.shape, np.nan)
        for r in (c * k - root, c * k + root):
            hit = (r > 0) & (y0 - r * c <= 1.0 + ON_GRAPH_TOL) & np.isnan(best)
            best = np.where(hit, r, best)
        if np.any(np.isnan(best)):
            raise NoIntersectionError("ray misses the lower semicircle")
        return _out(np.clip(best * s, -1.0, 1.0))

    def __repr__(self):
        return "LowerSemicircle()"

    def __eq__(self, other):
        return type(self) is type(other)

    def __hash__(self):
        return hash(type(self))


class Tabulated(Coastline):
    """Piecewise-linear coastline with explicitly stored slopes.

    ``slopes[i]`` is the derivative used on ``[xs[i], xs[i+1])`` and at node i;
    the last node keeps its own entry.
    """

    name = "tabulated"

    def __init__(self, xs, fs, slopes):
        xs = np.array(xs, dtype=float)
        fs = np.array(fs, dtype=float)
        slopes = np.array(slopes, dtype=float)
        if xs.ndim != 1 or not (xs.shape == fs.shape == slopes.shape):
            raise DegenerateInputError("xs, fs and slopes must be 1-D and the same length")
        if len(xs) < 2:
            raise DegenerateInputError("a tabulated coastline needs at least 2 nodes")
        if np.any(np.diff(xs) <= 0):
            raise DegenerateInputError("xs must be strictly increasing")
        if not (np.all(np.isfinite(fs)) and np.all(np.isfinite(slopes))):
            raise DegenerateInputError("fs and slopes must be finite")
        for arr in (xs, fs, slopes):
            arr.flags.writeable = False
        self.xs, self.fs, self.slopes = xs, fs, slopes
        self.domain = (float(xs[0]), float(xs[-1]))

    def __len__(self):
        return len(self.xs)

    def __repr__(self):
        return f"Tabulated(n={len(self.xs)}, domain={self.domain})"

    def f(self, x):
        return _out(np.interp(self.check_domain(x), self.xs, self.fs))

    def segment_index(self, x):
        xa = self.check_domain(x)
        return np.clip(np.searchsorted(self.xs, xa, side="right") - 1, 0, len(self.xs) - 1)

    def slope(self, x):
        return _out(self.slopes[self.segment_index(x)])

    def node_azimuths(self, y0):
        return azimuth_of(self.xs, self.fs, y0)

    def endpoint_azimuths(self, y0):
        th = azimuth_of(self.xs[[0, -1]], self.fs[[0, -1]], y0)
        return (float(th[0]), float(th[1]))

    def ray_intersect(self, y0, theta):
        th = np.asarray(theta, dtype=float)
        nodes = self.node_azimuths(y0)
        steps = np.diff(nodes)
        if np.all(steps > 0):
            order = np.arange(len(nodes))
        elif np.all(steps < 0):
            order = np.arange(len(nodes))[::-1]
        else:
            raise GeometryError("node azimuths are not strictly monotone")
        sorted_nodes = nodes[order]
        if np.any((th < sorted_nodes[0]) | (th > sorted_nodes[-1])):
            raise NoIntersectionError("azimuth outside the tabulated coastline's bounds")
        j = np.clip(np.searchsorted(sorted_nodes, th, side="right") - 1, 0, len(nodes) - 2)
        i = np.minimum(order[j], order[j + 1])
        ax, ay = self.xs[i], self.fs[i]
        ex, ey = self.xs[i + 1] - ax, self.fs[i + 1] - ay
        s, c = np.sin(th), np.cos(th)
        # point A + t E lies on the ray from (0, y0) along (sin, -cos)
        t = -(s * (ay - y0) + c * ax) / (s * ey + c * ex)
        return _out(ax + np.clip(t, 0.0, 1.0) * ex)


BUILTINS = {
    "flat": Flat(),
    "line45": Line45(),
    "line135": Line135(),
    "semicircle": LowerSemicircle(),
}


def coastline_to_csv(c: Tabulated) -> str:
    buf = io.StringIO()
    buf.write("x,f,slope\n")
    for x, fx, sl in zip(c.xs, c.fs, c.slopes):
        buf.write(f"{x:.17g},{fx:.17g},{sl:.17g}\n")
    return buf.getvalue()


def coastline_from_csv(text: str) -> Tabulated:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["x", "f", "slope"]:
        raise DegenerateInputError("expected a CSV with header 'x,f,slope'")
    data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    if data.size == 0:
        raise DegenerateInputError("empty coastline CSV")
    return Tabulated(data[:, 0], data[:, 1], data[:, 2])


def tabulate_coastline(c: Coastline, xs) -> Tabulated:
    xs = np.asarray(xs, dtype=float)
    return Tabulated(xs, c.f(xs), c.slope(xs))


# azimuths and the coastline condition


def azimuth_of(x, fx, y0):
    """Azimuth of the coastline point ``(x, fx)`` seen from ``(0, y0)``.

    Below the lighthouse this is ``arctan(x / (y0 - fx))``; above it,
    ``arctan((fx - y0) / x) + sgn(x) pi/2``. A point straight above maps to pi.
    """
    xa, fa = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(fx, dtype=float))
    if np.any((xa == 0) & (fa == y0)):
        raise DomainError("the point coincides with the lighthouse")
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        below = np.arctan(xa / (y0 - fa))
        above = np.arctan((fa - y0) / xa) + np.sign(xa) * HALF_PI
    above = np.where(xa == 0, math.pi, above)
    return _out(np.where(fa <= y0, below, above))


@dataclass(frozen=True)
class CoastlineCheck:
    ok: bool
    bounds: Optional[AzimuthalBounds]
    reason: str = "ok"


def check_coastline_condition(c: Coastline, y0: float, probe_xs) -> CoastlineCheck:
    """Lighthouse off the graph and theta strictly monotone over the probes.

    Bounds are taken at the first and last probe.
    """
    probes = np.asarray(probe_xs, dtype=float)
    if probes.ndim != 1 or len(probes) < 3 or np.any(np.diff(probes) <= 0):
        return CoastlineCheck(False, None, "bad_probes")
    try:
        c.check_domain(probes)
    except DomainError:
        return CoastlineCheck(False, None, "probes_outside_domain")
    a, b = c.domain
    if a <= 0.0 <= b and abs(float(c.f(0.0)) - y0) <= ON_GRAPH_TOL:
        return CoastlineCheck(False, None, "lighthouse_on_graph")
    fs = np.asarray(c.f(probes), dtype=float)
    if np.any((probes == 0) & (np.abs(fs - y0) <= ON_GRAPH_TOL)):
        return CoastlineCheck(False, None, "lighthouse_on_graph")
    theta = azimuth_of(probes, fs, y0)
    steps = np.diff(theta)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        return CoastlineCheck(False, None, "not_injective")
    lo, hi = sorted((float(theta[0]), float(theta[-1])))
    return CoastlineCheck(True, AzimuthalBounds(lo, hi))


def natural_bounds(c: Coastline, y0: float) -> AzimuthalBounds:
    """Azimuthal bounds at the ends of the coastline's own domain."""
    t0, t1 = c.endpoint_azimuths(y0)
    return AzimuthalBounds(min(t0, t1), max(t0, t1))


# forward density


def gencauchy_density(c: Coastline, y0: float, b: AzimuthalBounds, x):
    """Density of landing abscissae for uniform azimuths on ``b``.

    ``|(y0 - f) + x f'| / (x^2 + (y0 - f)^2) / (hi - lo)``.
    """
    xa = c.check_domain(x)
    fx = np.asarray(c.f(xa), dtype=float)
    fp = np.asarray(c.slope(xa), dtype=float)
    y = y0 - fx
    with np.errstate(invalid="ignore", divide="ignore"):
        val = np.abs(y + xa * fp) / (xa * xa + y * y) / b.width
    return _out(val)


def ray_intersect(c: Coastline, y0: float, theta):
    """Abscissa where the ray at azimuth ``theta`` meets the coastline."""
    return c.ray_intersect(y0, theta)


def gencauchy_grid(c: Coastline, y0: float, xs, bounds: Optional[AzimuthalBounds] = None) -> PdfGrid:
    xs = np.asarray(xs, dtype=float)
    if bounds is None:
        bounds = natural_bounds(c, y0)
    return PdfGrid(xs, gencauchy_density(c, y0, bounds, xs))


# Monte Carlo lighthouse


def thread_count(threads: Optional[int] = None) -> int:
    if threads is None:
        threads = int(os.environ.get("COASTLINE_THREADS", "0") or 0)
    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads


def _uniform_chunk(seed: int, k: int, m: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(k,))))
    # midpoints of a 2**53 lattice: strictly inside (0, 1)
    return (rng.integers(0, 1 << 53, size=m, dtype=np.int64) + 0.5) * 2.0**-53


def uniform_open(n: int, seed: int, threads: Optional[int] = None) -> np.ndarray:
    """``n`` uniforms on (0, 1) from fixed 2**16-sample counter-based chunks.

    Output depends only on ``(seed, n)``, never on the thread count.
    """
    if n < 0:
        raise DomainError("n must be non-negative")
    starts = range(0, n, SAMPLE_CHUNK)
    jobs = [(seed, k, min(SAMPLE_CHUNK, n - s)) for k, s in enumerate(starts)]
    if not jobs:
        return np.empty(0)
    workers = min(thread_count(threads), len(jobs))
    if workers == 1:
        parts = [_uniform_chunk(*job) for job in jobs]
    else:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda job: _uniform_chunk(*job), jobs))
    return np.concatenate(parts)


def sample_hits(c: Coastline, y0: float, b: AzimuthalBounds, n: int, seed: int, threads=None) -> np.ndarray:
    """Landing abscissae of ``n`` flashes with azimuths uniform on ``(b.lo, b.hi)``."""
    u = uniform_open(n, seed, threads)
    if n == 0:
        return u
    theta = b.lo + b.width * u
    return np.asarray(c.ray_intersect(y0, theta), dtype=float)


def _ks(sorted_samples: np.ndarray, cdf_vals: np.ndarray) -> float:
    n = len(sorted_samples)
    upper = np.arange(1, n + 1) / n - cdf_vals
    lower = cdf_vals - np.arange(n) / n
    return float(max(upper.max(), lower.max()))


def ks_distance(samples, pdf: PdfGrid) -> float:
    """Sup distance between the empirical CDF and the trapezoid CDF of ``pdf``."""
    s = np.sort(np.asarray(samples, dtype=float))
    if len(s) == 0:
        raise DegenerateInputError("ks_distance needs at least one sample")
    cdf = pdf.cdf()
    return _ks(s, np.interp(s, pdf.xs, cdf, left=0.0, right=cdf[-1]))


def ks_distance_cdf(samples, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    s = np.sort(np.asarray(samples, dtype=float))
    if len(s) == 0:
        raise DegenerateInputError("ks_distance needs at least one sample")
    return _ks(s, np.asarray(cdf(s), dtype=float))
