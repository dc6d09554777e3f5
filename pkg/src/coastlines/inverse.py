"""Distribution -> coastline via the sine-squared heuristic.

The heuristic asserts ``p(x) = sin(phi(x))**2 / kappa`` where ``phi`` is the
angle from the lighthouse ray to the coastline tangent. Given the angle, the
coastline slope is ``tan(theta + phi - pi/2)`` and the curve is built by
forward steps from the first node.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .distributions import PdfGrid
from .errors import (
    AlignmentError,
    ArcsinDomainError,
    BlowUpError,
    CoastlineError,
    DegenerateInputError,
    DomainError,
    GeometryError,
    NoFeasibleKappaError,
)
from .geometry import Coastline, Tabulated, check_coastline_condition, gencauchy_density

HALF_PI = 0.5 * math.pi
MAX_SLOPE = 1e12
KAPPA_CEILING = 5.0
# kappa * p may exceed 1 by rounding alone, e.g. pi * (1/pi)
ARCSIN_SLACK = 1e-12
ODE_EXCLUSION = 1e-6


@dataclass(frozen=True)
class HeuristicConfig:
    y0: float
    kappa: float
    f1: float = 0.0

    def __post_init__(self):
        if not self.kappa > 0:
            raise DomainError(f"kappa must be positive, got {self.kappa}")


def phi_of(p, kappa: float):
    """``arcsin(sqrt(kappa * p))``; raises rather than clamping when ``kappa * p > 1``."""
    q = kappa * np.asarray(p, dtype=float)
    if np.any(q > 1.0 + ARCSIN_SLACK) or np.any(q < 0):
        raise ArcsinDomainError(f"kappa * p = {float(np.max(q)):.17g} outside [0, 1]")
    val = np.arcsin(np.sqrt(np.minimum(q, 1.0)))
    return float(val) if val.ndim == 0 else val


def _azimuth(x: float, f: float, y0: float) -> float:
    if f <= y0:
        d = y0 - f
        if d == 0.0:
            if x == 0.0:
                raise DomainError("coastline passes through the lighthouse")
            return math.copysign(HALF_PI, x)
        return math.atan(x / d)
    if x == 0.0:
        return math.pi
    return math.atan((f - y0) / x) + math.copysign(HALF_PI, x)


def _recurrence(xs: np.ndarray, phis: np.ndarray, y0: float, f1: float):
    n = len(xs)
    fs = np.empty(n)
    slopes = np.empty(n)
    fs[0] = f1
    f = f1
    tan, atan = math.tan, math.atan
    for i in range(n - 1):
        x = xs[i]
        # inlined azimuth for the common below-lighthouse case
        if f < y0:
            theta = atan(x / (y0 - f))
        else:
            theta = _azimuth(x, f, y0)
        s = tan(theta + phis[i] - HALF_PI)
        if not abs(s) < MAX_SLOPE:
            raise BlowUpError(f"slope {s:.3g} at step {i} (x={x:.6g})", step=i)
        slopes[i] = s
        f = f + (xs[i + 1] - x) * s
        fs[i + 1] = f
    slopes[n - 1] = slopes[n - 2]
    return fs, slopes


def sine_squared_coastline(pdf: PdfGrid, cfg: HeuristicConfig) -> Tabulated:
    """Coastline approximating ``pdf`` from a lighthouse at ``(0, cfg.y0)``.

    Starts from ``f(xs[0]) = cfg.f1`` and steps rightwards; the last node
    repeats the previous slope.
    """
    phis = phi_of(pdf.ps, cfg.kappa)
    fs, slopes = _recurrence(pdf.xs, phis, cfg.y0, cfg.f1)
    return Tabulated(pdf.xs, fs, slopes)


# segment plans


@dataclass(frozen=True)
class Segment:
    """Interval ``[lo, hi]``; flipped segments are processed mirrored, starting at ``hi``.

    ``f1`` is the coastline height at the node where processing starts.
    """

    lo: float
    hi: float
    flip: bool = False
    f1: float = 0.0

    def to_json(self) -> str:
        return json.dumps({"lo": self.lo, "hi": self.hi, "flip": self.flip, "f1": self.f1})


@dataclass(frozen=True)
class SegmentPlan:
    segments: tuple[Segment, ...] = field(default_factory=tuple)

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise DegenerateInputError("a segment plan needs at least one segment")
        for s in segs:
            if not s.lo < s.hi:
                raise DegenerateInputError(f"empty segment [{s.lo}, {s.hi}]")
        for a, b in zip(segs, segs[1:]):
            if a.hi != b.lo:
                raise DegenerateInputError("segments must be contiguous and increasing")
        object.__setattr__(self, "segments", segs)

    def __iter__(self):
        return iter(self.segments)

    def __len__(self):
        return len(self.segments)

    def __getitem__(self, i):
        return self.segments[i]

    def with_f1(self, values: Sequence[float]) -> "SegmentPlan":
        if len(values) != len(self.segments):
            raise AlignmentError("one f1 per segment")
        return SegmentPlan(tuple(replace(s, f1=float(v)) for s, v in zip(self.segments, values)))

    def to_jsonl(self) -> str:
        return "".join(s.to_json() + "\n" for s in self.segments)

    @classmethod
    def from_jsonl(cls, text: str) -> "SegmentPlan":
        segs = []
        for line in text.splitlines():
            if line.strip():
                d = json.loads(line)
                segs.append(Segment(float(d["lo"]), float(d["hi"]), bool(d["flip"]), float(d.get("f1", 0.0))))
        return cls(tuple(segs))


def _turning_points(ps: np.ndarray) -> list[int]:
    direction = np.sign(np.diff(ps))
    # plateaus inherit the preceding direction
    for k in range(1, len(direction)):
        if direction[k] == 0:
            direction[k] = direction[k - 1]
    return [k for k in range(1, len(direction)) if direction[k] != 0 and direction[k - 1] != 0 and direction[k] != direction[k - 1]]


def plan_segments(pdf: PdfGrid, y0: float = 1.0) -> SegmentPlan:
    """Split the support at interior turning points so each piece is monotone.

    Increasing pieces are flagged ``flip``; every piece starts with ``f1 = 0``.
    """
    ps = pdf.ps
    cuts = [0, *_turning_points(ps), len(ps) - 1]
    segs = []
    for lo, hi in zip(cuts, cuts[1:]):
        segs.append(Segment(float(pdf.xs[lo]), float(pdf.xs[hi]), bool(ps[hi] > ps[lo])))
    return SegmentPlan(tuple(segs))


def _node_index(xs: np.ndarray, value: float) -> int:
    i = int(np.searchsorted(xs, value))
    for j in (i, i - 1):
        if 0 <= j < len(xs) and abs(xs[j] - value) <= 1e-9 * max(1.0, abs(value)):
            return j
    raise AlignmentError(f"segment boundary {value} is not a grid node")


def planned_coastline(pdf: PdfGrid, y0: float, kappa: float, plan: SegmentPlan) -> Tabulated:
    """Run the heuristic on each segment of ``plan`` and stitch the pieces.

    Flipped segments are mirrored about the y-axis, solved, and mirrored back
    (heights reversed, slopes negated). Shared boundary nodes take the value of
    the right-hand segment.
    """
    xs, ps = pdf.xs, pdf.ps
    phis = phi_of(ps, kappa)
    fs = np.empty(len(xs))
    slopes = np.empty(len(xs))
    first = _node_index(xs, plan[0].lo)
    last = _node_index(xs, plan[-1].hi)
    for seg in plan:
        i, j = _node_index(xs, seg.lo), _node_index(xs, seg.hi)
        if j - i < 1:
            raise AlignmentError(f"segment [{seg.lo}, {seg.hi}] has fewer than 2 nodes")
        if seg.flip:
            g, s = _recurrence(-xs[i : j + 1][::-1], phis[i : j + 1][::-1], y0, seg.f1)
            fs[i : j + 1] = g[::-1]
            slopes[i : j + 1] = -s[::-1]
        else:
            g, s = _recurrence(xs[i : j + 1], phis[i : j + 1], y0, seg.f1)
            fs[i : j + 1] = g
            slopes[i : j + 1] = s
    sl = slice(first, last + 1)
    return Tabulated(xs[sl], fs[sl], slopes[sl])


def regenerate_pdf(c: Tabulated, y0: float, ref_pdf: PdfGrid) -> PdfGrid:
    """Forward density of ``c`` at its nodes, scaled to match ``ref_pdf`` at the smallest x."""
    check = check_coastline_condition(c, y0, c.xs)
    if not check.ok:
        raise GeometryError(f"coastline condition fails: {check.reason}")
    dens = np.asarray(gencauchy_density(c, y0, check.bounds, c.xs), dtype=float)
    ref0 = float(ref_pdf(c.xs[0]))
    if not ref0 > 0 or not dens[0] > 0:
        raise DegenerateInputError("cannot normalize at the minimum x: zero density there")
    return PdfGrid(c.xs, dens * (ref0 / dens[0]))


def l2_distance(a: PdfGrid, b: PdfGrid) -> float:
    """Root of the spacing-weighted (trapezoid) sum of squared differences."""
    if len(a.xs) != len(b.xs) or not np.allclose(a.xs, b.xs, rtol=0, atol=1e-12):
        raise AlignmentError("densities are on different grids")
    w = np.zeros(len(a.xs))
    d = np.diff(a.xs)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return float(np.sqrt(np.sum(w * (a.ps - b.ps) ** 2)))


@dataclass(frozen=True)
class KappaSelection:
    kappa: float
    l2: float
    coastline: Tabulated
    regenerated: PdfGrid
    candidates: tuple[tuple[float, float], ...]  # (kappa, l2); l2 is nan when infeasible


def kappa_grid(pdf: PdfGrid, k_steps: int) -> np.ndarray:
    if k_steps < 2:
        raise DomainError("k_steps must be at least 2")
    top = min(KAPPA_CEILING, 1.0 / float(np.max(pdf.ps)))
    return top * np.arange(1, k_steps + 1) / k_steps


def evaluate_kappa(pdf: PdfGrid, y0: float, plan: SegmentPlan, kappa: float):
    c = planned_coastline(pdf, y0, kappa, plan)
    regen = regenerate_pdf(c, y0, pdf)
    return c, regen, l2_distance(regen, pdf)


def select_kappa(pdf: PdfGrid, y0: float, plan: SegmentPlan, k_steps: int = 200) -> KappaSelection:
    """Grid search for the heuristic constant minimizing the round-trip L2.

    Candidates are ``k_steps`` evenly spaced values in ``(0, min(5, 1/max p)]``.
    Infeasible candidates (blow-up, broken geometry) are skipped; ties go to the
    smaller kappa.
    """
    best = None
    table = []
    for kappa in kappa_grid(pdf, k_steps):
        try:
            c, regen, l2 = evaluate_kappa(pdf, y0, plan, float(kappa))
        except CoastlineError:
            table.append((float(kappa), math.nan))
            continue
        table.append((float(kappa), l2))
        if best is None or l2 < best[1]:
            best = (float(kappa), l2, c, regen)
    if best is None:
        raise NoFeasibleKappaError("every kappa candidate failed")
    return KappaSelection(*best, candidates=tuple(table))


def ode_residual(pdf: PdfGrid, c: Coastline, y0: float, delta_theta: float) -> np.ndarray:
    """Residual of ``y' = (y - dtheta p (x^2 + y^2)) / x`` with ``y = y0 - f``.

    Nodes with ``|x| <= 1e-6`` sit on the singular line and come back as NaN.
    """
    xs = pdf.xs
    if isinstance(c, Tabulated):
        if len(c.xs) != len(xs) or not np.allclose(c.xs, xs, rtol=0, atol=1e-12):
            raise AlignmentError("coastline nodes do not match the density grid")
    fx = np.asarray(c.f(xs), dtype=float)
    dy = -np.asarray(c.slope(xs), dtype=float)
    y = y0 - fx
    out = np.full(len(xs), np.nan)
    ok = np.abs(xs) > ODE_EXCLUSION
    xo = xs[ok]
    out[ok] = dy[ok] - (y[ok] - delta_theta * pdf.ps[ok] * (xo * xo + y[ok] ** 2)) / xo
    return out


@dataclass(frozen=True)
class RoundTrip:
    kappa: float
    l2: float
    plan: SegmentPlan
    coastline: Tabulated
    original: PdfGrid
    regenerated: PdfGrid
    residual: np.ndarray
    candidates: tuple[tuple[float, float], ...] = ()

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("x,p_original,p_regenerated,residual\n")
        for x, p, q, r in zip(self.original.xs, self.original.ps, self.regenerated.ps, self.residual):
            rs = "" if math.isnan(r) else f"{r:.17g}"
            buf.write(f"{x:.17g},{p:.17g},{q:.17g},{rs}\n")
        return buf.getvalue()


def round_trip(
    pdf: PdfGrid,
    y0: float = 1.0,
    plan: Optional[SegmentPlan] = None,
    kappa: Optional[float] = None,
    k_steps: int = 200,
) -> RoundTrip:
    """Plan, pick kappa (unless given), build the coastline and regenerate the density."""
    if plan is None:
        plan = plan_segments(pdf, y0)
    if kappa is None:
        sel = select_kappa(pdf, y0, plan, k_steps)
        kappa, l2, c, regen, table = sel.kappa, sel.l2, sel.coastline, sel.regenerated, sel.candidates
    else:
        c, regen, l2 = evaluate_kappa(pdf, y0, plan, kappa)
        table = ((kappa, l2),)
    bounds = check_coastline_condition(c, y0, c.xs).bounds
    residual = ode_residual(pdf, c, y0, bounds.width)
    return RoundTrip(kappa, l2, plan, c, pdf, regen, residual, table)
