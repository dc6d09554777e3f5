"""Least-squares fit of ``A * beta / (beta + |t|^alpha)`` to correlation series."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .correlation import CorrelationSeries
from .errors import AlignmentError, DegenerateFitError, DomainError, InsufficientDataError

ALPHA_MAX = 4.0
ALPHA_MIN = 0.02
ALPHA_GRID = 32
THALF_PER_DECADE = 64
MIN_LAGS = 4


@dataclass(frozen=True)
class FitResult:
    alpha: float
    beta: float
    amplitude: float
    residual_l2: float
    t_half: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=False)

    @classmethod
    def from_params(cls, alpha, beta, amplitude=1.0, residual_l2=0.0):
        return cls(float(alpha), float(beta), float(amplitude), float(residual_l2), float(beta ** (1.0 / alpha)))


def modcauchy_curve(t, alpha, beta, amplitude=1.0):
    return amplitude * beta / (beta + np.abs(np.asarray(t, dtype=float)) ** alpha)


class _Objective:
    """Sum of squares in (alpha, t_half) coordinates, amplitude profiled out when free.

    Working in t_half instead of beta makes rescaling the lags a pure shift of
    log t_half.
    """

    def __init__(self, t, c, fix_amplitude):
        self.t = np.abs(t)
        self.c = c
        self.fix = fix_amplitude
        self.log_t = np.where(self.t > 0, np.log(np.where(self.t > 0, self.t, 1.0)), -np.inf)

    def shape(self, alpha, log_thalf):
        # beta / (beta + t^alpha) == 1 / (1 + (t / t_half)^alpha)
        with np.errstate(over="ignore"):
            return 1.0 / (1.0 + np.exp(alpha * (self.log_t - log_thalf)))

    def amplitude(self, g):
        if self.fix:
            return 1.0
        gg = float(g @ g)
        return float(g @ self.c) / gg if gg > 0 else 1.0

    def __call__(self, alpha, log_thalf):
        g = self.shape(alpha, log_thalf)
        r = self.c - self.amplitude(g) * g
        return float(r @ r)


def fit_modcauchy(series: CorrelationSeries, fix_amplitude: bool = True) -> FitResult:
    """Coarse log grid over (alpha, t_half), then Nelder-Mead.

    Positive and negative lags are pooled by ``|lag|``. ``alpha`` is kept in
    ``(0, 4]``.
    """
    t = np.abs(series.lags.astype(float))
    c = series.values
    if np.any((c < 0) | (c > 1)) or not np.all(np.isfinite(c)):
        raise DomainError("correlation values must lie in [0, 1]")
    nonzero = np.unique(t[t > 0])
    if len(nonzero) < MIN_LAGS:
        raise InsufficientDataError(f"need at least {MIN_LAGS} distinct nonzero lags, got {len(nonzero)}")
    if np.ptp(c) == 0:
        raise DegenerateFitError("constant series carries no decay information")

    obj = _Objective(t, c, fix_amplitude)
    lo, hi = math.log10(nonzero[0]) - 1.0, math.log10(nonzero[-1]) + 1.0
    alphas = np.geomspace(ALPHA_MIN, ALPHA_MAX, ALPHA_GRID)
    log_thalfs = np.log(10.0) * np.linspace(lo, hi, int(round((hi - lo) * THALF_PER_DECADE)) + 1)

    best = None
    for a in alphas:
        for lt in log_thalfs:
            v = obj(a, lt)
            # strict < keeps the first hit: smaller alpha, then smaller beta
            if best is None or v < best[0]:
                best = (v, a, lt)
    coarse_value, a0, lt0 = best

    def f(z):
        alpha = math.exp(z[0])
        if alpha > ALPHA_MAX:
            return math.inf
        return obj(alpha, z[1])

    z0 = np.array([math.log(a0), lt0])
    simplex = np.array([z0, z0 + [0.05, 0.0], z0 + [0.0, 0.1]])
    res = minimize(
        f,
        z0,
        method="Nelder-Mead",
        options={"initial_simplex": simplex, "xatol": 1e-10, "fatol": 1e-18, "maxiter": 20000, "maxfev": 40000},
    )
    z = res.x if res.fun <= coarse_value else z0
    alpha, log_thalf = math.exp(z[0]), float(z[1])
    beta = math.exp(alpha * log_thalf)
    g = obj.shape(alpha, log_thalf)
    amp = obj.amplitude(g)
    resid = float(np.sqrt(np.sum((c - amp * g) ** 2)))
    return FitResult(alpha, beta, amp, resid, beta ** (1.0 / alpha))


def t_half_report(fits: Sequence[FitResult], labels: Sequence[str]) -> list[tuple[str, float, float, float]]:
    if len(fits) != len(labels):
        raise AlignmentError("one label per fit")
    return [(str(lab), f.alpha, f.beta, f.beta ** (1.0 / f.alpha)) for f, lab in zip(fits, labels)]


def report_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "alpha", "beta", "t_half"])
    for label, a, b, th in rows:
        w.writerow([label, f"{a:.17g}", f"{b:.17g}", f"{th:.17g}"])
    return buf.getvalue()
