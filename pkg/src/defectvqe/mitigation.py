"""Zero-noise extrapolation over exponential-block replication factors.

Readout correction lives in :mod:`defectvqe.readout` and is re-exported here.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import least_squares

from .readout import ConfusionMatrix, IllConditionedError, calibrate, fold, unfold

__all__ = [
    "ConfusionMatrix",
    "IllConditionedError",
    "calibrate",
    "fold",
    "unfold",
    "ZnePoint",
    "ZneSeries",
    "ExtrapolationFit",
    "FitError",
    "fit_polynomial",
    "fit_exponential",
    "fit_series",
    "run_zne",
    "zne_report",
]

log = logging.getLogger(__name__)

BOOTSTRAP_RESAMPLES = 200


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class ZnePoint:
    n: int
    mean: float
    sigma: float
    repetitions: int
    raw: tuple[float, ...] = ()

    @classmethod
    def from_samples(cls, n: int, samples: Sequence[float]) -> "ZnePoint":
        v = np.asarray(samples, dtype=float)
        if v.size == 0:
            raise ValueError("need at least one sample")
        sigma = float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else 0.0
        return cls(int(n), float(v.mean()), sigma, int(v.size), tuple(map(float, v)))


@dataclass
class ZneSeries:
    points: list[ZnePoint]

    def __post_init__(self) -> None:
        ns = [p.n for p in self.points]
        if len(set(ns)) != len(ns):
            raise ValueError("replication factors must be distinct")
        if any(n < 1 for n in ns):
            raise ValueError("replication factors must be positive integers")
        if any(p.sigma < 0 for p in self.points):
            raise ValueError("standard errors must be non-negative")
        self.points = sorted(self.points, key=lambda p: p.n)

    @classmethod
    def from_arrays(cls, ns, means, sigmas=None) -> "ZneSeries":
        sigmas = np.zeros(len(ns)) if sigmas is None else sigmas
        return cls([ZnePoint(int(n), float(m), float(s), 1) for n, m, s in zip(ns, means, sigmas)])

    @property
    def n(self) -> np.ndarray:
        return np.array([p.n for p in self.points], dtype=float)

    @property
    def means(self) -> np.ndarray:
        return np.array([p.mean for p in self.points])

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([p.sigma for p in self.points])


@dataclass
class ExtrapolationFit:
    kind: str
    coefficients: np.ndarray
    sigma: np.ndarray
    zero_noise: tuple[float, float]
    residuals: np.ndarray
    converged: bool = True
    notes: list[str] = field(default_factory=list)

    def predict(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        if self.kind == "exponential":
            a, b, r = self.coefficients
            return a + b * r**n
        return np.polyval(self.coefficients[::-1], n)


def _poly_weights(n: np.ndarray, degree: int) -> np.ndarray:
    """Matrix ``A`` with ``alpha = A @ E`` from the normal equations ``L alpha = K``."""
    powers = np.arange(degree + 1)
    V = n[:, None] ** powers[None, :]  # m x (p+1)
    L = V.T @ V  # L[i, j] = sum_k n_k^(i+j)
    if np.linalg.matrix_rank(L) < degree + 1:
        raise FitError("normal-equation matrix is rank deficient")
    return np.linalg.solve(L, V.T)


def fit_polynomial(series: ZneSeries, degree: int = 1) -> ExtrapolationFit:
    """Unweighted least-squares polynomial in ``n``, extrapolated to ``n = 0``.

    Coefficient errors follow ``sigma_alpha^2 = (A * A) @ sigma_E^2``.
    """
    n, y, s = series.n, series.means, series.sigmas
    if len(n) < degree + 1:
        raise FitError(f"degree {degree} needs at least {degree + 1} points")
    A = _poly_weights(n, degree)
    alpha = A @ y
    sigma = np.sqrt((A * A) @ (s * s))
    resid = y - np.polyval(alpha[::-1], n)
    kind = {1: "linear", 2: "quadratic"}.get(degree, f"poly{degree}")
    return ExtrapolationFit(kind, alpha, sigma, (float(alpha[0]), float(sigma[0])), resid)


def _exp_model(params: np.ndarray, n: np.ndarray) -> np.ndarray:
    a, b, r = params
    return a + b * r**n


def _exp_initial(n: np.ndarray, y: np.ndarray) -> np.ndarray | None:
    d = np.diff(y) / np.diff(n)
    if np.all(np.abs(d) < 1e-14) or np.any(d == 0) or not (np.all(d > 0) or np.all(d < 0)):
        return None
    mids = 0.5 * (n[1:] + n[:-1])
    if len(d) >= 2:
        slope = np.polyfit(mids, np.log(np.abs(d)), 1)[0]
        r = float(np.exp(slope))
    else:
        r = 0.9
    if abs(r - 1) < 1e-6:
        r = 1 - 1e-3
    V = np.vstack([np.ones_like(n), r**n]).T
    a, b = np.linalg.lstsq(V, y, rcond=None)[0]
    return np.array([a, b, r])


def _exp_solve(n: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, bool]:
    start = _exp_initial(n, y)
    if start is None:
        return np.array([float(np.mean(y)), 0.0, 0.5]), True
    res = least_squares(
        lambda p: _exp_model(p, n) - y,
        start,
        method="lm",
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=2000,
    )
    ok = res.success and np.all(np.isfinite(res.x)) and res.x[2] > 0
    return res.x, bool(ok)


def fit_exponential(
    series: ZneSeries,
    resamples: int = BOOTSTRAP_RESAMPLES,
    seed: int | None = 0,
) -> ExtrapolationFit:
    """Fit ``E(n) = a + b r^n``; the zero-noise value is ``a + b``.

    The uncertainty of ``a + b`` comes from a seeded parametric bootstrap
    over the per-point standard errors.  When the fit does not converge the
    linear fit is returned instead, flagged in ``notes``.
    """
    n, y, s = series.n, series.means, series.sigmas
    if len(n) < 3:
        raise FitError("exponential fit needs at least three points")
    d = np.diff(y)
    if not (np.all(d >= 0) or np.all(d <= 0)):
        warnings.warn("series is not monotone; exponential extrapolation may be unreliable", RuntimeWarning)
    params, ok = _exp_solve(n, y)
    if not ok:
        fallback = fit_polynomial(series, 1)
        fallback.converged = False
        fallback.notes.append("exponential fit did not converge; linear fallback")
        return fallback
    rng = np.random.default_rng(seed)
    boot = []
    if np.any(s > 0):
        for _ in range(resamples):
            p, ok_b = _exp_solve(n, y + rng.normal(0.0, s))
            if ok_b:
                boot.append(p[0] + p[1])
    e0 = float(params[0] + params[1])
    sigma0 = float(np.std(boot, ddof=1)) if len(boot) > 1 else 0.0
    resid = y - _exp_model(params, n)
    fit = ExtrapolationFit("exponential", params, np.array([np.nan, np.nan, np.nan]), (e0, sigma0), resid)
    fit.notes.append(f"bootstrap resamples used: {len(boot)}")
    return fit


def fit_series(series: ZneSeries, kind: str, seed: int | None = 0) -> ExtrapolationFit:
    if kind == "linear":
        return fit_polynomial(series, 1)
    if kind == "quadratic":
        return fit_polynomial(series, 2)
    if kind == "exponential":
        return fit_exponential(series, seed=seed)
    raise ValueError(f"unknown extrapolation kind {kind!r}")


def run_zne(
    experiment: Callable[[int, int], float],
    replications: Sequence[int] = (1, 2, 3, 4, 5),
    repetitions: int = 50,
    kind: str = "linear",
    seed: int | None = 0,
) -> tuple[ExtrapolationFit, ZneSeries]:
    """Collect ``repetitions`` values of ``experiment(n, rep)`` per ``n`` and extrapolate."""
    replications = list(replications)
    if len(replications) < 2 or replications != list(range(1, max(replications) + 1)):
        raise ValueError("replications must be 1..n_max with n_max >= 2")
    if repetitions < 1:
        raise ValueError("repetitions must be positive")
    points = [ZnePoint.from_samples(n, [experiment(n, r) for r in range(repetitions)]) for n in replications]
    series = ZneSeries(points)
    return fit_series(series, kind, seed), series


def zne_report(fit: ExtrapolationFit, series: ZneSeries, **metadata) -> dict:
    """JSON-ready record of a ZNE run, raw energies included for re-fitting."""
    return {
        "fit_kind": fit.kind,
        "converged": fit.converged,
        "notes": list(fit.notes),
        "coefficients": [float(v) for v in fit.coefficients],
        "coefficient_sigma": [None if not np.isfinite(v) else float(v) for v in fit.sigma],
        "zero_noise_energy_eV": fit.zero_noise[0],
        "zero_noise_sigma_eV": fit.zero_noise[1],
        "residuals": [float(v) for v in fit.residuals],
        "points": [
            {"n": p.n, "mean_eV": p.mean, "sigma_eV": p.sigma, "repetitions": p.repetitions, "raw_eV": list(p.raw)}
            for p in series.points
        ],
        "metadata": metadata,
    }
