"""Variational optimization (SPSA, Nelder–Mead) over compiled ansatz circuits."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .ansatz import CompiledAnsatz
from .circuit import NoiseModel, derive_rng, run
from .estimation import DEFAULT_SHOTS, EnergyEstimate, EnergySampler
from .mapping import MappingSpec
from .pauli import PauliSum, group_commuting
from .readout import ConfusionMatrix

__all__ = [
    "OptimizerConfig",
    "VqeTrace",
    "EnergyObjective",
    "run_vqe",
    "spsa_gains",
    "trace_csv",
]


@dataclass(frozen=True)
class OptimizerConfig:
    """Optimizer settings.

    SPSA gains are ``a_k = a / (k + 1 + A)**alpha`` and
    ``c_k = c / (k + 1)**gamma``.  ``tail`` is the number of final iterates
    averaged into the reported parameters.  With ``calibrate`` the gain
    ``a`` is rescaled before the first iteration so that the initial update
    has magnitude ``target_step`` (averaged over ``calibration_samples``
    gradient estimates).
    """

    kind: str = "spsa"
    max_iterations: int = 200
    a: float = 0.2
    c: float = 0.1
    alpha: float = 0.602
    gamma: float = 0.101
    A: float = 0.0
    tail: int = 10
    tolerance: float = 1e-6
    seed: int | None = 0
    calibrate: bool = False
    target_step: float = 0.2
    calibration_samples: int = 10

    def __post_init__(self) -> None:
        if self.kind not in ("spsa", "nelder_mead"):
            raise ValueError(f"unknown optimizer {self.kind!r}")
        if self.a <= 0 or self.c <= 0:
            raise ValueError("SPSA gains must be positive")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.tail < 1 or self.max_iterations < 1:
            raise ValueError("tail and max_iterations must be at least 1")


def spsa_gains(cfg: OptimizerConfig, k: int, a: float | None = None) -> tuple[float, float]:
    a = cfg.a if a is None else a
    return a / (k + 1 + cfg.A) ** cfg.alpha, cfg.c / (k + 1) ** cfg.gamma


@dataclass
class VqeTrace:
    iterations: list[tuple[np.ndarray, float, float]]
    theta: np.ndarray
    energy: float
    std_error: float
    converged: bool
    n_evaluations: int
    optimizer: str = "spsa"
    notes: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.iterations:
            raise ValueError("trace must contain at least one iteration")


class EnergyObjective:
    """``theta -> EnergyEstimate`` for a compiled ansatz.

    Evaluation ``k`` draws its shots from the stream ``(seed, k)``;
    ``shots=None`` evaluates exactly.
    """

    def __init__(
        self,
        compiled: CompiledAnsatz,
        h: PauliSum,
        shots: int | None = DEFAULT_SHOTS,
        noise: NoiseModel | None = None,
        post_select: bool = False,
        n_target: int | None = None,
        confusion: ConfusionMatrix | None = None,
        seed: int | None = 0,
    ) -> None:
        self.compiled = compiled
        self.h = h
        self.shots = shots
        self.noise = noise
        self.post_select = post_select
        self.n_target = n_target if n_target is not None else compiled.ansatz.space.n_electrons
        self.confusion = confusion
        self.seed = seed
        self.groups = group_commuting(h) if any((x, z) != (0, 0) for x, z, _ in h.raw_items()) else []
        self.spec: MappingSpec = compiled.mapping
        self.calls = 0

    def sampler(self, theta: Sequence[float]) -> EnergySampler:
        state = run(self.compiled.circuit, self.compiled.values(theta), self.noise)
        return EnergySampler(state, self.h, self.groups, self.noise, self.spec, self.n_target,
                             self.post_select, self.confusion)

    def __call__(self, theta: Sequence[float]) -> EnergyEstimate:
        k = self.calls
        self.calls += 1
        s = self.sampler(theta)
        if self.shots is None:
            return s.exact()
        return s.sample(self.shots, derive_rng(self.seed, k))


def _as_estimate(value) -> EnergyEstimate:
    if isinstance(value, EnergyEstimate):
        return value
    return EnergyEstimate(float(value), 0.0)


def run_vqe(
    objective: Callable[[np.ndarray], EnergyEstimate | float],
    n_parameters: int,
    opt: OptimizerConfig = OptimizerConfig(),
    theta0: Sequence[float] | None = None,
) -> VqeTrace:
    """Minimize ``objective`` and return the full optimization trace.

    With no parameters the objective is evaluated once.  SPSA reports the
    mean of the last ``opt.tail`` iterates and evaluates the objective there.
    """
    theta = np.zeros(n_parameters) if theta0 is None else np.asarray(theta0, dtype=float).copy()
    if theta.size != n_parameters:
        raise ValueError("theta0 has the wrong length")
    if n_parameters == 0:
        est = _as_estimate(objective(theta))
        return VqeTrace([(theta, est.value, est.std_error)], theta, est.value, est.std_error, True, 1, opt.kind,
                        ["no variational parameters"])
    if opt.kind == "nelder_mead":
        return _nelder_mead(objective, theta, opt)
    return _spsa(objective, theta, opt)


def _spsa(objective, theta: np.ndarray, opt: OptimizerConfig) -> VqeTrace:
    rng = derive_rng(opt.seed, 0xC0FFEE)
    history: list[np.ndarray] = []
    iterations = []
    evals = 0
    converged = False
    gain = opt.a
    notes: list[str] = []
    if opt.calibrate:
        magnitudes = []
        for _ in range(opt.calibration_samples):
            delta = rng.choice([-1.0, 1.0], size=theta.size)
            plus = _as_estimate(objective(theta + opt.c * delta)).value
            minus = _as_estimate(objective(theta - opt.c * delta)).value
            magnitudes.append(abs(plus - minus) / (2 * opt.c))
            evals += 2
        mean_mag = float(np.mean(magnitudes))
        if mean_mag > 0:
            gain = opt.target_step * (1 + opt.A) ** opt.alpha / mean_mag
        notes.append(f"calibrated gain a = {gain!r}")
    for k in range(opt.max_iterations):
        ak, ck = spsa_gains(opt, k, gain)
        delta = rng.choice([-1.0, 1.0], size=theta.size)
        plus = _as_estimate(objective(theta + ck * delta))
        minus = _as_estimate(objective(theta - ck * delta))
        evals += 2
        grad = (plus.value - minus.value) / (2 * ck) * delta
        theta = theta - ak * grad
        energy = 0.5 * (plus.value + minus.value)
        err = 0.5 * float(np.hypot(plus.std_error, minus.std_error))
        iterations.append((theta.copy(), energy, err))
        history.append(theta.copy())
        if len(history) > opt.tail:
            drift = np.max(np.abs(np.mean(history[-opt.tail:], axis=0) - np.mean(history[-opt.tail - 1:-1], axis=0)))
            if drift < opt.tolerance:
                converged = True
                break
    theta_bar = np.mean(history[-opt.tail:], axis=0)
    final = _as_estimate(objective(theta_bar))
    evals += 1
    if not converged:
        notes.append("iteration budget exhausted before the parameter drift met the tolerance")
    return VqeTrace(iterations, theta_bar, final.value, final.std_error, converged, evals, "spsa", notes)


def _nelder_mead(objective, theta: np.ndarray, opt: OptimizerConfig) -> VqeTrace:
    iterations = []
    cache: dict[bytes, EnergyEstimate] = {}

    def f(x: np.ndarray) -> float:
        key = np.asarray(x, dtype=float).tobytes()
        if key not in cache:
            cache[key] = _as_estimate(objective(np.array(x, dtype=float)))
        return cache[key].value

    def record(xk: np.ndarray) -> None:
        est = cache.get(np.asarray(xk, dtype=float).tobytes())
        if est is None:
            f(xk)
            est = cache[np.asarray(xk, dtype=float).tobytes()]
        iterations.append((np.array(xk, dtype=float), est.value, est.std_error))

    res = minimize(
        f, theta, method="Nelder-Mead", callback=record,
        options={"maxiter": opt.max_iterations, "xatol": opt.tolerance, "fatol": 1e-12,
                 "initial_simplex": theta[None, :] + np.vstack([np.zeros(theta.size), 0.5 * np.eye(theta.size)])},
    )
    best = np.asarray(res.x, dtype=float)
    f(best)
    final = cache[best.tobytes()]
    if not iterations:
        iterations.append((best, final.value, final.std_error))
    notes = [] if res.success else [str(res.message)]
    return VqeTrace(iterations, best, final.value, final.std_error, bool(res.success), len(cache), "nelder_mead", notes)


def trace_csv(trace: VqeTrace) -> str:
    n = len(trace.theta)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iter"] + [f"theta{j}" for j in range(n)] + ["energy_eV", "stderr_eV"])
    for k, (theta, e, s) in enumerate(trace.iterations):
        w.writerow([k] + [repr(float(v)) for v in theta] + [repr(float(e)), repr(float(s))])
    return buf.getvalue()
