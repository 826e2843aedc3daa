"""Readout confusion matrices: calibration, folding and unfolding.

``C[i, j]`` is the probability of measuring basis state ``j`` after preparing
``i``, so rows sum to one and a measured distribution is ``p_exp = C^T p``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .circuit import Circuit, DensityState, Gate, NoiseModel, derive_rng, run, table_from_distribution
from .circuit import readout_fold

__all__ = ["ConfusionMatrix", "IllConditionedError", "calibrate", "fold", "unfold", "CONDITION_LIMIT"]

CONDITION_LIMIT = 1e8


class IllConditionedError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    matrix: np.ndarray
    provenance: str = "full"

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("confusion matrix must be square")
        if np.any(m < -1e-12) or np.any(m > 1 + 1e-12):
            raise ValueError("confusion matrix entries must lie in [0, 1]")
        if not np.allclose(m.sum(axis=1), 1.0, atol=1e-9):
            raise ValueError("confusion matrix rows must sum to 1")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        return int(self.dim).bit_length() - 1

    @classmethod
    def identity(cls, n_qubits: int) -> "ConfusionMatrix":
        return cls(np.eye(1 << n_qubits), "identity")

    @classmethod
    def from_blocks(cls, blocks: list[np.ndarray]) -> "ConfusionMatrix":
        """Tensor product of per-qubit 2x2 blocks, ``blocks[q]`` for qubit ``q``."""
        # qubit 0 is the least significant index bit, hence the reversed kron
        return cls(reduce(np.kron, [np.asarray(b, dtype=float) for b in reversed(blocks)]), "product")

    @classmethod
    def from_noise(cls, noise: NoiseModel | None, n_qubits: int) -> "ConfusionMatrix":
        """Exact matrix implied by a noise model's readout flips."""
        blocks = []
        for q in range(n_qubits):
            e01, e10 = noise.readout_pair(q) if noise is not None else (0.0, 0.0)
            blocks.append(np.array([[1 - e01, e01], [e10, 1 - e10]]))
        return cls.from_blocks(blocks)

    def condition_number(self) -> float:
        return float(np.linalg.cond(self.matrix))


def fold(p: np.ndarray, c: ConfusionMatrix) -> np.ndarray:
    """Ideal distribution to measured distribution."""
    return c.matrix.T @ np.asarray(p, dtype=float)


def unfold(p_exp: np.ndarray, c: ConfusionMatrix, clip: bool = True) -> np.ndarray:
    """Invert the readout map by a linear solve.

    Negative entries are clipped to zero and the result renormalized unless
    ``clip`` is false.
    """
    p_exp = np.asarray(p_exp, dtype=float)
    if p_exp.shape != (c.dim,):
        raise ValueError("distribution and confusion matrix sizes differ")
    cond = c.condition_number()
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise IllConditionedError(f"confusion matrix condition number {cond:.3g} exceeds {CONDITION_LIMIT:g}")
    p = np.linalg.solve(c.matrix.T, p_exp)
    if not clip:
        return p
    p = np.clip(p, 0.0, None)
    total = p.sum()
    if total <= 0:
        raise ValueError("unfolded distribution vanishes after clipping")
    return p / total


def _measured_distribution(n_qubits: int, prepared: int, noise: NoiseModel | None) -> np.ndarray:
    circ = Circuit(n_qubits, [Gate("X", (q,)) for q in range(n_qubits) if (prepared >> q) & 1])
    state = run(circ, noise=noise, initial=DensityState.basis(n_qubits))
    p = np.clip(np.real(np.diag(state.rho)), 0.0, None)
    return readout_fold(p / p.sum(), n_qubits, noise)


def calibrate(
    noise: NoiseModel | None,
    n_qubits: int,
    shots: int,
    mode: str = "product",
    seed: int | None = None,
) -> ConfusionMatrix:
    """Estimate the confusion matrix from simulated preparation circuits.

    ``product`` runs 2N circuits (each qubit prepared in 0 and 1, the rest
    in 0) and builds per-qubit blocks; ``full`` runs all 2^N basis states.
    """
    if shots <= 0:
        raise ValueError("shots must be positive")
    if mode == "full":
        rows = []
        for i in range(1 << n_qubits):
            table = table_from_distribution(_measured_distribution(n_qubits, i, noise), None, shots, derive_rng(seed, 1, i))
            rows.append(table.as_array(n_qubits) / shots)
        return ConfusionMatrix(np.array(rows), "full")
    if mode != "product":
        raise ValueError(f"unknown calibration mode {mode!r}")
    blocks = []
    for q in range(n_qubits):
        block = np.zeros((2, 2))
        for bit in (0, 1):
            dist = _measured_distribution(n_qubits, bit << q, noise)
            table = table_from_distribution(dist, None, shots, derive_rng(seed, 2, q, bit))
            counts = table.as_array(n_qubits)
            ones = counts[(np.arange(1 << n_qubits) >> q) & 1 == 1].sum()
            block[bit] = [(shots - ones) / shots, ones / shots]
        blocks.append(block)
    return ConfusionMatrix.from_blocks(blocks)
