"""Configuration-driven driver: Hamiltonian, mapping, solver, mitigation and reports."""

from __future__ import annotations

import datetime as _dt
import json
import logging
import math
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import metadata as _metadata
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .ansatz import CompiledAnsatz, UccsdAnsatz, build_uccsd, compile_ansatz
from .circuit import NoiseModel, derive_rng
from .circuit import run as simulate
from .config import ConfigError, RunConfig
from .estimation import EnergySampler, scan_csv, scan_theta
from .fci import Determinant, SectorError, enumerate_sector, hamiltonian_matrix, solve_fci, spectrum_csv
from .fcidump import read_fcidump
from .fermion import ActiveSpace, FermionHamiltonian
from .fixtures import build_fixture
from .mapping import MappingSpec, qubit_hamiltonian, sector_parities_for
from .mitigation import ZnePoint, ZneSeries, fit_series, zne_report
from .noise import load_calibration, noise_from_calibration
from .pauli import PauliSum, group_commuting
from .qse import (
    QseError,
    build_qse,
    degenerate_multiplets,
    extrapolate_qse,
    multiplet_gaps,
    solve_generalized,
    splittings,
)
from .readout import ConfusionMatrix, calibrate
from .solvers import EnergyObjective, OptimizerConfig, VqeTrace, run_vqe, trace_csv

__all__ = ["Problem", "RunResult", "prepare_problem", "run", "STREAMS", "noiseless_optimum"]

log = logging.getLogger(__name__)

# seed stream ids; stage k draws from SeedSequence((seed, k), ...)
STREAMS = {"vqe": 1, "scan": 2, "zne": 3, "qse": 4, "calibration": 5}


@dataclass
class Problem:
    name: str
    hamiltonian: FermionHamiltonian
    n_electrons: int
    sz: float
    reference: Determinant
    spec: MappingSpec
    qubit_h: PauliSum
    orbital_irreps: tuple[int, ...] | None

    @property
    def space(self) -> ActiveSpace:
        return self.hamiltonian.space


@dataclass
class RunResult:
    mode: str
    files: list[Path]
    summary: dict


def _lowest_determinant(h: FermionHamiltonian, n_e: int, sz: float) -> Determinant:
    dets = enumerate_sector(h.space, n_e, sz)
    if not dets:
        raise SectorError(f"no determinants with n_e={n_e}, S_z={sz}")
    diag = np.diag(hamiltonian_matrix(h, dets))
    return dets[int(np.argmin(diag))]


def prepare_problem(cfg: RunConfig) -> Problem:
    """Resolve Hamiltonian, sector, reference determinant and mapping."""
    ham = cfg["hamiltonian"]
    irreps: tuple[int, ...] | None
    if ham["fixture"] is not None:
        fx = build_fixture(ham["fixture"])
        h, name, reference, irreps = fx.hamiltonian, fx.name, fx.reference, fx.orbital_irreps
    else:
        path = cfg.resolve_path(ham["fcidump"])
        h = read_fcidump(path)
        name, reference = path.name, None
        orbsym = h.metadata.get("orbsym")
        # FCIDUMP irreps are 1-based; products are XORs of the 0-based codes
        irreps = tuple(int(v) - 1 for v in orbsym) if orbsym and len(orbsym) == h.n_spatial else None
    n_e = ham["electrons"] if ham["electrons"] is not None else h.space.n_electrons
    if n_e != h.space.n_electrons:
        h = FermionHamiltonian(ActiveSpace(h.n_spatial, n_e), h.h1, h.h2, h.e_core, dict(h.metadata))
        reference = None
    sz = float(ham["sz"])
    if ham["reference"] is not None:
        reference = Determinant.from_modes(ham["reference"])
    elif reference is None or reference.spin_z(h.n_spatial) != sz:
        reference = _lowest_determinant(h, n_e, sz)
    if reference.n_electrons != n_e or reference.spin_z(h.n_spatial) != sz:
        raise SectorError("reference determinant is outside the requested sector")
    if max(reference.modes, default=0) >= h.space.n_spin_orbitals:
        raise SectorError("reference determinant uses modes outside the active space")
    mp = cfg["mapping"]
    parities = None
    if mp["taper"]:
        n_up = n_e / 2 + sz
        if n_up != int(n_up):
            raise ConfigError([("hamiltonian.sz", "incompatible with the electron number")])
        parities = sector_parities_for(n_e, int(n_up))
        if mp["sector"] is not None and tuple(mp["sector"]) != parities:
            raise ConfigError([("mapping.sector", f"inconsistent with electrons and sz; expected {list(parities)}")])
    spec = MappingSpec(mp["kind"], h.space.n_spin_orbitals, mp["taper"], parities)
    return Problem(name, h, n_e, sz, reference, spec, qubit_hamiltonian(h, spec), irreps)


def _noise(cfg: RunConfig, n_qubits: int) -> NoiseModel | None:
    nz = cfg["noise"]
    if nz["preset"] == "none":
        return None
    source = nz["preset"] if nz["preset"] == "casablanca" else cfg.resolve_path(nz["preset"])
    return noise_from_calibration(load_calibration(source), n_qubits, damping=nz["damping"], readout=nz["readout"])


def _confusion(cfg: RunConfig, noise: NoiseModel | None, n_qubits: int) -> ConfusionMatrix | None:
    est = cfg["estimation"]
    kind = est["readout_mitigation"]
    if kind == "none":
        return None
    if kind == "table":
        return ConfusionMatrix.from_noise(noise, n_qubits)
    return calibrate(noise, n_qubits, est["calibration_shots"], est["calibration_mode"],
                     seed=(cfg.seed, STREAMS["calibration"]))


def _shots(cfg: RunConfig) -> int | None:
    return cfg["estimation"]["shots"] or None


def _ansatz(cfg: RunConfig, prob: Problem) -> UccsdAnsatz:
    a = cfg["ansatz"]
    irreps = prob.orbital_irreps if a["symmetry_filter"] else None
    return build_uccsd(prob.space, prob.reference, a["spin_conserving"], irreps)


def _compile(cfg: RunConfig, prob: Problem, ansatz: UccsdAnsatz, n: int = 1) -> CompiledAnsatz:
    return compile_ansatz(ansatz, prob.spec, n, cfg["ansatz"]["merge"])


def _pmap(fn: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def noiseless_optimum(compiled: CompiledAnsatz, h: PauliSum, theta0: Sequence[float] | None = None) -> VqeTrace:
    """Exact-expectation Nelder-Mead minimum of the ansatz energy."""
    obj = EnergyObjective(compiled, h, shots=None)
    opt = OptimizerConfig(kind="nelder_mead", max_iterations=2000, tolerance=1e-10)
    return run_vqe(obj, len(compiled.parameters), opt, theta0)


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def _write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8", newline="\n")
    return path


def _write_json(path: Path, obj: dict) -> Path:
    return _write(path, json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")


def _envelope(cfg: RunConfig, prob: Problem, results: dict) -> dict:
    return {
        "config": cfg.to_dict(),
        "seeds": {"master": cfg.seed, "streams": {k: [cfg.seed, v] for k, v in STREAMS.items()}},
        "problem": {
            "name": prob.name,
            "n_spatial": prob.space.n_spatial,
            "n_electrons": prob.n_electrons,
            "sz": prob.sz,
            "reference_modes": list(prob.reference.modes),
            "mapping": {"kind": prob.spec.kind, "taper": prob.spec.taper,
                        "sector_parities": prob.spec.sector_parities, "n_qubits": prob.spec.n_qubits},
        },
        "results": results,
    }


def _fci(prob: Problem):
    return solve_fci(prob.hamiltonian, prob.n_electrons, prob.sz)


def _mode_fci(cfg: RunConfig, prob: Problem, out: Path) -> RunResult:
    sol = _fci(prob)
    files = [_write(out / "spectrum.csv", spectrum_csv(sol.energies))]
    ground = {d.occupation_string(prob.space.n_spin_orbitals): float(c)
              for d, c in zip(sol.basis, sol.ground_state()) if abs(c) > 1e-8}
    results = {"energies_eV": sol.energies, "gaps_eV": sol.energies - sol.energies[0],
               "ground_energy_eV": sol.ground_energy, "ground_state_amplitudes": ground,
               "basis_size": len(sol.basis)}
    files.append(_write_json(out / "report.json", _envelope(cfg, prob, results)))
    if cfg["run"]["figures"]:
        from .plotting import plot_spectrum
        files.append(plot_spectrum(sol.energies, out / "spectrum.png", prob.name))
    return RunResult("fci", files, results)


def _vqe(cfg: RunConfig, prob: Problem, compiled: CompiledAnsatz) -> VqeTrace:
    noise = _noise(cfg, prob.spec.n_qubits)
    obj = EnergyObjective(compiled, prob.qubit_h, _shots(cfg), noise, cfg["estimation"]["post_select"],
                          prob.n_electrons, _confusion(cfg, noise, prob.spec.n_qubits),
                          seed=(cfg.seed, STREAMS["vqe"]))
    theta0 = cfg["optimizer"]["theta0"]
    if theta0 is not None and len(theta0) != len(compiled.parameters):
        raise ConfigError([("optimizer.theta0", f"ansatz has {len(compiled.parameters)} parameters")])
    return run_vqe(obj, len(compiled.parameters), cfg.optimizer(), theta0)


def _mode_vqe(cfg: RunConfig, prob: Problem, out: Path) -> RunResult:
    ansatz = _ansatz(cfg, prob)
    compiled = _compile(cfg, prob, ansatz)
    trace = _vqe(cfg, prob, compiled)
    e_fci = _fci(prob).ground_energy
    files = [_write(out / "trace.csv", trace_csv(trace))]
    results = {
        "energy_eV": trace.energy, "std_error_eV": trace.std_error, "theta": trace.theta,
        "parameters": list(compiled.parameters), "excitations": [e.label for e in ansatz.excitations],
        "converged": trace.converged, "n_evaluations": trace.n_evaluations, "optimizer": trace.optimizer,
        "notes": trace.notes, "fci_ground_energy_eV": e_fci, "error_vs_fci_eV": trace.energy - e_fci,
        "circuit_depth": compiled.depth(), "merged_parameters": list(compiled.merged),
    }
    files.append(_write_json(out / "summary.json", _envelope(cfg, prob, results)))
    if cfg["run"]["figures"]:
        from .plotting import plot_trace
        files.append(plot_trace([e for _, e, _ in trace.iterations], [s for _, _, s in trace.iterations],
                                out / "trace.png", e_fci))
    return RunResult("vqe", files, results)


def _mode_scan(cfg: RunConfig, prob: Problem, out: Path) -> RunResult:
    compiled = _compile(cfg, prob, _ansatz(cfg, prob))
    if len(compiled.parameters) != 1:
        raise ConfigError([("run.mode", f"scan needs a one-parameter ansatz, got {len(compiled.parameters)}")])
    sc = cfg["scan"]
    thetas = np.linspace(float(sc["start"]), float(sc["stop"]), int(sc["points"]))
    noise = _noise(cfg, prob.spec.n_qubits)
    est = scan_theta(prob.qubit_h, compiled, thetas, _shots(cfg), noise, cfg["estimation"]["post_select"],
                     prob.n_electrons, (cfg.seed, STREAMS["scan"]), _confusion(cfg, noise, prob.spec.n_qubits))
    exact = [e.value for e in scan_theta(prob.qubit_h, compiled, thetas, None)]
    k_min = int(np.argmin([e.value for e in est]))
    files = [_write(out / "scan.csv", scan_csv(thetas, est))]
    results = {"theta_rad": thetas, "energy_eV": [e.value for e in est], "std_error_eV": [e.std_error for e in est],
               "noiseless_energy_eV": exact, "theta_min_rad": thetas[k_min],
               "fci_ground_energy_eV": _fci(prob).ground_energy}
    files.append(_write_json(out / "report.json", _envelope(cfg, prob, results)))
    if cfg["run"]["figures"]:
        from .plotting import plot_scan
        files.append(plot_scan(thetas, results["energy_eV"], results["std_error_eV"], out / "scan.png", exact))
    return RunResult("scan", files, results)


def _theta_star(cfg: RunConfig, prob: Problem, ansatz: UccsdAnsatz) -> np.ndarray:
    theta = cfg["zne"]["theta"]
    base = _compile(cfg, prob, ansatz)
    if theta:
        if len(theta) != len(base.parameters):
            raise ConfigError([("zne.theta", f"ansatz has {len(base.parameters)} parameters")])
        return np.asarray(theta, dtype=float)
    return noiseless_optimum(base, prob.qubit_h).theta


def _mode_zne(cfg: RunConfig, prob: Problem, out: Path) -> RunResult:
    ansatz = _ansatz(cfg, prob)
    theta = _theta_star(cfg, prob, ansatz)
    z = cfg["zne"]
    noise = _noise(cfg, prob.spec.n_qubits)
    confusion = _confusion(cfg, noise, prob.spec.n_qubits)
    shots = _shots(cfg)
    groups = group_commuting(prob.qubit_h) if prob.spec.n_qubits else []
    reps = z["repetitions"] if shots is not None else 1

    def point(n: int) -> ZnePoint:
        c = _compile(cfg, prob, ansatz, n)
        sampler = EnergySampler(simulate(c.circuit, c.values(theta), noise), prob.qubit_h, groups, noise, prob.spec,
                                prob.n_electrons, cfg["estimation"]["post_select"], confusion)
        if shots is None:
            return ZnePoint.from_samples(n, [sampler.exact().value])
        return ZnePoint.from_samples(
            n, [sampler.sample(shots, derive_rng((cfg.seed, STREAMS["zne"]), n, r)).value for r in range(reps)])

    series = ZneSeries(_pmap(point, list(z["replications"]), cfg["run"]["workers"]))
    fit = fit_series(series, z["fit"], seed=cfg.seed)
    base = _compile(cfg, prob, ansatz)
    e_noiseless = EnergyObjective(base, prob.qubit_h, shots=None)(theta).value
    report = zne_report(fit, series, theta=theta, noiseless_energy_eV=e_noiseless,
                        fci_ground_energy_eV=_fci(prob).ground_energy,
                        unmitigated_error_eV=series.points[0].mean - e_noiseless,
                        mitigated_error_eV=fit.zero_noise[0] - e_noiseless,
                        zero_noise_convention="extrapolated to n = 0")
    files = [_write_json(out / "zne.json", _envelope(cfg, prob, report))]
    if cfg["run"]["figures"]:
        from .plotting import plot_zne
        files.append(plot_zne(series.n, series.means, series.sigmas, fit.predict, fit.zero_noise,
                              out / "zne.png", e_noiseless))
    return RunResult("zne", files, report)


def _qse_column(energies: np.ndarray | None, retained: int | None, exact: np.ndarray, multiplets: list[list[int]],
                notes: list[str] | None = None) -> dict:
    col: dict[str, Any] = {"energies_eV": energies, "retained_dimension": retained, "notes": notes or []}
    if energies is None:
        return col
    col["gaps_eV"] = energies - energies[0]
    if len(energies) == len(exact) and len(multiplets) > 1:
        gaps = multiplet_gaps(energies, multiplets)
        ref = multiplet_gaps(exact, multiplets)
        col["multiplet_gaps_eV"] = gaps
        col["multiplet_gap_errors_eV"] = gaps - ref
        col["mean_abs_gap_error_eV"] = float(np.mean(np.abs(gaps - ref)))
        col["degeneracy_splitting"] = splittings(energies, multiplets)
    else:
        col["notes"].append("retained subspace smaller than the configuration space; gap diagnostics skipped")
    return col


def _mode_qse(cfg: RunConfig, prob: Problem, out: Path) -> RunResult:
    q = cfg["qse"]
    ansatz = _ansatz(cfg, prob)
    noise = _noise(cfg, prob.spec.n_qubits)
    shots = _shots(cfg)
    sol = _fci(prob)
    exact = sol.energies
    multiplets = degenerate_multiplets(exact, q["degeneracy_tol"])
    if q["reference"] == "exact":
        trace = noiseless_optimum(_compile(cfg, prob, ansatz), prob.qubit_h)
        if abs(trace.energy - sol.ground_energy) > 1e-6:
            raise QseError("the ansatz cannot prepare the exact ground state; set qse.reference = \"vqe\"")
        theta = trace.theta
    else:
        theta = _vqe(cfg, prob, _compile(cfg, prob, ansatz)).theta
    threshold = q["s_threshold"] or (1e-8 if noise is None and shots is None else 1e-3)
    replications = list(cfg["zne"]["replications"]) if noise is not None else [1]
    confusion = _confusion(cfg, noise, prob.spec.n_qubits)
    cache: dict = {}

    def measure(n: int):
        c = _compile(cfg, prob, ansatz, n)
        state = simulate(c.circuit, c.values(theta), noise)
        return build_qse(state, prob.hamiltonian, prob.reference, prob.spec, shots, noise,
                         cfg["estimation"]["post_select"], confusion, q["repetitions"],
                         seed=(cfg.seed, STREAMS["qse"], n), _cache=cache)

    # the first call fills the shared operator cache before any threads start
    problems = [measure(replications[0])] + _pmap(measure, replications[1:], cfg["run"]["workers"])

    def solve(p):
        try:
            e, _ = solve_generalized(p, threshold)
            return e, len(e), []
        except QseError as exc:
            return None, None, [str(exc)]

    columns: dict[str, dict] = {}
    matrices: dict[str, dict] = {}
    e, r, notes = solve(problems[0])
    columns["none"] = _qse_column(e, r, exact, multiplets, notes)
    matrices["none"] = problems[0]
    for kind in ("linear", "quadratic", "exponential"):
        need = 2 if kind == "linear" else 3
        if kind not in q["extrapolations"]:
            continue
        if len(problems) < need:
            columns[kind] = _qse_column(None, None, exact, multiplets,
                                        [f"needs at least {need} replication factors"])
            continue
        pz = extrapolate_qse(problems, replications, kind, seed=cfg.seed)
        e, r, notes = solve(pz)
        columns[kind] = _qse_column(e, r, exact, multiplets, notes)
        columns[kind]["non_monotone_elements"] = pz.metadata["non_monotone_elements"]
        matrices[kind] = pz
    results = {
        "labels": problems[0].labels,
        "dimension": problems[0].dim,
        "s_threshold": threshold,
        "reference_theta": theta,
        "replications": replications,
        "fci_energies_eV": exact,
        "fci_multiplets": multiplets,
        "columns": columns,
        "off_diagonal_fit": "linear",
        "matrices": {k: {"H_re": np.real(p.h), "H_im": np.imag(p.h), "S_re": np.real(p.s), "S_im": np.imag(p.s),
                         "H_err": p.h_err, "S_err": p.s_err} for k, p in matrices.items()},
        "measurement": problems[0].metadata,
    }
    files = [_write_json(out / "qse.json", _envelope(cfg, prob, results))]
    if cfg["run"]["figures"]:
        from .plotting import plot_qse
        files.append(plot_qse({k: v["energies_eV"] for k, v in columns.items()}, exact, out / "qse.png"))
    return RunResult("qse", files, results)


_MODES = {"fci": _mode_fci, "vqe": _mode_vqe, "scan": _mode_scan, "zne": _mode_zne, "qse": _mode_qse}


def _version() -> str:
    try:
        return _metadata.version("artifact")
    except _metadata.PackageNotFoundError:
        return "unknown"


def run(cfg: RunConfig) -> RunResult:
    """Execute one configured run and write its reports into ``cfg.output``.

    Wall-clock data goes to ``run_info.json`` only, so every other file is
    byte-identical between reruns of the same configuration.
    """
    out = cfg.output
    out.mkdir(parents=True, exist_ok=True)
    prob = prepare_problem(cfg)
    result = _MODES[cfg.mode](cfg, prob, out)
    info = {"timestamp_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "version": _version(), "python": platform.python_version(), "numpy": np.__version__,
            "files": [p.name for p in result.files]}
    result.files.append(_write_json(out / "run_info.json", info))
    log.info("wrote %d files to %s", len(result.files), out)
    return result
