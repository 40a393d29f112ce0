"""Simulated phase-shifting holographic acquisition of a transmission matrix.

Each input port is measured against its own co-propagating reference speckle
``r^(j)``: the retrieved block is ``diag(conj(r^(j))) @ T_j`` restricted to
the targeted rows. Output-row phases common to all ports only redefine the
phase of each detector mode and are unobservable; what matters for
programming is the *relative* reference ``conj(r^(j)) / conj(r^(0))`` per
row, which :func:`calibrate_ports` recovers from singles and two-photon
coincidences of programmed probe networks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np
from scipy import optimize

from .medium import TransmissionMatrix, tm_to_dict
from .photonics import (
    _pair_visibilities,
    _two_photon_probs,
    compare_visibilities,
    pair_family,
    sylvester4,
)
from .shaping import fidelity, partition_ports, program_network, random_target, solve_input_field, trial_rng


class CalibrationError(RuntimeError):
    """Calibration data are degenerate (e.g. a detector saw no photons)."""


@dataclass(frozen=True)
class AcquisitionConfig:
    """Holographic measurement settings.

    ``photon_budget`` is the expected count level of an average intensity
    frame; ``math.inf`` disables shot noise.
    """

    phase_steps: int = 4
    photon_budget: float = math.inf
    reference_strength: float = 1.0
    seed: int = 0
    normalize_reference: bool = True

    def __post_init__(self):
        if int(self.phase_steps) != self.phase_steps or self.phase_steps < 3:
            raise ValueError(f"phase_steps must be an integer >= 3, got {self.phase_steps}")
        if not self.photon_budget > 0:
            raise ValueError(f"photon_budget must be positive, got {self.photon_budget}")
        if not self.reference_strength > 0:
            raise ValueError(f"reference_strength must be positive, got {self.reference_strength}")


@dataclass(frozen=True)
class PortMeasurement:
    """Retrieved ``k x (n/m)`` block of one port, in that port's reference frame.

    ``reference_true`` is the simulated reference speckle; only tests and the
    round-trip evaluator may look at it.
    """

    matrix: np.ndarray
    port_index: int
    target_rows: tuple[int, ...]
    reference_true: np.ndarray = field(repr=False, default=None)
    normalized: bool = True

    def to_dict(self) -> dict:
        return tm_to_dict(TransmissionMatrix(self.matrix), port=self.port_index)

    def with_matrix(self, matrix: np.ndarray) -> "PortMeasurement":
        return PortMeasurement(matrix, self.port_index, self.target_rows, self.reference_true, self.normalized)


def draw_reference(k: int, port: int, cfg: AcquisitionConfig) -> np.ndarray:
    rng = trial_rng(cfg.seed, port, 0)
    return cfg.reference_strength * (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / np.sqrt(2)


def _shot_noise(intensity: np.ndarray, budget: float, rng: np.random.Generator) -> np.ndarray:
    if math.isinf(budget):
        return intensity
    scale = budget / intensity.mean()
    return rng.poisson(intensity * scale) / scale


def acquire_port(
    tm_true: TransmissionMatrix,
    port: int,
    target_rows: Sequence[int],
    cfg: AcquisitionConfig,
    reference: np.ndarray | None = None,
) -> PortMeasurement:
    """Phase-stepping retrieval of the targeted rows of one port.

    For every input mode ``e`` and target row ``i`` the ``P`` frames
    ``|r_i + exp(2 pi i p / P) t_ie|^2`` are demodulated at the first
    harmonic, which returns ``conj(r_i) t_ie`` exactly for ``P >= 3``.
    With ``normalize_reference`` each row is then divided by ``|r_i|``
    measured from one reference-only frame.
    """
    rows = tuple(int(i) for i in target_rows)
    if not rows:
        raise ValueError("target_rows must be non-empty")
    block = partition_ports(tm_true, tm_true.ports)[port][list(rows)]
    k = len(rows)
    r = draw_reference(k, port, cfg) if reference is None else np.asarray(reference, dtype=np.complex128)
    if r.shape != (k,):
        raise ValueError(f"reference must have {k} entries")
    steps = np.exp(2j * np.pi * np.arange(cfg.phase_steps) / cfg.phase_steps)
    frames = np.abs(r[None, :, None] + steps[:, None, None] * block[None]) ** 2
    noise_rng = trial_rng(cfg.seed, port, 1)
    frames = _shot_noise(frames, cfg.photon_budget, noise_rng)
    estimate = np.tensordot(steps.conj(), frames, axes=1) / cfg.phase_steps
    if cfg.normalize_reference:
        ref_frame = np.abs(r) ** 2
        if not math.isinf(cfg.photon_budget):
            scale = cfg.photon_budget / ref_frame.mean()
            ref_frame = noise_rng.poisson(ref_frame * scale) / scale
            # an empty reference frame is read as half a count
            ref_frame = np.maximum(ref_frame, 0.5 / scale)
        modulus = np.sqrt(ref_frame)
        estimate = estimate / modulus[:, None]
    return PortMeasurement(estimate, port, rows, r, cfg.normalize_reference)


# -- calibration oracle -----------------------------------------------------


@dataclass(frozen=True)
class OracleReading:
    """Single-port output intensities and two-photon coincidence probabilities."""

    singles: np.ndarray  # (2, k)
    indistinguishable: np.ndarray  # (k, k), upper triangle used
    distinguishable: np.ndarray


class CoincidenceOracle(Protocol):
    def __call__(self, ports: tuple[int, int], fields: tuple[np.ndarray, np.ndarray]) -> OracleReading: ...


class MediumOracle:
    """Noiseless detector model of the true medium at the targeted outputs.

    Calls are pure, so the oracle can be shared between threads.
    """

    def __init__(self, tm_true: TransmissionMatrix, target_rows: Sequence[int]):
        self.blocks = [b[list(target_rows)] for b in partition_ports(tm_true, tm_true.ports)]

    def __call__(self, ports, fields) -> OracleReading:
        a = self.blocks[ports[0]] @ fields[0]
        b = self.blocks[ports[1]] @ fields[1]
        singles = np.stack([np.abs(a) ** 2, np.abs(b) ** 2])
        return OracleReading(singles, _two_photon_probs(a, b, 1.0), _two_photon_probs(a, b, 0.0))


# -- calibration --------------------------------------------------------------


@dataclass(frozen=True)
class CalibrationReport:
    stage1_factor: list[list[complex]]
    stage2_phase: list[list[float]]
    residual_delta_v: float

    def to_json(self) -> str:
        def cplx(z):
            return [float(z.real), float(z.imag)]

        return json.dumps(
            {
                "stage1_factor": [[cplx(z) for z in f] for f in self.stage1_factor],
                "stage2_phase": self.stage2_phase,
                "residual_delta_v": self.residual_delta_v,
            },
            sort_keys=True,
        )


@dataclass(frozen=True)
class CalibrationResult:
    tm: TransmissionMatrix
    measurements: tuple[PortMeasurement, ...]
    relative_factors: tuple[np.ndarray, ...]
    report: CalibrationReport


def _probe_targets(k: int, probe_phase: float) -> list[np.ndarray]:
    uniform = np.ones((k, 2), dtype=np.complex128)
    tilted = uniform.copy()
    # a quarter-wave step on one row breaks the conjugation ambiguity of the uniform probe
    tilted[1 % k, 1] = np.exp(1j * probe_phase)
    return [uniform, tilted]


def _visibility_from_reading(reading: OracleReading, out_pairs) -> np.ndarray:
    i, j = np.array(out_pairs).T
    pi = reading.indistinguishable[i, j]
    pd = reading.distinguishable[i, j]
    with np.errstate(divide="ignore", invalid="ignore"):
        v = (pd - pi) / pd
    v[pd <= 0] = np.nan
    return v


def calibrate_ports(
    measurements: Sequence[PortMeasurement],
    oracle: CoincidenceOracle,
    probe_phase: float = np.pi / 2,
    refine: bool = True,
    grid_points: int = 64,
) -> CalibrationResult:
    """Reconcile per-port reference frames onto the frame of port 0.

    Stage 1 programs a uniform and a phase-tilted ``k x 2`` probe for each
    pair ``(0, j)``: singles give the moduli of the per-row relative
    reference ``rho_i``, coincidences give its phases (cosine inversion,
    sign resolved by the tilted probe). Stage 2 refines each row phase by a
    scalar search (coarse grid, then bounded Brent) minimizing the
    visibility mismatch of both probes. Returns the reconciled matrix
    ``diag(1/rho) @ M_j`` for every port.
    """
    measurements = list(measurements)
    if len(measurements) < 2:
        raise ValueError("calibration needs at least two ports")
    base = measurements[0]
    k = base.matrix.shape[0]
    if any(m.matrix.shape[0] != k for m in measurements):
        raise ValueError("all ports must be measured on the same target rows")
    out_pairs = [(i, l) for i in range(k) for l in range(i + 1, k)]
    probes = _probe_targets(k, probe_phase)

    factors = [np.ones(k, dtype=np.complex128)]
    stage1, stage2 = [], []
    residuals = []
    for meas in measurements[1:]:
        ports = (base.port_index, meas.port_index)
        shots = []
        for L in probes:
            f0 = solve_input_field(base.matrix, L[:, 0])
            fj = solve_input_field(meas.matrix, L[:, 1])
            reading = oracle(ports, (f0, fj))
            if np.any(reading.singles <= 0):
                raise CalibrationError("a detector recorded zero singles during calibration")
            # model columns in the measured frames; rho divides the second
            shots.append((base.matrix @ f0, meas.matrix @ fj, reading))

        a0, bj, reading = shots[0]
        beta_mod = np.sqrt(reading.singles[1] / reading.singles[0])
        rho_mod = np.abs(bj) / np.abs(a0) / beta_mod
        # cos(psi_i - psi_l) from |beta_i + beta_l|^2
        s0 = reading.singles[0]
        cosines = np.ones((k, k))
        for i, l in out_pairs:
            lhs = reading.indistinguishable[i, l] / (s0[i] * s0[l])
            c = (lhs - beta_mod[i] ** 2 - beta_mod[l] ** 2) / (2 * beta_mod[i] * beta_mod[l])
            cosines[i, l] = cosines[l, i] = np.clip(c, -1.0, 1.0)
        psi = np.zeros(k)
        if k > 1:
            psi[1] = np.arccos(cosines[0, 1])
        for l in range(2, k):
            cand = np.array([1.0, -1.0]) * np.arccos(cosines[0, l])
            psi[l] = cand[np.argmin(np.abs(np.cos(psi[1] - cand) - cosines[1, l]))]
        model_phase = np.angle(bj / a0)

        def rho_for(psi_values):
            chi = model_phase - psi_values
            return rho_mod * np.exp(1j * (chi - chi[0]))

        def mismatch(rho, which=(0, 1)):
            err = []
            for idx in which:
                a, b, rd = shots[idx]
                v_model = _pair_visibilities(a, b / rho, out_pairs)
                v_meas = _visibility_from_reading(rd, out_pairs)
                ok = ~(np.isnan(v_model) | np.isnan(v_meas))
                err.append(np.abs(v_model[ok] - v_meas[ok]))
            err = np.concatenate(err)
            return float(err.mean()) if err.size else 0.0

        candidates = [rho_for(psi), rho_for(-psi)]
        rho = min(candidates, key=lambda r: mismatch(r, (1,)))
        stage1.append(rho.copy())

        corrections = np.zeros(k)
        if refine and k > 1:
            grid = np.linspace(-np.pi, np.pi, grid_points, endpoint=False)
            for _ in range(2):
                for i in range(1, k):
                    def objective(delta, i=i):
                        trial = rho.copy()
                        trial[i] *= np.exp(1j * delta)
                        return mismatch(trial)

                    values = [objective(g) for g in grid]
                    start = grid[int(np.argmin(values))]
                    step = 2 * np.pi / grid_points
                    res = optimize.minimize_scalar(
                        objective, bounds=(start - step, start + step), method="bounded",
                        options={"xatol": 1e-12},
                    )
                    best = res.x if res.fun < objective(0.0) else 0.0
                    rho[i] *= np.exp(1j * best)
                    corrections[i] += best
        stage2.append(((corrections + np.pi) % (2 * np.pi) - np.pi).tolist())
        residuals.append(mismatch(rho))
        factors.append(rho)

    calibrated = tuple(m.with_matrix(m.matrix / f[:, None]) for m, f in zip(measurements, factors))
    order = np.argsort([m.port_index for m in calibrated])
    stacked = np.hstack([calibrated[i].matrix for i in order])
    report = CalibrationReport(
        stage1_factor=[list(map(complex, f)) for f in stage1],
        stage2_phase=stage2,
        residual_delta_v=float(np.mean(residuals)),
    )
    return CalibrationResult(
        TransmissionMatrix(stacked, ports=len(measurements)),
        calibrated,
        tuple(factors),
        report,
    )


# -- round trip -----------------------------------------------------------------


def _frame(meas: PortMeasurement) -> np.ndarray:
    r = meas.reference_true
    frame = np.conj(r)
    return frame / np.abs(r) if meas.normalized else frame


def align_columns(L: np.ndarray, Lt: np.ndarray) -> np.ndarray:
    """Rotate each column of ``Lt`` onto the phase of the matching column of ``L``.

    A phase per input port multiplies a single-photon input state by a
    global phase, so no photon-counting measurement can fix it.
    """
    overlap = np.einsum("ij,ij->j", Lt.conj(), L)
    phase = np.where(overlap == 0, 1.0, overlap / np.where(overlap == 0, 1.0, np.abs(overlap)))
    return Lt * phase[None, :]


def _sylvester_delta_v(model: np.ndarray, tm_true: TransmissionMatrix, rows: Sequence[int]) -> float:
    """Sylvester pairs programmed through ``model``, realized in ``tm_true``."""
    ideal = pair_family(sylvester4())
    realized = {}
    for pair, L in ideal.items():
        net = program_network(model, L)
        fields = [w * f for w, f in zip(net.port_amplitudes, net.input_fields)]
        blocks = partition_ports(tm_true, 2)
        realized[pair] = np.stack([blocks[j][list(rows)] @ fields[j] for j in range(2)], axis=1)
    return compare_visibilities(realized, ideal)["delta_v"]


def acquisition_roundtrip(
    tm_true: TransmissionMatrix,
    m: int,
    k: int,
    cfg: AcquisitionConfig,
    target: np.ndarray | None = None,
    target_rows: Sequence[int] | None = None,
) -> dict:
    """Acquire every port, calibrate, program a target and judge it on the true medium.

    Fidelities are evaluated in the output phase frame of port 0's reference,
    since per-detector phases are a convention of that reference, and after
    removing the unobservable phase of each input port (:func:`align_columns`).
    """
    tm_true = tm_true.with_ports(m)
    rng = trial_rng(cfg.seed, 2)
    rows = tuple(rng.choice(tm_true.n_out, size=k, replace=False)) if target_rows is None else tuple(target_rows)
    L = random_target(k, m, rng) if target is None else np.asarray(target, dtype=np.complex128)
    measurements = [acquire_port(tm_true, j, rows, cfg) for j in range(m)]
    cal = calibrate_ports(measurements, MediumOracle(tm_true, rows))
    frame = _frame(measurements[0])

    net = program_network(cal.tm, L)
    fields = [w * f for w, f in zip(net.port_amplitudes, net.input_fields)]
    blocks = partition_ports(tm_true, m)
    realized = np.stack([blocks[j][list(rows)] @ fields[j] for j in range(m)], axis=1)
    programming_fidelity = fidelity(L, align_columns(L, frame[:, None] * realized))
    # exact knowledge of the medium, expressed in the same reference frame
    truth = frame[:, None] * tm_true.entries[list(rows)]
    true_fidelity = fidelity(L, align_columns(L, program_network(truth, L).effective))
    native_fidelity = fidelity(L, align_columns(L, program_network(tm_true.entries, L, rows).effective))

    est = cal.tm.entries.copy()
    size = tm_true.port_size
    for j in range(m):
        block = slice(j * size, (j + 1) * size)
        est[:, block] = align_columns(truth[:, block].ravel()[:, None], est[:, block].ravel()[:, None]).reshape(k, size)
    c = np.vdot(est, truth) / np.vdot(est, est)
    report = {
        "programming_fidelity": programming_fidelity,
        "true_tm_fidelity": true_fidelity,
        "native_frame_fidelity": native_fidelity,
        "vs_ground_truth": float(np.linalg.norm(truth - c * est) / np.linalg.norm(truth)),
        "delta_v": compare_visibilities(realized, L)["delta_v"] if m >= 2 else float("nan"),
        "calibration": json.loads(cal.report.to_json()),
    }
    if k == 4 and m == 2:
        report["sylvester_delta_v"] = _sylvester_delta_v(cal.tm.entries, tm_true, rows)
        report["true_tm_sylvester_delta_v"] = _sylvester_delta_v(
            tm_true.entries[list(rows)], tm_true, rows
        )
    return report
