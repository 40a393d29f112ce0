"""Programming a target linear network onto a medium by phase conjugation.

For input port ``j`` the medium block linking its ``n/m`` controlled modes to
the ``k`` targeted outputs is ``T_j``. The injected field is
``E_j = T_j^dagger L_j`` and the network actually realized at the targets is
``T_j T_j^dagger L_j``, i.e. the target filtered by the time-reversal
operator of the block.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .medium import (
    TransmissionMatrix,
    gen_random_gaussian,
    gen_random_unitary,
    load_tm,
)
from .results import ExperimentResult


class Modulation(str, enum.Enum):
    FULL_COMPLEX = "full_complex"
    PHASE_ONLY = "phase_only"


class DegenerateWarning(RuntimeWarning):
    """A quantity was evaluated at a degenerate point (zero norm, zero flux)."""


@dataclass(frozen=True)
class ProgrammedNetwork:
    """Result of programming a target through a medium.

    ``input_fields`` are unit-norm per-port wavefronts. ``port_amplitudes``
    are the relative photon amplitudes (largest equal to one) that keep the
    column norms of ``effective`` proportional to ``T_j^dagger L_j``; they
    matter only for non-uniform targets.
    """

    input_fields: tuple[np.ndarray, ...]
    port_amplitudes: np.ndarray
    effective: np.ndarray
    target: np.ndarray
    target_rows: tuple[int, ...]
    fidelity: float
    transmittance: np.ndarray


def as_target(L) -> np.ndarray:
    L = np.asarray(L, dtype=np.complex128)
    if L.ndim == 1:
        L = L[:, None]
    if L.ndim != 2 or L.size == 0:
        raise ValueError(f"target must be a non-empty k x m matrix, got shape {L.shape}")
    if not np.all(np.isfinite(L)):
        raise ValueError("target entries must be finite")
    if np.any(np.all(L == 0, axis=0)):
        raise ValueError("target has an all-zero column")
    return L


def partition_ports(tm: TransmissionMatrix | np.ndarray, m: int) -> list[np.ndarray]:
    """Split the columns into ``m`` contiguous equal blocks (full row set)."""
    t = tm.entries if isinstance(tm, TransmissionMatrix) else np.asarray(tm)
    n_in = t.shape[1]
    if m < 1 or n_in % m:
        raise ValueError(f"m={m} does not divide the {n_in} input columns")
    size = n_in // m
    return [t[:, j * size:(j + 1) * size] for j in range(m)]


def solve_input_field(Tj: np.ndarray, Lj: np.ndarray, constraint: Modulation | str = Modulation.FULL_COMPLEX) -> np.ndarray:
    """Unit-norm input wavefront focusing ``Lj`` onto the rows of ``Tj``.

    ``Tj`` is the ``k x (n/m)`` block restricted to the targeted rows.
    """
    constraint = Modulation(constraint)
    Tj = np.asarray(Tj, dtype=np.complex128)
    Lj = np.asarray(Lj, dtype=np.complex128).ravel()
    if Tj.shape[0] != Lj.shape[0]:
        raise ValueError(f"block has {Tj.shape[0]} rows but target column has {Lj.shape[0]} entries")
    if not np.any(Lj):
        raise ValueError("target column is zero")
    field = Tj.conj().T @ Lj
    norm = np.linalg.norm(field)
    if norm == 0:
        raise ValueError("target column is orthogonal to every controlled mode")
    if constraint is Modulation.PHASE_ONLY:
        phases = np.exp(1j * np.angle(field))
        return phases / np.sqrt(phases.size)
    return field / norm


def effective_network(
    tm: TransmissionMatrix | np.ndarray,
    target_rows: Sequence[int],
    fields: Sequence[np.ndarray],
) -> np.ndarray:
    """Realized ``k x m`` network: column j is ``T_j[target_rows] @ fields[j]``.

    No renormalization is applied.
    """
    blocks = partition_ports(tm, len(fields))
    rows = list(target_rows)
    cols = []
    for j, (block, f) in enumerate(zip(blocks, fields)):
        f = np.asarray(f, dtype=np.complex128).ravel()
        if f.shape[0] != block.shape[1]:
            raise ValueError(f"field {j} has length {f.shape[0]}, port has {block.shape[1]} modes")
        cols.append(block[rows] @ f)
    return np.stack(cols, axis=1)


def fidelity(L, Lt) -> float:
    """One minus the mean element-wise distance after global alignment.

    ``L`` is rescaled to unit mean element modulus, ``Lt`` is aligned by the
    complex scalar minimizing the Frobenius distance, and the l1 distance is
    averaged over the ``k*m`` elements.
    """
    L = np.asarray(L, dtype=np.complex128)
    Lt = np.asarray(Lt, dtype=np.complex128)
    if L.shape != Lt.shape:
        raise ValueError(f"shape mismatch {L.shape} vs {Lt.shape}")
    scale = np.mean(np.abs(L))
    if scale == 0:
        raise ValueError("target is zero")
    L = L / scale
    norm2 = np.vdot(Lt, Lt).real
    if norm2 == 0:
        warnings.warn("realized network is zero; fidelity evaluated against zero", DegenerateWarning, stacklevel=2)
        return float(1 - np.abs(L).sum() / L.size)
    c = np.vdot(Lt, L) / norm2
    return float(1 - np.abs(L - c * Lt).sum() / L.size)


def transmittance(
    tm: TransmissionMatrix | np.ndarray,
    target_rows: Sequence[int],
    field: np.ndarray,
    port: int = 0,
    ports: int | None = None,
) -> float:
    """Fraction of the flux transmitted from ``port`` that lands on the targets."""
    if ports is None:
        ports = tm.ports if isinstance(tm, TransmissionMatrix) else 1
    block = partition_ports(tm, ports)[port]
    out = block @ np.asarray(field, dtype=np.complex128).ravel()
    total = np.vdot(out, out).real
    if total == 0:
        warnings.warn("no flux transmitted; transmittance undefined", DegenerateWarning, stacklevel=2)
        return float("nan")
    rows = list(target_rows)
    return float(np.vdot(out[rows], out[rows]).real / total)


def program_network(
    tm: TransmissionMatrix | np.ndarray,
    L,
    target_rows: Sequence[int] | None = None,
    constraint: Modulation | str = Modulation.FULL_COMPLEX,
) -> ProgrammedNetwork:
    """Program the ``k x m`` target ``L`` through ``tm`` using ``m`` ports."""
    L = as_target(L)
    k, m = L.shape
    t = tm.entries if isinstance(tm, TransmissionMatrix) else np.asarray(tm, dtype=np.complex128)
    rows = tuple(range(k)) if target_rows is None else tuple(int(i) for i in target_rows)
    if len(rows) != k:
        raise ValueError(f"{len(rows)} target rows given for a target with {k} rows")
    if len(set(rows)) != k or not all(0 <= i < t.shape[0] for i in rows):
        raise ValueError("target rows must be distinct and in range")
    blocks = partition_ports(t, m)
    fields = []
    weights = np.empty(m)
    for j, block in enumerate(blocks):
        sub = block[list(rows)]
        fields.append(solve_input_field(sub, L[:, j], constraint))
        weights[j] = np.linalg.norm(sub.conj().T @ L[:, j])
    weights = weights / weights.max()
    effective = effective_network(t, rows, [w * f for w, f in zip(weights, fields)])
    gamma = np.array([transmittance(t, rows, f, port=j, ports=m) for j, f in enumerate(fields)])
    return ProgrammedNetwork(
        input_fields=tuple(fields),
        port_amplitudes=weights,
        effective=effective,
        target=L,
        target_rows=rows,
        fidelity=fidelity(L, effective),
        transmittance=gamma,
    )


def random_target(k: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """``k x m`` matrix of i.i.d. standard complex Gaussian entries."""
    return (rng.standard_normal((k, m)) + 1j * rng.standard_normal((k, m))) / np.sqrt(2)


SCALING_COLUMNS = ("n", "m", "k", "trials", "fidelity_mean", "fidelity_std", "transmittance_mean")

MODELS = ("RM", "RUM", "FILE")


def trial_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for one trial, a pure function of ``(seed, *keys)``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *(int(k) for k in keys)]))


def _draw_medium(model: str, n: int, rng: np.random.Generator, source: np.ndarray | None) -> np.ndarray:
    sub_seed = int(rng.integers(2**63))
    if model == "RM":
        return gen_random_gaussian(n, n, sub_seed).entries
    if model == "RUM":
        return gen_random_unitary(n, sub_seed).entries
    rows = np.sort(rng.choice(source.shape[0], size=n, replace=False))
    cols = np.sort(rng.choice(source.shape[1], size=n, replace=False))
    return source[np.ix_(rows, cols)]


def scaling_experiment(
    model: str,
    n_list: int | Sequence[int],
    m: int,
    k: int | Sequence[int],
    trials: int,
    seed: int = 0,
    tm_file: str | Path | TransmissionMatrix | None = None,
    constraint: Modulation | str = Modulation.FULL_COMPLEX,
) -> ExperimentResult:
    """Mean and spread of programming fidelity over random targets and media.

    One row per ``(n, k)`` combination. Each trial draws a fresh ``n x n``
    medium (``FILE`` subsamples ``n`` rows and columns of a loaded matrix), a
    random set of ``k`` target rows and an i.i.d. Gaussian ``k x m`` target.
    """
    model = model.upper()
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
    n_list = [n_list] if np.isscalar(n_list) else list(n_list)
    k_list = [k] if np.isscalar(k) else list(k)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    for n in n_list:
        if n % m:
            raise ValueError(f"n={n} is not divisible by m={m}")
    source = None
    if model == "FILE":
        if tm_file is None:
            raise ValueError("model FILE needs tm_file")
        source = (tm_file if isinstance(tm_file, TransmissionMatrix) else load_tm(tm_file)).entries
        too_big = [n for n in n_list if n > min(source.shape)]
        if too_big:
            raise ValueError(f"n values {too_big} exceed the loaded matrix size {source.shape}")
    result = ExperimentResult(
        SCALING_COLUMNS,
        metadata={
            "scenario": "fidelity-scaling",
            "model": model,
            "n": n_list,
            "m": m,
            "k": k_list,
            "trials": trials,
            "seed": seed,
            "constraint": Modulation(constraint).value,
        },
    )
    for n in n_list:
        for kk in k_list:
            if kk > n:
                raise ValueError(f"k={kk} exceeds n={n}")
            fids = np.empty(trials)
            gammas = np.empty(trials)
            for trial in range(trials):
                rng = trial_rng(seed, n, kk, trial)
                t = _draw_medium(model, n, rng, source)
                rows = rng.choice(n, size=kk, replace=False)
                net = program_network(t, random_target(kk, m, rng), rows, constraint)
                fids[trial] = net.fidelity
                gammas[trial] = np.mean(net.transmittance)
            result.add(
                n=n,
                m=m,
                k=kk,
                trials=trials,
                fidelity_mean=float(fids.mean()),
                fidelity_std=float(fids.std(ddof=1)) if trials > 1 else 0.0,
                transmittance_mean=float(gammas.mean()),
            )
    return result


def fit_sqrt_law(x: Sequence[float], fid: Sequence[float]) -> tuple[float, float]:
    """Least-squares fit of ``F = 1 - c * x`` through the origin in ``1 - F``.

    Returns ``(c, r_squared)`` where R^2 is computed against the mean of F.
    """
    x = np.asarray(x, dtype=float)
    y = 1 - np.asarray(fid, dtype=float)
    c = float(x @ y / (x @ x))
    ss_res = float(np.sum((y - c * x) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return c, 1 - ss_res / ss_tot if ss_tot > 0 else float("nan")
