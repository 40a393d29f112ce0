"""Transmission-matrix models of complex media and their spectral properties.

Three generators are provided:

- i.i.d. complex Gaussian random matrices ("RM"),
- Haar random unitaries ("RUM"),
- a phenomenological multimode-fibre stand-in with tunable mode mixing and
  mode-dependent loss.

All generators take an explicit integer seed and never touch global RNG
state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

Label = tuple[int, str]

POLARISATIONS = ("H", "V")


@dataclass(frozen=True)
class TransmissionMatrix:
    """Complex ``n_out x n_in`` field transmission matrix with port metadata.

    Parameters
    ----------
    entries:
        Complex matrix, rows are output modes and columns input modes.
    ports:
        Number of contiguous, equal-size column blocks (input ports).
    output_labels, input_labels:
        Optional ``(position, polarisation)`` tag per row / column.
    """

    entries: np.ndarray
    ports: int = 1
    output_labels: tuple[Label, ...] | None = None
    input_labels: tuple[Label, ...] | None = None

    def __post_init__(self):
        a = np.array(self.entries, dtype=np.complex128)
        if a.ndim != 2 or a.size == 0:
            raise ValueError(f"entries must be a non-empty 2-D matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("entries must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        if self.ports < 1 or a.shape[1] % self.ports:
            raise ValueError(f"{a.shape[1]} input columns cannot be split into {self.ports} equal ports")
        for name, labels, size in (
            ("output_labels", self.output_labels, a.shape[0]),
            ("input_labels", self.input_labels, a.shape[1]),
        ):
            if labels is None:
                continue
            labels = tuple((int(pos), str(pol)) for pos, pol in labels)
            if len(labels) != size:
                raise ValueError(f"{name} has {len(labels)} entries, expected {size}")
            if any(pol not in POLARISATIONS for _, pol in labels):
                raise ValueError(f"{name} polarisations must be one of {POLARISATIONS}")
            object.__setattr__(self, name, labels)

    @property
    def n_out(self) -> int:
        return self.entries.shape[0]

    @property
    def n_in(self) -> int:
        return self.entries.shape[1]

    @property
    def port_size(self) -> int:
        return self.n_in // self.ports

    def port_columns(self, j: int) -> range:
        if not 0 <= j < self.ports:
            raise ValueError(f"port {j} out of range for {self.ports} ports")
        return range(j * self.port_size, (j + 1) * self.port_size)

    def rows_with(self, polarisation: str) -> list[int]:
        if self.output_labels is None:
            raise ValueError("matrix has no output labels")
        return [i for i, (_, pol) in enumerate(self.output_labels) if pol == polarisation]

    def cols_with(self, polarisation: str) -> list[int]:
        if self.input_labels is None:
            raise ValueError("matrix has no input labels")
        return [i for i, (_, pol) in enumerate(self.input_labels) if pol == polarisation]

    def with_ports(self, ports: int) -> "TransmissionMatrix":
        return replace(self, ports=ports)


@dataclass(frozen=True)
class EigenvalueSpectrum:
    """Transmission eigenvalues and the histogram of ``tau / <tau>``.

    ``degenerate`` is set when every eigenvalue vanishes; the histogram is
    then empty.
    """

    values: np.ndarray
    mean: float
    bin_edges: np.ndarray
    density: np.ndarray
    degenerate: bool = False

    @property
    def normalized(self) -> np.ndarray:
        if self.degenerate:
            return np.zeros_like(self.values)
        return self.values / self.mean


def _check_positive(**dims: int) -> None:
    for name, value in dims.items():
        if int(value) != value or value < 1:
            raise ValueError(f"{name} must be a positive integer, got {value!r}")


def _complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def gen_random_gaussian(n_out: int, n_in: int, seed: int, ports: int = 1) -> TransmissionMatrix:
    """i.i.d. complex Gaussian matrix with ``E|t_ij|^2 = 1 / n_out``.

    With this scaling column norms average one and, for square matrices,
    the diagonal of ``T T^dagger`` averages one.
    """
    _check_positive(n_out=n_out, n_in=n_in)
    rng = np.random.default_rng(seed)
    entries = _complex_normal(rng, (n_out, n_in)) / np.sqrt(2 * n_out)
    return TransmissionMatrix(entries, ports=ports)


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar unitary from the QR decomposition of a Gaussian matrix.

    The phases of ``diag(R)`` are moved into ``Q`` so the result is
    Haar-distributed rather than biased by the QR sign convention.
    """
    q, r = np.linalg.qr(_complex_normal(rng, (n, n)))
    d = np.diag(r)
    return q * (d / np.abs(d))


def gen_random_unitary(n: int, seed: int, ports: int = 1) -> TransmissionMatrix:
    _check_positive(n=n)
    return TransmissionMatrix(haar_unitary(n, np.random.default_rng(seed)), ports=ports)


def _fractional_power(u: np.ndarray, power: float) -> np.ndarray:
    """``u ** power`` for a unitary ``u`` along the shortest geodesic from I."""
    if power == 0:
        return np.eye(u.shape[0], dtype=np.complex128)
    if power == 1:
        return u
    # Schur form of a normal matrix is diagonal; keeps eigenvectors orthonormal
    # even for nearly degenerate eigenphases.
    from scipy.linalg import schur

    t, z = schur(u, output="complex")
    phases = np.angle(np.diag(t))
    return (z * np.exp(1j * power * phases)) @ z.conj().T


def polarisation_labels(n: int) -> tuple[Label, ...]:
    half = n // 2
    return tuple((i % half, POLARISATIONS[i // half]) for i in range(n))


def gen_synthetic_fibre(
    n: int,
    coupling: float = 1.0,
    loss_spread: float = 0.3,
    seed: int = 0,
) -> TransmissionMatrix:
    """Phenomenological multimode fibre ``U2 . D . U1``.

    ``U1`` and ``U2`` are Haar unitaries raised to the power ``coupling`` so
    that ``coupling=0`` gives no mixing and ``coupling=1`` full Haar mixing.
    ``D`` holds per-mode amplitudes drawn uniformly from
    ``[1 - loss_spread, 1]``, rescaled so the largest equals one. The first
    half of rows and columns are labelled H, the second half V, and the two
    polarisations form the two input ports.
    """
    _check_positive(n=n)
    if n % 2:
        raise ValueError(f"synthetic fibre needs an even number of modes, got {n}")
    if not 0.0 <= coupling <= 1.0:
        raise ValueError(f"coupling must lie in [0, 1], got {coupling}")
    if loss_spread < 0:
        raise ValueError(f"loss_spread must be non-negative, got {loss_spread}")
    rng = np.random.default_rng(seed)
    u1 = _fractional_power(haar_unitary(n, rng), coupling)
    u2 = _fractional_power(haar_unitary(n, rng), coupling)
    amplitudes = rng.uniform(max(0.0, 1.0 - loss_spread), 1.0, size=n)
    amplitudes = amplitudes / amplitudes.max() if amplitudes.max() > 0 else amplitudes
    entries = (u2 * amplitudes) @ u1
    labels = polarisation_labels(n)
    return TransmissionMatrix(entries, ports=2, output_labels=labels, input_labels=labels)


def select_block(tm: TransmissionMatrix, rows: Sequence[int], cols: Sequence[int]) -> TransmissionMatrix:
    """Sub-matrix on the given row and column indices, metadata included.

    The result has a single input port unless the selected columns are
    exactly the full column set.
    """
    rows = [int(i) for i in rows]
    cols = [int(j) for j in cols]
    if not rows or not cols:
        raise ValueError("row and column index sets must be non-empty")
    for name, idx, size in (("row", rows, tm.n_out), ("column", cols, tm.n_in)):
        bad = [i for i in idx if not 0 <= i < size]
        if bad:
            raise ValueError(f"{name} indices {bad} out of range [0, {size})")
    ports = tm.ports if cols == list(range(tm.n_in)) else 1
    return TransmissionMatrix(
        tm.entries[np.ix_(rows, cols)],
        ports=ports,
        output_labels=None if tm.output_labels is None else tuple(tm.output_labels[i] for i in rows),
        input_labels=None if tm.input_labels is None else tuple(tm.input_labels[j] for j in cols),
    )


def polarisation_block(tm: TransmissionMatrix, out_pol: str, in_pol: str) -> TransmissionMatrix:
    return select_block(tm, tm.rows_with(out_pol), tm.cols_with(in_pol))


def transmission_spectrum(tm: TransmissionMatrix | np.ndarray, bins: int = 50) -> EigenvalueSpectrum:
    """Eigenvalues of ``T^dagger T`` and the normalized histogram of ``tau/<tau>``.

    Bins are equal-width over ``[0, max(tau/<tau>)]`` and densities are
    normalized by bin width so they integrate to one.
    """
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    t = tm.entries if isinstance(tm, TransmissionMatrix) else np.asarray(tm)
    tau = np.linalg.svd(t, compute_uv=False) ** 2
    tau = np.sort(tau)[::-1]
    mean = float(tau.mean())
    if mean <= 0:
        return EigenvalueSpectrum(tau, 0.0, np.zeros(0), np.zeros(0), degenerate=True)
    ratio = tau / mean
    upper = float(ratio.max())
    density, edges = np.histogram(ratio, bins=bins, range=(0.0, upper), density=True)
    return EigenvalueSpectrum(tau, mean, edges, density)


def marchenko_pastur_density(x: np.ndarray, ratio: float = 1.0) -> np.ndarray:
    """Marchenko-Pastur density of unit-mean eigenvalues for aspect ratio ``ratio <= 1``."""
    x = np.asarray(x, dtype=float)
    lo, hi = (1 - np.sqrt(ratio)) ** 2, (1 + np.sqrt(ratio)) ** 2
    out = np.zeros_like(x)
    inside = (x > lo) & (x < hi)
    xi = x[inside]
    out[inside] = np.sqrt((hi - xi) * (xi - lo)) / (2 * np.pi * ratio * xi)
    return out


def time_reversal_deviation(tm: TransmissionMatrix | np.ndarray) -> dict[str, float]:
    """Diagonal mean and off-diagonal RMS modulus of ``T T^dagger``."""
    t = tm.entries if isinstance(tm, TransmissionMatrix) else np.asarray(tm)
    a = t @ t.conj().T
    diag = np.real(np.diag(a))
    n = a.shape[0]
    if n == 1:
        return {"offdiag_rms": 0.0, "diag_mean": float(diag[0])}
    off = a[~np.eye(n, dtype=bool)]
    return {"offdiag_rms": float(np.sqrt(np.mean(np.abs(off) ** 2))), "diag_mean": float(diag.mean())}


# -- TMX-JSON -------------------------------------------------------------


def tm_to_dict(tm: TransmissionMatrix, **extra) -> dict:
    entries = tm.entries
    out = {
        "n_out": tm.n_out,
        "n_in": tm.n_in,
        "ports": tm.ports,
        "re": entries.real.ravel().tolist(),
        "im": entries.imag.ravel().tolist(),
    }
    if tm.output_labels is not None:
        out["labels"] = [list(lbl) for lbl in tm.output_labels]
    if tm.input_labels is not None:
        out["input_labels"] = [list(lbl) for lbl in tm.input_labels]
    out.update(extra)
    return out


def tm_from_dict(data: dict) -> TransmissionMatrix:
    try:
        n_out, n_in = int(data["n_out"]), int(data["n_in"])
        re, im = data["re"], data["im"]
    except KeyError as exc:
        raise ValueError(f"TMX-JSON missing field {exc}") from None
    if len(re) != n_out * n_in or len(im) != n_out * n_in:
        raise ValueError(
            f"TMX-JSON length mismatch: expected {n_out * n_in} values, got re={len(re)}, im={len(im)}"
        )
    entries = (np.asarray(re, dtype=float) + 1j * np.asarray(im, dtype=float)).reshape(n_out, n_in)
    labels = data.get("labels")
    input_labels = data.get("input_labels")
    return TransmissionMatrix(
        entries,
        ports=int(data.get("ports", 1)),
        output_labels=None if labels is None else tuple(tuple(lbl) for lbl in labels),
        input_labels=None if input_labels is None else tuple(tuple(lbl) for lbl in input_labels),
    )


def save_tm(tm: TransmissionMatrix, path: str | Path, **extra) -> None:
    # json writes floats with repr, i.e. full double precision
    Path(path).write_text(json.dumps(tm_to_dict(tm, **extra)))


def load_tm(path: str | Path) -> TransmissionMatrix:
    return tm_from_dict(json.loads(Path(path).read_text()))
