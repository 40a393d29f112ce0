"""Two-photon interference through (possibly lossy) linear networks.

Networks are complex ``k x m`` matrices acting on creation operators,
``a_p^dagger -> sum_i M[i, p] a_i^dagger``. Indices are zero-based
throughout; the usual one-based labels (H1, V1, H2, V2) map to 0..3.

Partial distinguishability uses a single overlap ``x`` so every probability
is ``x * P_indistinguishable + (1 - x) * P_distinguishable``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import optimize

from .results import ExperimentResult

Config = tuple[int, int]
Pair = tuple[int, int]

PHYSICAL_TOL = 1e-9


# -- reference networks ---------------------------------------------------


def fourier4() -> np.ndarray:
    j = np.arange(4)
    return np.exp(1j * np.pi * np.outer(j, j) / 2) / 2


def sylvester4() -> np.ndarray:
    h = np.array([[1.0, 1.0], [1.0, -1.0]])
    return np.kron(h, h).astype(np.complex128) / 2


def nonunitary4(scale: float = 0.25) -> np.ndarray:
    """``[[1, -1], [-1, 1]]`` tensor-squared, times ``scale``.

    The unscaled matrix has largest singular value 4, so the default
    ``scale=1/4`` is the largest physical (contractive) choice.
    """
    a = np.array([[1.0, -1.0], [-1.0, 1.0]])
    return scale * np.kron(a, a).astype(np.complex128)


def hadamard2() -> np.ndarray:
    return np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / np.sqrt(2)


# -- inputs and distributions ---------------------------------------------


def indistinguishability_from_delay(delay, coherence_fwhm: float):
    """Gaussian overlap whose full width at half maximum is ``coherence_fwhm``."""
    if coherence_fwhm <= 0:
        raise ValueError(f"coherence_fwhm must be positive, got {coherence_fwhm}")
    delay = np.asarray(delay, dtype=float)
    x = np.exp(-4 * np.log(2) * delay**2 / coherence_fwhm**2)
    return float(x) if x.ndim == 0 else x


@dataclass(frozen=True)
class TwoPhotonInput:
    """One photon in each of ``ports`` with overlap ``indistinguishability``."""

    ports: Pair = (0, 1)
    indistinguishability: float = 1.0
    delay: float | None = None
    coherence_fwhm: float | None = None

    def __post_init__(self):
        p, q = (int(v) for v in self.ports)
        if p == q:
            raise ValueError("the two photons must enter distinct ports")
        object.__setattr__(self, "ports", (p, q))
        if self.delay is not None:
            if self.coherence_fwhm is None:
                raise ValueError("delay needs coherence_fwhm")
            x = indistinguishability_from_delay(self.delay, self.coherence_fwhm)
            object.__setattr__(self, "indistinguishability", x)
        if not 0.0 <= self.indistinguishability <= 1.0:
            raise ValueError(f"indistinguishability must lie in [0, 1], got {self.indistinguishability}")


@dataclass(frozen=True)
class TwoPhotonDistribution:
    """Probabilities of every two-photon output configuration ``(i, j)``, ``i <= j``.

    ``total`` is below one for lossy networks.
    """

    probs: Mapping[Config, float]
    k: int

    @property
    def total(self) -> float:
        return float(sum(self.probs.values()))

    def __getitem__(self, config: Config) -> float:
        i, j = config
        return self.probs[(min(i, j), max(i, j))]

    def coincidences(self) -> dict[Config, float]:
        return {c: p for c, p in self.probs.items() if c[0] != c[1]}


def output_configs(k: int) -> list[Config]:
    return [(i, j) for i in range(k) for j in range(i, k)]


def pairs(n: int) -> list[Pair]:
    return list(itertools.combinations(range(n), 2))


def _columns(M, ports: Pair) -> tuple[np.ndarray, np.ndarray]:
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2 or M.shape[1] < 2:
        raise ValueError(f"network must be k x m with m >= 2, got shape {M.shape}")
    p, q = ports
    if not (0 <= p < M.shape[1] and 0 <= q < M.shape[1]):
        raise ValueError(f"input ports {ports} out of range for {M.shape[1]} columns")
    if not np.all(np.isfinite(M)):
        raise ValueError("network entries must be finite")
    return M[:, p], M[:, q]


def _two_photon_probs(u: np.ndarray, v: np.ndarray, x: float) -> np.ndarray:
    """``k x k`` matrix whose upper triangle holds the configuration probabilities."""
    a = np.outer(u, v)  # a[i, j] = M_ip M_jq
    perm = a + a.T
    classical = np.abs(a) ** 2 + np.abs(a.T) ** 2
    prob = x * np.abs(perm) ** 2 + (1 - x) * classical
    # collisions: |perm_ii|^2 / 2 = 2|M_ip M_iq|^2 and classical_ii / 2 = |M_ip M_iq|^2
    prob[np.diag_indices_from(prob)] /= 2
    return prob


def two_photon_distribution(M, photons: TwoPhotonInput | None = None, check_physical: bool = True) -> TwoPhotonDistribution:
    """Output statistics of two photons entering columns ``photons.ports`` of ``M``."""
    photons = photons or TwoPhotonInput()
    u, v = _columns(M, photons.ports)
    if check_physical:
        smax = np.linalg.svd(np.stack([u, v], axis=1), compute_uv=False)[0]
        if smax > 1 + PHYSICAL_TOL:
            raise ValueError(
                f"network is not physical: largest singular value {smax:.6g} > 1 "
                "(a passive network cannot amplify)"
            )
    prob = _two_photon_probs(u, v, photons.indistinguishability)
    k = len(u)
    return TwoPhotonDistribution({(i, j): float(prob[i, j]) for i, j in output_configs(k)}, k)


def hom_scan(
    M,
    ports: Pair,
    delays: Sequence[float],
    coherence_fwhm: float,
    output_pair: Pair,
) -> np.ndarray:
    """Probability at ``output_pair`` as a function of the inter-photon delay."""
    if coherence_fwhm <= 0:
        raise ValueError(f"coherence_fwhm must be positive, got {coherence_fwhm}")
    out = np.empty(len(delays))
    for n, d in enumerate(delays):
        photons = TwoPhotonInput(ports, delay=float(d), coherence_fwhm=coherence_fwhm)
        out[n] = two_photon_distribution(M, photons)[output_pair]
    return out


def dip_fwhm(delays: Sequence[float], curve: Sequence[float]) -> float:
    """Full width at half depth of a dip or peak relative to its outer plateau.

    The plateau is taken from the curve ends; crossings are linearly
    interpolated.
    """
    d = np.asarray(delays, dtype=float)
    y = np.asarray(curve, dtype=float)
    order = np.argsort(d)
    d, y = d[order], y[order]
    plateau = 0.5 * (y[0] + y[-1])
    centre = int(np.argmax(np.abs(y - plateau)))
    depth = y[centre] - plateau
    if depth == 0:
        return float("nan")
    s = (y - plateau) / depth  # 1 at the extremum, 0 on the plateau

    def crossing(indices):
        prev = centre
        for i in indices:
            if s[i] <= 0.5:
                frac = (s[prev] - 0.5) / (s[prev] - s[i])
                return d[prev] + frac * (d[i] - d[prev])
            prev = i
        return float("nan")

    left = crossing(range(centre - 1, -1, -1))
    right = crossing(range(centre + 1, len(d)))
    return float(right - left)


# -- visibilities ---------------------------------------------------------


@dataclass(frozen=True)
class VisibilityPattern:
    """Visibility per (output pair, input pair); NaN marks undefined entries."""

    values: np.ndarray
    output_pairs: tuple[Pair, ...]
    input_pairs: tuple[Pair, ...]

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.values)

    def to_csv(self) -> str:
        """Matrix with one-based labels: rows are output pairs, columns input pairs."""

        def label(p):
            return f"({p[0] + 1};{p[1] + 1})"

        lines = ["output\\input," + ",".join(label(p) for p in self.input_pairs)]
        for r, op in enumerate(self.output_pairs):
            cells = ["" if np.isnan(v) else format(float(v), ".17g") for v in self.values[r]]
            lines.append(label(op) + "," + ",".join(cells))
        return "\n".join(lines) + "\n"


def _pair_visibilities(u: np.ndarray, v: np.ndarray, out_pairs: Sequence[Pair]) -> np.ndarray:
    i, j = np.array(out_pairs).T
    a = u[i] * v[j]
    b = v[i] * u[j]
    pd = np.abs(a) ** 2 + np.abs(b) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        vis = -2 * np.real(a * np.conj(b)) / pd
    vis[pd <= 0] = np.nan
    return vis


def pair_family(M, input_pairs: Iterable[Pair] | None = None) -> dict[Pair, np.ndarray]:
    """Split a ``k x m`` network into its ``k x 2`` sub-networks, one per input pair."""
    M = np.asarray(M, dtype=np.complex128)
    input_pairs = pairs(M.shape[1]) if input_pairs is None else input_pairs
    return {tuple(p): M[:, list(p)] for p in input_pairs}


def visibility_pattern(family, output_pairs: Sequence[Pair] | None = None) -> VisibilityPattern:
    """Visibilities ``(P_D - P_I) / P_D`` for every detector pair and input pair.

    ``family`` is either a ``k x m`` matrix (all input pairs) or a mapping from
    input pair to its ``k x 2`` network. Visibilities are invariant under any
    rescaling, so unphysical (un-normalized) networks are accepted.
    """
    if not isinstance(family, Mapping):
        family = pair_family(family)
    nets = [np.asarray(net, dtype=np.complex128) for net in family.values()]
    k = nets[0].shape[0]
    if any(net.shape != (k, 2) for net in nets):
        raise ValueError("every family member must be a k x 2 network with the same k")
    output_pairs = tuple(pairs(k) if output_pairs is None else output_pairs)
    values = np.stack([_pair_visibilities(net[:, 0], net[:, 1], output_pairs) for net in nets], axis=1)
    return VisibilityPattern(values, output_pairs, tuple(tuple(p) for p in family))


def delta_v(measured: VisibilityPattern, ideal: VisibilityPattern) -> tuple[float, int]:
    """Mean ``|V_meas - V_ideal|`` over entries defined in both; also the excluded count."""
    if measured.values.shape != ideal.values.shape:
        raise ValueError("visibility patterns have different shapes")
    both = measured.defined & ideal.defined
    excluded = int(both.size - both.sum())
    if not both.any():
        return float("nan"), excluded
    return float(np.mean(np.abs(measured.values[both] - ideal.values[both]))), excluded


def compare_visibilities(family, ideal_family) -> dict:
    pattern = visibility_pattern(family)
    ideal = visibility_pattern(ideal_family)
    dv, excluded = delta_v(pattern, ideal)
    return {"pattern": pattern, "ideal": ideal, "delta_v": dv, "excluded": excluded}


# -- suppression ------------------------------------------------------------


def suppressed_set(ideal, ports: Pair = (0, 1), tol: float = 1e-9) -> list[Config]:
    """Configurations with vanishing probability for indistinguishable photons."""
    dist = two_photon_distribution(ideal, TwoPhotonInput(ports, 1.0), check_physical=False)
    return [c for c, p in dist.probs.items() if p < tol]


def degree_of_violation(ideal, measured: TwoPhotonDistribution, tol: float = 1e-9, ports: Pair = (0, 1)) -> float:
    """Fraction of detected two-photon events that land in suppressed configurations.

    Returns NaN (with a warning) when the ideal network suppresses nothing.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    suppressed = suppressed_set(ideal, ports, tol)
    if not suppressed:
        warnings.warn("ideal network has no suppressed configurations", RuntimeWarning, stacklevel=2)
        return float("nan")
    total = measured.total
    if total <= 0:
        raise ValueError("measured distribution is empty")
    return float(sum(measured[c] for c in suppressed) / total)


# -- phase reconstruction ---------------------------------------------------


@dataclass(frozen=True)
class PhaseReconstruction:
    matrix: np.ndarray
    residual: float
    converged: bool
    restarts: int


def _gauge_free_mask(shape: tuple[int, int]) -> np.ndarray:
    # row and column phases never change a visibility: pin first row and column
    mask = np.ones(shape, dtype=bool)
    mask[0, :] = False
    mask[:, 0] = False
    return mask


def reconstruct_phases(
    v_measured: VisibilityPattern,
    template,
    restarts: int = 20,
    seed: int = 0,
    tie_tol: float = 1e-6,
) -> PhaseReconstruction:
    """Phases of ``template`` (moduli fixed) that best reproduce ``v_measured``.

    Minimizes the mean absolute visibility mismatch with Nelder-Mead, started
    from the template phases and from ``restarts`` random points. Row and
    column phases are pinned to the template since visibilities cannot see
    them. Solutions within ``tie_tol`` of the best residual (the complex
    conjugate solution always ties) are resolved in favour of the one
    closest to the template.
    """
    template = np.asarray(template, dtype=np.complex128)
    if template.ndim != 2 or template.shape[1] < 2:
        raise ValueError("template must be a k x m matrix with m >= 2")
    moduli = np.abs(template)
    base = np.angle(template)
    mask = _gauge_free_mask(template.shape)
    input_pairs = list(v_measured.input_pairs)
    output_pairs = list(v_measured.output_pairs)
    target = v_measured.values
    defined = ~np.isnan(target)
    if not defined.any():
        raise ValueError("measured pattern has no defined entries")

    def build(theta):
        phases = base.copy()
        phases[mask] = theta
        return moduli * np.exp(1j * phases)

    def residual(theta):
        M = build(theta)
        vals = np.stack(
            [_pair_visibilities(M[:, p], M[:, q], output_pairs) for p, q in input_pairs], axis=1
        )
        diff = np.abs(vals - target)[defined]
        diff = np.where(np.isnan(diff), 2.0, diff)
        return float(diff.mean())

    def local(theta0):
        best = optimize.minimize(
            residual, theta0, method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 20000 * max(1, theta0.size), "adaptive": True},
        )
        # restarting the simplex at the optimum escapes premature collapse
        for _ in range(4):
            again = optimize.minimize(
                residual, best.x, method="Nelder-Mead",
                options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 20000 * max(1, theta0.size), "adaptive": True},
            )
            if again.fun >= best.fun - 1e-15:
                break
            best = again
        return best

    theta_template = base[mask]
    if theta_template.size == 0:
        return PhaseReconstruction(template.copy(), residual(theta_template), True, 0)
    rng = np.random.default_rng(seed)
    starts = [theta_template] + [rng.uniform(-np.pi, np.pi, theta_template.size) for _ in range(restarts)]
    runs = [local(s) for s in starts]
    best_fun = min(r.fun for r in runs)

    def distance(r):
        return float(np.sum(1 - np.cos(r.x - theta_template)))

    tied = [r for r in runs if r.fun <= best_fun + tie_tol]
    best = min(tied, key=distance)
    converged = bool(best.success)
    if not converged:
        warnings.warn("phase reconstruction did not converge; returning best found", RuntimeWarning, stacklevel=2)
    return PhaseReconstruction(build(best.x), float(best.fun), converged, restarts)


# -- coherent absorption ----------------------------------------------------


def ltbs(alpha: float, t: float) -> np.ndarray:
    """Lossy tunable beamsplitter ``t [[1, e^{i alpha}], [e^{i alpha}, 1]]``."""
    if not 0 < t <= 0.5:
        raise ValueError(
            f"t={t} outside (0, 0.5]: the largest singular value t|1 + e^(i alpha)| "
            "reaches 2t, which must not exceed 1 for a passive element"
        )
    e = np.exp(1j * alpha)
    return t * np.array([[1, e], [e, 1]], dtype=np.complex128)


def coherent_absorption_network(phi: float, alpha: float, t: float) -> np.ndarray:
    """``4 x 2`` network: balanced splitter, arm phase, LTBS, two analysis splitters.

    With photons in both inputs the state after the arm phase is the N00N
    state ``(|2,0> + e^{2i(phi + pi/2)}|0,2>)/sqrt(2)``; see :func:`noon_phase`.
    Outputs 0,1 analyse the upper LTBS port and 2,3 the lower one.
    """
    b = hadamard2()
    # LTBS outputs enter one port of each analysis splitter; the other ports are vacuum
    routing = np.zeros((4, 4), dtype=np.complex128)
    routing[0:2, 0:2] = b
    routing[2:4, 2:4] = b
    lift = np.zeros((4, 2), dtype=np.complex128)
    lift[0, 0] = 1
    lift[2, 1] = 1
    arm = np.diag([1.0, np.exp(1j * phi)])
    return routing @ lift @ ltbs(alpha, t) @ arm @ b


def noon_phase(parity: str) -> float:
    """Arm phase ``phi`` giving the ``"+"`` or ``"-"`` N00N state.

    The real Hadamard convention maps ``phi`` to the N00N phase
    ``phi' = phi + pi/2``, so ``"+"`` sits at ``phi = pi/2`` and ``"-"`` at
    ``phi = 0`` (both modulo pi).
    """
    if parity == "+":
        return np.pi / 2
    if parity == "-":
        return 0.0
    raise ValueError(f"parity must be '+' or '-', got {parity!r}")


def survival_probability(dist: TwoPhotonDistribution) -> dict[str, float]:
    """Two-photon survival behind the four analysis detectors (H1, V1, H2, V2).

    ``p20``, ``p02``, ``p11`` follow the detector formula with factor two for
    pairs sharing an analysis splitter. ``p20_direct`` / ``p02_direct`` add
    the number-resolved collision terms instead and must agree.
    """
    if dist.k != 4:
        raise ValueError(f"survival needs a distribution over 4 outputs, got {dist.k}")
    P = dist.__getitem__
    p20 = 2 * P((0, 1))
    p02 = 2 * P((2, 3))
    p11 = P((0, 2)) + P((0, 3)) + P((1, 2)) + P((1, 3))
    return {
        "total": p20 + p02 + p11,
        "p20": p20,
        "p02": p02,
        "p11": p11,
        "p20_direct": P((0, 0)) + P((1, 1)) + P((0, 1)),
        "p02_direct": P((2, 2)) + P((3, 3)) + P((2, 3)),
    }


SCAN_COLUMNS = ("phi", "alpha", "t", "total", "p20", "p02", "p11", "normalized_total")


def absorption_scan(
    phi_grid: Sequence[float],
    alpha_grid: Sequence[float],
    t: float = 0.5,
    indistinguishability: float = 1.0,
) -> ExperimentResult:
    """Survival surface over ``(alpha, phi)``; rows ordered alpha-major.

    ``normalized_total`` divides by the survival of the emulated lossless
    case ``alpha = pi/2`` at the same ``t``.
    """
    phi_grid = list(phi_grid)
    alpha_grid = list(alpha_grid)
    if not phi_grid or not alpha_grid:
        raise ValueError("phi and alpha grids must be non-empty")
    photons = TwoPhotonInput((0, 1), indistinguishability)
    baseline = survival_probability(
        two_photon_distribution(coherent_absorption_network(0.0, np.pi / 2, t), photons)
    )["total"]
    result = ExperimentResult(
        SCAN_COLUMNS,
        metadata={"scenario": "coherent-absorption", "t": t, "baseline": baseline,
                  "indistinguishability": indistinguishability},
    )
    for alpha in alpha_grid:
        for phi in phi_grid:
            s = survival_probability(two_photon_distribution(coherent_absorption_network(phi, alpha, t), photons))
            result.add(phi=float(phi), alpha=float(alpha), t=float(t), total=s["total"], p20=s["p20"],
                       p02=s["p02"], p11=s["p11"], normalized_total=s["total"] / baseline)
    return result


# -- Fock-space bookkeeping ---------------------------------------------------

Poly = dict[tuple[int, ...], complex]


def substitute(poly: Poly, U: np.ndarray) -> Poly:
    """Apply ``a_i^dagger -> sum_o U[o, i] a_o^dagger`` to a creation polynomial.

    Monomials are exponent tuples over the input modes.
    """
    U = np.asarray(U, dtype=np.complex128)
    n_out = U.shape[0]
    out: dict[tuple[int, ...], complex] = defaultdict(complex)
    for powers, coeff in poly.items():
        factors = [i for i, n in enumerate(powers) for _ in range(n)]
        for outs in itertools.product(range(n_out), repeat=len(factors)):
            amp = coeff
            for i, o in zip(factors, outs):
                amp *= U[o, i]
            key = [0] * n_out
            for o in outs:
                key[o] += 1
            out[tuple(key)] += amp
    return {k: v for k, v in out.items() if abs(v) > 1e-15}


def poly_to_state(poly: Poly) -> Poly:
    """Fock amplitudes of ``poly |0>``: each monomial picks up ``sqrt(prod n!)``."""
    return {k: v * math.sqrt(math.prod(math.factorial(n) for n in k)) for k, v in poly.items()}


def state_to_poly(state: Poly) -> Poly:
    return {k: v / math.sqrt(math.prod(math.factorial(n) for n in k)) for k, v in state.items()}


@dataclass(frozen=True)
class ThreeModeReport:
    t: float
    f1: float
    matrix: np.ndarray
    unitarity_error: float
    minus_polynomial: Poly
    plus_polynomial: Poly
    minus_state: Poly
    plus_state: Poly
    probabilities: dict[str, float] = field(default_factory=dict)

    @property
    def is_unitary(self) -> bool:
        return self.unitarity_error < 1e-12


# modes (a_plus, a_minus, a_3) from (a_1, a_2, a_3)
_PLUS_MINUS = np.array([[1, 1, 0], [1, -1, 0], [0, 0, np.sqrt(2)]], dtype=np.complex128) / np.sqrt(2)


def three_mode_embedding(t: float) -> np.ndarray:
    """Lossy beamsplitter as the first two columns of a 3-mode matrix.

    Columns are ``(t, t, f1)`` and ``(t, t, -f1)`` with ``f1 = sqrt(1 - 2t^2)``;
    the third column is an orthonormal complement of the first two. The
    first two columns are orthogonal only at ``t = 1/2``.
    """
    if not 0 < t <= 1 / np.sqrt(2) + 1e-12:
        raise ValueError(f"t={t} outside (0, 1/sqrt(2)]")
    f1 = math.sqrt(max(0.0, 1 - 2 * t * t))
    first = np.array([[t, t], [t, t], [f1, -f1]], dtype=np.complex128)
    from scipy.linalg import null_space

    complement = null_space(first.conj().T)
    third = complement[:, :1] if complement.shape[1] else np.zeros((3, 1))
    return np.hstack([first, third])


def three_mode_ltbs_check(t: float) -> ThreeModeReport:
    """Evolve ``a1^dagger^2 -/+ a2^dagger^2`` through the 3-mode embedding.

    Polynomials and states are reported in the ``(a_plus, a_minus, a_3)``
    basis, ``a_plus = (a_1 + a_2)/sqrt(2)``. Probabilities refer to the
    normalized N00N inputs.
    """
    U = three_mode_embedding(t)
    unitarity_error = float(np.max(np.abs(U.conj().T @ U - np.eye(3))))
    f1 = float(U[2, 0].real)
    to_pm = _PLUS_MINUS @ U
    minus = substitute({(2, 0, 0): 1.0, (0, 2, 0): -1.0}, to_pm)
    plus = substitute({(2, 0, 0): 1.0, (0, 2, 0): 1.0}, to_pm)
    # normalized N00N input (a1^2 +- a2^2)/2 |0>
    minus_state = poly_to_state({k: v / 2 for k, v in minus.items()})
    plus_state = poly_to_state({k: v / 2 for k, v in plus.items()})
    # monitored-mode probabilities in the (a_1, a_2, a_3) basis
    plus_12 = poly_to_state({k: v / 2 for k, v in substitute({(2, 0, 0): 1.0, (0, 2, 0): 1.0}, U).items()})
    minus_12 = poly_to_state({k: v / 2 for k, v in substitute({(2, 0, 0): 1.0, (0, 2, 0): -1.0}, U).items()})

    def prob(state, aux):
        return float(sum(abs(a) ** 2 for key, a in state.items() if key[2] == aux))

    probabilities = {
        "plus_two_absorbed": prob(plus_12, 2),
        "plus_one_absorbed": prob(plus_12, 1),
        "plus_survival": prob(plus_12, 0),
        "minus_two_absorbed": prob(minus_12, 2),
        "minus_one_absorbed": prob(minus_12, 1),
        "minus_survival": prob(minus_12, 0),
    }
    return ThreeModeReport(t, f1, U, unitarity_error, minus, plus, minus_state, plus_state, probabilities)
