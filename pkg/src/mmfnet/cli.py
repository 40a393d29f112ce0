"""Command-line scenario runner.

Every scenario writes one table (CSV with a ``# {json}`` metadata line, or a
JSON document) to ``--out`` or stdout. Parameters come from defaults, then
an optional ``--config`` JSON file, then explicit flags.

Exit status: 0 on success, 2 on a usage error, 1 when ``validate`` finds a
failing criterion.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .acquisition import AcquisitionConfig, acquisition_roundtrip
from .medium import (
    gen_random_gaussian,
    gen_random_unitary,
    gen_synthetic_fibre,
    marchenko_pastur_density,
    polarisation_block,
    transmission_spectrum,
)
from .photonics import (
    TwoPhotonInput,
    absorption_scan,
    degree_of_violation,
    dip_fwhm,
    fourier4,
    hadamard2,
    hom_scan,
    indistinguishability_from_delay,
    nonunitary4,
    pair_family,
    pairs,
    sylvester4,
    two_photon_distribution,
    visibility_pattern,
)
from .results import ExperimentResult
from .shaping import MODELS, Modulation, program_network, random_target, scaling_experiment, trial_rng

EXIT_OK, EXIT_VALIDATION, EXIT_USAGE = 0, 1, 2


class UsageError(ValueError):
    pass


def int_list(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    if isinstance(text, int):
        return [text]
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def boolean(text) -> bool:
    if isinstance(text, bool):
        return text
    lowered = str(text).lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def choice(*options: str) -> Callable[[Any], str]:
    def parse(text) -> str:
        value = str(text)
        for opt in options:
            if value.lower() == opt.lower():
                return opt
        raise argparse.ArgumentTypeError(f"expected one of {', '.join(options)}, got {text!r}")

    parse.__name__ = "choice"
    return parse


@dataclass(frozen=True)
class Param:
    name: str
    kind: Callable[[Any], Any]
    default: Any
    help: str = ""

    @property
    def flag(self) -> str:
        return "--" + self.name.replace("_", "-")


# -- scenarios ----------------------------------------------------------------


def _medium(model: str, n: int, seed: int, ports: int = 1, coupling: float = 1.0, loss_spread: float = 0.3):
    if model == "RM":
        return gen_random_gaussian(n, n, seed, ports=ports)
    if model == "RUM":
        return gen_random_unitary(n, seed, ports=ports)
    return gen_synthetic_fibre(n, coupling, loss_spread, seed).with_ports(ports)


def run_fidelity_scaling(p: dict) -> ExperimentResult:
    if p["model"] == "FILE" and not p["tm_file"]:
        raise UsageError("--model FILE needs --tm-file")
    return scaling_experiment(p["model"], p["n"], p["m"], p["k"], p["trials"], seed=p["seed"],
                              tm_file=p["tm_file"] or None, constraint=p["constraint"])


def run_eigen_spectrum(p: dict) -> ExperimentResult:
    tm = _medium(p["model"], p["n"], p["seed"], coupling=p["coupling"], loss_spread=p["loss_spread"])
    if p["model"] == "FIBRE":
        blocks = {f"{o}out{i}in": polarisation_block(tm, o, i) for o in "HV" for i in "HV"}
    else:
        blocks = {"all": tm}
    result = ExperimentResult(("block", "bin_left", "bin_right", "density", "marchenko_pastur"))
    for name, block in blocks.items():
        spectrum = transmission_spectrum(block, p["bins"])
        centres = 0.5 * (spectrum.bin_edges[:-1] + spectrum.bin_edges[1:])
        ratio = min(block.n_out, block.n_in) / max(block.n_out, block.n_in)
        mp = marchenko_pastur_density(centres, ratio)
        for lo, hi, d, ref in zip(spectrum.bin_edges[:-1], spectrum.bin_edges[1:], spectrum.density, mp):
            result.add(block=name, bin_left=float(lo), bin_right=float(hi), density=float(d), marchenko_pastur=float(ref))
    return result


NETWORKS = {"fourier": fourier4, "sylvester": sylvester4, "nonunitary": nonunitary4}


def _program_pairs(ideal: np.ndarray, n: int, seed: int) -> dict:
    """Program each input pair of ``ideal`` through one Gaussian medium."""
    rng = trial_rng(seed, n)
    tm = gen_random_gaussian(n, n, int(rng.integers(2**63)), ports=2)
    rows = rng.choice(n, size=ideal.shape[0], replace=False)
    return {pair: program_network(tm, L, rows).effective for pair, L in pair_family(ideal).items()}


def run_visibility_pattern(p: dict) -> ExperimentResult:
    ideal = NETWORKS[p["network"]]()
    ideal_pattern = visibility_pattern(ideal)
    if p["medium"] == "ideal":
        realized_pattern = ideal_pattern
    else:
        realized_pattern = visibility_pattern(_program_pairs(ideal, p["n"], p["seed"]))
    result = ExperimentResult(("output_i", "output_j", "input_p", "input_q", "v_ideal", "v_realized"))
    for c, (p_in, q_in) in enumerate(ideal_pattern.input_pairs):
        for r, (i, j) in enumerate(ideal_pattern.output_pairs):
            result.add(output_i=i + 1, output_j=j + 1, input_p=p_in + 1, input_q=q_in + 1,
                       v_ideal=_nan_to_str(ideal_pattern.values[r, c]),
                       v_realized=_nan_to_str(realized_pattern.values[r, c]))
    both = ideal_pattern.defined & realized_pattern.defined
    dv = np.abs(realized_pattern.values - ideal_pattern.values)[both]
    result.metadata["delta_v"] = float(dv.mean()) if dv.size else None
    return result


def _nan_to_str(v: float):
    return "nan" if np.isnan(v) else float(v)


def run_hom_scan(p: dict) -> ExperimentResult:
    if p["steps"] < 3:
        raise UsageError("--steps must be at least 3")
    delays = np.linspace(-p["span"], p["span"], p["steps"])
    curve = hom_scan(hadamard2(), (0, 1), delays, p["fwhm"], (0, 1))
    result = ExperimentResult(("delay_ps", "indistinguishability", "coincidence"))
    for d, c in zip(delays, curve):
        result.add(delay_ps=float(d), indistinguishability=indistinguishability_from_delay(d, p["fwhm"]),
                   coincidence=float(c))
    result.metadata["measured_fwhm_ps"] = dip_fwhm(delays, curve)
    return result


def run_suppression(p: dict) -> ExperimentResult:
    ideal = NETWORKS[p["network"]]()
    input_pairs = [(0, 2)] if p["network"] == "fourier" else pairs(4)
    result = ExperimentResult(("trial", "input_p", "input_q", "d_ideal", "d_programmed"))
    for trial in range(p["trials"]):
        realized = _program_pairs(ideal, p["n"], trial_rng(p["seed"], trial).integers(2**31))
        for pair in input_pairs:
            net = ideal[:, list(pair)]
            d_ideal = degree_of_violation(net, two_photon_distribution(net, check_physical=False))
            dist = two_photon_distribution(realized[pair], TwoPhotonInput((0, 1), p["indistinguishability"]),
                                           check_physical=False)
            result.add(trial=trial, input_p=pair[0] + 1, input_q=pair[1] + 1, d_ideal=d_ideal,
                       d_programmed=degree_of_violation(net, dist))
    result.metadata["d_programmed_mean"] = float(np.mean(result.column("d_programmed")))
    return result


def run_coherent_absorption(p: dict) -> ExperimentResult:
    if p["alpha_steps"] < 1 or p["phi_steps"] < 1:
        raise UsageError("grid sizes must be positive")
    alphas = np.linspace(p["alpha_min"], p["alpha_max"], p["alpha_steps"])
    phis = np.linspace(0.0, 2 * np.pi, p["phi_steps"])
    return absorption_scan(phis, alphas, p["t"], p["indistinguishability"])


ROUNDTRIP_COLUMNS = ("seed", "programming_fidelity", "true_tm_fidelity", "native_frame_fidelity",
                     "vs_ground_truth", "delta_v", "stage2_phase", "residual_delta_v")


def run_tm_acquire(p: dict) -> ExperimentResult:
    result = ExperimentResult(ROUNDTRIP_COLUMNS)
    for trial in range(p["trials"]):
        seed = int(trial_rng(p["seed"], trial).integers(2**31))
        tm = _medium(p["model"], p["n"], seed)
        cfg = AcquisitionConfig(p["phase_steps"], p["photon_budget"], p["reference_strength"], seed,
                                p["normalize_reference"])
        r = acquisition_roundtrip(tm, p["m"], p["k"], cfg)
        cal = r["calibration"]
        result.add(seed=seed, **{c: r[c] for c in ROUNDTRIP_COLUMNS[1:6]},
                   stage2_phase=json.dumps(cal["stage2_phase"]),
                   residual_delta_v=cal["residual_delta_v"])
    return result


def run_multi_target(p: dict) -> ExperimentResult:
    n, k, m = p["n"], p["targets"], p["m"]
    if k > n:
        raise UsageError("--targets exceeds --n")
    rng = trial_rng(p["seed"], n, k)
    tm = gen_random_gaussian(n, n, int(rng.integers(2**63)), ports=m)
    rows = rng.choice(n, size=k, replace=False)
    L = np.ones((k, m)) if p["uniform"] else random_target(k, m, rng)
    net = program_network(tm, L, rows, p["constraint"])
    intensity = np.sum(np.abs(net.effective) ** 2, axis=1)
    wanted = np.sum(np.abs(L) ** 2, axis=1)
    result = ExperimentResult(("target", "output_row", "target_share", "intensity_share"))
    for i in range(k):
        result.add(target=i + 1, output_row=int(rows[i]), target_share=float(wanted[i] / wanted.sum()),
                   intensity_share=float(intensity[i] / intensity.sum()))
    result.metadata.update(fidelity=net.fidelity, gamma_per_port=[float(g) for g in net.transmittance],
                           gamma_total=float(np.mean(net.transmittance)))
    return result


COMMON = (
    Param("seed", int, 0, "base seed"),
    Param("out", str, "", "output path (default stdout)"),
    Param("format", choice("csv", "json"), "csv", "csv or json"),
)

SCENARIOS: dict[str, tuple[Callable[[dict], ExperimentResult], tuple[Param, ...], str]] = {
    "fidelity-scaling": (run_fidelity_scaling, (
        Param("model", choice(*MODELS), "RM", "RM, RUM or FILE"),
        Param("n", int_list, [64, 128, 256, 512], "comma-separated medium sizes"),
        Param("m", int, 2, "input ports"),
        Param("k", int_list, [4], "comma-separated target counts"),
        Param("trials", int, 200, "trials per (n, k)"),
        Param("constraint", choice(*(c.value for c in Modulation)), "full_complex", "modulation"),
        Param("tm_file", str, "", "TMX-JSON file for --model FILE"),
    ), "mean programming fidelity against medium size"),
    "eigen-spectrum": (run_eigen_spectrum, (
        Param("model", choice("RM", "RUM", "FIBRE"), "FIBRE", "RM, RUM or FIBRE"),
        Param("n", int, 398, "medium size"),
        Param("bins", int, 50, "histogram bins"),
        Param("coupling", float, 1.0, "fibre mode mixing in [0, 1]"),
        Param("loss_spread", float, 0.3, "fibre mode-dependent loss spread"),
    ), "transmission eigenvalue histograms"),
    "visibility-pattern": (run_visibility_pattern, (
        Param("network", choice(*NETWORKS), "fourier", "fourier, sylvester or nonunitary"),
        Param("medium", choice("ideal", "RM"), "RM", "ideal network or programmed through RM"),
        Param("n", int, 398, "medium size"),
    ), "two-photon visibilities per output and input pair"),
    "hom-scan": (run_hom_scan, (
        Param("fwhm", float, 1.5, "coherence FWHM in ps"),
        Param("span", float, 5.0, "delay half-range in ps"),
        Param("steps", int, 201, "delay points"),
    ), "coincidence probability against delay at a balanced splitter"),
    "suppression": (run_suppression, (
        Param("network", choice("fourier", "sylvester"), "fourier", "fourier or sylvester"),
        Param("n", int, 398, "medium size"),
        Param("trials", int, 100, "independent media"),
        Param("indistinguishability", float, 1.0, "photon overlap x"),
    ), "degree of violation of the suppression law"),
    "coherent-absorption": (run_coherent_absorption, (
        Param("alpha_steps", int, 33, "LTBS phase grid points"),
        Param("phi_steps", int, 65, "N00N phase grid points over [0, 2 pi]"),
        Param("alpha_min", float, math.pi / 2, "first LTBS phase"),
        Param("alpha_max", float, math.pi, "last LTBS phase"),
        Param("t", float, 0.5, "LTBS transmission coefficient"),
        Param("indistinguishability", float, 1.0, "photon overlap x"),
    ), "two-photon survival surface"),
    "tm-acquire": (run_tm_acquire, (
        Param("model", choice("RM", "RUM", "FIBRE"), "FIBRE", "medium model"),
        Param("n", int, 256, "medium size"),
        Param("m", int, 2, "input ports"),
        Param("k", int, 4, "targeted outputs"),
        Param("trials", int, 5, "independent round trips"),
        Param("phase_steps", int, 4, "phase-shifting steps"),
        Param("photon_budget", float, math.inf, "expected counts per frame (inf = noiseless)"),
        Param("reference_strength", float, 1.0, "reference amplitude"),
        Param("normalize_reference", boolean, True, "divide rows by the reference modulus"),
    ), "acquire, calibrate and program through a simulated medium"),
    "multi-target": (run_multi_target, (
        Param("targets", int, 18, "number of targeted outputs"),
        Param("n", int, 398, "medium size"),
        Param("m", int, 1, "input ports"),
        Param("uniform", boolean, False, "equal target amplitudes instead of random ones"),
        Param("constraint", choice(*(c.value for c in Modulation)), "full_complex", "modulation"),
    ), "distribute light over many targets"),
}


# -- argument handling ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmfnet", description="Programmable linear network simulations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="scenario", metavar="scenario", required=True)
    for name, (_, params, text) in SCENARIOS.items():
        sp = sub.add_parser(name, help=text, description=text)
        sp.add_argument("--config", help="JSON file of parameter values")
        for prm in COMMON + params:
            # SUPPRESS keeps unset flags out of the namespace so the config file can fill them
            sp.add_argument(prm.flag, dest=prm.name, type=prm.kind, default=argparse.SUPPRESS,
                            help=f"{prm.help} (default {prm.default!r})")
    sub.add_parser("validate", help="run the acceptance battery", description="run the acceptance battery")
    return parser


def resolve(scenario: str, flags: dict, config: dict | None) -> dict:
    """Defaults, then config values, then flags; unknown config keys are errors."""
    params = COMMON + SCENARIOS[scenario][1]
    known = {prm.name: prm for prm in params}
    values = {prm.name: prm.default for prm in params}
    for key, raw in (config or {}).items():
        name = key.replace("-", "_")
        if name == "scenario":
            if raw != scenario:
                raise UsageError(f"config is for scenario {raw!r}, not {scenario!r}")
            continue
        if name not in known:
            raise UsageError(f"unknown parameter {key!r} for {scenario}")
        try:
            values[name] = known[name].kind(raw)
        except (argparse.ArgumentTypeError, TypeError, ValueError) as exc:
            raise UsageError(f"bad value for {key!r}: {exc}") from exc
    values.update(flags)
    return values


def run_scenario(scenario: str, values: dict) -> ExperimentResult:
    runner = SCENARIOS[scenario][0]
    result = runner(values)
    resolved = {k: v for k, v in values.items() if k not in ("out", "format")}
    result.metadata.update(scenario=scenario, params=_jsonable(resolved), version=__version__)
    return result


def _jsonable(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _emit(result: ExperimentResult, fmt: str, out: str) -> None:
    text = result.to_json() if fmt == "json" else result.to_csv()
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.scenario == "validate":
        from .validate import validate_suite

        return EXIT_OK if validate_suite() else EXIT_VALIDATION
    flags = {k: v for k, v in vars(args).items() if k not in ("scenario", "config")}
    try:
        config = None
        if args.config:
            try:
                config = json.loads(Path(args.config).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise UsageError(f"cannot read config {args.config}: {exc}") from exc
            if not isinstance(config, dict):
                raise UsageError("config must be a JSON object")
        values = resolve(args.scenario, flags, config)
        result = run_scenario(args.scenario, values)
    except (UsageError, ValueError) as exc:
        parser.exit(EXIT_USAGE, f"mmfnet {args.scenario}: error: {exc}\n")
    _emit(result, values["format"], values["out"])
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
