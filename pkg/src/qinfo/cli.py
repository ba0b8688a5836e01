"""Command-line front end: ``qinfo <command> [options]``.

Runs a protocol ``--trials`` times (trial ``i`` uses seed ``seed + i``) and
writes a JSON or CSV report. Options may also come from ``--config FILE``
(a JSON object keyed by option name); explicit flags override the file.

Exit status: 0 on success, 2 on a configuration error, 3 when a protocol
invariant is violated during the run.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, fields
from typing import Callable

import numpy as np

from . import infotheory as it
from . import protocols as pr
from .qkd import AdversaryModel, Bb84Config, ConfigError, bb84_entangled_run, bb84_run
from .qstate import density_from_json, random_state, reduced_density, state_from_json, to_density
from .rng import SEED_MASK, Rng, trial_seed

COMMANDS = ("teleport", "superdense", "swap", "tomography", "bb84", "bb84-entangled", "analyze")
EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3


class InvariantViolation(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    command: str
    trials: int = 1
    seed: int = 0
    qubits: int = 10000
    adversary: str = "none"
    check_fraction: float = 0.25
    abort_threshold: float = 0.11
    recon_rounds: int = 4
    chsh_pairs: int = 0
    shots: int = 10000
    state: str | None = None
    cut: int | None = None
    output: str | None = None
    format: str = "json"

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.trials < 1:
            raise ConfigError("--trials must be positive")
        if not 0 <= self.seed <= SEED_MASK:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        if self.format not in ("json", "csv"):
            raise ConfigError("--format must be json or csv")
        if self.shots < 1 or self.qubits < 1:
            raise ConfigError("--shots and --qubits must be positive")
        AdversaryModel.parse(self.adversary)
        if self.command == "analyze" and not self.state:
            raise ConfigError("analyze needs --state")

    def to_json(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "output"}


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def summarize(records: list[dict]) -> dict:
    """Mean, population stddev, min and max of every numeric metric.

    ``trial`` and ``seed`` are bookkeeping and skipped; metrics come out
    sorted by name so the result is deterministic.
    """
    if not records:
        raise ValueError("cannot summarize an empty batch")
    names = sorted({k for r in records for k, v in r.items()
                    if k not in ("trial", "seed") and isinstance(v, (int, float, bool)) and v is not None})
    out = {}
    for name in names:
        vals = np.array([float(r[name]) for r in records if isinstance(r.get(name), (int, float, bool))])
        out[name] = {
            "count": int(vals.size),
            "mean": float(vals.mean()),
            "stddev": float(vals.std()),
            "min": float(vals.min()),
            "max": float(vals.max()),
        }
    return out


# -- per-command trial runners -------------------------------------------------

def _teleport_trial(cfg: ExperimentConfig, rng: Rng) -> dict:
    chi = random_state(1, rng)
    try:
        out = pr.teleport(chi, rng)
    except pr.ProtocolError as exc:
        raise InvariantViolation(str(exc)) from None
    return {
        "bell_outcome": out.bell_outcome[0] * 2 + out.bell_outcome[1],
        "bell_state": out.bell_state,
        "correction": out.correction_applied,
        "fidelity": out.fidelity_to_input,
    }


def _superdense_trial(cfg: ExperimentConfig, rng: Rng) -> dict:
    msg = tuple(int(b) for b in rng.bits(2))
    decoded, _ = pr.superdense_encode_decode(msg, rng)
    if decoded != msg:
        raise InvariantViolation(f"superdense coding decoded {decoded} for {msg}")
    return {"message": f"{msg[0]}{msg[1]}", "decoded": f"{decoded[0]}{decoded[1]}", "success": 1}


def _swap_trial(cfg: ExperimentConfig, rng: Rng) -> dict:
    try:
        out = pr.entanglement_swap(rng)
    except pr.ProtocolError as exc:
        raise InvariantViolation(str(exc)) from None
    return {
        "alice_outcome": out.alice_outcome[0] * 2 + out.alice_outcome[1],
        "bc_bell_state": out.bc_bell_state,
        "bc_entropy": it.entanglement_entropy(out.uncorrected_state, 1),
        "fidelity": out.fidelity_to_singlet,
    }


def _tomography_trial(cfg: ExperimentConfig, rng: Rng) -> dict:
    state = random_state(1, rng)
    res = pr.tomography_single_qubit(state, cfg.shots, rng)
    err = np.abs(np.array(res.bloch) - pr.bloch_vector(state))
    return {
        "x": res.bloch[0], "y": res.bloch[1], "z": res.bloch[2],
        "max_error": float(err.max()),
        "outside_bloch_ball": int(res.outside_bloch_ball),
    }


def _bb84_trial(cfg: ExperimentConfig, seed: int) -> dict:
    bcfg = Bb84Config(
        num_qubits_sent=cfg.qubits,
        check_fraction=cfg.check_fraction,
        qber_abort_threshold=cfg.abort_threshold,
        adversary=AdversaryModel.parse(cfg.adversary),
        seed=seed,
        recon_rounds=cfg.recon_rounds,
        chsh_pairs=cfg.chsh_pairs,
    )
    run = bb84_entangled_run if cfg.command == "bb84-entangled" else bb84_run
    session = run(bcfg)
    if session.completed and not session.keys_match:
        raise InvariantViolation(f"completed session with seed {seed} ended with mismatched keys")
    rep = session.report()
    rep.pop("config")
    rep["completed"] = int(session.completed)
    return rep


_RUNNERS: dict[str, Callable[[ExperimentConfig, Rng], dict]] = {
    "teleport": _teleport_trial,
    "superdense": _superdense_trial,
    "swap": _swap_trial,
    "tomography": _tomography_trial,
}


def _analyze(cfg: ExperimentConfig) -> dict:
    with open(cfg.state) as fh:
        obj = json.load(fh)
    if isinstance(obj, dict) and "amplitudes" in obj:
        psi = state_from_json(obj)
        rho = to_density(psi)
        out = {"num_qubits": psi.num_qubits, "pure": True, "von_neumann_entropy": it.von_neumann_entropy(rho)}
        if psi.num_qubits >= 2:
            cut = 1 if cfg.cut is None else cfg.cut
            sd = it.schmidt_decompose(psi, cut)
            out.update({
                "cut": cut,
                "entanglement_entropy": it.entanglement_entropy(psi, cut),
                "schmidt_coefficients": [float(c) for c in sd.coefficients],
                "schmidt_rank": sd.rank,
                "entangled": sd.rank >= 2,
            })
    else:
        rho = density_from_json(obj)
        out = {"num_qubits": rho.num_qubits, "pure": False, "purity": rho.purity(),
               "von_neumann_entropy": it.von_neumann_entropy(rho)}
        if rho.num_qubits >= 2 and cfg.cut is not None:
            out["cut"] = cfg.cut
            out["reduced_entropy"] = it.von_neumann_entropy(reduced_density(rho, range(cfg.cut)))
    if rho.num_qubits == 2:
        sep, lo = it.ppt_check(rho)
        out["ppt_separable"] = sep
        out["ppt_min_eigenvalue"] = lo
    return out


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Execute ``cfg`` and return the report (raises InvariantViolation on breach)."""
    cfg.validate()
    report: dict = {"command": cfg.command, "config": cfg.to_json()}
    if cfg.command == "analyze":
        report["analysis"] = _analyze(cfg)
        return report

    trials = []
    for i in range(cfg.trials):
        seed = trial_seed(cfg.seed, i)
        if cfg.command in ("bb84", "bb84-entangled"):
            metrics = _bb84_trial(cfg, seed)
        else:
            metrics = _RUNNERS[cfg.command](cfg, Rng(seed))
        trials.append({"trial": i, "seed": seed, **metrics})
    report["trials"] = trials
    report["summary"] = summarize(trials)
    if cfg.command in ("teleport", "swap"):
        report["min_fidelity"] = report["summary"]["fidelity"]["min"]
        key = "bell_outcome" if cfg.command == "teleport" else "alice_outcome"
        counts = np.bincount([t[key] for t in trials], minlength=4)
        report["outcome_frequencies"] = [float(c) / cfg.trials for c in counts]
    if cfg.command in ("bb84", "bb84-entangled"):
        s = report["summary"]
        report["qber"] = s["qber"]["mean"] if "qber" in s else None
        report["abort_rate"] = 1.0 - s["completed"]["mean"]
    return report


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if "analysis" in report:
        w.writerow(["metric", "value"])
        for k in sorted(report["analysis"]):
            w.writerow([k, json.dumps(report["analysis"][k])])
        return buf.getvalue()
    cols = sorted({k for t in report["trials"] for k in t} - {"trial", "seed"})
    w.writerow(["trial", "seed"] + cols)
    for t in report["trials"]:
        w.writerow([t["trial"], t["seed"]] + ["" if t.get(c) is None else t[c] for c in cols])
    return buf.getvalue()


# -- argument handling -----------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qinfo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    common = argparse.ArgumentParser(add_help=False, argument_default=S)
    common.add_argument("--config", help="JSON file of option values; flags override it")
    common.add_argument("--trials", type=int)
    common.add_argument("--seed", type=int, help="base seed (default: $QINFO_SEED or 0)")
    common.add_argument("--output", help="report path (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"))

    qkd = argparse.ArgumentParser(add_help=False, argument_default=S)
    qkd.add_argument("--qubits", type=int)
    qkd.add_argument("--adversary", help="none, intercept-zx, intercept-fixed:z|x, depolarize:<p>")
    qkd.add_argument("--check-fraction", dest="check_fraction", type=float)
    qkd.add_argument("--abort-threshold", dest="abort_threshold", type=float)
    qkd.add_argument("--recon-rounds", dest="recon_rounds", type=int)
    qkd.add_argument("--chsh-pairs", dest="chsh_pairs", type=int)

    for name in ("teleport", "superdense", "swap"):
        sub.add_parser(name, parents=[common], argument_default=S)
    tomo = sub.add_parser("tomography", parents=[common], argument_default=S)
    tomo.add_argument("--shots", type=int)
    sub.add_parser("bb84", parents=[common, qkd], argument_default=S)
    sub.add_parser("bb84-entangled", parents=[common, qkd], argument_default=S)
    ana = sub.add_parser("analyze", parents=[common], argument_default=S)
    ana.add_argument("--state", help="state JSON ({num_qubits, amplitudes} or a density matrix)")
    ana.add_argument("--cut", type=int, help="qubits on side A of the bipartition")
    return parser


def _coerce(name: str, value):
    kind = _FIELD_TYPES[name]
    if value is None:
        return None
    if "int" in kind and not isinstance(value, bool) and isinstance(value, int):
        return value
    if "int" in kind:
        raise ConfigError(f"{name} must be an integer")
    if "float" in kind and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if "float" in kind:
        raise ConfigError(f"{name} must be a number")
    if not isinstance(value, str):
        raise ConfigError(f"{name} must be a string")
    return value


def build_config(argv: list[str] | None = None, env: dict | None = None) -> ExperimentConfig:
    """Merge defaults, ``$QINFO_SEED``, the optional config file and flags, in that order."""
    env = os.environ if env is None else env
    ns = vars(_build_parser().parse_args(argv))
    values: dict = {}
    if "QINFO_SEED" in env:
        try:
            values["seed"] = int(env["QINFO_SEED"])
        except ValueError:
            raise ConfigError(f"QINFO_SEED={env['QINFO_SEED']!r} is not an integer") from None
    path = ns.pop("config", None)
    if path:
        try:
            with open(path) as fh:
                filecfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from None
        if not isinstance(filecfg, dict):
            raise ConfigError("config file must hold a JSON object")
        for key, val in filecfg.items():
            name = key.replace("-", "_")
            if name not in _FIELD_TYPES or name == "command":
                raise ConfigError(f"unknown config field {key!r}")
            values[name] = _coerce(name, val)
    values.update(ns)
    cfg = ExperimentConfig(**values)
    cfg.validate()
    return cfg


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = build_config(argv)
    except ConfigError as exc:
        print(f"qinfo: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # argparse already printed usage
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        report = run_experiment(cfg)
    except InvariantViolation as exc:
        print(f"qinfo: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ConfigError, ValueError, OSError) as exc:
        print(f"qinfo: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = render(report, cfg.format)
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
