"""Command-line experiment runner.

Exit codes: 0 success, 2 configuration error, 3 numerical or oracle failure.
Errors are written to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Any

import numpy as np

from . import oracles, sampling
from .circuit import CircuitError
from .config import ConfigError, ExperimentConfig, load_config, parse_config, preset_data, preset_names, set_path

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class CommandError(Exception):
    def __init__(self, code: int, kind: str, message: str, details: Any = None):
        super().__init__(message)
        self.code, self.kind, self.details = code, kind, details

    def payload(self) -> dict:
        out = {"error": self.kind, "message": str(self)}
        if self.details:
            out["details"] = self.details
        return out


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False)


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text, encoding="utf-8")
    return path


# ---- running a config ---------------------------------------------------------------


def _override(cfg: ExperimentConfig, seed: int | None, n_configs: int | None) -> ExperimentConfig:
    data = cfg.model_dump()
    if seed is not None:
        data["sampling"]["seed"] = seed
    if n_configs is not None:
        key = "n_s" if cfg.sampling.estimator == "single_run" else "n_configs"
        data["sampling"][key] = n_configs
        if data["sampling"].get("n_clifford") is not None:
            data["sampling"]["n_clifford"] = n_configs
    return parse_config(data)


def _build(cfg: ExperimentConfig, base_dir: Path | None):
    try:
        circuit = cfg.build_circuit(base_dir)
        model = cfg.build_noise(circuit, base_dir)
    except (CircuitError, ValueError, OSError) as exc:
        details = exc.errors if isinstance(exc, CircuitError) else None
        raise CommandError(EXIT_CONFIG, "config", str(exc), details) from None
    return circuit, model


def run_experiment(cfg: ExperimentConfig, base_dir: Path | None = None, threads: int = 1) -> list[sampling.LossEstimate]:
    """One estimate per configured mode; the hybrid-combined estimate comes first when requested."""
    circuit, model = _build(cfg, base_dir)
    s = cfg.sampling
    try:
        modes = [sampling.SamplingMode.parse(m).check(circuit) for m in s.modes]
    except ValueError as exc:
        raise CommandError(EXIT_CONFIG, "config", str(exc)) from None
    out = []
    try:
        if s.estimator == "single_run":
            out.append(sampling.estimate_loss_single_run(circuit, model, s.n_s, s.seed, threads))
            return out
        if s.estimator == "hybrid_combined":
            out.append(
                sampling.estimate_loss_hybrid_combined(
                    circuit, model, s.n_configs, s.seed, s.n_clifford, s.method, threads=threads
                )
            )
        for mode in modes:
            if s.estimator == "fidelity":
                est = sampling.estimate_fidelity_loss(circuit, model, mode, s.n_configs, s.seed, s.g_draws, threads)
            else:
                est = sampling.estimate_loss_mean_value(
                    circuit, model, mode, s.n_configs, s.seed, s.shots, threads, keep_records=True
                )
                est.extras.setdefault("estimator", "mean_value")
                if s.shots is not None:
                    est.extras["shots"] = s.shots
            out.append(est)
    except sampling.InfeasibleError as exc:
        raise CommandError(EXIT_CONFIG, "infeasible", str(exc)) from None
    except (FloatingPointError, np.linalg.LinAlgError, ValueError) as exc:
        raise CommandError(EXIT_NUMERICAL, "numerical", str(exc)) from None
    return out


def summarize(cfg: ExperimentConfig, est: sampling.LossEstimate) -> dict:
    row = {"name": cfg.name, "seed": cfg.sampling.seed, **est.summary()}
    if est.batch is not None:
        errors = est.batch.errors
        if cfg.outputs.histogram_bins:
            row["histogram"] = sampling.histogram(errors, cfg.outputs.histogram_bins)
        if cfg.outputs.moments:
            row["moments"] = sampling.moments(errors, cfg.outputs.moments, seed=cfg.sampling.seed)
    return row


def sample_lines(estimates: list[sampling.LossEstimate]) -> str:
    buf = io.StringIO()
    for est in estimates:
        if est.batch is None:
            continue
        for r in est.batch.records():
            rec = {"mode": est.mode, **json.loads(r.to_json())}
            buf.write(json.dumps(rec) + "\n")
    return buf.getvalue()


def _summary_json(rows: list[dict]) -> str:
    return _dumps(rows[0] if len(rows) == 1 else rows) + "\n"


def write_outputs(cfg: ExperimentConfig, estimates, out: Path) -> list[dict]:
    rows = [summarize(cfg, e) for e in estimates]
    if cfg.outputs.samples:
        _write(out, "samples.jsonl", sample_lines(estimates))
    _write(out, "summary.json", _summary_json(rows))
    return rows


# ---- subcommands -------------------------------------------------------------------


def _load(args) -> tuple[ExperimentConfig, Path | None]:
    if not args.config:
        raise CommandError(EXIT_CONFIG, "config", "--config is required")
    try:
        cfg, base = load_config(args.config)
        cfg = _override(cfg, args.seed, getattr(args, "n_configs", None))
    except ConfigError as exc:
        raise CommandError(EXIT_CONFIG, "config", str(exc), exc.details) from None
    return cfg, base


def cmd_sample(args) -> int:
    cfg, base = _load(args)
    estimates = run_experiment(cfg, base, args.threads)
    rows = write_outputs(cfg, estimates, Path(args.out))
    print(_dumps([{k: r[k] for k in ("mode", "n_samples", "loss", "stderr")} for r in rows]))
    return EXIT_OK


def _parse_values(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise CommandError(EXIT_CONFIG, "config", f"--values must be comma-separated numbers, got {text!r}") from None
    if not vals:
        raise CommandError(EXIT_CONFIG, "config", "--values is empty")
    return vals


def cmd_sweep(args) -> int:
    """Every point reuses the base seed, so the points share random configurations."""
    cfg, base = _load(args)
    values = _parse_values(args.values)
    data = cfg.model_dump()
    table = []
    for v in values:
        try:
            point = parse_config(set_path(data, args.param, v))
        except ConfigError as exc:
            raise CommandError(EXIT_CONFIG, "config", str(exc), exc.details) from None
        for est in run_experiment(point, base, args.threads):
            table.append({"value": v, "mode": est.mode, "loss": est.value, "stderr": est.standard_error})
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["value", "mode", "loss", "stderr"], lineterminator="\n")
    writer.writeheader()
    for row in table:
        writer.writerow({k: repr(row[k]) if isinstance(row[k], float) else row[k] for k in row})
    out = Path(args.out)
    _write(out, "sweep.csv", buf.getvalue())
    best = min(table, key=lambda r: r["loss"])
    result = {"parameter": args.param, "points": table, "minimum": best}
    _write(out, "sweep.json", _dumps(result) + "\n")
    print(_dumps({"parameter": args.param, "minimum": best}))
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    names = list(oracles.SUITES) if args.suite in (None, "all") else [args.suite]
    unknown = [n for n in names if n not in oracles.SUITES]
    if unknown:
        raise CommandError(
            EXIT_CONFIG, "config", f"unknown oracle suite {unknown[0]!r}", {"available": list(oracles.SUITES)}
        )
    seed = 0 if args.seed is None else args.seed
    reports = [oracles.run_suite(n, seed) for n in names]
    report = {"passed": all(r["passed"] for r in reports), "suites": reports}
    text = _dumps(report) + "\n"
    if args.out:
        _write(Path(args.out), "oracle_report.json", text)
    print(text, end="")
    return EXIT_OK if report["passed"] else EXIT_NUMERICAL


def figure_ids() -> list[str]:
    return [n for n in preset_names() if n.startswith("fig")]


def figure_data(cfg: ExperimentConfig, rows: list[dict]) -> dict:
    """Plot-ready data: per-mode histograms with the Gaussian ``N(0, L)`` overlay, and estimator comparisons."""
    panels = []
    for r in rows:
        panel = {k: r[k] for k in ("mode", "n_samples", "loss", "stderr") if k in r}
        for key in ("histogram", "moments"):
            if key in r:
                panel[key] = r[key]
        if "histogram" in r:
            panel["gaussian_overlay"] = {"mean": 0.0, "variance": r["loss"]}
        panels.append(panel)
    out = {"figure": cfg.name, "description": cfg.description, "panels": panels}
    by_mode = {r["mode"]: r for r in rows}
    if "combined" in by_mode and "unitary" in by_mode:
        lu = by_mode["unitary"]["loss"]
        lc = by_mode["combined"]["clifford"]["loss"]
        lcomb = by_mode["combined"]["loss"]
        out["comparison"] = {
            "unitary": lu,
            "clifford": lc,
            "combined": lcomb,
            "combined_gap": abs(lcomb - lu),
            "clifford_gap": abs(lc - lu),
            "combined_closer": abs(lcomb - lu) < abs(lc - lu),
        }
    return out


def cmd_reproduce(args) -> int:
    ids = figure_ids()
    if args.figure not in ids:
        raise CommandError(EXIT_CONFIG, "config", f"unknown figure id {args.figure!r}", {"available": ids})
    cfg = _override(parse_config(preset_data(args.figure)), args.seed, args.n_configs)
    estimates = run_experiment(cfg, None, args.threads)
    out = Path(args.out)
    rows = write_outputs(cfg, estimates, out)
    fig = figure_data(cfg, rows)
    _write(out, f"{args.figure}.json", _dumps(fig) + "\n")
    print(_dumps({"figure": args.figure, "files": sorted(p.name for p in out.iterdir())}))
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg, base = _load(args)
    circuit, model = _build(cfg, base)
    for m in cfg.sampling.modes:
        try:
            sampling.SamplingMode.parse(m).check(circuit)
        except ValueError as exc:
            raise CommandError(EXIT_CONFIG, "config", str(exc)) from None
    print(
        _dumps(
            {
                "ok": True,
                "name": cfg.name,
                "n_qubits": circuit.n_qubits,
                "n_slots": circuit.n_slots,
                "noise": model.name,
                "estimator": cfg.sampling.estimator,
                "modes": cfg.sampling.modes,
            }
        )
    )
    return EXIT_OK


# ---- entry point ----------------------------------------------------------------------


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2^64)")
    return v


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return v


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CommandError(EXIT_CONFIG, "usage", message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cliffsamp", description="Clifford-sampling error-loss experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, config=True, out=True):
        if config:
            sp.add_argument("--config", help="config file, or the name of a bundled preset")
        sp.add_argument("--seed", type=_seed, help="overrides the config seed")
        sp.add_argument("--threads", type=_positive, default=1)
        if out:
            sp.add_argument("--out", default="out", help="output directory")

    sp = sub.add_parser("sample", help="run one sampling campaign")
    common(sp)
    sp.add_argument("--n-configs", type=_positive, help="overrides n_configs (n_s for single_run)")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("sweep", help="sweep one numeric config field")
    common(sp)
    sp.add_argument("--param", required=True, help="dotted path, e.g. noise.epsilon")
    sp.add_argument("--values", required=True, help="comma-separated values")
    sp.add_argument("--n-configs", type=_positive)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("oracle-check", help="run cross-oracle suites")
    sp.add_argument("suite", nargs="?", default="all", help=f"one of {', '.join(oracles.SUITES)} or all")
    sp.add_argument("--seed", type=_seed)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_oracle_check)

    sp = sub.add_parser("reproduce", help="regenerate the data behind a figure")
    sp.add_argument("figure")
    common(sp, config=False)
    sp.add_argument("--n-configs", type=_positive)
    sp.set_defaults(func=cmd_reproduce)

    sp = sub.add_parser("validate", help="check a config without running it")
    common(sp, out=False)
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except CommandError as exc:
        print(json.dumps(exc.payload()), file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
