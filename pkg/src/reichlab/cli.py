"""Command-line front end.

    reichlab kernel-check    CONFIG [--tol T] [--window N] [--seed S] [--out DIR]
    reichlab partition-build CONFIG [...]
    reichlab reich-audit     CONFIG [...]

Exit codes: 0 pass, 1 contract failure (including non-certified results),
2 configuration error, 3 I/O error. JSON outputs carry a schema version and
no timestamps, so identical configs give byte-identical reports.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bergman import (ConvergenceError, IntegrabilityError, MeasurableQD, ToleranceNotMet,
                      calibration_report, invariance_residual, kernel_mass_bound, mass_identity_check,
                      poincare_kernel, project_result, random_mass_configs)
from .fuchsian import group_by_label, trivial_group
from .geom import random_disk_points, random_mobius
from .lattice import MAX_DELTA, Window, make_quasilattice
from .partition import (MODEL_KINDS, AtomBuildError, PartitionAtom, SurfaceModel, build_atom,
                        certificate_samples, decay_samples, partition_sum, pestimate_audit, window_projection)
from .regions import Disk, outer_annulus
from .reich import DEFAULT_K_LIST, DEFAULT_N_LIST, SCHEMA_VERSION, _clean, reich_audit

log = logging.getLogger(__name__)

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3
GROUP_LABELS = ("trivial", "cyclic", "gamma2")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Everything a run needs; loaded from JSON, then overridden by flags."""

    model: str = "punctured-window"
    group: str = "trivial"
    translation_length: float = 2.0
    eps_punct: float = 1e-3
    fill: float = 0.9
    seed: int = 1
    delta: float = 0.125
    window: list = field(default_factory=lambda: [8, 8])
    tol: float = 1e-8
    max_cells: int = 20000
    n_list: list = field(default_factory=lambda: list(DEFAULT_N_LIST))
    K_list: list = field(default_factory=lambda: list(DEFAULT_K_LIST))
    truncation_radius: float | None = None
    kernel_samples: int = 1000
    mass_configs: int = 20
    audit_points: int = 25
    out: str = "out"

    def validate(self) -> "RunConfig":
        if self.model not in MODEL_KINDS:
            raise ConfigError(f"model must be one of {MODEL_KINDS}")
        if self.group not in GROUP_LABELS:
            raise ConfigError(f"group must be one of {GROUP_LABELS}")
        for name in ("tol", "eps_punct", "fill", "translation_length"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if not 0 <= self.delta <= MAX_DELTA:
            raise ConfigError("delta must lie in [0, 1/8]")
        if len(self.window) != 2 or min(self.window) < 1:
            raise ConfigError("window must be two positive cell counts")
        if max(self.window) > 4 * min(self.window):
            raise ConfigError("window aspect ratio must be at most 4")
        if not self.n_list or any(int(n) < 1 for n in self.n_list) or sorted(set(self.n_list)) != list(self.n_list):
            raise ConfigError("n_list must be strictly ascending positive integers")
        if any(K < 100 for K in self.K_list):
            raise ConfigError("K entries must be at least 100")
        if self.max_cells < 1 or self.kernel_samples < 1 or self.mass_configs < 1 or self.audit_points < 1:
            raise ConfigError("budgets and sample counts must be positive")
        return self

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        try:
            cfg = cls(**data)
            cfg.window = [int(v) for v in cfg.window]
            cfg.n_list = [int(v) for v in cfg.n_list]
            cfg.K_list = [float(v) for v in cfg.K_list]
            cfg.tol = float(cfg.tol)
            cfg.delta = float(cfg.delta)
            cfg.seed = int(cfg.seed)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return cfg.validate()

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def model_key(self) -> dict:
        """Fields that determine the built atoms."""
        keys = ("model", "translation_length", "eps_punct", "fill", "seed", "delta", "window", "tol", "max_cells")
        return {k: getattr(self, k) for k in keys}


def load_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return RunConfig.from_dict(data)


def build_model(cfg: RunConfig) -> SurfaceModel:
    window = Window.centered(*cfg.window)
    lattice = make_quasilattice(cfg.seed, cfg.delta, window)
    return SurfaceModel(cfg.model, window, lattice, eps_punct=cfg.eps_punct, fill=cfg.fill,
                        translation_length=cfg.translation_length)


def _dump(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _write(out: Path, name: str, text: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def _envelope(cfg: RunConfig, command: str, body: dict, passed: bool) -> dict:
    return {"schema_version": SCHEMA_VERSION, "version": __version__, "command": command,
            "config": {k: v for k, v in cfg.to_dict().items() if k != "out"}, "passed": passed, **body}


# ------------------------------------------------------------------ kernel-check

def run_kernel_check(cfg: RunConfig) -> tuple[dict, bool]:
    """Invariance, mass identity, reproducing, calibration and kernel-mass checks."""
    rng = np.random.default_rng(cfg.seed)
    group = group_by_label(cfg.group, cfg.translation_length)
    checks = {}

    res = 0.0
    for _ in range(cfg.kernel_samples):
        z, w = random_disk_points(rng, 2)
        res = max(res, invariance_residual(random_mobius(rng), z, w))
    checks["invariance"] = {"max_residual": res, "threshold": 1e-10, "passed": res < 1e-10}

    rows, ok = [], True
    for _ in range(5):
        w = complex(random_disk_points(rng, 1, 0.9)[0])
        c = complex(random_disk_points(rng, 1, 0.5)[0])
        W = Disk(c, 0.4 * (1 - abs(c)))
        try:
            m = mass_identity_check(W, w, tol=max(cfg.tol, 1e-9))
            rows.append({"lhs": m.lhs, "rhs": m.rhs, "certified": True})
        except ToleranceNotMet as exc:
            ok = False
            rows.append({"error": str(exc), "certified": False})
    checks["mass_identity"] = {"rows": rows, "passed": ok}

    rows, ok = [], True
    for z in random_disk_points(rng, 3, 0.8):
        for k in range(6):
            f = MeasurableQD(lambda w, k=k: w**k)
            try:
                r = project_result(f, trivial_group(), complex(z), tol=cfg.tol, max_cells=cfg.max_cells)
                err = abs(r.value - z**k)
                good = err < 1e-7
                rows.append({"k": k, "z": [z.real, z.imag], "error": err, "certified": r.certified})
            except IntegrabilityError as exc:
                good = False
                rows.append({"k": k, "z": [z.real, z.imag], "error": str(exc), "certified": False})
            ok &= good
    checks["reproducing"] = {"rows": rows, "passed": ok}
    checks["calibration"] = calibration_report()

    rows, ok = [], True
    configs = random_mass_configs(group, rng, cfg.mass_configs)
    if group.rank == 0:
        configs.insert(0, (outer_annulus(0.9), 0j))
    for U, p in configs:
        try:
            km = kernel_mass_bound(group, U, p, tol=cfg.tol)
            rows.append({"measured": km.measured, "tail": km.tail, "bound": km.bound,
                         "distance": km.distance, "holds": km.holds})
            ok &= km.holds
        except (ToleranceNotMet, IntegrabilityError) as exc:
            ok = False
            rows.append({"error": str(exc), "holds": False})
    checks["kernel_mass"] = {"group": cfg.group, "rows": rows, "passed": ok}

    if group.rank != 0:
        # informational: the orbit-tail certificate for Gamma(2) stays loose at the depths memory allows
        try:
            kv = poincare_kernel(group, 0.1 + 0.05j, -0.1j, tol=cfg.tol)
            certified = True
        except ConvergenceError as exc:
            kv, certified = exc.partial, False
        checks["poincare_series"] = {"tail_bound": kv.tail_bound, "word_depth": kv.word_depth,
                                     "value": complex(kv.value), "certified": certified}

    passed = all(v.get("passed", True) for v in checks.values())
    return {"checks": checks}, passed


# ------------------------------------------------------------------ partition-build

def run_partition_build(cfg: RunConfig):
    """Build every window atom, audit the partition sum and the decay envelope."""
    model = build_model(cfg)
    window = model.window
    probes = decay_samples(window)
    fit = certificate_samples(window)
    atoms, failures = [], []
    tol_each = cfg.tol / window.size
    for k, l in window.indices():
        try:
            atoms.append(build_atom(model, int(k), int(l), tol_each, probes, fit, max_cells=cfg.max_cells))
        except AtomBuildError as exc:
            failures.append({"k": int(k), "l": int(l), "error": str(exc)})

    audit_rows = []
    if not failures:
        pts = probes[:: max(1, len(probes) // cfg.audit_points)][: cfg.audit_points]
        for z in pts:
            radius = cfg.truncation_radius
            if radius is None:
                idx = window.indices()
                radius = float(np.max(np.abs(idx[:, 0] + 1j * idx[:, 1] - z)))
            s = partition_sum(model, atoms, complex(z), radius)
            target, err = window_projection(model, complex(z), tol=cfg.tol)
            gap = abs(s.value - target)
            allowed = s.tail_bound + 2 * cfg.tol + err
            audit_rows.append({"z": [z.real, z.imag], "sum": [s.value.real, s.value.imag],
                               "projection": [target.real, target.imag], "gap": gap,
                               "allowed": allowed, "tail_bound": s.tail_bound, "passed": gap <= allowed})
    pest = None
    center = next((a for a in atoms if a.indices == (0, 0)), None)
    if center is not None:
        pest = pestimate_audit(model, center, probes).to_dict()
        pest.pop("literal_violations")
    finite = all(np.isfinite(a.decay_C) for a in atoms)
    passed = (not failures and finite and all(r["passed"] for r in audit_rows)
              and (pest is None or pest["passed"]))
    body = {
        "atoms": [{"k": a.indices[0], "l": a.indices[1], "decay_C": a.decay_C, "rule_error": a.rule_error,
                   "nodes": int(len(a.nodes))} for a in atoms],
        "failures": failures,
        "sum_audit": audit_rows,
        "pestimate": pest,
        "decay_C_max": max((a.decay_C for a in atoms), default=float("nan")),
    }
    return model, atoms, body, passed


def atoms_csv(atoms, samples_per_atom: int = 4) -> str:
    """k, l, decay_C, rule_error and |P| at the first few standard samples of each cell."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "l", "decay_C", "rule_error"] + [f"abs_P_{i}" for i in range(samples_per_atom)])
    for a in atoms:
        win = Window(a.indices[0], a.indices[0], a.indices[1], a.indices[1])
        vals = np.abs(a(decay_samples(win)[:samples_per_atom]))
        w.writerow([a.indices[0], a.indices[1], repr(a.decay_C), repr(a.rule_error)] + [repr(float(v)) for v in vals])
    return buf.getvalue()


def save_atoms(path: Path, cfg: RunConfig, atoms) -> None:
    sizes = np.array([len(a.nodes) for a in atoms])
    np.savez(path, indices=np.array([a.indices for a in atoms], dtype=int), sizes=sizes,
             nodes=np.concatenate([a.nodes for a in atoms]), weights=np.concatenate([a.weights for a in atoms]),
             decay_C=np.array([a.decay_C for a in atoms]), rule_error=np.array([a.rule_error for a in atoms]),
             model_key=np.array(json.dumps(cfg.model_key(), sort_keys=True)))


def load_atoms(path: Path, cfg: RunConfig, model: SurfaceModel):
    with np.load(path) as data:
        key = json.loads(str(data["model_key"]))
        if key != json.loads(json.dumps(cfg.model_key())):
            raise ConfigError(f"atom table {path} was built with a different model configuration")
        bounds = np.concatenate([[0], np.cumsum(data["sizes"])])
        return [PartitionAtom((int(k), int(l)), data["nodes"][s:e], data["weights"][s:e], model,
                              float(C), float(r))
                for (k, l), s, e, C, r in zip(data["indices"], bounds[:-1], bounds[1:],
                                              data["decay_C"], data["rule_error"])]


# ------------------------------------------------------------------ commands

def cmd_kernel_check(cfg: RunConfig) -> int:
    body, passed = run_kernel_check(cfg)
    _write(Path(cfg.out), "kernel_check.json", _dump(_envelope(cfg, "kernel-check", body, passed)))
    return EXIT_PASS if passed else EXIT_FAIL


def cmd_partition_build(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    _, atoms, body, passed = run_partition_build(cfg)
    _write(out, "partition.json", _dump(_envelope(cfg, "partition-build", body, passed)))
    _write(out, "atoms.csv", atoms_csv(atoms))
    save_atoms(out / "atoms.npz", cfg, atoms)
    return EXIT_PASS if passed else EXIT_FAIL


def cmd_reich_audit(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    table = out / "atoms.npz"
    if not table.exists():
        print(f"reichlab: no atom table at {table}; run partition-build first", file=sys.stderr)
        return EXIT_IO
    model = build_model(cfg)
    atoms = load_atoms(table, cfg, model)
    report = reich_audit(model, atoms, cfg.n_list, cfg.K_list, tol=cfg.tol)
    doc = _envelope(cfg, "reich-audit", {"report": json.loads(report.to_json())}, report.passed)
    _write(out, "report.json", _dump(doc))
    _write(out, "condition2.csv", report.condition2_csv())
    _write(out, "condition3.csv", report.condition3_csv())
    for w in report.warnings:
        print(f"reichlab: warning: {w}", file=sys.stderr)
    return EXIT_PASS if report.passed else EXIT_FAIL


COMMANDS = {"kernel-check": cmd_kernel_check, "partition-build": cmd_partition_build,
            "reich-audit": cmd_reich_audit}


def _window_arg(text: str) -> list:
    parts = text.lower().split("x")
    try:
        vals = [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must look like 8 or 8x6, got {text!r}")
    if len(vals) not in (1, 2):
        raise argparse.ArgumentTypeError(f"window must look like 8 or 8x6, got {text!r}")
    return vals * 2 if len(vals) == 1 else vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="reichlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("config", help="JSON run configuration")
        s.add_argument("--tol", type=float, help="quadrature tolerance")
        s.add_argument("--window", type=_window_arg, help="cells per side, e.g. 8 or 8x6")
        s.add_argument("--seed", type=int, help="quasilattice and sampling seed")
        s.add_argument("--out", help="output directory")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_PASS
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, {"tol": args.tol, "window": args.window, "seed": args.seed, "out": args.out})
    except ConfigError as exc:
        print(f"reichlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"reichlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"reichlab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
