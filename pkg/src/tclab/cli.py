"""Experiment orchestration: configs, presets, seeded runs, artifacts.

Usage:
    tclab run --config FILE [--seed U64] [--out DIR] [--jobs N] [--format csv|json]
    tclab run --preset NAME [...]
    tclab presets
    tclab describe PRESET

Exit codes: 0 success (all verdicts pass, or diagnostic-only experiment),
2 verdict failure, 1 error.  TCLAB_SEED provides a default master seed with
the lowest precedence (flag > config file > env > 0).
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field, replace as dc_replace

import numpy as np

from . import intensity as intens
from . import limitproc, localtime, stats, stochcalc, timechange
from .errors import ConfigInvalid, TclabError
from .pathsim import RngStream, sample_brownian

EXPERIMENTS = ("converge", "limit-crosscheck", "ito", "kurtz", "cauchy",
               "localtime-identity")

# Diagnostic experiments never gate the exit code.
_DIAGNOSTIC = ("cauchy",)


@dataclass
class ExperimentConfig:
    experiment: str
    model: dict = field(default_factory=dict)
    spec: dict = field(default_factory=dict)
    ladder: list = field(default_factory=list)
    grid: list = field(default_factory=lambda: [1.0])
    replicates: int = 1000
    dt: float = 1e-3
    master_seed: int = 0
    out_dir: str = "."
    format: str = "json"
    jobs: int = 1
    internal_steps: int = stats.DEFAULT_INTERNAL_STEPS
    bin_width: float = 1e-2

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigInvalid(f"experiment: unknown value {self.experiment!r}")
        if self.replicates < 2:
            raise ConfigInvalid("replicates: must be >= 2")
        if self.dt <= 0:
            raise ConfigInvalid("dt: must be positive")
        if self.ladder and np.any(np.diff(np.asarray(self.ladder)) <= 0):
            raise ConfigInvalid("ladder: must be strictly increasing")
        if self.grid and np.any(np.diff(np.asarray(self.grid)) <= 0):
            raise ConfigInvalid("grid: must be strictly increasing")
        if self.format not in ("json", "csv"):
            raise ConfigInvalid(f"format: unknown value {self.format!r}")
        if self.jobs < 1:
            raise ConfigInvalid("jobs: must be >= 1")
        return self


def build_model(spec: dict):
    """Construct an IntensityModel from its plain-scalar config mapping."""
    kind = spec.get("kind")
    try:
        if kind == "constant":
            return intens.constant(spec["c"])
        if kind == "asymptotic-constant":
            return intens.asymptotic_constant(spec["a_plus"], spec["a_minus"])
        if kind == "power-tail":
            model = intens.power_tail(spec["delta"], spec["a_plus"],
                                      spec.get("a_minus"),
                                      x0=spec.get("x0", 1.0))
            if spec.get("regime") == intens.REGULARLY_VARYING:
                model = intens.with_regime(model, intens.REGULARLY_VARYING,
                                           spec["gamma"])
            return model
        if kind == "periodic":
            return intens.periodic(period=spec.get("period", 1.0))
        if kind == "sqrt-degenerate":
            return intens.sqrt_degenerate(spec["a_plus"], spec["a_minus"])
    except KeyError as exc:
        raise ConfigInvalid(f"model: missing field {exc.args[0]!r}") from exc
    raise ConfigInvalid(f"model.kind: unknown value {kind!r}")


def build_limit_spec(spec: dict) -> limitproc.LimitSpec:
    try:
        return limitproc.LimitSpec(
            a_plus=spec["a_plus"], a_minus=spec["a_minus"],
            family=spec.get("family", limitproc.ETA),
            exponent=spec.get("exponent", 0.0))
    except KeyError as exc:
        raise ConfigInvalid(f"spec: missing field {exc.args[0]!r}") from exc


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

def _converge(name_model, spec, **over):
    cfg = {"experiment": "converge", "model": name_model, "spec": spec,
           "ladder": [10, 100, 1000], "grid": [0.5, 1.0],
           "replicates": 10_000, "dt": 1e-3}
    cfg.update(over)
    return cfg


PRESETS: dict[str, tuple[str, dict]] = {
    "thm23": (
        "asymmetric converging intensity: sqrt(n) scaling, skew-type limit",
        _converge({"kind": "asymptotic-constant", "a_plus": 1.5,
                   "a_minus": 0.5},
                  {"a_plus": 1.5, "a_minus": 0.5, "family": "eta"})),
    "thm25-degenerate": (
        "same limit with intensity touching zero at the origin",
        _converge({"kind": "sqrt-degenerate", "a_plus": 1.5, "a_minus": 0.5},
                  {"a_plus": 1.5, "a_minus": 0.5, "family": "eta"},
                  # the |x|^{-1/2} reciprocal spike at 0 converges a factor
                  # slower and needs a finer internal grid than the smooth
                  # families
                  ladder=[10, 100, 1000, 10_000],
                  internal_steps=400_000)),
    "thm26-delta1": (
        "power-tail intensity, n^(1/3) scaling, eta-delta(1) limit",
        _converge({"kind": "power-tail", "delta": 1.0, "a_plus": 1.0,
                   "a_minus": 1.0},
                  {"a_plus": 1.0, "a_minus": 1.0, "family": "eta-delta",
                   "exponent": 1.0},
                  replicates=4000)),
    "cor27": (
        "average-converging intensity, sqrt(n) scaling (delta = 0 case)",
        _converge({"kind": "asymptotic-constant", "a_plus": 2.0,
                   "a_minus": 1.0},
                  {"a_plus": 2.0, "a_minus": 1.0, "family": "eta"})),
    "thm28-rv": (
        "regularly-varying normalization psi(n) = n^(1/3), eta-gamma(3) limit",
        _converge({"kind": "power-tail", "delta": 1.0, "a_plus": 1.0,
                   "a_minus": 1.0, "regime": "regularly-varying",
                   "gamma": 3.0},
                  {"a_plus": 1.0, "a_minus": 1.0, "family": "eta-gamma",
                   "exponent": 3.0},
                  replicates=4000)),
    "periodic-homog": (
        "periodic intensity homogenizes to the constant sqrt(3)",
        _converge({"kind": "periodic"},
                  {"a_plus": math.sqrt(3.0), "a_minus": math.sqrt(3.0),
                   "family": "eta"})),
    "skew-crosscheck": (
        "limit sampled two ways: time change vs Euler on the skew SDE",
        {"experiment": "limit-crosscheck",
         "spec": {"a_plus": 2.0, "a_minus": 1.0, "family": "eta"},
         "grid": [0.25, 0.5, 1.0], "replicates": 10_000, "dt": 1e-4}),
    "ito-check": (
        "pathwise Ito-identity residual scaling on a dt ladder",
        {"experiment": "ito", "grid": [1e-4, 1e-3, 1e-2],
         "replicates": 1000, "dt": 1e-4}),
    "kurtz-check": (
        "stochastic-integral convergence of phi_n along an n ladder",
        {"experiment": "kurtz",
         "model": {"kind": "power-tail", "delta": 1.0, "a_plus": 1.0,
                   "a_minus": 1.0},
         "ladder": [10, 1000, 100_000], "grid": [1.0],
         "replicates": 400, "dt": 1e-3}),
    "cauchy-demo": (
        "probabilistic estimate u(t, x) = E^x[f(state at t)], f(y) = y^2",
        {"experiment": "cauchy",
         "model": {"kind": "constant", "c": 2.0},
         "grid": [1.0], "replicates": 2000, "dt": 1e-2}),
    "localtime-identity": (
        "occupation identity and time- vs local-time-domain functional",
        {"experiment": "localtime-identity",
         "model": {"kind": "periodic"},
         "grid": [1.0], "replicates": 100, "dt": 1e-4, "bin_width": 1e-2}),
}

_ALIASES = {"thm23-default": "thm23"}


def preset_config(name: str) -> ExperimentConfig:
    key = _ALIASES.get(name, name)
    if key not in PRESETS:
        raise ConfigInvalid(f"preset: unknown name {name!r}")
    return ExperimentConfig(**PRESETS[key][1]).validate()


# ---------------------------------------------------------------------------
# Experiment runners (each returns a report dict and a success flag)
# ---------------------------------------------------------------------------

def _config_echo(cfg: ExperimentConfig) -> dict:
    """Scientific configuration only: execution details (output location,
    scheduling, serialization format) must not leak into report.json, which
    is byte-identical for a given seed."""
    echo = asdict(cfg)
    for key in ("out_dir", "jobs", "format"):
        echo.pop(key, None)
    return echo


def _run_converge(cfg: ExperimentConfig):
    model = build_model(cfg.model)
    spec = build_limit_spec(cfg.spec)
    sink: list | None = [] if cfg.format == "csv" else None
    report = stats.convergence_report(
        model, spec, cfg.ladder, cfg.grid, cfg.replicates, cfg.master_seed,
        dt=cfg.dt, internal_steps=cfg.internal_steps, jobs=cfg.jobs,
        config_echo=_config_echo(cfg), sample_sink=sink)
    return report.to_dict(), report.overall == stats.PASS, sink or []


def _run_crosscheck(cfg: ExperimentConfig):
    spec = build_limit_spec(cfg.spec)
    grid = np.asarray(cfg.grid, dtype=float)
    xs = stats.limit_ensemble(spec, grid, cfg.replicates, cfg.master_seed,
                              cell_index=0, dt=cfg.dt)
    steps = int(math.ceil(float(grid[-1]) / cfg.dt - 1e-9))
    tgrid = np.arange(steps + 1) * cfg.dt
    # Euler route in replicate batches: the full (replicates, steps) state
    # matrix would not fit in memory at preset scale.
    batch = max(1, 10_000_000 // (steps + 1))
    ys = np.empty((cfg.replicates, grid.size))
    zero_hits, zero_total = 0, 0
    for lo in range(0, cfg.replicates, batch):
        hi = min(lo + batch, cfg.replicates)
        normals = np.vstack([
            RngStream(cfg.master_seed, stats._rep_id(1, r)).normals(steps)
            for r in range(lo, hi)])
        states = limitproc.euler_skew_batch(normals, cfg.dt, spec.a_plus,
                                            spec.a_minus)
        for i, row in enumerate(states):
            ys[lo + i] = np.interp(grid, tgrid, row)
        zero_hits += int(np.count_nonzero(states[:, 1:] == 0.0))
        zero_total += states[:, 1:].size
    threshold = stats.dkw_threshold(cfg.replicates, cfg.replicates)
    cells = []
    ok = True
    for j, t in enumerate(grid):
        d = stats.ks_two_sample(stats.EmpiricalSample(xs[:, j]),
                                stats.EmpiricalSample(ys[:, j]))
        verdict = stats.PASS if d <= threshold else stats.FAIL
        ok &= verdict == stats.PASS
        cells.append({"t": float(t), "ks": d, "threshold": threshold,
                      "verdict": verdict})
    zero_frac = zero_hits / zero_total if zero_total else 0.0
    report = {"config_echo": _config_echo(cfg), "cells": cells,
              "sde_zero_occupation_fraction": zero_frac,
              "overall": stats.PASS if ok else stats.FAIL}
    samples = [("timechange", 0.0, grid, xs), ("sde", 0.0, grid, ys)]
    return report, ok, samples if cfg.format == "csv" else []


_ITO_FUNCTIONS = {
    "square": stochcalc.C1aeFunction(
        f=lambda x: x ** 2, f1=lambda x: 2.0 * x,
        f2=lambda x: 2.0 * np.ones_like(np.asarray(x, dtype=float))),
    "cubic-positive-part": stochcalc.C1aeFunction(
        f=lambda x: np.where(x > 0, x, 0.0) ** 3,
        f1=lambda x: 3.0 * np.where(x > 0, x, 0.0) ** 2,
        f2=lambda x: 6.0 * np.where(x > 0, x, 0.0)),
}


def _run_ito(cfg: ExperimentConfig):
    dts = sorted(float(d) for d in cfg.grid)
    results = {}
    ok = True
    for name, fn in _ITO_FUNCTIONS.items():
        rms = [stochcalc.residual_rms(fn, d, 1.0, cfg.replicates,
                                      cfg.master_seed)
               for d in dts]
        ratios = []
        for (d_lo, r_lo), (d_hi, r_hi) in zip(zip(dts, rms),
                                              list(zip(dts, rms))[1:]):
            decades = math.log10(d_hi / d_lo)
            ratios.append((r_hi / r_lo) ** (1.0 / decades))
        # residual RMS ~ C sqrt(dt): per-decade growth near sqrt(10)
        fn_ok = all(2.5 <= r <= 4.5 for r in ratios)
        ok &= fn_ok
        results[name] = {"dt": dts, "rms": rms,
                         "per_decade_ratio": ratios,
                         "verdict": stats.PASS if fn_ok else stats.FAIL}
    report = {"config_echo": _config_echo(cfg), "functions": results,
              "overall": stats.PASS if ok else stats.FAIL}
    return report, ok, []


def _run_kurtz(cfg: ExperimentConfig):
    model = build_model(cfg.model)
    t = float(cfg.grid[-1])
    medians = stochcalc.integral_convergence_check(
        model, cfg.ladder, t, cfg.replicates, master_seed=cfg.master_seed,
        dt=cfg.dt)
    decreasing = bool(np.all(np.diff(medians) < 0))
    report = {"config_echo": _config_echo(cfg),
              "ladder": [float(n) for n in cfg.ladder],
              "median_gaps": [float(m) for m in medians],
              "overall": stats.PASS if decreasing else stats.FAIL}
    return report, decreasing, []


def _run_cauchy(cfg: ExperimentConfig):
    model = build_model(cfg.model)
    t = float(cfg.grid[-1])
    stream = RngStream(cfg.master_seed, 0)
    est, se = timechange.cauchy_estimate(model, lambda y: y ** 2, t, 0.0,
                                         cfg.replicates, stream, dt=cfg.dt)
    report = {"config_echo": _config_echo(cfg), "t": t, "x": 0.0,
              "f": "square", "estimate": est, "std_error": se,
              "overall": stats.PASS}
    return report, True, []


def _run_localtime_identity(cfg: ExperimentConfig):
    model = build_model(cfg.model)
    t = float(cfg.grid[-1])
    within = 0
    identity_ok = True
    for r in range(cfg.replicates):
        stream = RngStream(cfg.master_seed, r)
        path = sample_brownian(stream, t, cfg.dt)
        s = timechange.additive_functional(path, model)
        profile = localtime.occupation_density(path, t, cfg.bin_width)
        total = math.fsum(profile.masses) * profile.bin_width
        identity_ok &= abs(total - t) <= 1e-9
        via_lt = localtime.functional_via_localtime(profile, model)
        direct = float(s.values[-1])
        if abs(via_lt - direct) <= 0.02 * abs(direct):
            within += 1
    frac = within / cfg.replicates
    ok = identity_ok and frac >= 0.95
    report = {"config_echo": _config_echo(cfg),
              "occupation_identity_ok": identity_ok,
              "fraction_within_2pct": frac,
              "overall": stats.PASS if ok else stats.FAIL}
    return report, ok, []


_RUNNERS = {
    "converge": _run_converge,
    "limit-crosscheck": _run_crosscheck,
    "ito": _run_ito,
    "kurtz": _run_kurtz,
    "cauchy": _run_cauchy,
    "localtime-identity": _run_localtime_identity,
}


# ---------------------------------------------------------------------------
# Artifact emission
# ---------------------------------------------------------------------------

def _atomic_write(path: str, data: str) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tclab-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_samples_csv(path: str, experiment: str, samples) -> None:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["experiment", "sampler_tag", "n", "replicate", "t",
                     "value"])
    for tag, n, grid, matrix in samples:
        for r, row in enumerate(matrix):
            for t, v in zip(grid, row):
                writer.writerow([experiment, tag, f"{n:g}", r, f"{t:g}",
                                 repr(float(v))])
    _atomic_write(path, buf.getvalue())


def write_path_csv(path: str, paths) -> None:
    """Serialize paths as (replicate, k, t, value) rows."""
    import io

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["replicate", "k", "t", "value"])
    for r, p in enumerate(paths):
        for k, (t, v) in enumerate(zip(p.times, p.values)):
            writer.writerow([r, k, f"{t:g}", repr(float(v))])
    _atomic_write(path, buf.getvalue())


def run(config: ExperimentConfig) -> int:
    """Execute one experiment; write artifacts; return the exit status."""
    cfg = config.validate()
    started = time.monotonic()
    try:
        report, ok, samples = _RUNNERS[cfg.experiment](cfg)
    except ConfigInvalid:
        raise
    except TclabError as exc:
        print(f"error: {cfg.experiment}: {exc}", file=sys.stderr)
        return 1
    os.makedirs(cfg.out_dir, exist_ok=True)
    out_json = os.path.join(cfg.out_dir, "report.json")
    # runtime is reported on stdout, not in report.json, which must be
    # byte-identical across reruns with the same seed
    _atomic_write(out_json, json.dumps(report, indent=2, sort_keys=True)
                  + "\n")
    if cfg.format == "csv" and samples:
        _write_samples_csv(os.path.join(cfg.out_dir, "samples.csv"),
                           cfg.experiment, samples)
    elapsed = time.monotonic() - started
    print(f"{cfg.experiment}: overall={report.get('overall')} "
          f"runtime_sec={elapsed:.1f} report={out_json}")
    if cfg.experiment in _DIAGNOSTIC:
        return 0
    return 0 if ok else 2


# ---------------------------------------------------------------------------
# Command line
# ---------------------------------------------------------------------------

def _load_config(args) -> ExperimentConfig:
    if args.preset:
        cfg = preset_config(args.preset)
    elif args.config:
        with open(args.config) as fh:
            raw = json.load(fh)
        known = ExperimentConfig.__dataclass_fields__
        unknown = [k for k in raw if k not in known]
        if unknown:
            raise ConfigInvalid(f"{unknown[0]}: unknown field")
        cfg = ExperimentConfig(**raw)
    else:
        raise ConfigInvalid("config: provide --config FILE or --preset NAME")
    env_seed = os.environ.get("TCLAB_SEED")
    if env_seed is not None and args.seed is None and (
            args.preset or "master_seed" not in _raw_keys(args)):
        cfg = dc_replace(cfg, master_seed=int(env_seed))
    if args.seed is not None:
        cfg = dc_replace(cfg, master_seed=args.seed)
    if args.out is not None:
        cfg = dc_replace(cfg, out_dir=args.out)
    if args.jobs is not None:
        cfg = dc_replace(cfg, jobs=args.jobs)
    if args.format is not None:
        cfg = dc_replace(cfg, format=args.format)
    return cfg.validate()


def _raw_keys(args):
    if not args.config:
        return ()
    try:
        with open(args.config) as fh:
            return tuple(json.load(fh))
    except Exception:
        return ()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tclab",
        description="Time-changed Wiener process experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment")
    p_run.add_argument("--config", help="JSON configuration file")
    p_run.add_argument("--preset", help="named preset instead of a file")
    p_run.add_argument("--seed", type=int, default=None,
                       help="master seed override")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--jobs", type=int, default=None,
                       help="parallel cell jobs")
    p_run.add_argument("--format", choices=("csv", "json"), default=None)

    sub.add_parser("presets", help="list the preset catalog")

    p_desc = sub.add_parser("describe", help="print a preset's config")
    p_desc.add_argument("preset")

    args = parser.parse_args(argv)
    try:
        if args.command == "presets":
            for name, (desc, _) in PRESETS.items():
                print(f"{name}: {desc}")
            return 0
        if args.command == "describe":
            cfg = preset_config(args.preset)
            print(json.dumps(asdict(cfg), indent=2, sort_keys=True))
            return 0
        return run(_load_config(args))
    except ConfigInvalid as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
