"""Command-line orchestration: ``run``, ``convergence``, ``dmv`` and ``check``.

Configuration files are flat ``key = value`` text with ``#`` comments; any key
may be overridden on the command line as ``--key=value``. Unknown keys are
rejected before any computation.

Exit codes: 0 success, 2 configuration error, 3 admissibility lost during a
run, 4 property failure in ``check``.
"""

from __future__ import annotations

import argparse
import inspect
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import cases as _cases
from .check import MUTATIONS, run_checks
from .diagnostics import (
    DiagnosticsRecorder,
    Trajectory,
    canonical_test_functions,
    consistency_residual,
    default_capped_chi,
    default_cutoff_chi,
    error_norms,
)
from .dmv import (
    SampleWindow,
    dirac_collapse_study,
    dissipation_defect,
    sod_shock_window,
    vortex_windows,
)
from .eos import BarotropicEos, ChiSpec, IdealGasEos, InadmissibleStateError
from .flux import FluxKind
from .grid import GridSpec, project, write_snapshot
from .scheme import SchemeConfig, StepError, component_names, run

EXIT_OK, EXIT_CONFIG, EXIT_ADMISSIBILITY, EXIT_PROPERTY = 0, 2, 3, 4

RUN_DEFAULTS = {
    "grid.n": 128,
    "grid.dim": 1,
    "system": "complete",
    "gamma": 1.4,
    "a": 1.0,
    "chi.kind": "cutoff",
    "chi.param": "auto",
    "flux.kind": "local-lf",
    "flux.jump_scaling": "paper",
    "cfl": 0.4,
    "integrator": "ssprk2",
    "t_end": 0.1,
    "snapshots": [],
    "case": "sod",
    "output": "out",
}

STUDY_DEFAULTS = {
    "levels": [],
    "study.kind": "convergence",
    "reference": "auto",
    "test_function": "cos",
    "window.time": "auto",
    "window.center": "auto",
    "window.radius": "auto",
    "window.observables": ["rho"],
}


class ConfigError(ValueError):
    pass


def _parse_value(text: str):
    text = text.strip()
    if text.startswith("["):
        try:
            return json.loads(text)
        except json.JSONDecodeError:
            pass
        if not text.endswith("]"):
            raise ConfigError(f"cannot parse list {text!r}")
        # bare words such as [rho, p]
        inner = text[1:-1].strip()
        return [_parse_value(item) for item in inner.split(",")] if inner else []
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = _parse_value(value)
    return out


def parse_overrides(items) -> dict:
    out = {}
    for item in items:
        if not item.startswith("--") or "=" not in item:
            raise ConfigError(f"overrides must look like --key=value, got {item!r}")
        key, value = item[2:].split("=", 1)
        out[key] = _parse_value(value)
    return out


def _case_params(name: str) -> set:
    try:
        factory = _cases.CASES[name]
    except KeyError:
        raise ConfigError(f"unknown case {name!r}; known: {sorted(_cases.CASES)}") from None
    return set(inspect.signature(factory).parameters) - {"eos"}


def resolve(raw: dict, study: bool = False) -> dict:
    """Merge defaults and validate keys; returns the fully resolved config."""
    defaults = dict(RUN_DEFAULTS)
    if study:
        defaults.update(STUDY_DEFAULTS)
    cfg = dict(defaults)
    cfg.update(raw)
    allowed = set(defaults) | {f"case.{p}" for p in _case_params(str(cfg["case"]))}
    unknown = sorted(set(cfg) - allowed)
    if unknown:
        raise ConfigError(f"unknown configuration keys: {unknown}")
    if cfg["system"] not in ("barotropic", "complete"):
        raise ConfigError(f"system must be 'barotropic' or 'complete', got {cfg['system']!r}")
    for key in ("grid.n", "grid.dim"):
        if not isinstance(cfg[key], int) or cfg[key] < 1:
            raise ConfigError(f"{key} must be a positive integer, got {cfg[key]!r}")
    if cfg["grid.dim"] > 3:
        raise ConfigError("grid.dim must be 1, 2 or 3")
    if not isinstance(cfg["snapshots"], list):
        cfg["snapshots"] = [cfg["snapshots"]]
    if study:
        if cfg["study.kind"] not in ("convergence", "dmv", "weak-bv"):
            raise ConfigError(f"study.kind must be convergence, dmv or weak-bv, got {cfg['study.kind']!r}")
        if cfg["test_function"] not in canonical_test_functions(1, 1.0):
            raise ConfigError(f"unknown test_function {cfg['test_function']!r}")
        levels = cfg["levels"]
        if not (isinstance(levels, list) and all(isinstance(n, int) and n > 0 for n in levels)):
            raise ConfigError(f"levels must be a list of positive integers, got {levels!r}")
    # build the objects once so that every value error surfaces now
    build(cfg)
    return cfg


def build(cfg: dict):
    """Construct ``(eos, SchemeConfig, CaseSpec)`` from a resolved config."""
    try:
        if cfg["system"] == "barotropic":
            eos = BarotropicEos(a=float(cfg["a"]), gamma=float(cfg["gamma"]))
        else:
            eos = IdealGasEos(gamma=float(cfg["gamma"]))
        scheme = SchemeConfig(
            eos,
            FluxKind(str(cfg["flux.kind"]), str(cfg["flux.jump_scaling"])),
            cfl=float(cfg["cfl"]),
            t_end=float(cfg["t_end"]),
            integrator=str(cfg["integrator"]),
        )
        params = {k[5:]: v for k, v in cfg.items() if k.startswith("case.")}
        case = _cases.make_case(str(cfg["case"]), eos, **params)
    except (ValueError, TypeError) as err:
        raise ConfigError(str(err)) from None
    if case.dim != cfg["grid.dim"]:
        raise ConfigError(f"case {case.name!r} is {case.dim}D but grid.dim = {cfg['grid.dim']}")
    if cfg["chi.kind"] not in ("cutoff", "capped"):
        raise ConfigError(f"chi.kind must be 'cutoff' or 'capped', got {cfg['chi.kind']!r}")
    if cfg["chi.param"] != "auto" and not isinstance(cfg["chi.param"], (int, float)):
        raise ConfigError(f"chi.param must be a number or 'auto', got {cfg['chi.param']!r}")
    for t in cfg["snapshots"]:
        if not (isinstance(t, (int, float)) and 0 <= t <= scheme.t_end):
            raise ConfigError(f"snapshot times must lie in [0, t_end], got {t!r}")
    return eos, scheme, case


def _chi(cfg, eos, grid, case):
    if not isinstance(eos, IdealGasEos):
        return None
    if cfg["chi.param"] != "auto":
        return ChiSpec(cfg["chi.kind"], float(cfg["chi.param"]))
    U0 = project(case.sampler, grid).values
    return (default_cutoff_chi if cfg["chi.kind"] == "cutoff" else default_capped_chi)(eos, U0)


def _load(path, overrides, study=False) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    raw = parse_config_text(text)
    raw.update(parse_overrides(overrides))
    return resolve(raw, study)


def _dump_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _finite(x):
    return None if isinstance(x, float) and not math.isfinite(x) else x


def execute_run(cfg: dict, outdir: Path | None = None, n: int | None = None,
                extra_observers=(), snapshot_times=None):
    """Run one configured simulation; returns ``(result, recorder)``."""
    eos, scheme, case = build(cfg)
    grid = GridSpec(cfg["grid.dim"], n or cfg["grid.n"])
    chi = _chi(cfg, eos, grid, case)
    echo = dict(cfg)
    if n is not None:
        echo["grid.n"] = n
    if chi is not None:
        echo["chi.resolved"] = {"kind": chi.kind, "param": chi.param}
    rec = DiagnosticsRecorder(scheme, chi, metadata=echo)
    times = snapshot_times if snapshot_times is not None else (cfg["snapshots"] or [scheme.t_end])
    result = run(scheme, grid, case.sampler, [rec, *extra_observers], snapshot_times=times)
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
        rec.report.write_csv(outdir / "series.csv")
        summary = rec.report.summary()
        summary["steps"] = result.steps
        _dump_json(outdir / "summary.json", {k: _finite(v) for k, v in summary.items()})
        names = component_names(eos, grid.dim)
        for t, fld in result.snapshots:
            write_snapshot(outdir / f"snap_{t:.6f}.dat", fld, t, names)
    return result, rec


def cmd_run(args) -> int:
    cfg = _load(args.config, args.overrides)
    out = Path(cfg["output"])
    result, rec = execute_run(cfg, out)
    s = rec.report.summary()
    print(f"t = {result.state.time:.6g} after {result.steps} steps; "
          f"mass drift {s['mass_drift']:.2e}, energy drift {s['energy_drift']:.2e}; "
          f"outputs in {out}")
    return EXIT_OK


def _restrict(values: np.ndarray, factor: int, dim: int) -> np.ndarray:
    """Average blocks of ``factor^dim`` fine cells onto the coarse mesh."""
    shape = values.shape
    new = [shape[0]]
    for s in range(dim):
        new += [shape[1 + s] // factor, factor]
    v = values.reshape(new)
    return v.mean(axis=tuple(2 + 2 * s for s in range(dim)))


def cmd_convergence(args) -> int:
    cfg = _load(args.config, args.overrides, study=True)
    levels = sorted(cfg["levels"])
    if len(levels) < 2:
        raise ConfigError("a convergence study needs at least 2 levels")
    _, scheme, case = build(cfg)
    out = Path(cfg["output"])
    finals, extras = {}, {}
    for n in levels:
        traj = Trajectory()
        result, rec = execute_run(cfg, out / f"level_{n}", n=n, extra_observers=[traj])
        finals[n] = result.state.field
        extras[n] = {"weak_bv_statistic": rec.report.weak_bv}
        if scheme.t_end > 0:
            test = canonical_test_functions(case.dim, scheme.t_end)[cfg["test_function"]]
            for which in ("continuity", "momentum"):
                extras[n][f"consistency_{which}"] = consistency_residual(
                    traj, test, which, scheme.eos)
    reference = cfg["reference"]
    if reference == "auto":
        reference = "exact" if case.exact is not None else "finest"
    if reference not in ("exact", "finest"):
        raise ConfigError(f"reference must be 'auto', 'exact' or 'finest', got {reference!r}")
    if reference == "exact" and case.exact is None:
        raise ConfigError(f"case {case.name!r} has no exact evaluator")
    rows = []
    compared = levels if reference == "exact" else levels[:-1]
    finest = finals[levels[-1]]
    for n in compared:
        fld = finals[n]
        if reference == "exact":
            l1, linf = error_norms(fld, case.exact, scheme.t_end)
        else:
            if levels[-1] % n:
                raise ConfigError("finest-level reference needs levels dividing the finest")
            ref = _restrict(finest.values, levels[-1] // n, fld.grid.dim)
            err = np.abs(fld.values - ref).reshape(fld.values.shape[0], -1)
            l1, linf = err.sum(axis=1) * fld.grid.h**fld.grid.dim, err.max(axis=1)
        rows.append({"n": n, "h": 1.0 / n, "L1": l1.tolist(), "Linf": linf.tolist(), **extras[n]})
    for k in range(1, len(rows)):
        a, b = np.array(rows[k - 1]["L1"]), np.array(rows[k]["L1"])
        with np.errstate(divide="ignore", invalid="ignore"):
            order = np.where((a > 0) & (b > 0), np.log2(a / b), np.nan)
        rows[k]["order_L1"] = [_finite(float(v)) for v in order]
    report = {
        "kind": cfg["study.kind"],
        "config": cfg,
        "reference": reference,
        "components": list(component_names(scheme.eos, cfg["grid.dim"])),
        "levels": rows,
    }
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(out / "study_report.json", report)
    for r in rows:
        print(f"n = {r['n']:5d}  L1(rho) = {r['L1'][0]:.4e}  order = "
              f"{r.get('order_L1', [None])[0]}")
    return EXIT_OK


def _default_windows(cfg, case, t_end) -> list[SampleWindow]:
    t = t_end if cfg["window.time"] == "auto" else float(cfg["window.time"])
    radius = None if cfg["window.radius"] == "auto" else float(cfg["window.radius"])
    if cfg["window.center"] != "auto":
        c = cfg["window.center"]
        c = tuple(c) if isinstance(c, list) else (float(c),)
        return [SampleWindow(c, t, radius, "configured")]
    if case.name == "vortex":
        return vortex_windows(case, t, radius)
    if case.name == "sod":
        # the shocks of the periodised problem meet near t = 0.143
        t = min(0.1, t_end) if cfg["window.time"] == "auto" else t
        try:
            return [sod_shock_window(t, radius=radius)]
        except ValueError as err:
            raise ConfigError(str(err)) from None
    centre = tuple([0.5] * case.dim)
    return [SampleWindow(centre, t, radius, "centre")]


def cmd_dmv(args) -> int:
    cfg = _load(args.config, args.overrides, study=True)
    levels = sorted(cfg["levels"])
    if len(levels) < 3:
        raise ConfigError("a dmv study needs at least 3 levels")
    eos, scheme, case = build(cfg)
    windows = _default_windows(cfg, case, scheme.t_end)
    times = sorted({w.time for w in windows} | {scheme.t_end})
    for w in windows:
        if not 0 <= w.time <= scheme.t_end:
            raise ConfigError(f"window time {w.time} outside [0, t_end]")
    out = Path(cfg["output"])
    snaps, defects = [], {}
    for n in levels:
        traj = Trajectory()
        result, _ = execute_run(cfg, out / f"level_{n}", n=n, extra_observers=[traj],
                                snapshot_times=times)
        snaps.append(result.snapshots)
        d = dissipation_defect(traj, eos)
        defects[n] = {"times": d.times.tolist(), "defect": d.values.tolist()}
    obs = cfg["window.observables"]
    obs = obs if isinstance(obs, list) else [obs]
    try:
        studies = [dirac_collapse_study(snaps, w, eos, obs, exact=case.exact) for w in windows]
    except ValueError as err:
        raise ConfigError(str(err)) from None
    report = {"kind": "dmv", "config": cfg, "windows": studies, "dissipation_defect": defects}
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(out / "study_report.json", report)
    for st in studies:
        osc = ", ".join(f"{row['oscillation']:.3e}" for row in st["levels"])
        print(f"window {st['window']['name'] or st['window']['center']}: oscillation [{osc}] "
              f"decreasing={st['oscillation_decreasing']} "
              f"moments_stabilize={st['moments_stabilize']}")
    return EXIT_OK


def cmd_check(args) -> int:
    results = run_checks(args.mutate, stream=sys.stdout)
    failed = [r for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} propert{'y' if len(failed) == 1 else 'ies'} failed; "
              f"first counterexample: {failed[0].name}: {failed[0].counterexample}")
        return EXIT_PROPERTY
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="esfv", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, helptext in (
        ("run", cmd_run, "run one simulation from a run config"),
        ("convergence", cmd_convergence, "refinement study against a reference"),
        ("dmv", cmd_dmv, "Young-measure collapse study"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config", help="flat key = value configuration file")
        p.add_argument("overrides", nargs="*", help="--key=value overrides")
        p.set_defaults(func=fn)
    p = sub.add_parser("check", help="run the structural property suite")
    p.add_argument("--mutate", choices=sorted(MUTATIONS), default=None,
                   help="deliberately break one formula to exercise the suite")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args, extra = parser.parse_known_args(argv)
    if extra:
        if not hasattr(args, "overrides"):
            parser.error(f"unrecognised arguments: {extra}")
        args.overrides = list(args.overrides) + extra
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except StepError as err:
        print(f"admissibility lost: {err} (cell {err.index}, t = {err.time}, "
              f"step {err.step_index})", file=sys.stderr)
        return EXIT_ADMISSIBILITY
    except InadmissibleStateError as err:
        print(f"inadmissible initial data: {err} (cell {err.index})", file=sys.stderr)
        return EXIT_ADMISSIBILITY


if __name__ == "__main__":
    sys.exit(main())
