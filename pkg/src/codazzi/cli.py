"""Command-line runner: ``codazzi-check --scenario merton --format json``.

Exit status 0 when every check passes, 1 when a check fails, 2 on usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .chart import DiffScheme, sample_grid
from .errors import CodazziError, ConfigurationError
from .merton import MertonParams, merton_metric
from .report import FORMATS, VerificationReport, serialize_report
from .scenarios import SCENARIOS, merton_rows, soliton_rows, zone_rows
from .solitons import catalog

ALL = "all"


@dataclass
class SchemeConfig:
    h: float = 1e-2
    stencil_order: int = 4
    richardson: int = 1
    use_jets: bool = True


@dataclass
class MertonConfig:
    amplitude: float = 1.0
    rate: float = 1.0


@dataclass
class ScenarioConfig:
    scenario: str = ALL
    grid: dict = field(default_factory=dict)        # axis name -> samples
    scheme: SchemeConfig = field(default_factory=SchemeConfig)
    merton: MertonConfig = field(default_factory=MertonConfig)
    tolerances: dict = field(default_factory=dict)  # check id -> tolerance
    threshold: float = 1e-4
    seed: int = 0
    format: str = "text"
    out: str | None = None
    workers: int = 1

    def validate(self):
        if self.scenario not in SCENARIOS + (ALL,):
            raise ConfigurationError(f"unknown scenario {self.scenario!r}")
        if self.format not in FORMATS:
            raise ConfigurationError(f"unknown format {self.format!r}")
        for name, val in [("threshold", self.threshold), ("scheme.h", self.scheme.h),
                          ("merton.amplitude", self.merton.amplitude), ("merton.rate", self.merton.rate),
                          ("workers", self.workers)]:
            if not val > 0:
                raise ConfigurationError(f"{name} must be positive")
        for axis, n in self.grid.items():
            if not isinstance(n, int) or n < 2:
                raise ConfigurationError(f"grid.{axis} must be an integer >= 2")
        for key, tol in self.tolerances.items():
            if not isinstance(tol, (int, float)) or tol < 0:
                raise ConfigurationError(f"tolerance for {key!r} must be a non-negative number")
        return self

    def diff_scheme(self):
        s = self.scheme
        return DiffScheme(h=s.h, stencil_order=s.stencil_order, richardson=s.richardson,
                          use_jets=s.use_jets)


def _build(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path or 'config'} must be an object")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigurationError(f"unknown key(s) in {path or 'config'}: {', '.join(unknown)}")
    kwargs = {}
    for name, value in data.items():
        default = known[name].default_factory() if known[name].default_factory is not dataclasses.MISSING \
            else known[name].default
        if dataclasses.is_dataclass(default):
            kwargs[name] = _build(type(default), value, f"{path}{name}.")
        elif (isinstance(default, str) or name == "out") and not isinstance(value, str) \
                and not (value is None and default is None):
            raise ConfigurationError(f"{path}{name} must be a string")
        elif isinstance(default, dict) and not isinstance(value, dict):
            raise ConfigurationError(f"{path}{name} must be an object")
        elif isinstance(default, bool) and not isinstance(value, bool):
            raise ConfigurationError(f"{path}{name} must be true or false")
        elif isinstance(default, (int, float)) and not isinstance(default, bool) and \
                (isinstance(value, bool) or not isinstance(value, (int, float))):
            raise ConfigurationError(f"{path}{name} must be a number")
        elif isinstance(default, int) and not isinstance(default, bool) and not isinstance(value, int):
            raise ConfigurationError(f"{path}{name} must be an integer")
        else:
            kwargs[name] = float(value) if isinstance(default, float) else value
    return cls(**kwargs)


def parse_config(text: str) -> ScenarioConfig:
    """Strict JSON configuration; missing keys take their defaults."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"config parse error at line {e.lineno}, column {e.colno}: {e.msg}") from None
    return _build(ScenarioConfig, data, "").validate()


# -- running --------------------------------------------------------------


def _merton_grid(cfg, m):
    g = cfg.grid
    return m.default_grid(g.get("t", 61), g.get("x", 8), g.get("y", 8))


def _scenario_rows(name, cfg):
    scheme = cfg.diff_scheme()
    if name in ("merton", "zones"):
        m = merton_metric(MertonParams(cfg.merton.amplitude, cfg.merton.rate))
        grid = _merton_grid(cfg, m)
        if name == "zones":
            return zone_rows(m, grid, scheme, cfg.threshold)
        return merton_rows(m, grid, scheme, cfg.threshold, cfg.seed)
    s = catalog()[name]
    res = tuple(cfg.grid.get(a, r) for a, r in zip(s.box.names, s.resolution))
    return soliton_rows(s, sample_grid(s.box, res, scheme=scheme), scheme)


def _axis_names(names):
    out = set()
    for name in names:
        out |= {"t", "x", "y"} if name in ("merton", "zones") else set(catalog()[name].box.names)
    return out


def run_scenario(cfg: ScenarioConfig) -> VerificationReport:
    cfg.validate()
    names = SCENARIOS if cfg.scenario == ALL else (cfg.scenario,)
    if cfg.scenario == ALL:
        names = tuple(n for n in names if n != "zones")   # merton already includes the zone suite
    stray = set(cfg.grid) - _axis_names(names)
    if stray:
        raise ConfigurationError(f"grid axes not used by scenario {cfg.scenario!r}: {', '.join(sorted(stray))}")
    start = time.perf_counter()
    if cfg.workers > 1 and len(names) > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(lambda n: _scenario_rows(n, cfg), names))
    else:
        results = [_scenario_rows(n, cfg) for n in names]
    s = cfg.scheme
    report = VerificationReport(cfg.scenario, [], 0.0, {
        "h": s.h, "stencil_order": s.stencil_order, "richardson": s.richardson,
        "exact_jets": s.use_jets, "threshold": cfg.threshold, "seed": cfg.seed})
    for name, rows in zip(names, results):
        report.extend(rows, prefix=name)
    for key, tol in cfg.tolerances.items():
        hits = [c for c in report.checks if c.check_id == key or c.check_id.split(".", 1)[-1] == key]
        if not hits:
            raise ConfigurationError(f"tolerance override for unknown check {key!r}")
        for c in hits:
            c.tolerance = float(tol)
            c.passed = c.max_residual <= tol if c.relation == "<=" else c.max_residual >= tol
    report.runtime = time.perf_counter() - start
    return report


def build_parser():
    p = argparse.ArgumentParser(prog="codazzi-check",
                                description="Numerically verify Codazzi-tensor and Ricci-soliton identities.")
    p.add_argument("--scenario", choices=SCENARIOS + (ALL,), help="which check suite to run (default: all)")
    p.add_argument("--config", help="JSON file with scenario settings")
    p.add_argument("--format", choices=FORMATS, help="report format (default: text)")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--h", type=float, help="finite-difference base step")
    p.add_argument("--no-exact-jets", action="store_true", help="differentiate by finite differences only")
    p.add_argument("--threshold", type=float, help="zone threshold on |d_0 sigma|")
    p.add_argument("--seed", type=int, help="seed for the negative-control perturbation")
    p.add_argument("--workers", type=int, help="threads used to run scenarios side by side")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    cfg = parse_config(fh.read())
            except OSError as e:
                raise ConfigurationError(f"cannot read config: {e}") from None
        else:
            cfg = ScenarioConfig()
        for key in ("scenario", "format", "out", "threshold", "seed", "workers"):
            val = getattr(args, key)
            if val is not None:
                setattr(cfg, key, val)
        if args.h is not None:
            cfg.scheme.h = args.h
        if args.no_exact_jets:
            cfg.scheme.use_jets = False
        report = run_scenario(cfg)
    except CodazziError as e:
        print(f"codazzi-check: error: {e}", file=sys.stderr)
        return 2
    text = serialize_report(report, cfg.format)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if not report.passed:
        names = ", ".join(c.check_id for c in report.failures())
        print(f"codazzi-check: {len(report.failures())} check(s) failed: {names}", file=sys.stderr)
        return 1
    return 0
