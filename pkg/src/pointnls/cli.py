"""Command-line entry point: ``python -m pointnls <command> [--config FILE] [--key value ...]``.

Configuration is a flat INI file with the sections ``params``, ``run``,
``shoot``, ``variational`` and ``verify``; command-line flags override it.
Every run writes its resolved configuration, a versions stamp and its JSON
report into the output directory.  Exit status is 0 only if every enabled
check passes.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import platform
import sys
import tempfile
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .greens import green_norm
from .model import FREE, Alpha, Params, ParameterError, beta, lambda_alpha
from .radial_ode import Controls, LocalExpansion, RadialProfile, SKind, local_expansion
from .shooting import (
    BranchNotFound,
    ShootControls,
    branch_scan,
    ground_state_shoot,
    match_decay,
    solve_fixed_alpha,
    write_branch_csv,
)
from .variational import (
    DiscreteState,
    MinimizeOptions,
    NotConverged,
    discretize,
    minimize_ground_state,
    mountain_pass_probe,
    random_directions,
)
from .verify import equivalence_report

DEFAULTS = {
    "params": {"d": "2", "sigma": "1", "p": "3", "lambda": "1", "alpha": "0"},
    "run": {
        "out": "runs/latest",
        "seed": "0",
        "mode": "ground",
        "k": "0",
        "q": "1",
        "q_lo": "0.1",
        "q_hi": "10",
        "q_count": "9",
        "directions": "64",
        "radii": "0.001 0.01 0.1 0.5 1 2",
    },
    "shoot": {"rtol": "1e-9", "atol": "1e-10", "bisect_tol": "1e-12", "scan_points": "161", "max_branch": "4"},
    "variational": {"resolution": "1", "gtol": "1e-9", "max_iter": "2000"},
    "verify": {"sup_tol": "1e-3", "action_tol": "1e-4"},
}

KEY_SECTION = {key: sec for sec, keys in DEFAULTS.items() for key in keys}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    params: Params
    values: dict  # section -> key -> raw string, fully resolved

    def get(self, key: str) -> str:
        return self.values[KEY_SECTION[key]][key]

    def getf(self, key: str) -> float:
        return float(self.get(key))

    def geti(self, key: str) -> int:
        return int(self.get(key))

    @property
    def out(self) -> str:
        return self.get("out")

    def shoot_controls(self) -> ShootControls:
        ic = Controls(rtol=self.getf("rtol"), atol=self.getf("atol"))
        return ShootControls(
            bisect_tol=self.getf("bisect_tol"),
            scan_points=self.geti("scan_points"),
            max_branch=self.geti("max_branch"),
            integrator=ic,
        )

    def to_ini(self) -> str:
        lines = []
        for sec in DEFAULTS:
            lines.append(f"[{sec}]")
            lines.extend(f"{k} = {self.values[sec][k]}" for k in DEFAULTS[sec])
            lines.append("")
        return "\n".join(lines)


def _line_of(path, section, key):
    try:
        with open(path) as fh:
            current = None
            for n, line in enumerate(fh, 1):
                s = line.strip()
                if s.startswith("[") and s.endswith("]"):
                    current = s[1:-1].strip()
                elif current == section and s.split("=", 1)[0].strip() == key:
                    return n
    except OSError:
        pass
    return None


def load_config(path: str | None, overrides: dict) -> RunConfig:
    """Merge defaults, the INI file and flag overrides; validate everything."""
    values = {sec: dict(keys) for sec, keys in DEFAULTS.items()}
    origin = {}
    if path:
        cp = configparser.ConfigParser()
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        for sec in cp.sections():
            if sec not in values:
                raise ConfigError(f"{path}:{_line_of(path, sec, '') or '?'}: unknown section [{sec}]")
            for key, val in cp.items(sec):
                if key not in values[sec]:
                    raise ConfigError(f"{path}:{_line_of(path, sec, key)}: unknown key '{key}' in [{sec}]")
                values[sec][key] = val
                origin[key] = f"{path}:{_line_of(path, sec, key)}"
    for key, val in overrides.items():
        if val is None:
            continue
        values[KEY_SECTION[key]][key] = str(val)
        origin[key] = f"--{key}"

    def where(key):
        return origin.get(key, "default")

    try:
        params = Params.from_record(values["params"])
    except ParameterError as exc:
        raise ConfigError(f"[params] {exc}") from exc
    for sec, keys in values.items():
        if sec == "params":
            continue
        for key, val in keys.items():
            if key in ("out", "mode", "radii"):
                continue
            try:
                float(val)
            except ValueError as exc:
                raise ConfigError(f"{where(key)}: '{key}' must be numeric, got '{val}'") from exc
    if values["run"]["mode"] not in ("ground", "nodal", "fixed-q"):
        raise ConfigError(f"{where('mode')}: mode must be ground, nodal or fixed-q")
    try:
        [float(x) for x in values["run"]["radii"].split()]
    except ValueError as exc:
        raise ConfigError(f"{where('radii')}: radii must be numbers") from exc
    return RunConfig(params, values)


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, Alpha):
        return obj.value
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: str, data) -> None:
    _write_atomic(path, json.dumps(_clean(data), indent=2, sort_keys=True) + "\n")


def _versions() -> dict:
    import numba
    import scipy

    return {
        "pointnls": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
    }


def _start_run(cfg: RunConfig) -> None:
    os.makedirs(cfg.out, exist_ok=True)
    _write_atomic(os.path.join(cfg.out, "config.ini"), cfg.to_ini())
    write_json(os.path.join(cfg.out, "versions.json"), _versions())


def cmd_spectrum(cfg: RunConfig) -> int:
    pr = cfg.params
    report = {"params": pr.to_record(), "lambda_alpha": lambda_alpha(pr)}
    status = 0
    try:
        report["beta"] = beta(pr)
    except ParameterError as exc:
        report["beta"] = None
        report["error"] = str(exc)
        status = 1
    la = report["lambda_alpha"]
    report["green_l2_norm"] = green_norm(pr.d, pr.lam, 2.0)
    report["eigenfunction_l2_norm"] = green_norm(pr.d, la, 2.0) if la > 0 else None
    _start_run(cfg)
    write_json(os.path.join(cfg.out, "spectrum.json"), report)
    for key in ("beta", "lambda_alpha", "green_l2_norm", "eigenfunction_l2_norm"):
        print(f"{key} = {report[key]}")
    if status:
        print(f"error: {report['error']}", file=sys.stderr)
    return status


def _write_solution(cfg, bp, rep, name="solution"):
    out = cfg.out
    prof_file = f"{name}_profile.csv"
    bp.profile.to_csv(os.path.join(out, prof_file))
    data = bp.to_dict()
    data["profile_file"] = prof_file
    data["expansion"] = {"A": bp.profile.expansion.A, "s_kind": bp.profile.expansion.s_kind.value}
    write_json(os.path.join(out, f"{name}.json"), data)
    write_json(os.path.join(out, f"{name}_report.json"), rep.to_dict())


def cmd_solve(cfg: RunConfig) -> int:
    pr = cfg.params
    ctrl = cfg.shoot_controls()
    mode = cfg.get("mode")
    k = cfg.geti("k")
    _start_run(cfg)
    try:
        if mode == "ground":
            bp = ground_state_shoot(pr, ctrl)
        elif mode == "nodal":
            bp = solve_fixed_alpha(pr, k, ctrl)
        else:
            pts = [b for b in match_decay(pr, cfg.getf("q"), replace(ctrl, max_branch=k)) if b.zero_count == k]
            if not pts:
                raise BranchNotFound(f"no separator with {k} zeros at q = {cfg.getf('q')}", (math.nan, math.nan))
            bp = pts[0]
    except (ParameterError, BranchNotFound) as exc:
        write_json(os.path.join(cfg.out, "error.json"), {"error": str(exc)})
        print(f"error: {exc}", file=sys.stderr)
        return 2
    rep = equivalence_report(bp.profile, bp.alpha, bp.q)
    _write_solution(cfg, bp, rep)
    print(rep.summary_line(f"{mode} k={bp.zero_count}"))
    return 0 if rep.passed and not bp.flagged else 1


def cmd_branch_scan(cfg: RunConfig) -> int:
    pr = cfg.params
    qs = np.geomspace(cfg.getf("q_lo"), cfg.getf("q_hi"), cfg.geti("q_count"))
    _start_run(cfg)
    rows = branch_scan(pr, qs, cfg.geti("k"), cfg.shoot_controls())
    write_branch_csv(rows, os.path.join(cfg.out, "branch.csv"))
    failures = sum(r.error is not None for r in rows)
    print(f"{len(rows)} rows, {failures} without a separator")
    return 0


def crosscheck(cfg: RunConfig) -> dict:
    pr = cfg.params
    bp = ground_state_shoot(pr, cfg.shoot_controls())
    disc = discretize(pr, cfg.getf("resolution"))
    # generic start so the two solvers share nothing but the parameters
    init = DiscreteState(disc, np.exp(-pr.lam * disc.nodes**2), 1.0)
    opts = MinimizeOptions(gtol=cfg.getf("gtol"), max_iter=cfg.geti("max_iter"))
    state, frep, trace = minimize_ground_state(pr, init, opts)
    if state.q < 0:
        state = -state
    u_shoot = np.interp(disc.nodes, bp.profile.r, bp.profile.u)
    sup = float(np.max(np.abs(state.u - u_shoot)))
    act = abs(frep.action - bp.action) / abs(bp.action)
    return {
        "shooting": {"q": bp.q, "a": bp.a, "action": bp.action},
        "variational": dict(frep.to_dict(), q=state.q, iterations=len(trace) - 1),
        "sup_discrepancy": sup,
        "action_discrepancy": act,
        "pass": sup <= cfg.getf("sup_tol") and act <= cfg.getf("action_tol"),
    }


def cmd_crosscheck(cfg: RunConfig) -> int:
    _start_run(cfg)
    try:
        rep = crosscheck(cfg)
    except (ParameterError, BranchNotFound, NotConverged) as exc:
        write_json(os.path.join(cfg.out, "error.json"), {"error": str(exc)})
        print(f"error: {exc}", file=sys.stderr)
        return 2
    write_json(os.path.join(cfg.out, "crosscheck.json"), rep)
    print(f"{'PASS' if rep['pass'] else 'FAIL'} sup={rep['sup_discrepancy']:.3g} action={rep['action_discrepancy']:.3g}")
    return 0 if rep["pass"] else 1


def probe(cfg: RunConfig):
    pr = cfg.params
    disc = discretize(pr, cfg.getf("resolution"))
    seed = cfg.geti("seed")
    dirs = random_directions(disc, cfg.geti("directions"), seed)
    radii = [float(x) for x in cfg.get("radii").split()]
    return mountain_pass_probe(pr, dirs, radii, seed)


def cmd_probe_geometry(cfg: RunConfig) -> int:
    _start_run(cfg)
    try:
        rep = probe(cfg)
    except ParameterError as exc:
        write_json(os.path.join(cfg.out, "error.json"), {"error": str(exc)})
        print(f"error: {exc}", file=sys.stderr)
        return 2
    write_json(os.path.join(cfg.out, "geometry.json"), rep.__dict__)
    ok = rep.rho_star is not None and rep.all_negative
    print(f"{'PASS' if ok else 'FAIL'} rho*={rep.rho_star} max R*={max(rep.r_star):.6g}")
    return 0 if ok else 1


def load_profile(csv_path: str, meta_path: str) -> RadialProfile:
    """Rebuild a profile from the CSV and JSON written by ``solve``."""
    with open(meta_path) as fh:
        meta = json.load(fh)
    pr = Params.from_record(meta["params"])
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    r, u, du, f = data.T
    q, a = float(meta["q"]), float(meta["a"])
    exp = local_expansion(pr.replace(alpha=FREE), q, a)
    if "expansion" in meta:
        exp = LocalExpansion(q, a, float(meta["expansion"]["A"]), SKind(meta["expansion"]["s_kind"]), pr.p)
    r_end = float(r[-1])
    return RadialProfile(pr, q, exp, r, u, du, f, Controls(), {"r_end": r_end})


def cmd_verify(cfg: RunConfig, profile_csv: str, meta_json: str) -> int:
    prof = load_profile(profile_csv, meta_json)
    _start_run(cfg)
    with open(meta_json) as fh:
        meta = json.load(fh)
    alpha = meta.get("alpha")
    alpha = alpha if isinstance(alpha, (int, float)) else None
    rep = equivalence_report(prof, alpha, prof.q)
    write_json(os.path.join(cfg.out, "verify.json"), rep.to_dict())
    print(rep.summary_line("verify"))
    return 0 if rep.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pointnls", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("spectrum", "solve", "branch-scan", "crosscheck", "probe-geometry", "verify"):
        sp = sub.add_parser(name)
        sp.add_argument("--config")
        for key in KEY_SECTION:
            sp.add_argument(f"--{key.replace('_', '-')}", dest=key)
        if name == "verify":
            sp.add_argument("--profile", required=True)
            sp.add_argument("--meta", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: getattr(args, k) for k in KEY_SECTION}
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.command == "spectrum":
        return cmd_spectrum(cfg)
    if args.command == "solve":
        return cmd_solve(cfg)
    if args.command == "branch-scan":
        return cmd_branch_scan(cfg)
    if args.command == "crosscheck":
        return cmd_crosscheck(cfg)
    if args.command == "probe-geometry":
        return cmd_probe_geometry(cfg)
    return cmd_verify(cfg, args.profile, args.meta)


if __name__ == "__main__":
    sys.exit(main())
