"""Command-line front end: ``brickwall build|compile|sweep|report``.

Configs are TOML (or JSON) files with the sections ``[target]``,
``[plan]``, ``[optimizer]``, ``[noise]``, ``[sweep]``, ``[simulation]`` and
``[output]``; see :data:`SCHEMA`. Unknown keys are rejected. Exit codes:
0 success, 2 config error, 3 IO error, 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from dataclasses import dataclass
from pathlib import Path

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from . import __version__
from .circuits import (Circuit, Grid, aqft_cnot_count, build_aqft, build_ansatz,
                       build_haar_random, build_qft_core, build_trotter_ising, chain_cnot_count,
                       export_qasm, grid_cnot_count, save_circuit)
from .circuits.builders import _resolve_topology
from .compile_opt.optimize import LossSpec, OptimizeConfig, optimize
from .errors import BrickwallError, ConfigError, UnsupportedGate
from .pipeline import (EPS_DEFAULT, NoiseModel, PartitionPlan, SweepConfig, aqft_baseline,
                       compile_plan, compression_rate, depth_sweep,
                       ee_trace, noise_fidelity, overall_fidelity, rescore, run_manifest,
                       write_json, write_sweep_csv)

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_INTERNAL = 0, 2, 3, 4

log = logging.getLogger("brickwall")


def _int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _num(v):
    return (isinstance(v, (int, float))) and not isinstance(v, bool)


def _int_or_list(v):
    return _int(v) or (isinstance(v, list) and v and all(_int(x) for x in v))


def _num_or_list(v):
    return _num(v) or (isinstance(v, list) and v and all(_num(x) for x in v))


SCHEMA = {
    "target": {
        "family": lambda v: v in ("ising", "qft", "aqft", "haar", "identity"),
        "n": lambda v: _int(v) and v >= 2,
        "grid": lambda v: isinstance(v, list) and len(v) == 2 and all(_int(x) and x >= 2 for x in v),
        "tau": lambda v: _num(v) and v >= 0,
        "steps": lambda v: _int(v) and v >= 1,
        "k_max": lambda v: _int(v) and v >= 2,
        "depth": lambda v: _int(v) and v >= 1,
        "seed": lambda v: _int(v) and v >= 0,
        "rk_convention": lambda v: v in ("binary", "linear"),
    },
    "plan": {
        "mode": lambda v: v in ("state", "unitary"),
        "d_target": _int_or_list,
        "d_optim": _int_or_list,
        "depths": lambda v: isinstance(v, list) and v and all(_int(x) and x >= 1 for x in v),
    },
    "optimizer": {
        "max_iters": lambda v: _int(v) and v >= 1,
        "patience": lambda v: _int(v) and v >= 1,
        "tol": lambda v: _num(v) and v >= 0,
        "lr": lambda v: _num(v) and v > 0,
        "lr_final": lambda v: _num(v) and v > 0,
        "restarts": lambda v: _int(v) and v >= 1,
        "init": lambda v: v in ("identity", "near_identity", "seeded"),
        "sigma": lambda v: _num(v) and v >= 0,
        "seed": lambda v: _int(v) and v >= 0,
        "target_fidelity": lambda v: _num(v) and 0 < v <= 1,
    },
    "noise": {"eps": lambda v: _num_or_list(v) and all(0 <= x < 1 for x in
                                                       (v if isinstance(v, list) else [v]))},
    "sweep": {
        "aqft_baseline": lambda v: isinstance(v, bool),
        "prune": lambda v: isinstance(v, bool),
        "warm_start": lambda v: isinstance(v, bool),
    },
    "simulation": {"D_target": lambda v: _int(v) and v >= 1},
    "output": {"dir": lambda v: isinstance(v, str) and v != ""},
}


def _find_line(text: str, section: str | None, key: str | None) -> int | None:
    """Best-effort 1-based line of ``key`` (in ``section``) in TOML or JSON text."""
    lines = text.splitlines()
    current = None
    for no, line in enumerate(lines, 1):
        s = line.strip()
        m = re.match(r"^\[([^\]]+)\]", s)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return no
            continue
        if key is None:
            if re.match(rf'^"{re.escape(section)}"\s*:', s):
                return no
            continue
        if (current == section or current is None) and re.match(rf"^{re.escape(key)}\s*=", s):
            return no
        if re.match(rf'^"{re.escape(key)}"\s*:', s):
            return no
    return None


@dataclass
class RunConfig:
    """Validated configuration."""

    raw: dict
    path: Path | None = None

    def get(self, section: str, key: str, default=None):
        return self.raw.get(section, {}).get(key, default)


def parse_config(text: str, fmt: str = "toml", path: Path | None = None) -> RunConfig:
    """Parse and validate a config.

    Raises:
        ConfigError: On syntax errors, unknown sections/keys or bad values,
            carrying the offending line when it can be located.
    """
    try:
        raw = json.loads(text) if fmt == "json" else tomllib.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"invalid TOML: {exc}", int(m.group(1)) if m else None) from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a table of sections", 1)
    for section, body in raw.items():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", _find_line(text, section, None))
        if not isinstance(body, dict):
            raise ConfigError(f"[{section}] must be a table", _find_line(text, section, None))
        for key, value in body.items():
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}", _find_line(text, section, key))
            if not SCHEMA[section][key](value):
                raise ConfigError(f"invalid value for {section}.{key}: {value!r}",
                                  _find_line(text, section, key))
    target = raw.get("target", {})
    if "family" not in target:
        raise ConfigError("missing target.family", _find_line(text, "target", None) or 1)
    if "n" not in target and "grid" not in target:
        raise ConfigError("target needs n or grid", _find_line(text, "target", None) or 1)
    if "n" in target and "grid" in target:
        raise ConfigError("give either target.n or target.grid", _find_line(text, "target", "grid"))
    fam = target["family"]
    needed = {"ising": ("tau", "steps"), "aqft": ("k_max",), "haar": ("depth", "seed")}.get(fam, ())
    for key in needed:
        if key not in target:
            raise ConfigError(f"family {fam!r} needs target.{key}",
                              _find_line(text, "target", None) or 1)
    if "grid" in target and fam != "ising":
        raise ConfigError("grid targets are only available for the ising family",
                          _find_line(text, "target", "grid"))
    return RunConfig(raw, path)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError:
        raise
    fmt = "json" if path.suffix.lower() == ".json" else "toml"
    return parse_config(text, fmt, path)


# ----------------------------------------------------------------------------
# targets


def build_target(cfg: RunConfig) -> Circuit:
    t = cfg.raw["target"]
    fam = t["family"]
    topo = Grid(*t["grid"]) if "grid" in t else t["n"]
    conv = t.get("rk_convention", "binary")
    if fam == "ising":
        return build_trotter_ising(topo, float(t["tau"]), t["steps"])
    if fam == "qft":
        return build_qft_core(t["n"], conv)
    if fam == "aqft":
        return build_aqft(t["n"], t["k_max"], conv)
    if fam == "haar":
        return build_haar_random(t["n"], t["depth"], t["seed"])
    n = t["n"]
    return Circuit(n, (), None, {"family": "identity", "d_target": 0})


def target_cnots(circuit: Circuit) -> int:
    """CNOT count of the conventionally compiled target."""
    fam = circuit.metadata.get("family")
    if fam == "qft":
        return aqft_cnot_count(circuit.n, circuit.n)
    return circuit.cnot_count()


def _topology(cfg: RunConfig):
    t = cfg.raw["target"]
    return Grid(*t["grid"]) if "grid" in t else _resolve_topology(t["n"])


def _opt_config(cfg: RunConfig, seed: int | None) -> OptimizeConfig:
    o = cfg.raw.get("optimizer", {})
    kw = {k: o[k] for k in ("max_iters", "patience", "tol", "lr", "lr_final", "target_fidelity")
          if k in o}
    return OptimizeConfig(seed=seed, **kw)


def _seed(cfg: RunConfig, args) -> int:
    if args.seed is not None:
        return args.seed
    return int(cfg.get("optimizer", "seed", 0))


def _d_target(cfg: RunConfig, args) -> int:
    if args.d_target is not None:
        return args.d_target
    return int(cfg.get("simulation", "D_target", 128))


def _eps_list(cfg: RunConfig, args) -> list[float]:
    if args.eps is not None:
        return [args.eps]
    v = cfg.get("noise", "eps", EPS_DEFAULT)
    return list(v) if isinstance(v, list) else [v]


def _out_dir(cfg: RunConfig, args) -> Path:
    out = Path(args.out) if args.out else Path(cfg.get("output", "dir", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _spec(cfg: RunConfig, target: Circuit, mode: str, d_target: int) -> LossSpec:
    return LossSpec.from_circuit(target, mode, d_target=d_target)


# ----------------------------------------------------------------------------
# commands


def cmd_build(cfg: RunConfig, args) -> int:
    out = _out_dir(cfg, args)
    d_target = _d_target(cfg, args)
    target = build_target(cfg)
    save_circuit(target, out / "circuit.json")
    files = ["circuit.json", "ee_trace.json"]
    try:
        export_qasm(target, out / "circuit.qasm")
        files.append("circuit.qasm")
    except UnsupportedGate as exc:
        log.warning("QASM not written: %s", exc)
    which = "operator" if target.topology.__class__.__name__ == "Grid" else "both"
    trace = ee_trace(target, d_target=d_target, which=which)
    write_json({"cut": trace.cut, "D_target": d_target, "steps": trace.steps,
                "state_ee": trace.state, "operator_ee": trace.operator}, out / "ee_trace.json")
    write_json(run_manifest(cfg.raw, [cfg.get("target", "seed", 0)], d_target,
                            _eps_list(cfg, args)[0], "build") | {"files": files},
               out / "manifest.json")
    print(f"wrote {', '.join(files)} to {out}")
    return EXIT_OK


def cmd_compile(cfg: RunConfig, args) -> int:
    out = _out_dir(cfg, args)
    d_target = _d_target(cfg, args)
    seed = _seed(cfg, args)
    eps = _eps_list(cfg, args)[0]
    model = NoiseModel(eps)
    target = build_target(cfg)
    topo = _topology(cfg)
    plan_cfg = cfg.raw.get("plan", {})
    opt = _opt_config(cfg, seed)
    o = cfg.raw.get("optimizer", {})
    restarts = int(o.get("restarts", 3))
    init, sigma = o.get("init", "near_identity"), float(o.get("sigma", 0.01))
    report = {"family": target.metadata.get("family"), "n": target.n,
              "topology": topo.to_dict(), "eps2": eps, "D_target": d_target}
    if isinstance(plan_cfg.get("d_target"), list):
        dts = plan_cfg["d_target"]
        dos = plan_cfg.get("d_optim", 8)
        dos = dos if isinstance(dos, list) else [dos] * len(dts)
        plan = PartitionPlan(dts, dos)
        res = compile_plan(target, plan, config=opt, restarts=restarts, seed=seed,
                           d_target=d_target, init=init, sigma=sigma)
        parts = []
        for part, r in zip(res.parts, res.results):
            export_qasm(r.ansatz, out / f"compiled_part{part.index}.qasm")
            parts.append({"part": part.index, "mode": part.mode, "d_target": part.d_target,
                          **r.summary()})
        n_cnot = sum(r.ansatz.n_cnot() for r in res.results)
        f_noise = noise_fidelity(n_cnot, model)
        report.update(parts=parts, n_cnot=n_cnot, F_optim_product=res.f_optim_product,
                      F_noise=f_noise, F_all=overall_fidelity(res.f_optim_product, f_noise),
                      gamma=plan.gamma())
    else:
        d_optim = plan_cfg.get("d_optim", 8)
        d_optim = d_optim[0] if isinstance(d_optim, list) else d_optim
        mode = plan_cfg.get("mode", "unitary")
        spec = _spec(cfg, target, mode, d_target)
        starts = [build_ansatz(topo, d_optim, init, sigma=sigma, seed=seed + r)
                  for r in range(restarts)]
        results = [optimize(spec, a, opt) for a in starts]
        best = max(results, key=lambda r: r.f_optim)
        export_qasm(best.ansatz, out / "compiled.qasm")
        n_cnot = best.ansatz.n_cnot()
        f_noise = noise_fidelity(n_cnot, model)
        tc = target_cnots(target)
        report.update(parts=[{"part": 0, "mode": mode, **best.summary()}], n_cnot=n_cnot,
                      n_cnot_formula=_cnot_formula(topo, d_optim), target_cnots=tc,
                      F_optim=best.f_optim, F_noise=f_noise,
                      F_all=overall_fidelity(best.f_optim, f_noise),
                      gamma=compression_rate(tc, n_cnot) if tc else None,
                      restarts=[r.f_optim for r in results])
    write_json(report, out / "report.json")
    write_json(run_manifest(cfg.raw, [seed], d_target, eps, "compile"), out / "manifest.json")
    print(json.dumps({k: report[k] for k in report if k != "parts"}, default=str))
    return EXIT_OK


def _cnot_formula(topo, d_optim: int) -> int:
    if isinstance(topo, Grid):
        return grid_cnot_count(topo.n1, topo.n2, d_optim)
    return chain_cnot_count(topo.n, d_optim)


def cmd_sweep(cfg: RunConfig, args) -> int:
    out = _out_dir(cfg, args)
    d_target = _d_target(cfg, args)
    seed = _seed(cfg, args)
    eps_values = _eps_list(cfg, args)
    target = build_target(cfg)
    topo = _topology(cfg)
    plan_cfg = cfg.raw.get("plan", {})
    o = cfg.raw.get("optimizer", {})
    s = cfg.raw.get("sweep", {})
    mode = plan_cfg.get("mode", "unitary")
    depths = plan_cfg.get("depths", list(range(1, 9)))
    spec = _spec(cfg, target, mode, d_target)
    sweep_cfg = SweepConfig(restarts=int(o.get("restarts", 3)), seed=seed,
                            init=o.get("init", "near_identity"), sigma=float(o.get("sigma", 0.01)),
                            warm_start=bool(s.get("warm_start", True)),
                            prune=bool(s.get("prune", False)) and len(eps_values) == 1,
                            threads=max(1, args.threads or 1),
                            optimize=_opt_config(cfg, seed))
    tc = target_cnots(target)
    base = depth_sweep(spec, depths, NoiseModel(eps_values[0]), sweep_cfg, topo, tc,
                       log=log.info)
    summary = []
    for eps in eps_values:
        model = NoiseModel(eps)
        rep = base if eps == eps_values[0] else rescore(base, model)
        baseline = []
        if s.get("aqft_baseline", False) and target.metadata.get("family") == "qft":
            baseline = aqft_baseline(target.n, model=model, d_target=d_target)
        tag = "" if len(eps_values) == 1 else f"_eps{eps:g}"
        write_sweep_csv(rep, out / f"sweep{tag}.csv", baseline)
        entry = rep.to_dict()
        entry["aqft_baseline"] = [b.__dict__ for b in baseline]
        summary.append(entry)
    write_json({"family": target.metadata.get("family"), "n": target.n, "mode": mode,
                "D_target": d_target, "sweeps": summary}, out / "report.json")
    write_json(run_manifest(cfg.raw, [seed], d_target, eps_values[0], "sweep"),
               out / "manifest.json")
    for entry in summary:
        print(f"eps={entry['eps2']:g}: d_max={entry['d_max']} F_all_max={entry['F_all_max']:.4f} "
              f"gamma={entry['gamma']}")
    return EXIT_OK


def cmd_report(cfg: RunConfig | None, args) -> int:
    out = Path(args.out) if args.out else Path(cfg.get("output", "dir", "out"))
    data = json.loads((out / "report.json").read_text(encoding="utf-8"))
    if "sweeps" in data:
        for entry in data["sweeps"]:
            print(f"eps={entry['eps2']:g}  d_max={entry['d_max']}  "
                  f"F_all_max={entry['F_all_max']:.4f}  gamma={entry['gamma']}")
            print("d_optim  n_cnot  F_optim  F_noise  F_all")
            for r in entry["rows"]:
                print(f"{r['d_optim']:7d}  {r['n_cnot']:6d}  {r['f_optim']:.4f}   "
                      f"{r['f_noise']:.4f}   {r['f_all']:.4f}")
    else:
        for p in data.get("parts", []):
            print(f"part {p['part']} ({p['mode']}): d_optim={p['d_optim']} "
                  f"F_optim={p['F_optim']:.4f} converged={p['converged']}")
        for key in ("n_cnot", "F_optim", "F_optim_product", "F_noise", "F_all", "gamma"):
            if key in data:
                print(f"{key} = {data[key]}")
    return EXIT_OK


COMMANDS = {"build": cmd_build, "compile": cmd_compile, "sweep": cmd_sweep,
            "report": cmd_report}


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="brickwall",
                                description="Compile circuits into shallow CNOT brick walls.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", type=Path, help="TOML or JSON run config")
    p.add_argument("--out", type=Path, help="output directory (overrides output.dir)")
    p.add_argument("--seed", type=int, help="optimizer seed (overrides optimizer.seed)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for restarts")
    p.add_argument("--d-target", type=int, dest="d_target",
                   help="bond cap D_target for target simulation")
    p.add_argument("--eps", type=float, help="two-qubit error rate")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        if args.eps is not None and not 0 <= args.eps < 1:
            raise ConfigError("--eps must lie in [0, 1)")
        if args.d_target is not None and args.d_target < 1:
            raise ConfigError("--d-target must be positive")
        if args.config is None:
            if args.command != "report" or args.out is None:
                raise ConfigError("--config is required")
            cfg = None
        else:
            cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        where = f"{args.config}: " if args.config else ""
        print(f"config error: {where}{exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (BrickwallError, AssertionError, ValueError, ArithmeticError) as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
