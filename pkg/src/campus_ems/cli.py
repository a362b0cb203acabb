"""Command-line front end.

Exit codes: 0 success, 2 validation failure, 3 non-convergence, 4 infeasible.
``CONFIG`` is a JSON path, or ``builtin:default`` / ``builtin:tiny`` for the
bundled configurations.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

from .model.config_io import ConfigParseError, load_config, save_config
from .model.types import ConfigError, FirstStageDecision, SystemConfig, UncertaintyRealization

EXIT_OK, EXIT_INVALID, EXIT_NOT_CONVERGED, EXIT_INFEASIBLE = 0, 2, 3, 4
BUILTIN = "builtin:"


def _version() -> str:
    try:
        from importlib.metadata import version
        return version("artifact")
    except Exception:
        return "unknown"


@dataclass
class RunManifest:
    command: str
    config: str
    seed: int | None
    version: str
    wall_time: float = 0.0
    outputs: dict[str, str] = field(default_factory=dict)
    status: str = "ok"
    details: dict = field(default_factory=dict)

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "manifest.json"
        path.write_text(json.dumps(asdict(self), indent=1, sort_keys=True) + "\n")
        return path


def _resolve(spec: str) -> Path:
    if spec.startswith(BUILTIN):
        name = spec[len(BUILTIN):]
        ref = resources.files("campus_ems") / "data" / f"{name}.json"
        if not ref.is_file():
            raise FileNotFoundError(f"no bundled configuration named {name!r}")
        return Path(str(ref))
    return Path(spec)


def _load(spec: str, seed: int | None = None) -> SystemConfig:
    cfg = load_config(_resolve(spec))
    if seed is not None:
        cfg = cfg.with_(seed=seed)
    return cfg


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _dump(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=1) + "\n")


def cmd_validate(args) -> int:
    try:
        cfg = _load(args.config)
    except ConfigParseError as exc:
        _err(f"parse error: {exc}")
        return EXIT_INVALID
    except ConfigError as exc:
        for issue in exc.issues:
            print(issue)
        return EXIT_INVALID
    except OSError as exc:
        _err(str(exc))
        return EXIT_INVALID
    issues = cfg.issues()
    for issue in issues:
        print(issue)
    if not issues:
        print(f"{args.config}: ok ({len(cfg.buildings)} buildings, {len(cfg.pevs)} PEVs, "
              f"{cfg.T} slots)")
    return EXIT_OK if not issues else EXIT_INVALID


def _checked_config(args):
    try:
        cfg = _load(args.config, getattr(args, "seed", None))
    except (ConfigParseError, ConfigError, OSError) as exc:
        _err(str(exc))
        return None
    issues = cfg.issues()
    if issues:
        _err("invalid configuration:\n  " + "\n  ".join(issues))
        return None
    return cfg


def cmd_solve(args) -> int:
    from .evaluate import simulate
    from .linprog import SolverError
    from .robust.ccg import ccg_solve
    from .robust.master import MasterInfeasible

    t0 = time.perf_counter()
    cfg = _checked_config(args)
    if cfg is None:
        return EXIT_INVALID
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    man = RunManifest("solve", args.config, cfg.seed, _version())
    try:
        res = ccg_solve(cfg, tol=args.tol, max_iter=args.max_iter, backend=args.backend,
                        verbose=args.verbose)
    except MasterInfeasible as exc:
        _err(str(exc))
        path = out / "infeasibility.json"
        _dump(path, exc.report.to_json())
        man.outputs["infeasibility"] = path.name
        man.status = "infeasible"
        man.wall_time = time.perf_counter() - t0
        man.write(out)
        return EXIT_INFEASIBLE
    except SolverError as exc:
        _err(f"solver failure: {exc}")
        man.status = "solver_error"
        man.details = {"message": str(exc)}
        man.wall_time = time.perf_counter() - t0
        man.write(out)
        return EXIT_INFEASIBLE
    st = res.state
    for key, path in st.write(out).items():
        man.outputs[key] = path.name
    if res.decision is not None:
        path = out / "decision.json"
        _dump(path, res.decision.to_json())
        man.outputs["decision"] = path.name
    if st.worst is not None:
        path = out / "worst_case.json"
        _dump(path, st.worst.to_json())
        man.outputs["worst_case"] = path.name
        rep = simulate(cfg, res.decision, st.worst, backend=args.backend)
        for key, p in rep.write(out).items():
            man.outputs[key] = p.name
    man.status = "converged" if st.converged else "not_converged"
    man.details = {"lb": st.lb, "ub": st.ub, "gap": st.gap, "iterations": st.iteration,
                   "tol": args.tol, "scenarios": len(st.scenarios)}
    man.wall_time = time.perf_counter() - t0
    man.write(out)
    print(f"{man.status}: LB {st.lb:.6f} UB {st.ub:.6f} gap {st.gap:.3g} "
          f"after {st.iteration} iterations")
    return EXIT_OK if st.converged else EXIT_NOT_CONVERGED


def _read_json(path: str, what: str):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"{what}: {exc}") from None


def cmd_evaluate(args) -> int:
    from .evaluate import simulate

    t0 = time.perf_counter()
    cfg = _checked_config(args)
    if cfg is None:
        return EXIT_INVALID
    try:
        x = FirstStageDecision.from_json(_read_json(args.decision, "decision"))
        if args.realization:
            real = UncertaintyRealization.from_json(_read_json(args.realization, "realization"))
        else:
            real = UncertaintyRealization.nominal(cfg)
        rep = simulate(cfg, x, real, backend=args.backend)
    except (ValueError, KeyError, TypeError) as exc:
        _err(f"rejected: {exc}")
        return EXIT_INVALID
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    man = RunManifest("evaluate", args.config, cfg.seed, _version())
    for key, p in rep.write(out).items():
        man.outputs[key] = p.name
    man.status = "feasible" if rep.feasible else "infeasible"
    man.details = {"objective": rep.objective, "total_cost": rep.total_cost,
                   "infeasible_group": rep.infeasible_group}
    man.wall_time = time.perf_counter() - t0
    man.write(out)
    if not rep.feasible:
        _err(f"recourse infeasible; violated group: {rep.infeasible_group}")
        return EXIT_INFEASIBLE
    print(f"objective {rep.objective:.6f}, cost {rep.total_cost:.4f}, "
          f"comfort {rep.mean_comfort()['overall']:.4f}")
    return EXIT_OK


def cmd_enumerate(args) -> int:
    from .oracle import (EnumerationCapExceeded, RobustInfeasible, robust_solve_exhaustive,
                         worst_case_by_enumeration)

    t0 = time.perf_counter()
    cfg = _checked_config(args)
    if cfg is None:
        return EXIT_INVALID
    out = Path(args.out)
    man = RunManifest("enumerate", args.config, cfg.seed, _version())
    try:
        if args.decision:
            x = FirstStageDecision.from_json(_read_json(args.decision, "decision"))
            wc = worst_case_by_enumeration(cfg, x, cap=args.cap)
            doc = {"value": wc.value, "vertices": len(wc.vertices),
                   "worst_case": wc.realization.to_json()}
        else:
            ex = robust_solve_exhaustive(cfg, vertex_cap=args.cap)
            doc = {"value": ex.value, "patterns": ex.patterns, "decision": ex.decision.to_json(),
                   "worst_case": ex.worst.to_json()}
    except EnumerationCapExceeded as exc:
        _err(str(exc))
        return EXIT_INVALID
    except RobustInfeasible as exc:
        _err(str(exc))
        out.mkdir(parents=True, exist_ok=True)
        path = out / "witness.json"
        _dump(path, exc.realization.to_json())
        man.outputs["witness"] = path.name
        man.status = "infeasible"
        man.wall_time = time.perf_counter() - t0
        man.write(out)
        return EXIT_INFEASIBLE
    except (ValueError, KeyError, TypeError) as exc:
        _err(f"rejected: {exc}")
        return EXIT_INVALID
    out.mkdir(parents=True, exist_ok=True)
    path = out / "enumeration.json"
    _dump(path, doc)
    man.outputs["enumeration"] = path.name
    man.details = {"value": doc["value"]}
    man.wall_time = time.perf_counter() - t0
    man.write(out)
    print(f"value {doc['value']:.6f}")
    return EXIT_OK


def cmd_make_config(args) -> int:
    from .model.defaults import default_config, tiny_config

    cfg = default_config(seed=args.seed) if args.kind == "default" else tiny_config(seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{args.kind}.json"
    save_config(cfg, path)
    print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="campus-ems", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=_version())
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a configuration and list every problem")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)

    def common(sp, seed=True):
        sp.add_argument("config")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--backend", default="auto", choices=("auto", "native", "highs"))
        if seed:
            sp.add_argument("--seed", type=int, default=None,
                            help="override the configuration's seed")

    s = sub.add_parser("solve", help="robust solve by column-and-constraint generation")
    common(s)
    s.add_argument("--tol", type=float, default=0.01, help="stop when UB - LB <= tol")
    s.add_argument("--max-iter", type=int, default=50, help="iteration limit (exit 3 if hit)")
    s.add_argument("--verbose", action="store_true", help="print bounds every iteration")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("evaluate", help="replay a decision against one realisation")
    common(e)
    e.add_argument("--decision", required=True)
    e.add_argument("--realization", help="realisation JSON (nominal if omitted)")
    e.set_defaults(func=cmd_evaluate)

    n = sub.add_parser("enumerate", help="exhaustive reference solve for tiny instances")
    common(n)
    n.add_argument("--decision", help="only the worst case of this decision")
    n.add_argument("--cap", type=int, default=10**6, help="maximum number of vertices")
    n.set_defaults(func=cmd_enumerate)

    m = sub.add_parser("make-config", help="write a bundled configuration as JSON")
    m.add_argument("kind", choices=("default", "tiny"))
    m.add_argument("--out", required=True)
    m.add_argument("--seed", type=int, default=0)
    m.set_defaults(func=cmd_make_config)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
