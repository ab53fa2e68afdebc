"""Command-line front end.

Exit codes: 0 success, 1 bound violation, 2 usage or input error,
3 curvature validation failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import curvature as curv
from . import discrete, pinching, weitzenboeck
from .errors import WeitzlabError

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_INVALID = 3

COMMANDS = ("model", "analyze", "bounds", "sweep", "sphere-spectrum")
MODEL_KEYS = {
    "constant": {"n", "kappa"},
    "fubini_study": {"m"},
    "random": {"n", "seed", "eps", "kappa"},
}
SWEEP_BASES = {"sphere": 1.0, "hyperbolic": -1.0}


class UsageError(Exception):
    pass


class ValidationFailure(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    output: str | None = None
    model: dict = field(default_factory=dict)
    p_degrees: list = field(default_factory=list)
    q_degrees: list = field(default_factory=list)
    tags: list | None = None
    fmt: str = "json"
    seed: int = 0
    restarts: int = pinching.DEFAULT_BUDGET
    tol: float = pinching.DEFAULT_TOL
    count: int = 1
    eps: float = 0.0
    base: str = "sphere"
    n: int = 4
    workers: int = 1
    level: int = 3
    k: int = 8
    report: str | None = None
    off: str | None = None

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.restarts < 1:
            raise UsageError("--restarts must be >= 1")
        if not self.tol > 0:
            raise UsageError("--tol must be positive")
        if self.command == "sweep":
            if self.count < 1:
                raise UsageError("--count must be >= 1")
            if self.eps < 0:
                raise UsageError("--eps must be nonnegative")
            if self.base not in SWEEP_BASES:
                raise UsageError(f"--base must be one of {sorted(SWEEP_BASES)}")
            if self.n < 2:
                raise UsageError("--n must be >= 2")
            if self.workers < 1:
                raise UsageError("--workers must be >= 1")
        if self.command == "sphere-spectrum":
            if not 0 <= self.level <= discrete.MAX_LEVEL:
                raise UsageError(f"--level must be in [0, {discrete.MAX_LEVEL}]")
            if self.k < 0:
                raise UsageError("--k must be >= 0")
        if self.fmt not in ("json", "csv"):
            raise UsageError("--format must be json or csv")
        if any(p < 2 for p in self.p_degrees):
            raise UsageError("symmetric degrees must be >= 2")
        if any(q < 1 for q in self.q_degrees):
            raise UsageError("form degrees must be >= 1")
        if self.tags is not None:
            unknown = set(self.tags) - set(weitzenboeck.ALL_TAGS)
            if unknown:
                raise UsageError(f"unknown bound tags {sorted(unknown)}")
        return self


# --- parsing helpers ----------------------------------------------------------


def _parse_keyvals(items, allowed: set, what: str) -> dict:
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"{what}: expected key=value, got {item!r}")
        if key not in allowed:
            raise UsageError(f"{what}: unknown key {key!r} (allowed: {sorted(allowed)})")
        try:
            out[key] = int(value) if key in ("n", "m", "seed") else float(value)
        except ValueError:
            raise UsageError(f"{what}: bad value for {key!r}: {value!r}") from None
    return out


def _parse_product(text: str) -> list:
    factors = []
    for part in text.split(","):
        dim, sep, kappa = part.partition(":")
        if not sep:
            raise UsageError(f"product factor must be dim:kappa, got {part!r}")
        try:
            factors.append((int(dim), float(kappa)))
        except ValueError:
            raise UsageError(f"bad product factor {part!r}") from None
    return factors


def _int_list(text: str | None) -> list:
    if not text:
        return []
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _clean(obj):
    """JSON-safe copy: NaN/inf become null, numpy scalars become Python."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _dump_json(data) -> str:
    return json.dumps(_clean(data), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _load_curvature(path: str) -> curv.CurvatureTensor:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    try:
        R = curv.loads(text)
    except curv.CurvatureFormatError as exc:
        raise UsageError(f"{path}: {exc}") from None
    report = curv.validate(R)
    if not report.passed:
        raise ValidationFailure(f"{path}: curvature symmetries violated {report.as_dict()}")
    return R


# --- commands -------------------------------------------------------------------


def build_model(model: dict) -> curv.CurvatureTensor:
    tag = model.get("tag")
    params = model.get("params")
    if tag == "constant":
        if "n" not in params:
            raise UsageError("constant model needs n=")
        return curv.constant_curvature(params["n"], params.get("kappa", 1.0))
    if tag == "product":
        return curv.product_space(params)
    if tag == "fubini_study":
        if "m" not in params:
            raise UsageError("fubini-study model needs m=")
        return curv.fubini_study(params["m"])
    if tag == "random":
        if "n" not in params:
            raise UsageError("random model needs n=")
        n = params["n"]
        base = curv.constant_curvature(n, params["kappa"]) if "kappa" in params else None
        return curv.random_curvature(n, params.get("seed", 0), base, params.get("eps", 1.0))
    raise UsageError("choose one model: --constant, --product, --fubini-study or --random")


def cmd_model(cfg: RunConfig) -> int:
    R = build_model(cfg.model)
    check = curv.validate(curv.loads(curv.dumps(R)))
    if not check.passed:
        raise ValidationFailure(f"generated model failed validation: {check.as_dict()}")
    _write(cfg.output, curv.dumps(R))
    return EXIT_OK


def cmd_analyze(cfg: RunConfig) -> int:
    R = _load_curvature(cfg.input)
    report = pinching.classify(R, cfg.restarts, cfg.tol, cfg.seed)
    out = report.as_dict()
    out["validation"] = curv.validate(R).as_dict()
    out["rigidity"] = weitzenboeck.rigidity_check(R, report).as_dict()
    _write(cfg.output, _dump_json(out))
    return EXIT_OK


def run_bounds(R, report, p_degrees, q_degrees, tags=None) -> list:
    checks = []
    for p in p_degrees:
        for tag in ("eq2.7", "eq2.9", "eq3.1"):
            if tags is not None and tag not in tags:
                continue
            if tag == "eq3.1":
                checks.append(weitzenboeck.bound_negative_sym(R, p, report))
            else:
                checks.append(weitzenboeck.bound_positive_sym(R, p, tag, report))
    for q in q_degrees:
        if tags is not None and "eq4.1" not in tags:
            continue
        if q > R.n:
            raise UsageError(f"form degree {q} exceeds dimension {R.n}")
        checks.append(weitzenboeck.bound_form(R, q, report))
    return checks


CSV_FIELDS = ("bound_tag", "space", "degree", "rhs_constant", "lambda_extreme", "margin", "satisfied", "vacuous")


def bounds_csv(checks) -> str:
    lines = [",".join(CSV_FIELDS)]
    for c in checks:
        row = c.as_dict()
        row["space"] = c.inputs_digest.get("space", "")
        row["degree"] = c.inputs_digest.get("degree", "")
        lines.append(",".join(_fmt(row[f]) for f in CSV_FIELDS))
    return "\n".join(lines) + "\n"


def cmd_bounds(cfg: RunConfig) -> int:
    R = _load_curvature(cfg.input)
    report = pinching.classify(R, cfg.restarts, cfg.tol, cfg.seed)
    p_degrees = cfg.p_degrees or ([] if cfg.q_degrees else [2])
    checks = run_bounds(R, report, p_degrees, cfg.q_degrees, cfg.tags)
    if cfg.fmt == "csv":
        _write(cfg.output, bounds_csv(checks))
    else:
        _write(
            cfg.output,
            _dump_json(
                {
                    "checks": [c.as_dict() for c in checks],
                    "pinching": report.as_dict(),
                    "tolerances": {"bound_slack": weitzenboeck.BOUND_SLACK, "strict_margin": pinching.STRICT_MARGIN},
                }
            ),
        )
    violated = any(not c.satisfied for c in checks)
    return EXIT_VIOLATION if violated else EXIT_OK


def _sweep_item(args):
    seed, n, kappa, eps, p_degrees, q_degrees, restarts, tol = args
    base = curv.constant_curvature(n, kappa)
    R = curv.random_curvature(n, seed, base, eps)
    report = pinching.classify(R, restarts, tol)
    items = []
    v = report.verdicts
    items.append(
        {
            "check": "lemma1",
            "vacuous": not v["lemma1_strict"],
            "margin": report.second_kind_min,
            "satisfied": (not v["lemma1_strict"]) or report.second_kind_min > 0,
        }
    )
    items.append(
        {
            "check": "lemma2",
            "vacuous": not v["lemma2_strict"],
            "margin": -report.second_kind_max,
            "satisfied": (not v["lemma2_strict"]) or report.second_kind_max < 0,
        }
    )
    tags = ("eq2.7", "eq2.9") if kappa > 0 else ("eq3.1",)
    for check in run_bounds(R, report, p_degrees, q_degrees if kappa > 0 else [], tags + ("eq4.1",)):
        items.append(
            {
                "check": f"{check.bound_tag}:{check.inputs_digest['degree']}",
                "vacuous": check.vacuous,
                "margin": check.margin,
                "satisfied": check.satisfied,
            }
        )
    return {
        "seed": seed,
        "sec_min": report.sec_min,
        "sec_max": report.sec_max,
        "ric_min": report.ric_min,
        "ric_max": report.ric_max,
        "verdicts": report.verdicts,
        "checks": items,
    }


def run_sweep(cfg: RunConfig) -> dict:
    kappa = SWEEP_BASES[cfg.base]
    p_degrees = cfg.p_degrees or [2]
    jobs = [
        (cfg.seed + i, cfg.n, kappa, cfg.eps, p_degrees, cfg.q_degrees, cfg.restarts, cfg.tol)
        for i in range(cfg.count)
    ]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_sweep_item, jobs, chunksize=8))
    else:
        results = [_sweep_item(job) for job in jobs]
    results.sort(key=lambda r: r["seed"])

    violations = []
    margins: dict[str, list] = {}
    non_vacuous: dict[str, int] = {}
    for res in results:
        for item in res["checks"]:
            name = item["check"]
            non_vacuous.setdefault(name, 0)
            if item["vacuous"]:
                continue
            non_vacuous[name] += 1
            margins.setdefault(name, []).append(item["margin"])
            if not item["satisfied"]:
                violations.append({"seed": res["seed"], **item})
    histogram = {}
    for name, values in sorted(margins.items()):
        counts, edges = np.histogram(np.asarray(values), bins=10)
        histogram[name] = {
            "edges": edges.tolist(),
            "counts": counts.tolist(),
            "min": float(np.min(values)),
            "max": float(np.max(values)),
        }
    return {
        "config": {
            "base": cfg.base,
            "n": cfg.n,
            "eps": cfg.eps,
            "count": cfg.count,
            "seed": cfg.seed,
            "p_degrees": p_degrees,
            "q_degrees": cfg.q_degrees,
            "restarts": cfg.restarts,
            "tol": cfg.tol,
        },
        "tolerances": {"bound_slack": weitzenboeck.BOUND_SLACK, "strict_margin": pinching.STRICT_MARGIN},
        "non_vacuous": non_vacuous,
        "violations": violations,
        "margin_histogram": histogram,
        "items": results,
    }


def cmd_sweep(cfg: RunConfig) -> int:
    summary = run_sweep(cfg)
    _write(cfg.output, _dump_json(summary))
    return EXIT_VIOLATION if summary["violations"] else EXIT_OK


def spectrum_csv(evals) -> str:
    lines = ["index,eigenvalue"]
    lines += [f"{i},{_fmt(float(v))}" for i, v in enumerate(evals)]
    return "\n".join(lines) + "\n"


def cmd_sphere_spectrum(cfg: RunConfig) -> int:
    mesh = discrete.icosphere(cfg.level)
    evals = discrete.hodge1_spectrum(mesh, cfg.k)
    check = discrete.verify_form_bound(mesh, cfg.k, evals)
    _write(cfg.output, spectrum_csv(evals))
    report = check.as_dict()
    report["level"] = cfg.level
    report["eigenvalues"] = evals.tolist()
    if cfg.report:
        Path(cfg.report).write_text(_dump_json(report), encoding="utf-8")
    else:
        sys.stderr.write(_dump_json(report))
    if cfg.off:
        Path(cfg.off).write_text(mesh.to_off(), encoding="utf-8")
    return EXIT_OK if check.satisfied else EXIT_VIOLATION


HANDLERS = {
    "model": cmd_model,
    "analyze": cmd_analyze,
    "bounds": cmd_bounds,
    "sweep": cmd_sweep,
    "sphere-spectrum": cmd_sphere_spectrum,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="weitzlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, with_input=True):
        if with_input:
            p.add_argument("input", help="curvature JSON file")
        p.add_argument("-o", "--output", default=None, help="output path (default stdout)")
        p.add_argument("--restarts", type=int, default=pinching.DEFAULT_BUDGET)
        p.add_argument("--tol", type=float, default=pinching.DEFAULT_TOL)
        p.add_argument("--seed", type=int, default=0)

    m = sub.add_parser("model", help="write a model curvature tensor as JSON")
    group = m.add_mutually_exclusive_group(required=True)
    group.add_argument("--constant", nargs="+", metavar="KEY=VALUE")
    group.add_argument("--product", metavar="DIM:KAPPA,...")
    group.add_argument("--fubini-study", nargs="+", metavar="KEY=VALUE")
    group.add_argument("--random", nargs="+", metavar="KEY=VALUE")
    m.add_argument("-o", "--output", default=None)

    a = sub.add_parser("analyze", help="sectional/Ricci extrema and pinching verdicts")
    common(a)

    b = sub.add_parser("bounds", help="pointwise eigenvalue bound certificates")
    common(b)
    b.add_argument("--p", default=None, help="symmetric degrees, e.g. 2,3")
    b.add_argument("--q", default=None, help="form degrees, e.g. 1,2")
    b.add_argument("--tags", default=None, help="restrict to bound tags, e.g. eq2.7,eq4.1")
    b.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")

    s = sub.add_parser("sweep", help="seeded fuzz sweep around a space form")
    common(s, with_input=False)
    s.add_argument("--base", default="sphere", help="sphere or hyperbolic")
    s.add_argument("--n", type=int, default=4)
    s.add_argument("--eps", type=float, default=0.02)
    s.add_argument("--count", type=int, default=100)
    s.add_argument("--p", default=None)
    s.add_argument("--q", default=None)
    s.add_argument("--workers", type=int, default=1)

    h = sub.add_parser("sphere-spectrum", help="discrete Hodge spectrum on 1-cochains of S^2")
    h.add_argument("--level", type=int, default=3)
    h.add_argument("--k", type=int, default=8)
    h.add_argument("-o", "--output", default=None, help="spectrum CSV (default stdout)")
    h.add_argument("--report", default=None, help="bound report JSON (default stderr)")
    h.add_argument("--off", default=None, help="export the mesh as OFF")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=ns.command, output=getattr(ns, "output", None))
    if ns.command == "model":
        if ns.constant:
            cfg.model = {"tag": "constant", "params": _parse_keyvals(ns.constant, MODEL_KEYS["constant"], "--constant")}
        elif ns.product:
            cfg.model = {"tag": "product", "params": _parse_product(ns.product)}
        elif ns.fubini_study:
            cfg.model = {"tag": "fubini_study", "params": _parse_keyvals(ns.fubini_study, MODEL_KEYS["fubini_study"], "--fubini-study")}
        else:
            cfg.model = {"tag": "random", "params": _parse_keyvals(ns.random, MODEL_KEYS["random"], "--random")}
        return cfg.validate()
    if ns.command == "sphere-spectrum":
        cfg.level, cfg.k, cfg.report, cfg.off = ns.level, ns.k, ns.report, ns.off
        return cfg.validate()
    cfg.restarts, cfg.tol, cfg.seed = ns.restarts, ns.tol, ns.seed
    if ns.command in ("analyze", "bounds"):
        cfg.input = ns.input
    if ns.command == "bounds":
        cfg.p_degrees = _int_list(ns.p)
        cfg.q_degrees = _int_list(ns.q)
        cfg.tags = ns.tags.split(",") if ns.tags else None
        cfg.fmt = ns.fmt
    if ns.command == "sweep":
        cfg.base, cfg.n, cfg.eps, cfg.count, cfg.workers = ns.base, ns.n, ns.eps, ns.count, ns.workers
        cfg.p_degrees = _int_list(ns.p)
        cfg.q_degrees = _int_list(ns.q)
    return cfg.validate()


def main(argv=None) -> int:
    try:
        cfg = config_from_args(build_parser().parse_args(argv))
        return HANDLERS[cfg.command](cfg)
    except UsageError as exc:
        print(f"weitzlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationFailure as exc:
        print(f"weitzlab: validation failed: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (WeitzlabError, ValueError) as exc:
        print(f"weitzlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
