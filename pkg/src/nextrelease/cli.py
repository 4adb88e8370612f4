"""Command line pipeline over a project directory.

Exit codes: 0 success, 1 domain failure (validation, failing tests,
estimation errors), 2 usage or environment failure.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .estimation import EstimationError, build_instance, derive_cost_vector, derive_value_matrix
from .features import FeatureSyntaxError, ValidationReport, load_feature_file, validate_project_features
from .monrp import (
    MAX_EXACT_FEATURES,
    InstanceError,
    SearchParams,
    brute_force_front,
    front_from_csv,
    front_to_csv,
    front_to_plot_data,
    hypervolume,
    instance_to_csv,
    nsga2_search,
    random_instance,
    read_instance_csv,
)
from .project import (
    ConfigError,
    RunManifest,
    digests,
    feature_files,
    load_config,
    scenario_files,
    write_atomic,
    write_manifest,
)
from .scenarios import ScenarioSyntaxError, load_scenario_file
from .tdss import BindingError, TestReport, bind_steps, execute_test, format_steps_file, generate_step_skeletons, load_bindings

OK, FAILURE, USAGE = 0, 1, 2


class Abort(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _err(msg):
    print(msg, file=sys.stderr)


def _config(args):
    try:
        cfg = load_config(args.project)
    except ConfigError as exc:
        raise Abort(USAGE, f"config error: {exc}") from None
    if args.output:
        cfg.output_dir = Path(args.output)
    return cfg


def _require_dir(path, what):
    if path is None or not Path(path).is_dir():
        raise Abort(USAGE, f"{what} directory not found: {path}")


def _load_project(cfg):
    """Parse features and programs; syntax problems land in the report."""
    _require_dir(cfg.features_dir, "features")
    _require_dir(cfg.scenarios_dir, "scenarios")
    report = ValidationReport()
    features = []
    for p in feature_files(cfg):
        try:
            features.append(load_feature_file(p))
        except FeatureSyntaxError as exc:
            report.add("error", f"{p.name}: {exc}")
    programs, internal = {}, {}
    for p in scenario_files(cfg):
        try:
            prog = load_scenario_file(p)
        except ScenarioSyntaxError as exc:
            report.add("error", f"{p.name}: {exc}")
            continue
        if p.name.endswith(".internal.scn"):
            internal[p.name[: -len(".internal.scn")]] = prog
        else:
            programs[p.stem] = prog
    if not features and not report.errors:
        report.add("error", f"no .feature files in {cfg.features_dir}")
    report.extend(validate_project_features(features, cfg.stakeholders))
    for f in features:
        if f.id not in programs and f.id not in cfg.estimation.cost_overrides:
            report.add("warning", "no scenario program and no cost override", f.id)
    return features, programs, internal, report


def _validated(cfg):
    features, programs, internal, report = _load_project(cfg)
    if not report.ok:
        if report.issues:
            print(report.format())
        raise Abort(FAILURE, f"validation failed with {len(report.errors)} error(s)")
    return features, programs, internal, report


def cmd_validate(args) -> int:
    cfg = _config(args)
    features, programs, _, report = _load_project(cfg)
    if report.issues:
        print(report.format())
    if report.ok:
        print(f"ok: {len(features)} features, {len(programs)} scenario programs, "
              f"{len(cfg.stakeholders)} stakeholders")
        return OK
    return FAILURE


def _steps_path(cfg, fid):
    return cfg.bindings_dir / f"{fid}.steps"


def cmd_gen_steps(args) -> int:
    cfg = _config(args)
    features, _, _, _ = _validated(cfg)
    cfg.bindings_dir.mkdir(parents=True, exist_ok=True)
    refused = []
    written = 0
    for f in features:
        path = _steps_path(cfg, f.id)
        text = format_steps_file(f)
        if path.exists():
            if path.read_text(encoding="utf-8") == text:
                continue
            if not args.force:
                refused.append(path)
                continue
        write_atomic(path, text)
        written += 1
    print(f"wrote {written} step file(s) to {cfg.bindings_dir}")
    if refused:
        for p in refused:
            _err(f"refusing to overwrite {p} (use --force)")
        return FAILURE
    return OK


def _binding_entries(cfg):
    entries = []
    for p in sorted(cfg.bindings_dir.glob("*.bind")):
        try:
            entries.extend(load_bindings(p))
        except BindingError as exc:
            raise Abort(FAILURE, f"{p.name}: {exc}") from None
    return entries


def _run_tests(cfg, features, programs, seed):
    if not cfg.bindings_dir.is_dir():
        raise Abort(USAGE, f"bindings directory not found: {cfg.bindings_dir} (run gen-steps)")
    entries = _binding_entries(cfg)
    report = TestReport()
    for f in features:
        steps = _steps_path(cfg, f.id)
        if not steps.exists():
            raise Abort(USAGE, f"missing {steps.name} (run gen-steps)")
        skeletons = generate_step_skeletons(f)
        if steps.read_text(encoding="utf-8") != format_steps_file(f):
            _err(f"warning: {steps.name} is out of date with {f.id} (run gen-steps --force)")
        program = programs.get(f.id)
        if program is None:
            raise Abort(FAILURE, f"feature {f.id!r} has no scenario program {f.id}.scn")
        try:
            bound = bind_steps(skeletons, entries, program)
        except BindingError as exc:
            raise Abort(FAILURE, f"{f.id}: {exc}") from None
        report = report.merge(execute_test(f, bound, program, cfg.budget, cfg.strategy, seed))
    return report


def _seed(args, cfg=None):
    if args.seed is not None:
        return args.seed
    return cfg.search.seed if cfg is not None else 0


def cmd_test(args) -> int:
    cfg = _config(args)
    features, programs, _, _ = _validated(cfg)
    seed = _seed(args, cfg)
    report = _run_tests(cfg, features, programs, seed)
    print(report.table())
    path = Path(args.report) if args.report else cfg.output_dir / "test-report.json"
    write_atomic(path, report.to_json())
    return OK if report.passed else FAILURE


def cmd_estimate(args) -> int:
    cfg = _config(args)
    features, programs, internal, _ = _validated(cfg)
    if not args.allow_failing:
        report = _run_tests(cfg, features, programs, _seed(args, cfg))
        if not report.passed:
            print(report.table())
            raise Abort(FAILURE, "scenario tests are failing; fix them or pass --allow-failing")
    try:
        value = derive_value_matrix(features, cfg.stakeholders, cfg.estimation)
        cost = derive_cost_vector(features, programs, cfg.estimation, internal)
        inst = build_instance(cfg.stakeholders, features, value, cost)
    except (EstimationError, InstanceError) as exc:
        raise Abort(FAILURE, f"estimation failed: {exc}") from None
    out = cfg.output_dir
    write_atomic(out / "instance.csv", instance_to_csv(inst))
    inputs = [cfg.config_path, *feature_files(cfg), *scenario_files(cfg),
              *sorted(cfg.bindings_dir.glob("*.bind"))]
    write_manifest(out, RunManifest("estimate", digests(inputs, cfg.root), None, ["instance.csv"]))
    print(f"instance: {inst.m} stakeholders x {inst.n} features -> {out / 'instance.csv'}")
    return OK


def _parse_dims(text):
    mo = re.fullmatch(r"(\d+)x(\d+)", text)
    if not mo:
        raise argparse.ArgumentTypeError("expected MxN, e.g. 10x40")
    return int(mo.group(1)), int(mo.group(2))


def _front_table(front, limit=None):
    rows = [f"{'id':>4}  {'value':>12}  {'cost':>12}  x"]
    for i, c in enumerate(front.candidates[:limit]):
        rows.append(f"{i:>4}  {c.value_total:12.4f}  {c.cost_total:12.4f}  {c.bits}")
    if limit is not None and len(front) > limit:
        rows.append(f"... {len(front) - limit} more")
    return "\n".join(rows)


def cmd_search(args) -> int:
    cfg = None
    try:
        cfg = load_config(args.project)
    except ConfigError:
        if not (args.instance or args.random):
            raise Abort(USAGE, "no instance: pass --instance/--random or run estimate in a project")
    out = Path(args.output) if args.output else (cfg.output_dir if cfg else Path(args.project) / "out")
    seed = _seed(args, cfg)
    inputs = []
    if args.random:
        m, n = args.random
        try:
            inst = random_instance(m, n, seed)
        except InstanceError as exc:
            raise Abort(USAGE, str(exc)) from None
        write_atomic(out / "instance.csv", instance_to_csv(inst))
    else:
        path = Path(args.instance) if args.instance else out / "instance.csv"
        if not path.is_file():
            raise Abort(USAGE, f"no instance at {path}: run estimate or pass --instance")
        try:
            inst = read_instance_csv(path)
        except InstanceError as exc:
            raise Abort(USAGE, f"bad instance {path}: {exc}") from None
        inputs.append(path)
    if args.exact and inst.n > MAX_EXACT_FEATURES:
        raise Abort(USAGE, f"--exact needs n <= {MAX_EXACT_FEATURES}, instance has n={inst.n}")

    params = replace(cfg.search if cfg else SearchParams(), seed=seed)
    front = nsga2_search(inst, params)
    outputs = ["front.csv", "front-plot.csv"]
    write_atomic(out / "front.csv", front_to_csv(front))
    write_atomic(out / "front-plot.csv", front_to_plot_data(front))
    print(f"metaheuristic front: {len(front)} candidates (seed {seed})")
    print(_front_table(front, limit=args.show))
    if front.candidates and not any(front.candidates[0].x):
        print("note: the empty release (no features) is part of the front")
    if args.exact:
        exact = brute_force_front(inst)
        write_atomic(out / "exact-front.csv", front_to_csv(exact))
        write_atomic(out / "exact-front-plot.csv", front_to_plot_data(exact))
        outputs += ["exact-front.csv", "exact-front-plot.csv"]
        hv_meta, hv_exact = hypervolume(front, inst), hypervolume(exact, inst)
        ratio = hv_meta / hv_exact if hv_exact > 0 else 1.0
        print(f"exact front: {len(exact)} candidates")
        print(f"hypervolume: metaheuristic {hv_meta:.6g}, exact {hv_exact:.6g}, ratio {ratio:.6f}")
    manifest_inputs = digests(inputs, cfg.root if cfg else out) if inputs else {}
    write_manifest(out, RunManifest("search", manifest_inputs, seed, outputs))
    return OK


def cmd_report(args) -> int:
    try:
        cfg = load_config(args.project)
        out = cfg.output_dir
    except ConfigError:
        cfg, out = None, Path(args.project) / "out"
    if args.output:
        out = Path(args.output)
    if not out.is_dir():
        raise Abort(USAGE, f"no output directory {out}")
    shown = False
    tr = out / "test-report.json"
    if tr.is_file():
        doc = json.loads(tr.read_text(encoding="utf-8"))
        print(f"tests: {'all passed' if doc['passed'] else 'FAILING'} {doc['totals']}")
        for s in doc["scenarios"]:
            if s["verdict"] != "Pass":
                print(f"  {s['feature']} / {s['scenario']}: {s['verdict']} at step {s['step']}")
        shown = True
    ip = out / "instance.csv"
    if ip.is_file():
        inst = read_instance_csv(ip)
        print(f"instance: {inst.m} stakeholders x {inst.n} features")
        shown = True
    fp = out / "front.csv"
    if fp.is_file():
        front = front_from_csv(fp.read_text(encoding="utf-8"), "Metaheuristic")
        print(f"front: {len(front)} release candidates")
        print(_front_table(front, limit=args.show))
        shown = True
    if not shown:
        raise Abort(USAGE, f"nothing to report in {out}")
    return OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--project", default=argparse.SUPPRESS, help="project directory (default: .)")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed")
    common.add_argument("--output", default=argparse.SUPPRESS, help="output directory")

    parser = argparse.ArgumentParser(prog="nextrelease", parents=[common], description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", parents=[common], help="parse and validate features and scenario specs")
    p = sub.add_parser("gen-steps", parents=[common], help="write .steps skeleton files")
    p.add_argument("--force", action="store_true", help="overwrite changed skeleton files")
    p = sub.add_parser("test", parents=[common], help="run usage scenarios against scenario programs")
    p.add_argument("--report", help="path of the JSON test report")
    p = sub.add_parser("estimate", parents=[common], help="derive the value matrix and cost vector")
    p.add_argument("--allow-failing", action="store_true", help="estimate even if scenario tests fail")
    p = sub.add_parser("search", parents=[common], help="search for Pareto-optimal release candidates")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--instance", help="instance CSV (default: <output>/instance.csv)")
    src.add_argument("--random", type=_parse_dims, metavar="MxN", help="search a seeded random instance")
    p.add_argument("--exact", action="store_true", help="also enumerate the exact front")
    p.add_argument("--show", type=int, default=20, help="rows of the front to print")
    p = sub.add_parser("report", parents=[common], help="summarize the outputs of earlier runs")
    p.add_argument("--show", type=int, default=20, help="rows of the front to print")
    return parser


COMMANDS = {
    "validate": cmd_validate,
    "gen-steps": cmd_gen_steps,
    "test": cmd_test,
    "estimate": cmd_estimate,
    "search": cmd_search,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    for name, default in (("project", "."), ("seed", None), ("output", None)):
        if not hasattr(args, name):
            setattr(args, name, default)
    try:
        return COMMANDS[args.command](args)
    except Abort as exc:
        _err(str(exc))
        return exc.code
    except OSError as exc:
        _err(f"I/O error: {exc}")
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
