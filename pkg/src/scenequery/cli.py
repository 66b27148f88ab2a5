"""Command-line driver.

Exit codes: 0 success, 2 validation error, 3 network/protocol error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import synth
from .clients import ClientNetworkError, ClientProtocolError, run_oracle, run_random
from .config import ConfigError, HarnessConfig, load_config
from .generator import GenConfig, GenerationError, generate_suite
from .kb import AnnotationError, KnowledgeBase, ingest_annotations
from .ontology import OntologyError, default_ontology, load_ontology
from .scoring import render_report_tsv, report_from_jsonable
from .server import replay_session_log, serve_forever
from .suite import SuiteError, load_suite, write_suite

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NETWORK = 3


def _load_ont(path: str | None):
    return load_ontology(path) if path else default_ontology()


def _load_kbs(kb_dirs: list[str], ont, cfg: HarnessConfig) -> dict[str, KnowledgeBase]:
    kbs: dict[str, KnowledgeBase] = {}
    for kb_dir in kb_dirs:
        kb = ingest_annotations(
            kb_dir, ont, gap_frames=cfg.gap_frames, gap_seconds=cfg.gap_seconds
        )
        scene_id = kb.meta.get("scene_id", Path(kb_dir).name)
        kbs[scene_id] = kb
    return kbs


def _cmd_ontology_check(args) -> int:
    try:
        ont = load_ontology(args.file)
    except OntologyError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    by_cat: dict[str, int] = {}
    for pred in ont.predicates.values():
        by_cat[pred.category] = by_cat.get(pred.category, 0) + 1
    print(f"ok: {len(ont.predicates)} predicates")
    for cat in sorted(by_cat):
        print(f"  {cat}\t{by_cat[cat]}")
    return EXIT_OK


def _cmd_ingest(args) -> int:
    cfg = load_config(args.config) if args.config else HarnessConfig()
    try:
        ont = _load_ont(args.ontology)
        kb = ingest_annotations(
            args.dir, ont, gap_frames=cfg.gap_frames, gap_seconds=cfg.gap_seconds
        )
    except (OntologyError, AnnotationError) as exc:
        print(f"ingest failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(
        f"ok: scene={kb.meta.get('scene_id', '?')} entities={len(kb.entities)}"
        f" cameras={len(kb.cameras)} facts={len(kb.facts)}"
        f" span={kb.span[0]:.1f}..{kb.span[1]:.1f}s"
    )
    return EXIT_OK


def _cmd_generate_scene(args) -> int:
    ont = _load_ont(args.ontology)
    try:
        if args.builtin:
            scripts = {s.scene_id: s for s in synth.builtin_scenarios()}
            if args.builtin == "all":
                out_root = Path(args.out)
                for script in scripts.values():
                    synth.generate_scene(script, out_root / script.scene_id, ont)
                    print(f"wrote {out_root / script.scene_id}")
                return EXIT_OK
            if args.builtin not in scripts:
                print(
                    f"unknown builtin {args.builtin!r};"
                    f" have {', '.join(sorted(scripts))} or 'all'",
                    file=sys.stderr,
                )
                return EXIT_VALIDATION
            script = scripts[args.builtin]
        else:
            script = synth.load_script(args.script)
        if args.seed is not None:
            from dataclasses import replace

            script = replace(script, seed=args.seed)
        synth.generate_scene(script, args.out, ont)
    except (synth.ScriptError, AnnotationError, OntologyError) as exc:
        print(f"generate-scene failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_generate_suite(args) -> int:
    cfg = load_config(args.config) if args.config else HarnessConfig()
    try:
        ont = _load_ont(args.ontology)
        kbs = _load_kbs(args.kb, ont, cfg)
        lo, _, hi = args.queries.partition(":")
        gen_cfg = GenConfig(
            seed=args.seed,
            storylines_per_scene=args.storylines,
            queries_per_storyline=(int(lo), int(hi or lo)),
            negative_fraction=args.negative_fraction,
            false_definition_fraction=args.false_definition_fraction,
        )
        suite = generate_suite(
            kbs, ont, gen_cfg, geom=cfg.geometry, suite_id=args.suite_id
        )
        write_suite(suite, args.out)
    except (AnnotationError, OntologyError, GenerationError, ValueError) as exc:
        print(f"generate-suite failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(
        f"wrote {args.out}: {suite.storyline_count()} storylines,"
        f" {suite.query_count()} queries"
    )
    return EXIT_OK


def _cmd_serve(args) -> int:
    try:
        cfg = load_config(args.config)
        serve_forever(cfg)
    except (ConfigError, SuiteError, OntologyError, OSError) as exc:
        print(f"serve failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def _summary_lines(summary) -> str:
    report = summary.report
    return (
        f"session={summary.session_id}\n"
        f"served={summary.queries_served} answered={summary.answered}"
        f" unable={summary.unable} skipped={summary.skipped_observed}\n"
        f"detection_rate={report.detection_rate:.4f}"
        f" respond_rate={report.respond_rate:.4f} accuracy={report.accuracy:.4f}"
    )


def _cmd_run_oracle(args) -> int:
    cfg = load_config(args.config) if args.config else HarnessConfig()
    try:
        ont = _load_ont(args.ontology)
        kbs = _load_kbs(args.kb, ont, cfg)
    except (AnnotationError, OntologyError) as exc:
        print(f"run-oracle failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        summary = run_oracle(
            args.server,
            args.suite,
            kbs,
            geom=cfg.geometry,
            decisions_out=args.decisions_out,
        )
    except ClientNetworkError as exc:
        print(f"network error: {exc}", file=sys.stderr)
        if exc.session_id:
            print(f"resumable session: {exc.session_id}", file=sys.stderr)
        return EXIT_NETWORK
    except ClientProtocolError as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    if args.report_out:
        Path(args.report_out).write_text(
            json.dumps(summary.report.to_jsonable(), sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )
    print(_summary_lines(summary))
    return EXIT_OK


def _cmd_run_random(args) -> int:
    try:
        summary = run_random(args.server, args.suite, seed=args.seed)
    except ClientNetworkError as exc:
        print(f"network error: {exc}", file=sys.stderr)
        if exc.session_id:
            print(f"resumable session: {exc.session_id}", file=sys.stderr)
        return EXIT_NETWORK
    except ClientProtocolError as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    print(_summary_lines(summary))
    return EXIT_OK


def _cmd_score(args) -> int:
    cfg = load_config(args.config) if args.config else HarnessConfig()
    try:
        ont = _load_ont(args.ontology)
        suites = {}
        for entry in sorted(Path(args.suite_dir).iterdir()):
            if entry.is_dir() and (entry / "suite.meta").exists():
                suite = load_suite(entry, ont)
                suites[suite.suite_id] = suite
        report = replay_session_log(args.session_log, suites, ont, cfg.grading)
    except (SuiteError, OntologyError, ValueError, OSError) as exc:
        print(f"score failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(report.to_canonical_json())
    return EXIT_OK


def _cmd_report(args) -> int:
    try:
        obj = json.loads(Path(args.input).read_text(encoding="utf-8"))
        report = report_from_jsonable(obj)
    except (ValueError, OSError, KeyError) as exc:
        print(f"report failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.format == "json":
        print(report.to_canonical_json())
    else:
        sys.stdout.write(render_report_tsv(report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scenequery",
        description="Story-line scene query harness: generate, serve, take, score.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ontology", help="vocabulary tools")
    onto_sub = p.add_subparsers(dest="subcommand", required=True)
    pc = onto_sub.add_parser("check", help="validate a vocabulary file")
    pc.add_argument("file")
    pc.set_defaults(func=_cmd_ontology_check)

    p = sub.add_parser("ingest", help="load and validate an annotation directory")
    p.add_argument("dir")
    p.add_argument("--ontology")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("generate-scene", help="write a synthetic annotation directory")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--builtin", help="builtin scenario name, or 'all'")
    src.add_argument("--script", help="scene script directory")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--ontology")
    p.set_defaults(func=_cmd_generate_scene)

    p = sub.add_parser("generate-suite", help="generate story lines from KBs")
    p.add_argument("--kb", action="append", required=True, help="annotation dir (repeatable)")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--storylines", type=int, default=32, help="per scene")
    p.add_argument("--queries", default="22:30", help="per storyline, MIN:MAX")
    p.add_argument("--negative-fraction", type=float, default=0.5)
    p.add_argument("--false-definition-fraction", type=float, default=0.1)
    p.add_argument("--suite-id", default="suite")
    p.add_argument("--ontology")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_generate_suite)

    p = sub.add_parser("serve", help="run the evaluation server")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("run-oracle", help="drive a session with the oracle client")
    p.add_argument("--server", required=True)
    p.add_argument("--suite", required=True)
    p.add_argument("--kb", action="append", required=True)
    p.add_argument("--ontology")
    p.add_argument("--config")
    p.add_argument("--decisions-out", help="record per-query answers as JSON")
    p.add_argument("--report-out", help="write the final score report as JSON")
    p.set_defaults(func=_cmd_run_oracle)

    p = sub.add_parser("run-random", help="drive a session with the random baseline")
    p.add_argument("--server", required=True)
    p.add_argument("--suite", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_run_random)

    p = sub.add_parser("score", help="replay a session log into a score report")
    p.add_argument("--session-log", required=True)
    p.add_argument("--suite-dir", required=True)
    p.add_argument("--ontology")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("report", help="render a score report")
    p.add_argument("--input", required=True, help="score report JSON file")
    p.add_argument("--format", choices=("tsv", "json"), default="tsv")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
