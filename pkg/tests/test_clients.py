import json
import threading

import pytest

from scenequery import cli, synth
from scenequery.clients import run_oracle, run_random
from scenequery.config import HarnessConfig
from scenequery.generator import GenConfig, generate_suite
from scenequery.geometry import GeometryConfig
from scenequery.kb import ingest_annotations
from scenequery.server import EvaluationService, make_server
from scenequery.suite import write_suite


@pytest.fixture(scope="module")
def world(tmp_path_factory):
    from scenequery.ontology import default_ontology

    ont = default_ontology()
    root = tmp_path_factory.mktemp("client_world")
    kbs = {}
    for script in synth.builtin_scenarios()[:2]:
        synth.generate_scene(script, root / script.scene_id, ont)
        kbs[script.scene_id] = ingest_annotations(root / script.scene_id, ont)
    cfg = GenConfig(seed=19, storylines_per_scene=6, queries_per_storyline=(10, 14))
    suite = generate_suite(kbs, ont, cfg, suite_id="two-scenes")
    return {"ont": ont, "kbs": kbs, "suite": suite, "root": root}


@pytest.fixture(scope="module")
def server_url(world):
    service = EvaluationService(HarnessConfig(port=0))
    service.ontology = world["ont"]
    service.add_suite(world["suite"])
    httpd = make_server(service)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{httpd.server_address[1]}"
    httpd.shutdown()
    httpd.server_close()


def test_oracle_scores_perfect(world, server_url):
    summary = run_oracle(server_url, "two-scenes", world["kbs"])
    assert summary.report.accuracy == 1.0
    assert summary.report.respond_rate == 1.0
    assert summary.answered + summary.unable == summary.queries_served
    assert summary.unable == 0


def test_oracle_tallies_match_server(world, server_url):
    summary = run_oracle(server_url, "two-scenes", world["kbs"])
    report = summary.report
    # The oracle never claims unable and never trips gating, so everything in
    # the suite is served and answered, and the server's books agree.
    assert summary.unable == 0
    assert summary.skipped_observed == 0
    assert summary.answered == summary.queries_served == world["suite"].query_count()
    definitions_served = sum(
        1 for _, _, sq in world["suite"].iter_queries() if sq.is_definition
    )
    assert report.nondef_total == summary.queries_served - definitions_served
    assert report.nondef_responded == report.nondef_total


def test_oracle_reproducible(world, server_url):
    a = run_oracle(server_url, "two-scenes", world["kbs"])
    b = run_oracle(server_url, "two-scenes", world["kbs"])
    assert a.report == b.report
    assert a.session_id != b.session_id


def test_oracle_with_mismatched_geometry_degrades_gracefully(world, server_url):
    skewed = GeometryConfig(
        los_block_radius=5.0, near_threshold=0.01, iou_threshold_def=0.5
    )
    summary = run_oracle(server_url, "two-scenes", world["kbs"], geom=skewed)
    assert summary.report.accuracy < 1.0
    assert summary.queries_served > 0


def test_oracle_decisions_export(world, server_url, tmp_path):
    out = tmp_path / "decisions.json"
    summary = run_oracle(server_url, "two-scenes", world["kbs"], decisions_out=out)
    payload = json.loads(out.read_text())
    assert payload["suite_id"] == "two-scenes"
    assert payload["score_report"] == summary.report.to_jsonable()
    assert len(payload["decisions"]) == summary.queries_served


def test_random_client_baseline(world, server_url):
    summary = run_random(server_url, "two-scenes", seed=4)
    report = summary.report
    # Non-polar queries contribute nothing to responses.
    assert summary.answered < summary.queries_served
    assert 0.0 < report.respond_rate < 1.0
    assert summary.answered + summary.unable == summary.queries_served


def test_random_detects_every_true_definition(world, tmp_path):
    # With no deliberately-false definitions, always answering "true" yields
    # a perfect detection rate.
    from scenequery.ontology import default_ontology

    ont = world["ont"]
    cfg = GenConfig(
        seed=3,
        storylines_per_scene=4,
        queries_per_storyline=(6, 8),
        false_definition_fraction=0.0,
    )
    suite = generate_suite(world["kbs"], ont, cfg, suite_id="all-true-defs")
    service = EvaluationService(HarnessConfig(port=0))
    service.ontology = ont
    service.add_suite(suite)
    httpd = make_server(service)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    try:
        url = f"http://127.0.0.1:{httpd.server_address[1]}"
        summary = run_random(url, "all-true-defs", seed=1)
        assert summary.report.detection_rate == 1.0
    finally:
        httpd.shutdown()
        httpd.server_close()


def test_concurrent_sessions_do_not_interfere(world, server_url):
    import concurrent.futures

    def one_run(seed):
        if seed % 2 == 0:
            return run_oracle(server_url, "two-scenes", world["kbs"]).report
        return run_random(server_url, "two-scenes", seed=seed).report

    with concurrent.futures.ThreadPoolExecutor(max_workers=6) as pool:
        reports = list(pool.map(one_run, range(6)))
    for i, report in enumerate(reports):
        if i % 2 == 0:
            assert report.accuracy == 1.0 and report.respond_rate == 1.0
        else:
            assert 0.0 <= report.accuracy <= 1.0
    # Oracle runs under concurrency still agree with each other exactly.
    oracle_reports = [r for i, r in enumerate(reports) if i % 2 == 0]
    assert all(r == oracle_reports[0] for r in oracle_reports)


def test_network_error_carries_session_id(world):
    from scenequery.clients import ClientNetworkError, HttpSession

    session = HttpSession("http://127.0.0.1:9")  # nothing listens on port 9
    with pytest.raises(ClientNetworkError):
        session.open("two-scenes")


# --------------------------------------------------------------------------
# CLI
# --------------------------------------------------------------------------


def test_cli_ontology_check(capsys):
    from importlib import resources

    path = resources.files("scenequery") / "data" / "ontology.txt"
    assert cli.main(["ontology", "check", str(path)]) == 0
    out = capsys.readouterr().out
    assert "ok:" in out


def test_cli_ontology_check_invalid(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("person|object|1|self:any|\nperson|object|1|self:any|\n")
    assert cli.main(["ontology", "check", str(bad)]) == 2


def test_cli_generate_and_ingest(tmp_path, capsys):
    out = tmp_path / "scene"
    assert cli.main(["generate-scene", "--builtin", "garden", "--out", str(out)]) == 0
    assert cli.main(["ingest", str(out)]) == 0
    assert "entities=9" in capsys.readouterr().out


def test_cli_generate_scene_unknown_builtin(tmp_path):
    assert (
        cli.main(
            ["generate-scene", "--builtin", "volcano", "--out", str(tmp_path / "x")]
        )
        == 2
    )


def test_cli_generate_suite_and_report(tmp_path, capsys):
    scene = tmp_path / "scene"
    cli.main(["generate-scene", "--builtin", "office", "--out", str(scene)])
    suite_dir = tmp_path / "suites" / "office-suite"
    rc = cli.main(
        [
            "generate-suite",
            "--kb", str(scene),
            "--out", str(suite_dir),
            "--seed", "9",
            "--storylines", "3",
            "--queries", "6:8",
            "--suite-id", "office-suite",
        ]
    )
    assert rc == 0
    assert (suite_dir / "suite.meta").exists()
    capsys.readouterr()

    # Round-trip a score report through the report renderer.
    from scenequery.scoring import AnswerRecord, compute_report

    report = compute_report(
        [
            AnswerRecord("q0", False, None, True, "correct", 2, frozenset({"action"})),
        ]
    )
    report_path = tmp_path / "report.json"
    report_path.write_text(json.dumps(report.to_jsonable()))
    assert cli.main(["report", "--input", str(report_path), "--format", "tsv"]) == 0
    tsv = capsys.readouterr().out
    assert "accuracy\t1.0000" in tsv
    assert cli.main(["report", "--input", str(report_path), "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out) == report.to_jsonable()


def test_cli_run_oracle_and_score_replay(world, server_url, tmp_path, capsys):
    # Persist the suite so the score command can reload it.
    suites_dir = tmp_path / "suites"
    write_suite(world["suite"], suites_dir / "two-scenes")
    log_dir = tmp_path / "logs"

    # Drive a session directly with logging enabled, then replay via the CLI.
    service = EvaluationService(
        HarnessConfig(port=0, session_log_dir=str(log_dir))
    )
    service.ontology = world["ont"]
    service.add_suite(world["suite"])
    session = service.create_session("two-scenes")
    from scenequery.query_model import BoolAnswer, UnableAnswer, parse_query_xml

    while True:
        item = session.next_item()
        if item["kind"] == "done":
            break
        if item["kind"] != "query":
            continue
        q = parse_query_xml(item["query_xml"])
        answer = BoolAnswer(True) if q.kind in ("definition", "polar") else UnableAnswer()
        session.submit(item["query_id"], answer)
    live = session.score().to_canonical_json()
    log_path = log_dir / f"{session.session_id}.jsonl"
    rc = cli.main(
        ["score", "--session-log", str(log_path), "--suite-dir", str(suites_dir)]
    )
    assert rc == 0
    assert capsys.readouterr().out.strip() == live

    kb_dirs = [str(world["root"] / scene) for scene in world["kbs"]]
    args = ["run-oracle", "--server", server_url, "--suite", "two-scenes"]
    for d in kb_dirs:
        args += ["--kb", d]
    assert cli.main(args) == 0
    out = capsys.readouterr().out
    assert "accuracy=1.0000" in out

    assert cli.main(["run-random", "--server", server_url, "--suite", "two-scenes", "--seed", "2"]) == 0


def test_cli_network_error_exit_code(capsys):
    rc = cli.main(
        ["run-random", "--server", "http://127.0.0.1:9", "--suite", "x", "--seed", "1"]
    )
    assert rc == 3
