"""Boots the primary harness through its public interfaces only: the
`scenequery` CLI builds scenes and a suite and serves them over HTTP; these
tests then talk to the server like any external system would."""

from __future__ import annotations

import json
import os
import re
import signal
import subprocess
import sys
import time
from pathlib import Path

import pytest

SDK_ROOT = Path(__file__).resolve().parents[1]
REPO_ROOT = SDK_ROOT.parent
PRIMARY_SRC = REPO_ROOT / "src"

SUITE_ID = "sdk-suite"


def _cli_env() -> dict:
    env = dict(os.environ)
    try:
        import scenequery  # noqa: F401
    except ImportError:
        existing = env.get("PYTHONPATH", "")
        env["PYTHONPATH"] = (
            f"{PRIMARY_SRC}{os.pathsep}{existing}" if existing else str(PRIMARY_SRC)
        )
    return env


def run_cli(*args: str, check: bool = True) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "scenequery", *args],
        env=_cli_env(),
        capture_output=True,
        text=True,
        check=check,
        timeout=300,
    )


@pytest.fixture(scope="session")
def harness(tmp_path_factory):
    root = tmp_path_factory.mktemp("sdk_harness")
    scenes = []
    for name in ("garden", "office"):
        scene_dir = root / "scenes" / name
        run_cli("generate-scene", "--builtin", name, "--out", str(scene_dir))
        scenes.append(scene_dir)
    suite_dir = root / "suites" / SUITE_ID
    run_cli(
        "generate-suite",
        *[arg for scene in scenes for arg in ("--kb", str(scene))],
        "--out", str(suite_dir),
        "--seed", "7",
        "--storylines", "4",
        "--queries", "8:12",
        "--suite-id", SUITE_ID,
    )
    config = root / "server.cfg"
    config.write_text(
        "listen=127.0.0.1:0\n"
        f"suite_dir={root / 'suites'}\n"
        f"session_log_dir={root / 'logs'}\n",
        encoding="utf-8",
    )
    proc = subprocess.Popen(
        [sys.executable, "-m", "scenequery", "serve", "--config", str(config)],
        env=_cli_env(),
        stdout=subprocess.PIPE,
        stderr=subprocess.STDOUT,
        text=True,
    )
    try:
        line = proc.stdout.readline()
        match = re.search(r"listening on ([\d.]+):(\d+)", line)
        if match is None:
            proc.terminate()
            raise RuntimeError(f"server did not start: {line!r}")
        url = f"http://{match.group(1)}:{match.group(2)}"
        deadline = time.monotonic() + 10
        while time.monotonic() < deadline:
            try:
                import urllib.request

                urllib.request.urlopen(f"{url}/v1/sessions", timeout=1)
            except Exception as exc:
                code = getattr(exc, "code", None)
                if code is not None:  # any HTTP response means it is up
                    break
                time.sleep(0.05)
            else:
                break
        yield {
            "url": url,
            "root": root,
            "scenes": scenes,
            "suite_dir": suite_dir,
        }
    finally:
        proc.send_signal(signal.SIGINT)
        try:
            proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            proc.kill()


@pytest.fixture(scope="session")
def oracle_decisions(harness):
    """Per-query oracle answers and the score they earned, exported by the
    primary CLI over the same server."""
    out = harness["root"] / "decisions.json"
    args = ["run-oracle", "--server", harness["url"], "--suite", SUITE_ID,
            "--decisions-out", str(out)]
    for scene in harness["scenes"]:
        args += ["--kb", str(scene)]
    run_cli(*args)
    return json.loads(out.read_text(encoding="utf-8"))
