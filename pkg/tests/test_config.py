import pytest

from scenequery.config import ConfigError, HarnessConfig, parse_config


def test_defaults():
    cfg = parse_config("")
    assert cfg.host == "127.0.0.1"
    assert cfg.port == 8321
    assert cfg.geometry.los_block_radius == 0.4
    assert cfg.geometry.near_threshold == 2.0
    assert cfg.geometry.iou_threshold_def == 0.5
    assert cfg.geometry.projection_tolerance == 1e-6
    assert cfg.grading.when_iou == 0.5
    assert cfg.grading.where_iou == 0.5
    assert cfg.grading.lenient_labels is False
    assert cfg.gap_frames == 30
    assert cfg.gap_seconds == 1.0


def test_full_config_parses():
    cfg = parse_config(
        """
        # comment
        listen=0.0.0.0:9000
        suite_dir=/data/suites
        session_log_dir=/data/logs
        ontology=/data/vocab.txt
        kb.gap_frames=15
        kb.gap_seconds=0.5
        grading.when_iou=0.6
        grading.where_iou=0.7
        grading.lenient_labels=true
        geometry.los_block_radius=0.3
        geometry.near_threshold=1.5
        geometry.iou_threshold_def=0.4
        geometry.projection_tolerance=1e-7
        """
    )
    assert (cfg.host, cfg.port) == ("0.0.0.0", 9000)
    assert cfg.suite_dir == "/data/suites"
    assert cfg.session_log_dir == "/data/logs"
    assert cfg.ontology_path == "/data/vocab.txt"
    assert cfg.gap_frames == 15 and cfg.gap_seconds == 0.5
    assert cfg.grading.when_iou == 0.6
    assert cfg.grading.where_iou == 0.7
    assert cfg.grading.lenient_labels is True
    assert cfg.geometry.los_block_radius == 0.3
    assert cfg.geometry.projection_tolerance == 1e-7


@pytest.mark.parametrize(
    "line",
    [
        "unknown_key=1",
        "grading.bogus=1",
        "geometry.bogus=1",
        "listen=nocolonhere",
        "kb.gap_frames=soon",
        "grading.lenient_labels=maybe",
        "just a line",
    ],
)
def test_bad_lines_rejected(line):
    with pytest.raises(ConfigError):
        parse_config(line)


def test_defaults_object_is_usable():
    cfg = HarnessConfig()
    assert cfg.suite_dir is None
    assert cfg.session_log_dir is None
