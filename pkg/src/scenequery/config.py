"""key=value configuration shared by the server and the CLI tools."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from .geometry import DEFAULT_GEOMETRY, GeometryConfig
from .kb import DEFAULT_GAP_FRAMES, DEFAULT_GAP_SECONDS
from .scoring import DEFAULT_GRADING, GradingConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class HarnessConfig:
    host: str = "127.0.0.1"
    port: int = 8321
    suite_dir: str | None = None
    session_log_dir: str | None = None
    ontology_path: str | None = None
    grading: GradingConfig = field(default_factory=GradingConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    gap_frames: int = DEFAULT_GAP_FRAMES
    gap_seconds: float = DEFAULT_GAP_SECONDS


def _parse_bool(raw: str) -> bool:
    if raw in ("true", "1", "yes"):
        return True
    if raw in ("false", "0", "no"):
        return False
    raise ConfigError(f"bad boolean {raw!r}")


def parse_config(text: str) -> HarnessConfig:
    cfg = HarnessConfig()
    grading = dict(
        when_iou=DEFAULT_GRADING.when_iou,
        where_iou=DEFAULT_GRADING.where_iou,
        lenient_labels=DEFAULT_GRADING.lenient_labels,
    )
    geometry = dict(
        los_block_radius=DEFAULT_GEOMETRY.los_block_radius,
        near_threshold=DEFAULT_GEOMETRY.near_threshold,
        iou_threshold_def=DEFAULT_GEOMETRY.iou_threshold_def,
        projection_tolerance=DEFAULT_GEOMETRY.projection_tolerance,
    )
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        try:
            if key == "listen":
                host, _, port = value.rpartition(":")
                cfg = replace(cfg, host=host or "127.0.0.1", port=int(port))
            elif key == "suite_dir":
                cfg = replace(cfg, suite_dir=value)
            elif key == "session_log_dir":
                cfg = replace(cfg, session_log_dir=value)
            elif key == "ontology":
                cfg = replace(cfg, ontology_path=value)
            elif key == "kb.gap_frames":
                cfg = replace(cfg, gap_frames=int(value))
            elif key == "kb.gap_seconds":
                cfg = replace(cfg, gap_seconds=float(value))
            elif key.startswith("grading."):
                sub = key.split(".", 1)[1]
                if sub not in grading:
                    raise ConfigError(f"unknown grading key {sub!r}")
                grading[sub] = (
                    _parse_bool(value) if sub == "lenient_labels" else float(value)
                )
            elif key.startswith("geometry."):
                sub = key.split(".", 1)[1]
                if sub not in geometry:
                    raise ConfigError(f"unknown geometry key {sub!r}")
                geometry[sub] = float(value)
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
    return replace(
        cfg,
        grading=GradingConfig(**grading),
        geometry=GeometryConfig(**geometry),
    )


def load_config(path: str | Path) -> HarnessConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))
