"""Pipeline configuration: a flat key-value text file plus override flags.

Config files are plain text, one ``key = value`` per line, ``#`` comments.
Shape templates use ``meta.<ClassName> = l, w, h`` (meters; only the
proportions matter). Any key may be overridden on the command line with
``--set key=value``. Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .geometry import MetaShape
from .proposals import ProposalParams
from .scoring import ScoreParams

__all__ = ["PipelineConfig", "parse_config_text", "load_config", "apply_overrides"]

# KITTI-typical mean object extents; only the proportions enter the score.
DEFAULT_META_EXTENTS = {
    "Car": (3.9, 1.6, 1.56),
    "Pedestrian": (0.8, 0.6, 1.73),
    "Cyclist": (1.76, 0.6, 1.73),
}

_FLOAT_KEYS = {
    "gamma", "r_init", "delta", "neighborhood_radius", "min_seed_containment",
    "mu", "sigma", "lambda1", "lambda2", "nms_iou",
}
_INT_KEYS = {"min_pts", "max_radii", "workers"}
_BOOL_KEYS = {"include_vertical"}
_STR_KEYS = {"dataset_root", "output_dir"}


@dataclass(frozen=True)
class PipelineConfig:
    dataset_root: str = ""
    output_dir: str = ""
    gamma: float = 0.3
    proposals: ProposalParams = field(default_factory=ProposalParams)
    score: ScoreParams = field(default_factory=ScoreParams)
    meta_extents: dict = field(default_factory=lambda: dict(DEFAULT_META_EXTENTS))
    workers: int = 1

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")

    @property
    def meta_shapes(self) -> dict[str, MetaShape]:
        return {
            name: MetaShape.from_extents(name, *extents)
            for name, extents in self.meta_extents.items()
        }

    def content_hash(self) -> str:
        """Hash of every parameter that determines label content (worker count
        and output location deliberately excluded)."""
        payload = {
            "dataset_root": self.dataset_root,
            "gamma": self.gamma,
            "proposals": {
                "r_init": self.proposals.r_init,
                "delta": self.proposals.delta,
                "min_pts": self.proposals.min_pts,
                "neighborhood_radius": self.proposals.neighborhood_radius,
                "max_radii": self.proposals.max_radii,
                "min_seed_containment": self.proposals.min_seed_containment,
            },
            "score": {
                "mu": self.score.mu,
                "sigma": self.score.sigma,
                "lambda1": self.score.lambda1,
                "lambda2": self.score.lambda2,
                "nms_iou": self.score.nms_iou,
                "include_vertical": self.score.include_vertical,
            },
            "meta": {k: list(v) for k, v in sorted(self.meta_extents.items())},
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"cannot parse boolean from {value!r}")


def _coerce(key: str, value: str):
    if key in _FLOAT_KEYS:
        return float(value)
    if key in _INT_KEYS:
        return int(value)
    if key in _BOOL_KEYS:
        return _parse_bool(value)
    if key in _STR_KEYS:
        return value.strip()
    if key.startswith("meta."):
        parts = [float(p) for p in value.replace(",", " ").split()]
        if len(parts) != 3:
            raise ValueError(f"{key}: expected three extents, got {value!r}")
        return tuple(parts)
    raise KeyError(f"unknown configuration key {key!r}")


def parse_config_text(text: str) -> dict:
    """Parse config text into a {key: typed value} dict."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        try:
            values[key] = _coerce(key, value.strip())
        except (KeyError, ValueError) as err:
            raise ValueError(f"line {lineno}: {err}") from None
    return values


def _build(values: dict) -> PipelineConfig:
    meta = dict(DEFAULT_META_EXTENTS)
    plain = {}
    for key, value in values.items():
        if key.startswith("meta."):
            meta[key[len("meta.") :]] = value
        else:
            plain[key] = value

    params = ProposalParams(
        r_init=plain.pop("r_init", 1.0),
        delta=plain.pop("delta", 0.1),
        min_pts=plain.pop("min_pts", 3),
        neighborhood_radius=plain.pop("neighborhood_radius", 8.0),
        max_radii=plain.pop("max_radii", 16),
        min_seed_containment=plain.pop("min_seed_containment", 0.5),
    )
    score = ScoreParams(
        mu=plain.pop("mu", 0.8),
        sigma=plain.pop("sigma", 0.2),
        lambda1=plain.pop("lambda1", 0.5),
        lambda2=plain.pop("lambda2", 0.5),
        nms_iou=plain.pop("nms_iou", 0.1),
        include_vertical=plain.pop("include_vertical", False),
    )
    return PipelineConfig(
        dataset_root=plain.pop("dataset_root", ""),
        output_dir=plain.pop("output_dir", ""),
        gamma=plain.pop("gamma", 0.3),
        proposals=params,
        score=score,
        meta_extents=meta,
        workers=plain.pop("workers", 1),
    )


def load_config(path=None, overrides: list[str] | None = None) -> PipelineConfig:
    """Load a config file (optional) and apply --set overrides on top."""
    values = parse_config_text(Path(path).read_text()) if path else {}
    for item in overrides or []:
        if "=" not in item:
            raise ValueError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        values[key.strip()] = _coerce(key.strip(), value.strip())
    return _build(values)


def apply_overrides(config: PipelineConfig, overrides: list[str]) -> PipelineConfig:
    """A new config with --set style overrides applied."""
    base = {
        "dataset_root": config.dataset_root,
        "output_dir": config.output_dir,
        "gamma": config.gamma,
        "r_init": config.proposals.r_init,
        "delta": config.proposals.delta,
        "min_pts": config.proposals.min_pts,
        "neighborhood_radius": config.proposals.neighborhood_radius,
        "max_radii": config.proposals.max_radii,
        "min_seed_containment": config.proposals.min_seed_containment,
        "mu": config.score.mu,
        "sigma": config.score.sigma,
        "lambda1": config.score.lambda1,
        "lambda2": config.score.lambda2,
        "nms_iou": config.score.nms_iou,
        "include_vertical": config.score.include_vertical,
        "workers": config.workers,
    }
    base.update({f"meta.{k}": v for k, v in config.meta_extents.items()})
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        base[key.strip()] = _coerce(key.strip(), value.strip())
    return _build(base)
