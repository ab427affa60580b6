"""Flat run configuration shared by the command-line tools.

A config file is a single flat JSON object whose keys are RunConfig field
names; command-line flags override file values, which override defaults.
"""

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .coding import CodingConfig
from .errors import ConfigError
from .losses import LossConfig, WeightConfig


@dataclass
class RunConfig:
    # Angle coding
    scheme: str = "bcl"
    omega: float = 1.0
    angle_range: float = 180.0
    csl_radius: float = 4.0
    csl_window: str = "gaussian"
    decode_threshold: float = 0.5
    invalid_code: str = "wrap"
    # Weighting
    weight_mode: str = "none"
    aspect_threshold: float = 1.5
    # Loss
    lambda_reg: float = 1.0
    lambda_angle: float = 0.5
    lambda_cls: float = 0.1
    focal_alpha: float = 0.25
    focal_gamma: float = 2.0
    smooth_l1_beta: float = 1.0
    bit_reduction: str = "sum"
    # Experiments
    seed: int = 0
    steps: int = 2000
    learning_rate: float = 1.0
    sweep_step: float = 1.0
    n_targets: int = 1000
    quant_samples: int = 100000
    # Evaluation
    iou_threshold: float = 0.5
    metric: str = "voc07"

    def coding_config(self):
        try:
            return CodingConfig(
                scheme=self.scheme, omega=self.omega, angle_range=self.angle_range,
                csl_radius=self.csl_radius, csl_window=self.csl_window,
                decode_threshold=self.decode_threshold,
                invalid_code=self.invalid_code)
        except (ConfigError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    def weight_config(self):
        try:
            return WeightConfig(mode=self.weight_mode,
                                aspect_threshold=self.aspect_threshold)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def loss_config(self):
        try:
            return LossConfig(
                lambda_reg=self.lambda_reg, lambda_angle=self.lambda_angle,
                lambda_cls=self.lambda_cls, focal_alpha=self.focal_alpha,
                focal_gamma=self.focal_gamma, smooth_l1_beta=self.smooth_l1_beta,
                bit_reduction=self.bit_reduction)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self):
        return asdict(self)


_FIELD_NAMES = {f.name for f in fields(RunConfig)}


def load_run_config(path):
    """Read a flat JSON config file into a RunConfig.

    Unknown keys are rejected so typos fail loudly.
    """
    path = Path(path)
    try:
        raw = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a flat JSON object")
    unknown = set(data) - _FIELD_NAMES
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = RunConfig()
    for key, value in data.items():
        setattr(cfg, key, value)
    return cfg
