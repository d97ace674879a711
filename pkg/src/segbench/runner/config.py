"""Experiment configuration: one cell of the settings matrix.

A config's *setting* is its projection onto the ranking-relevant axes
(variant, patch size, decoder, freezing, train/eval dataset); the
fingerprint hashes every field except the seed and the display name, so a
(fingerprint, seed) pair identifies a run.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields, replace

import yaml

from segbench.data.datasets import dataset_spec, registered_datasets
from segbench.encoders.spec import load_registry
from segbench.training.schedule import TrainSchedule, default_total_steps

DEFAULT_PATCH_SIZES = (8, 16)
DECODERS = ("linear", "mask")
VARIANTS = ("B", "L")

SETTING_AXES = ("variant", "patch_size", "decoder", "freeze", "train_dataset", "eval_dataset")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    variant: str = "B"
    patch_size: int = 16
    decoder: str = "linear"
    freeze: bool = False
    train_dataset: str = "ade20k"
    eval_dataset: str | None = None
    seed: int = 0
    steps: int | None = None
    effective_batch: int = 16
    micro_batch: int = 1
    encoder_lr: float = 1e-5
    decoder_lr: float = 1e-4
    weight_decay: float = 0.05
    poly_power: float = 0.9
    augment: bool = True
    train_subset: int | None = None
    eval_subset: int | None = None
    eval_split: str | None = None
    setting_name: str | None = None

    @property
    def resolved_eval_dataset(self) -> str:
        return self.eval_dataset or self.train_dataset

    @property
    def total_steps(self) -> int:
        return self.steps if self.steps is not None else default_total_steps(self.train_dataset)

    def schedule(self) -> TrainSchedule:
        return TrainSchedule(
            total_steps=self.total_steps,
            effective_batch=self.effective_batch,
            micro_batch=self.micro_batch,
            encoder_lr=self.encoder_lr,
            decoder_lr=self.decoder_lr,
            weight_decay=self.weight_decay,
            poly_power=self.poly_power,
        )

    def setting(self) -> dict:
        setting = {axis: getattr(self, axis) for axis in SETTING_AXES}
        setting["eval_dataset"] = self.resolved_eval_dataset
        return setting

    def setting_key(self) -> str:
        if self.setting_name:
            return self.setting_name
        return ",".join(f"{k}={v}" for k, v in sorted(self.setting().items()))

    def fingerprint(self) -> str:
        payload = {
            f.name: getattr(self, f.name)
            for f in fields(self)
            if f.name not in ("seed", "setting_name")
        }
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:12]

    def validate(self, strict_patch: bool = True) -> None:
        registry = load_registry()
        if self.model not in registry:
            raise ConfigError(
                f"unknown model {self.model!r}; valid choices: {', '.join(sorted(registry))}"
            )
        if self.variant not in registry[self.model]["variants"]:
            raise ConfigError(
                f"model {self.model!r} has no variant {self.variant!r}; "
                f"valid choices: {', '.join(registry[self.model]['variants'])}"
            )
        if self.decoder not in DECODERS:
            raise ConfigError(
                f"unknown decoder {self.decoder!r}; valid choices: {', '.join(DECODERS)}"
            )
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; valid choices: B, L")
        for name in (self.train_dataset, self.resolved_eval_dataset):
            if name not in registered_datasets():
                raise ConfigError(
                    f"unknown dataset {name!r}; valid choices: {', '.join(registered_datasets())}"
                )
        if strict_patch and self.patch_size not in DEFAULT_PATCH_SIZES:
            raise ConfigError(
                f"patch size {self.patch_size} not configured by default; valid choices: "
                f"{', '.join(map(str, DEFAULT_PATCH_SIZES))} (other values need a config file)"
            )
        if self.patch_size < 4:
            raise ConfigError(f"patch size {self.patch_size} is degenerate; must be >= 4")
        crop = dataset_spec(self.train_dataset).crop
        if crop % self.patch_size != 0:
            raise ConfigError(
                f"crop {crop} of {self.train_dataset!r} not divisible by patch {self.patch_size}"
            )

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(
                f"unknown config keys: {', '.join(sorted(unknown))}; "
                f"valid keys: {', '.join(sorted(known))}"
            )
        if "model" not in data:
            raise ConfigError("config needs a 'model'")
        return cls(**data)


def load_config_file(path) -> ExperimentConfig:
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    return ExperimentConfig.from_dict(data)


def load_matrix(path) -> list[ExperimentConfig]:
    """Expand a matrix file into configs: models x settings x seeds.

    The matrix file carries a ``defaults`` block mirroring the default setup;
    each entry under ``settings`` lists only its deviations.
    """
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    defaults = data.get("defaults", {})
    models = data.get("models", [])
    if not models:
        raise ConfigError("matrix file lists no models")
    seeds = data.get("seeds", [0, 1, 2])
    settings = data.get("settings") or [{"name": "default"}]

    configs = []
    for setting in settings:
        overrides = dict(setting.get("overrides", {}))
        name = setting.get("name")
        for model in models:
            base = {**defaults, **overrides, "model": model, "setting_name": name}
            for seed in seeds:
                configs.append(ExperimentConfig.from_dict({**base, "seed": int(seed)}))
    return configs
