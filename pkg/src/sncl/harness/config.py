"""Experiment configuration: TOML in, validated dataclasses out.

Every run is fully described by one config; its canonical-JSON sha256 is
embedded in checkpoints so eval can refuse mismatched pairs.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover - version dependent
    import tomli as tomllib

from ..errors import ValidationError

SCENARIOS = ("til", "vil", "fscil")
METHODS = {"til": ("wsn", "finetune"), "vil": ("wsn", "finetune"), "fscil": ("softnet",)}
PLACEMENTS = {"til": ("none", "hidden"), "fscil": ("none", "hidden"),
              "vil": ("none", "fnerv2", "fnerv3")}


@dataclass
class FsoSettings:
    placement: str = "none"
    modes: tuple[int, ...] | None = None


@dataclass
class TilData:
    sessions: int = 5
    dim: int = 2
    train_per_class: int = 100
    eval_per_class: int = 100
    separation: float = 6.0


@dataclass
class VilData:
    sessions: int = 3
    frames: int = 16


@dataclass
class FscilData:
    base_classes: int = 6
    ways: int = 2
    shots: int = 5
    incremental_sessions: int = 3
    dim: int = 8
    base_train_per_class: int = 100
    eval_per_class: int = 30
    radius: float = 4.0
    sigma: float = 0.4


@dataclass
class IncrementalSettings:
    epochs: int = 6
    lr: float = 0.02
    exemplars_per_class: int = 1


_DATASET_TYPES = {"til": TilData, "vil": VilData, "fscil": FscilData}
_DEFAULTS = {
    "til": {"method": "wsn", "lr": 1e-3, "epochs": 30, "batch_size": 16, "warmup_epochs": 0},
    "vil": {"method": "wsn", "lr": 2e-3, "epochs": 80, "batch_size": 1, "warmup_epochs": 16},
    "fscil": {"method": "softnet", "lr": 1e-3, "epochs": 40, "batch_size": 16, "warmup_epochs": 0},
}


@dataclass
class ExperimentConfig:
    scenario: str
    seed: int = 1
    method: str = ""
    capacity: float = 0.5
    lr: float = 0.0
    optimizer: str = "adam"
    epochs: int = 0
    batch_size: int = 0
    hidden: int = 32
    alpha: float = 0.7
    warmup_epochs: int = -1
    fso: FsoSettings = field(default_factory=FsoSettings)
    dataset: object = None
    incremental: IncrementalSettings = field(default_factory=IncrementalSettings)
    out_dir: str = "runs"

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValidationError("scenario", f"must be one of {SCENARIOS}, got {self.scenario!r}")
        defaults = _DEFAULTS[self.scenario]
        if not self.method:
            self.method = defaults["method"]
        if self.lr == 0.0:
            self.lr = defaults["lr"]
        if self.epochs == 0:
            self.epochs = defaults["epochs"]
        if self.batch_size == 0:
            self.batch_size = defaults["batch_size"]
        if self.warmup_epochs < 0:
            self.warmup_epochs = defaults["warmup_epochs"]
        if self.dataset is None:
            self.dataset = _DATASET_TYPES[self.scenario]()
        self.validate()

    def validate(self) -> None:
        c = self.capacity
        if self.scenario == "fscil":
            if not 0.0 < c < 1.0:
                raise ValidationError("capacity", f"must be in (0, 1) for fscil, got {c}")
        elif not 0.0 < c <= 1.0:
            raise ValidationError("capacity", f"must be in (0, 1], got {c}")
        if self.method not in METHODS[self.scenario]:
            raise ValidationError("method", f"{self.method!r} not valid for {self.scenario}; "
                                            f"choose from {METHODS[self.scenario]}")
        if self.optimizer not in ("adam", "sgd"):
            raise ValidationError("optimizer", f"must be adam or sgd, got {self.optimizer!r}")
        for name in ("lr", "alpha"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or v != v:
                raise ValidationError(name, "must be a number")
        if self.lr <= 0:
            raise ValidationError("lr", f"must be positive, got {self.lr}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValidationError("alpha", f"must be in [0, 1], got {self.alpha}")
        for name, lo in (("seed", 0), ("epochs", 1), ("batch_size", 1), ("hidden", 1),
                         ("warmup_epochs", 0)):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < lo:
                raise ValidationError(name, f"must be an integer >= {lo}, got {v!r}")
        if not isinstance(self.out_dir, str) or not self.out_dir:
            raise ValidationError("out_dir", "must be a non-empty string")
        if self.fso.placement not in PLACEMENTS[self.scenario]:
            raise ValidationError("fso.placement",
                                  f"{self.fso.placement!r} not valid for {self.scenario}; "
                                  f"choose from {PLACEMENTS[self.scenario]}")
        if self.fso.modes is not None:
            want = 2 if self.scenario == "vil" else 1
            if len(self.fso.modes) != want or any(
                not isinstance(m, int) or m < 1 for m in self.fso.modes
            ):
                raise ValidationError("fso.modes", f"must be {want} positive integer(s)")
        self._validate_dataset()
        inc = self.incremental
        if inc.epochs < 1:
            raise ValidationError("incremental.epochs", f"must be >= 1, got {inc.epochs}")
        if inc.lr <= 0:
            raise ValidationError("incremental.lr", f"must be positive, got {inc.lr}")
        if inc.exemplars_per_class < 0:
            raise ValidationError("incremental.exemplars_per_class", "must be >= 0")

    def _validate_dataset(self) -> None:
        d = self.dataset
        checks = {
            "til": (("sessions", 1), ("dim", 2), ("train_per_class", 2), ("eval_per_class", 1)),
            "vil": (("sessions", 1), ("frames", 1)),
            "fscil": (("base_classes", 2), ("ways", 1), ("shots", 1),
                      ("incremental_sessions", 0), ("dim", 2),
                      ("base_train_per_class", 2), ("eval_per_class", 1)),
        }[self.scenario]
        for name, lo in checks:
            v = getattr(d, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < lo:
                raise ValidationError(f"dataset.{name}", f"must be an integer >= {lo}, got {v!r}")
        for name in ("separation", "radius", "sigma"):
            if hasattr(d, name) and getattr(d, name) <= 0:
                raise ValidationError(f"dataset.{name}", "must be positive")


def _build_section(cls, data: dict, path: str):
    known = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in known:
            raise ValidationError(f"{path}.{key}", "unknown field")
    kwargs = dict(data)
    if cls is FsoSettings and isinstance(kwargs.get("modes"), list):
        kwargs["modes"] = tuple(kwargs["modes"])
    try:
        return cls(**kwargs)
    except TypeError as e:
        raise ValidationError(path, str(e)) from e


def config_from_dict(data: dict) -> ExperimentConfig:
    if "scenario" not in data:
        raise ValidationError("scenario", "required field is missing")
    scenario = data["scenario"]
    if scenario not in SCENARIOS:
        raise ValidationError("scenario", f"must be one of {SCENARIOS}, got {scenario!r}")
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    for key in data:
        if key not in known:
            raise ValidationError(key, "unknown field")
    kwargs = dict(data)
    if "fso" in kwargs:
        kwargs["fso"] = _build_section(FsoSettings, kwargs["fso"], "fso")
    if "incremental" in kwargs:
        kwargs["incremental"] = _build_section(IncrementalSettings, kwargs["incremental"], "incremental")
    if "dataset" in kwargs:
        kwargs["dataset"] = _build_section(_DATASET_TYPES[scenario], kwargs["dataset"], "dataset")
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as e:
        raise ValidationError("config", str(e)) from e


def load_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    if not p.exists():
        raise ValidationError("config", f"file not found: {p}")
    try:
        data = tomllib.loads(p.read_text())
    except tomllib.TOMLDecodeError as e:
        raise ValidationError("config", f"invalid TOML: {e}") from e
    return config_from_dict(data)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    out = dataclasses.asdict(cfg)
    if out["fso"]["modes"] is not None:
        out["fso"]["modes"] = list(out["fso"]["modes"])
    return out


def config_hash(cfg: ExperimentConfig) -> bytes:
    """sha256 over the canonical config JSON.

    out_dir names where artifacts land, not what gets computed, so it is
    left out: the same experiment run into two directories shares one hash.
    """
    payload = config_to_dict(cfg)
    payload.pop("out_dir")
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).digest()
