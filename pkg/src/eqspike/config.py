"""Run configuration: TOML file with flat sections, defaults, and echoing.

Every hyperparameter and trainer knob is settable from the file; unset keys
take the package defaults.  The fully resolved configuration is echoed next
to the run log so a run can be reproduced from its output directory alone.
"""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .params import HyperParams
from .trainer import TrainerConfig


class ConfigError(ValueError):
    """Malformed or inconsistent configuration file."""


@dataclass
class RunConfig:
    """Resolved configuration of a training/inference run."""

    trainer: TrainerConfig
    train_n: Optional[int] = None
    test_n: Optional[int] = None
    subset_seed: Optional[int] = None

    def subset_dataset(self, dataset):
        if self.train_n is None and self.test_n is None and self.subset_seed is None:
            return dataset
        return dataset.subset(self.train_n, self.test_n, self.subset_seed)


_HYPER_KEYS = {"gamma_lif", "gamma_li", "u_th", "beta", "eta_r", "tau", "n_filt",
               "t_free", "t_nudge", "t_refract", "dt", "learning_rate"}
_NETWORK_KEYS = {"layer_sizes"}
_TRAINING_KEYS = {"epochs", "seed", "shuffle", "target_rate_hi", "target_rate_lo",
                  "skip_threshold", "eval_steps", "eval_window",
                  "nudge_with_instantaneous_rates", "learn_biases"}
_DATA_KEYS = {"train_n", "test_n", "subset_seed"}


def _check_keys(section: str, given: dict, allowed: set) -> None:
    unknown = set(given) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")


def parse_config(text: str) -> RunConfig:
    """Parse TOML text into a fully resolved :class:`RunConfig`."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"TOML parse error: {e}") from e
    _check_keys("", raw, {"network", "hyper", "training", "data"})
    network = raw.get("network", {})
    hyper_raw = dict(raw.get("hyper", {}))
    training = raw.get("training", {})
    data = raw.get("data", {})
    _check_keys("network", network, _NETWORK_KEYS)
    _check_keys("hyper", hyper_raw, _HYPER_KEYS)
    _check_keys("training", training, _TRAINING_KEYS)
    _check_keys("data", data, _DATA_KEYS)

    learning_rate = hyper_raw.pop("learning_rate", None)
    if learning_rate is not None and "eta_r" in hyper_raw:
        raise ConfigError("set either learning_rate or eta_r, not both")
    try:
        if learning_rate is not None:
            hyper = HyperParams.from_learning_rate(learning_rate, **hyper_raw)
        else:
            hyper = HyperParams(**hyper_raw)
        trainer = TrainerConfig(
            hyper=hyper,
            layer_sizes=tuple(network.get("layer_sizes", TrainerConfig.layer_sizes)),
            **training,
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e
    return RunConfig(trainer=trainer,
                     train_n=data.get("train_n"),
                     test_n=data.get("test_n"),
                     subset_seed=data.get("subset_seed"))


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    return parse_config(path.read_text())


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return '"' + str(v) + '"'


def resolved_toml(config: RunConfig) -> str:
    """Serialise the resolved configuration back to TOML text."""
    t = config.trainer
    h = t.hyper
    lines = ["[network]",
             f"layer_sizes = {_toml_value(list(t.layer_sizes))}",
             "", "[hyper]"]
    for k in ("gamma_lif", "gamma_li", "u_th", "beta", "eta_r", "tau", "n_filt",
              "t_free", "t_nudge", "t_refract", "dt"):
        lines.append(f"{k} = {_toml_value(getattr(h, k))}")
    lines += ["", "[training]"]
    for k in ("epochs", "seed", "shuffle", "target_rate_lo", "skip_threshold",
              "eval_steps", "eval_window", "nudge_with_instantaneous_rates",
              "learn_biases"):
        lines.append(f"{k} = {_toml_value(getattr(t, k))}")
    lines.append(f"target_rate_hi = {_toml_value(t.rate_hi)}")
    lines += ["", "[data]"]
    for k in ("train_n", "test_n", "subset_seed"):
        v = getattr(config, k)
        if v is not None:
            lines.append(f"{k} = {_toml_value(v)}")
    return "\n".join(lines) + "\n"
