"""Run configuration.

An INI file whose ``[section] key`` pairs form a flat tree of dotted keys
(``sequential.n_max``). Every key has a default below; unknown keys are
rejected. Stopping rules live in ``[rules]`` as ``name = metric >= value``
with an optional ``k=3`` suffix.

Example::

    [run]
    seed = 2024

    [generator]
    n = 20413
    cstat = 0.67

    [rules]
    slope = corrected_slope >= 0.9
    width = mean_ui_width <= 0.1
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass
from typing import Dict, Optional

from .datagen import GeneratorSpec
from .errors import ConfigError
from .metrics import UtilityConfig
from .sequential import DEFAULT_RULES, SequentialConfig, StoppingRule
from .strategies import KINDS, StrategySpec

DEFAULTS: Dict[str, object] = {
    "run.seed": None,
    "run.workers": 1,
    "run.stop_early": False,
    "data.cohort_csv": "",
    "generator.n": 20413,
    "generator.prevalence": 0.173,
    "generator.cstat": 0.67,
    "generator.p": 6,
    "generator.seed": None,
    "sequential.n_initial": 100,
    "sequential.n_new": 100,
    "sequential.n_max": 3000,
    "sequential.b": 200,
    "sequential.k": 2,
    "strategy.kind": "unpenalised",
    "strategy.inner_b": 200,
    "strategy.replicate_inner_b": 50,
    "strategy.cv_folds": 10,
    "utility.threshold": 0.10,
    "output.dir": ".",
    "output.csv": "learning_curve.csv",
    "output.json": "learning_curve.json",
    "output.svg": "learning_curve.svg",
    "output.metrics": "",
}

# settings that affect where and how fast a run executes, never its results
EXECUTION_KEYS = ("run.workers", "output.dir")

_BOOL = {"1": True, "true": True, "yes": True, "on": True,
         "0": False, "false": False, "no": False, "off": False}


def _coerce(key: str, raw):
    default = DEFAULTS[key]
    if raw is None or not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if isinstance(default, bool):
            return _BOOL[text.lower()]
        if isinstance(default, int) or key in ("run.seed", "generator.seed"):
            return int(text) if text else None
        if isinstance(default, float):
            return float(text)
    except (KeyError, ValueError):
        raise ConfigError(f"{key}: cannot interpret {raw!r}") from None
    return text


@dataclass
class RunConfig:
    values: Dict[str, object]
    rules: Dict[str, str]

    @classmethod
    def load(cls, path: Optional[str] = None, overrides: Optional[Dict[str, str]] = None) -> "RunConfig":
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
        parser.optionxform = str
        if path is not None:
            try:
                with open(path) as fh:
                    parser.read_file(fh)
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from None
            except configparser.Error as exc:
                raise ConfigError(f"malformed config {path}: {exc}") from None
        values = dict(DEFAULTS)
        rules: Dict[str, str] = {}
        flat = {}
        for section in parser.sections():
            for key, raw in parser.items(section):
                flat[f"{section}.{key}"] = raw
        flat.update(overrides or {})
        for key, raw in flat.items():
            if key.startswith("rules."):
                rules[key[len("rules."):]] = raw
            elif key in DEFAULTS:
                values[key] = _coerce(key, raw)
            else:
                raise ConfigError(f"unknown configuration key {key!r}")
        cfg = cls(values, rules)
        cfg.check()
        return cfg

    def __getitem__(self, key):
        return self.values[key]

    def check(self) -> None:
        if self["run.seed"] is None:
            raise ConfigError("run.seed is required (pass --seed or set [run] seed)")
        if self["strategy.kind"] not in KINDS:
            raise ConfigError(f"strategy.kind must be one of {KINDS}")
        try:
            self.sequential_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def stopping_rules(self):
        k = self["sequential.k"]
        if not self.rules:
            return tuple(StoppingRule(r.metric, r.comparator, r.threshold, k) for r in DEFAULT_RULES)
        try:
            return tuple(StoppingRule.parse(text, default_k=k) for text in self.rules.values())
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def strategy_spec(self) -> StrategySpec:
        return StrategySpec(
            kind=self["strategy.kind"],
            inner_bootstrap_b=self["strategy.inner_b"],
            replicate_inner_b=self["strategy.replicate_inner_b"],
            cv_folds=self["strategy.cv_folds"],
        )

    def sequential_config(self) -> SequentialConfig:
        return SequentialConfig(
            n_initial=self["sequential.n_initial"],
            n_new=self["sequential.n_new"],
            n_max=self["sequential.n_max"],
            b=self["sequential.b"],
            spec=self.strategy_spec(),
            utility=UtilityConfig(self["utility.threshold"]),
            rules=self.stopping_rules(),
            seed=self["run.seed"],
            workers=self["run.workers"],
            stop_early=self["run.stop_early"],
        )

    def generator_spec(self) -> GeneratorSpec:
        seed = self["generator.seed"]
        return GeneratorSpec(
            n=self["generator.n"],
            target_prevalence=self["generator.prevalence"],
            target_c=self["generator.cstat"],
            p=self["generator.p"],
            seed=self["run.seed"] if seed is None else seed,
        )

    def resolved(self, execution: bool = True) -> dict:
        """Every key with its effective value, for provenance.

        ``execution=False`` drops ``EXECUTION_KEYS`` so that artefacts stay
        byte-identical across worker counts and output directories.
        """
        out = {k: v for k, v in self.values.items() if execution or k not in EXECUTION_KEYS}
        out.update({f"rules.{k}": v for k, v in self.rules.items()})
        out["resolved_rules"] = [str(r) for r in self.stopping_rules()]
        return out
