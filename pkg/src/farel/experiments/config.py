"""Experiment grid configuration.

A config file is one JSON object describing the scenario, the objectives to
optimise and the grid axes (window specs, distance metrics, population and
bias presets, seeds). Every combination of axis values times every seed is
one grid cell; a cell trains one agent and emits one result directory.

Environment overrides: FAREL_SEED replaces the seed list with a single seed,
FAREL_STEPS replaces the step budget.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..distances import DEFAULT_K, DEFAULT_LAMBDA, DISTANCE_METRICS
from ..history import WindowSpec
from ..objectives import canonical_order
from ..pareto import DEFAULT_REWARD_MAX

SCENARIOS = ("hiring", "fraud")
AGENTS = ("pcn", "dqn")

_HIRING_BIASES = ("none", "men", "belgian_men")
_FRAUD_BIASES = ("none", "continent_a", "continent_a_merchant0")
_POPULATIONS = ("default", "gender", "nationality_gender")


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


@dataclass(frozen=True)
class Cell:
    window: WindowSpec
    distance: str
    population: str
    bias: str
    seed: int

    def dirname(self) -> str:
        w = self.window
        if w.kind == "sliding":
            window = f"w{w.window}"
        else:
            window = f"dw{w.window}g{w.gamma:g}t{w.threshold:g}dl{w.delay}"
        return f"{window}_d{self.distance}_p{self.population}_b{self.bias}_s{self.seed}"


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    objectives: tuple[str, ...] = ("R",)
    windows: tuple[WindowSpec, ...] = (WindowSpec("sliding", 500),)
    distances: tuple[str, ...] = ("HEOM",)
    populations: tuple[str, ...] = ("default",)
    biases: tuple[str, ...] = ("none",)
    seeds: tuple[int, ...] = tuple(range(10))
    total_steps: int = 500_000
    horizon: int | None = None
    agent: str = "pcn"
    agent_config: dict = field(default_factory=dict)
    eval_episodes: int = 2
    max_policies: int = 30
    representative_size: int = 10
    trace_sample_every: int = 1000
    lam: float = DEFAULT_LAMBDA
    k: int = DEFAULT_K
    reward_max: float | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        if self.agent not in AGENTS:
            raise ConfigError(f"unknown agent {self.agent!r}")
        try:
            ordered = canonical_order(self.objectives)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if ordered != tuple(self.objectives):
            raise ConfigError("objectives must be listed in canonical order")
        if "R" not in self.objectives:
            raise ConfigError("the performance reward R must be an objective")
        for d in self.distances:
            if d not in DISTANCE_METRICS:
                raise ConfigError(f"unknown distance metric {d!r}")
        biases = _HIRING_BIASES if self.scenario == "hiring" else _FRAUD_BIASES
        for b in self.biases:
            if b not in biases:
                raise ConfigError(f"unknown bias preset {b!r} for {self.scenario}")
        for p in self.populations:
            if p not in _POPULATIONS:
                raise ConfigError(f"unknown population preset {p!r}")
        if self.total_steps < 1 or self.eval_episodes < 1:
            raise ConfigError("step and episode budgets must be positive")
        if not self.seeds:
            raise ConfigError("at least one seed is required")

    @property
    def effective_reward_max(self) -> float:
        return self.reward_max if self.reward_max is not None else DEFAULT_REWARD_MAX[self.scenario]

    def cells(self) -> list[Cell]:
        return [
            Cell(window, distance, population, bias, seed)
            for window in self.windows
            for distance in self.distances
            for population in self.populations
            for bias in self.biases
            for seed in self.seeds
        ]

    def canonical_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "objectives": list(self.objectives),
            "windows": [w.to_json() for w in self.windows],
            "distances": list(self.distances),
            "populations": list(self.populations),
            "biases": list(self.biases),
            "seeds": list(self.seeds),
            "total_steps": self.total_steps,
            "horizon": self.horizon,
            "agent": self.agent,
            "agent_config": self.agent_config,
            "eval_episodes": self.eval_episodes,
            "max_policies": self.max_policies,
            "representative_size": self.representative_size,
            "trace_sample_every": self.trace_sample_every,
            "lambda": self.lam,
            "k": self.k,
            "reward_max": self.effective_reward_max,
        }

    def config_hash(self) -> str:
        canonical = json.dumps(self.canonical_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, data: dict, *, apply_env: bool = True) -> "ExperimentConfig":
        data = dict(data)
        known = {
            "scenario", "objectives", "windows", "distances", "populations", "biases",
            "seeds", "total_steps", "horizon", "agent", "agent_config", "eval_episodes",
            "max_policies", "representative_size", "trace_sample_every", "lambda", "k",
            "reward_max",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "scenario" not in data:
            raise ConfigError("config needs a 'scenario'")
        kwargs = {"scenario": data["scenario"]}
        if "objectives" in data:
            kwargs["objectives"] = tuple(data["objectives"])
        if "windows" in data:
            try:
                kwargs["windows"] = tuple(WindowSpec.from_json(w) for w in data["windows"])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"invalid window spec: {exc}") from exc
        for key in ("distances", "populations", "biases"):
            if key in data:
                kwargs[key] = tuple(data[key])
        if "seeds" in data:
            kwargs["seeds"] = tuple(int(s) for s in data["seeds"])
        for key in ("total_steps", "horizon", "eval_episodes", "max_policies",
                    "representative_size", "trace_sample_every", "k"):
            if key in data and data[key] is not None:
                kwargs[key] = int(data[key])
        if "lambda" in data:
            kwargs["lam"] = float(data["lambda"])
        if data.get("reward_max") is not None:
            kwargs["reward_max"] = float(data["reward_max"])
        if "agent" in data:
            kwargs["agent"] = data["agent"]
        if "agent_config" in data:
            kwargs["agent_config"] = dict(data["agent_config"])
        if apply_env:
            if os.environ.get("FAREL_SEED"):
                kwargs["seeds"] = (int(os.environ["FAREL_SEED"]),)
            if os.environ.get("FAREL_STEPS"):
                kwargs["total_steps"] = int(os.environ["FAREL_STEPS"])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path, *, apply_env: bool = True) -> "ExperimentConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data, apply_env=apply_env)
