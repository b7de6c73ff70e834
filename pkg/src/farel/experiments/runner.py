"""Grid execution: train, evaluate, and write one result directory per cell."""
from __future__ import annotations

import dataclasses
import json
import logging
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .. import __version__
from ..agents.dqn import DqnAgent, DqnConfig
from ..agents.pcn import Command, PcnAgent, PcnConfig, PcnRolloutPolicy
from ..engine import FairnessEngine
from ..envs.fraud import FraudBiasSpec, FraudEnv, FraudGenSpec
from ..envs.hiring import BiasSpec, HiringConfig, HiringEnv, PopulationSpec
from ..notions import NotionSpec
from ..objectives import CANONICAL_OBJECTIVES
from ..pareto import (
    PolicyPoint,
    nondominated,
    normalization_from_points,
    normalize,
    representative_subset,
)
from ..training import DqnGreedyPolicy, evaluate_policy, pcn_policy_points, train_dqn_fair, train_pcn
from .config import Cell, ConfigError, ExperimentConfig
from .output import write_manifest, write_policy_table, write_radar, write_summary_table, write_window_trace

logger = logging.getLogger(__name__)

GROUP_PAIRS = {
    "hiring": ("gender:man", "gender:woman"),
    "fraud": ("continent:A", "continent:B"),
}


def build_env(config: ExperimentConfig, cell: Cell):
    if config.scenario == "hiring":
        env_config = HiringConfig(
            horizon=config.horizon or 1000,
            population=PopulationSpec.preset(cell.population),
            bias=BiasSpec(cell.bias) if cell.bias != "none" else BiasSpec(),
        )
        return HiringEnv(env_config)
    spec_kwargs = {}
    if config.horizon:
        spec_kwargs["episode_cap"] = config.horizon
    spec = FraudGenSpec(**spec_kwargs)
    bias = FraudBiasSpec(cell.bias) if cell.bias != "none" else FraudBiasSpec()
    return FraudEnv(spec, bias)


def notion_specs(labels, scenario: str, distance: str, lam: float, k: int) -> list[NotionSpec]:
    groups = GROUP_PAIRS[scenario]
    specs = []
    for label in labels:
        if label == "R":
            continue
        if label in ("IF", "CSC"):
            specs.append(NotionSpec(label, distance=distance, lam=lam, k=k))
        else:
            specs.append(NotionSpec(label, groups=groups))
    return specs


def make_engine_factory(config: ExperimentConfig, cell: Cell, env, labels):
    specs = notion_specs(labels, config.scenario, cell.distance, config.lam, config.k)

    def factory() -> FairnessEngine:
        return FairnessEngine(specs, cell.window, env.individual_schema, n_actions=env.n_actions)

    return factory


def _train_agent(config: ExperimentConfig, cell: Cell, env, make_engine):
    rng = np.random.default_rng(np.random.SeedSequence([cell.seed, 0xA9EA7]).generate_state(1)[0])
    obs_dim = len(env.state_schema.names)
    if config.agent == "pcn":
        agent = PcnAgent(
            obs_dim,
            env.n_actions,
            len(config.objectives),
            PcnConfig(**config.agent_config),
            rng=rng,
        )
        log = train_pcn(env, agent, make_engine, config.total_steps, seed=cell.seed)
    else:
        agent = DqnAgent(obs_dim, env.n_actions, DqnConfig(**config.agent_config), rng=rng)
        log = train_dqn_fair(env, agent, make_engine, config.total_steps, seed=cell.seed)
    return agent, log


def _evaluate_policies(config: ExperimentConfig, cell: Cell, env, agent) -> list[PolicyPoint]:
    """Evaluate candidate policies with all eight notions measured post hoc."""
    all_engine = make_engine_factory(config, cell, env, CANONICAL_OBJECTIVES)
    if config.agent == "dqn":
        mean_return, _ = evaluate_policy(
            env, lambda: DqnGreedyPolicy(agent), all_engine, config.eval_episodes, seed=cell.seed
        )
        return [PolicyPoint(tuple(float(v) for v in mean_return), seed=cell.seed,
                            provenance={"policy": "dqn-greedy"})]
    episodes = agent.nondominated_episodes()[-config.max_policies :]
    points = []
    for i, ep in enumerate(episodes):
        command = Command(tuple(float(v) for v in ep.return_vec), float(max(ep.length, 1)))
        mean_return, _ = evaluate_policy(
            env,
            lambda cmd=command: PcnRolloutPolicy(agent, cmd),
            all_engine,
            config.eval_episodes,
            seed=cell.seed + 7919 * (i + 1),
        )
        points.append(
            PolicyPoint(
                tuple(float(v) for v in mean_return),
                seed=cell.seed,
                provenance={
                    "command_return": [float(v) for v in command.desired_return],
                    "command_horizon": command.desired_horizon,
                },
            )
        )
    return points


def _coverage_set(points: list[PolicyPoint], labels) -> list[PolicyPoint]:
    """Non-dominated filter on the requested-objective subspace, dedup kept once."""
    if not points:
        return []
    idx = [CANONICAL_OBJECTIVES.index(l) for l in labels]
    requested = [PolicyPoint(tuple(p.returns[i] for i in idx), seed=p.seed) for p in points]
    keep = {id(q) for q in nondominated(requested)}
    return [p for p, q in zip(points, requested) if id(q) in keep]


def run_cell(config: ExperimentConfig, cell: Cell, out_dir) -> dict:
    """Train, evaluate and emit policies/summary/window-trace/radar/manifest."""
    cell_dir = Path(out_dir) / cell.dirname()
    cell_dir.mkdir(parents=True, exist_ok=True)
    env = build_env(config, cell)
    make_engine = make_engine_factory(config, cell, env, config.objectives)
    agent, log = _train_agent(config, cell, env, make_engine)

    points = _evaluate_policies(config, cell, env, agent)
    coverage = _coverage_set(points, config.objectives)
    reps = representative_subset(
        coverage, m=config.representative_size, rng=np.random.default_rng(cell.seed)
    )

    objectives_label = ":".join(config.objectives)
    write_policy_table(cell_dir / "policies.csv", objectives_label, reps)
    write_summary_table(cell_dir / "summary.csv", objectives_label, reps)
    write_window_trace(cell_dir / "window_trace.csv", log.window_sizes, config.trace_sample_every)
    norm_spec = normalization_from_points(CANONICAL_OBJECTIVES, points, config.effective_reward_max)
    write_radar(cell_dir / "radar.svg", normalize(reps, norm_spec))
    manifest = {
        "config_hash": config.config_hash(),
        "cell": dataclasses.asdict(cell),
        "objectives": list(config.objectives),
        "version": __version__,
        "policies_evaluated": len(points),
        "coverage_size": len(coverage),
    }
    write_manifest(cell_dir / "manifest.json", manifest)
    return {"cell": cell.dirname(), "status": "ok", "policies": len(reps)}


def _run_cell_guarded(config: ExperimentConfig, cell: Cell, out_dir) -> dict:
    try:
        return run_cell(config, cell, out_dir)
    except Exception as exc:  # isolate the failing cell, keep the rest of the grid
        logger.error("cell %s failed: %s", cell.dirname(), exc)
        return {
            "cell": cell.dirname(),
            "status": "failed",
            "error": f"{type(exc).__name__}: {exc}",
            "traceback": traceback.format_exc(),
        }


def run_grid(config: ExperimentConfig, out_dir, workers: int = 1) -> int:
    """Execute every grid cell; returns the CLI exit code (0 ok, 3 partial failure)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cells = config.cells()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell_guarded, [config] * len(cells), cells, [out_dir] * len(cells)))
    else:
        results = [_run_cell_guarded(config, cell, out_dir) for cell in cells]
    (out_dir / "run.json").write_text(
        json.dumps(
            {"config": config.canonical_dict(), "config_hash": config.config_hash(), "cells": results},
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    failed = [r for r in results if r["status"] != "ok"]
    for failure in failed:
        logger.error("cell %s: %s", failure["cell"], failure["error"])
    return 3 if failed else 0
