"""Run configuration: a validated JSON file with full defaults.

Every key is optional; unknown keys anywhere in the tree are rejected so
typos fail loudly.  See README for the key reference.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from .data import TASKS, TaskSpec
from .nsga import EvoConfig
from .sim import NoiseSpec
from .training import TrainerConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    task: TaskSpec = TASKS["binary"]
    noise: NoiseSpec = NoiseSpec(channel="depolarizing", p=0.01)
    trainer: TrainerConfig = TrainerConfig()
    evo: EvoConfig = EvoConfig()
    alpha: float = 1.0
    beta: float = 1.0
    seed: int = 0
    workers: int = 1
    out_dir: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "task": self.task.name,
            "noise": {"channel": self.noise.channel, "p": self.noise.p,
                      "t1": self.noise.t1, "t2": self.noise.t2, "tg": self.noise.tg},
            "trainer": {"epsilon": self.trainer.epsilon, "eta": self.trainer.eta,
                        "epochs": self.trainer.epochs,
                        "fine_tune_steps": self.trainer.fine_tune_steps,
                        "head_refit_steps": self.trainer.head_refit_steps,
                        "theta_init_scale": self.trainer.theta_init_scale,
                        "head_init_scale": self.trainer.head_init_scale,
                        "genome_sampling": self.trainer.genome_sampling},
            "evo": {"pop_size": self.evo.pop_size, "generations": self.evo.generations,
                    "p_crossover": self.evo.p_crossover, "p_mutation": self.evo.p_mutation,
                    "p_add": self.evo.p_add, "p_del": self.evo.p_del, "p_rep": self.evo.p_rep,
                    "tournament_k": self.evo.tournament_k,
                    "eta_crossover": self.evo.eta_crossover,
                    "eta_mutation": self.evo.eta_mutation},
            "cost": {"alpha": self.alpha, "beta": self.beta},
            "seed": self.seed,
            "workers": self.workers,
            "out_dir": self.out_dir,
        }


def _take(section: dict, where: str, key: str, default, kind):
    value = section.pop(key, default)
    if value is None and default is None:
        return None
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if isinstance(value, bool) and kind is not bool or not isinstance(value, kind):
        raise ConfigError(f"config key '{where}{key}' must be {kind.__name__}, "
                          f"got {value!r}")
    return value


def _no_leftovers(section: dict, where: str):
    if section:
        key = sorted(section)[0]
        raise ConfigError(f"config: unknown key '{where}{key}'")


def config_from_dict(raw: dict) -> RunConfig:
    raw = dict(raw)
    task_name = _take(raw, "", "task", "binary", str)
    if task_name not in TASKS:
        raise ConfigError(f"config key 'task' must be one of {sorted(TASKS)}, "
                          f"got {task_name!r}")
    noise_raw = dict(_take(raw, "", "noise", {}, dict))
    trainer_raw = dict(_take(raw, "", "trainer", {}, dict))
    evo_raw = dict(_take(raw, "", "evo", {}, dict))
    cost_raw = dict(_take(raw, "", "cost", {}, dict))
    seed = _take(raw, "", "seed", 0, int)
    workers = _take(raw, "", "workers", 1, int)
    out_dir = _take(raw, "", "out_dir", None, str)
    _no_leftovers(raw, "")

    try:
        noise = NoiseSpec(
            channel=_take(noise_raw, "noise.", "channel", "depolarizing", str),
            p=_take(noise_raw, "noise.", "p", 0.01, float),
            t1=_take(noise_raw, "noise.", "t1", 100.0, float),
            t2=_take(noise_raw, "noise.", "t2", 50.0, float),
            tg=_take(noise_raw, "noise.", "tg", 0.03, float),
        )
        _no_leftovers(noise_raw, "noise.")
        trainer = TrainerConfig(
            epsilon=_take(trainer_raw, "trainer.", "epsilon", 0.1, float),
            eta=_take(trainer_raw, "trainer.", "eta", 0.05, float),
            epochs=_take(trainer_raw, "trainer.", "epochs", 300, int),
            fine_tune_steps=_take(trainer_raw, "trainer.", "fine_tune_steps", 20, int),
            head_refit_steps=_take(trainer_raw, "trainer.", "head_refit_steps", 500, int),
            theta_init_scale=_take(trainer_raw, "trainer.", "theta_init_scale", 0.1, float),
            head_init_scale=_take(trainer_raw, "trainer.", "head_init_scale", 0.1, float),
            genome_sampling=_take(trainer_raw, "trainer.", "genome_sampling", "per_epoch", str),
        )
        _no_leftovers(trainer_raw, "trainer.")
        p_mutation = evo_raw.pop("p_mutation", None)
        if p_mutation is not None and not isinstance(p_mutation, (int, float)):
            raise ConfigError(f"config key 'evo.p_mutation' must be a number or null, "
                              f"got {p_mutation!r}")
        evo = EvoConfig(
            pop_size=_take(evo_raw, "evo.", "pop_size", 40, int),
            generations=_take(evo_raw, "evo.", "generations", 30, int),
            p_crossover=_take(evo_raw, "evo.", "p_crossover", 0.9, float),
            p_mutation=None if p_mutation is None else float(p_mutation),
            p_add=_take(evo_raw, "evo.", "p_add", 0.1, float),
            p_del=_take(evo_raw, "evo.", "p_del", 0.1, float),
            p_rep=_take(evo_raw, "evo.", "p_rep", 0.1, float),
            tournament_k=_take(evo_raw, "evo.", "tournament_k", 2, int),
            eta_crossover=_take(evo_raw, "evo.", "eta_crossover", 15.0, float),
            eta_mutation=_take(evo_raw, "evo.", "eta_mutation", 20.0, float),
        )
        _no_leftovers(evo_raw, "evo.")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"config: {exc}") from exc

    alpha = _take(cost_raw, "cost.", "alpha", 1.0, float)
    beta = _take(cost_raw, "cost.", "beta", 1.0, float)
    _no_leftovers(cost_raw, "cost.")
    if workers < 1:
        raise ConfigError(f"config key 'workers' must be >= 1, got {workers}")
    return RunConfig(task=TASKS[task_name], noise=noise, trainer=trainer, evo=evo,
                     alpha=alpha, beta=beta, seed=seed, workers=workers, out_dir=out_dir)


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return config_from_dict(raw)
