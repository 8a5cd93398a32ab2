"""Elitist (1+1)-ES with a pluggable step-size controller."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import partial
from typing import Callable

import numpy as np

from .adaptation import Controller, StrategySpec
from .advisor import PromptTranscript
from .problems import ProblemInstance, evaluate, sample_initial_point

GAUSSIAN = "gaussian-isotropic"
UNIFORM_BALL = "uniform-ball"
MUTATION_MODES = (GAUSSIAN, UNIFORM_BALL)


class BudgetExhausted(Exception):
    """Raised by :func:`step` when no evaluation is left."""


@dataclass(frozen=True)
class EsState:
    current_x: np.ndarray
    current_f: float
    step_size: float
    generation: int = 0
    evaluations_used: int = 1

    def __post_init__(self) -> None:
        if not self.step_size > 0:
            raise ValueError(f"step size must stay positive, got {self.step_size}")


@dataclass(frozen=True)
class EvaluationRecord:
    generation: int
    sigma_used: float
    parent_f: float
    offspring_f: float
    accepted: bool


@dataclass
class RunRecord:
    function_id: int
    dimension: int
    strategy: str
    seed: int
    budget: int
    records: list[EvaluationRecord]
    sigma_trace: list[float]
    best_so_far: list[float]
    transcripts: list[PromptTranscript] = field(default_factory=list)
    instance_seed: int | None = None
    f_opt: float = 0.0
    mutation: str = GAUSSIAN

    @property
    def final_best(self) -> float:
        return self.best_so_far[-1]

    @property
    def final_sigma(self) -> float:
        return self.sigma_trace[-1]


def mutate(x: np.ndarray, sigma: float, rng: np.random.Generator, mode: str = GAUSSIAN) -> np.ndarray:
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    if mode == GAUSSIAN:
        return x + sigma * rng.standard_normal(d)
    if mode == UNIFORM_BALL:
        direction = rng.standard_normal(d)
        direction /= np.linalg.norm(direction)
        radius = sigma * rng.random() ** (1.0 / d)
        return x + radius * direction
    raise ValueError(f"unknown mutation mode {mode!r}; expected one of {MUTATION_MODES}")


def step(
    state: EsState,
    objective: Callable[[np.ndarray], float],
    controller: Controller,
    rng: np.random.Generator,
    history: list[EvaluationRecord],
    *,
    budget: int | None = None,
    mutation: str = GAUSSIAN,
) -> tuple[EsState, EvaluationRecord]:
    """One generation: mutate with the current σ, select, then adapt σ.

    ``history`` is extended with the new record before the controller sees it.
    """
    if budget is not None and state.evaluations_used >= budget:
        raise BudgetExhausted(f"all {budget} evaluations used")
    generation = state.generation + 1
    candidate = mutate(state.current_x, state.step_size, rng, mutation)
    offspring_f = float(objective(candidate))
    accepted = offspring_f < state.current_f
    record = EvaluationRecord(
        generation=generation,
        sigma_used=state.step_size,
        parent_f=state.current_f,
        offspring_f=offspring_f,
        accepted=accepted,
    )
    history.append(record)
    selected = replace(
        state,
        current_x=candidate if accepted else state.current_x,
        current_f=offspring_f if accepted else state.current_f,
        generation=generation,
        evaluations_used=state.evaluations_used + 1,
    )
    new_sigma = controller.update(selected, record, history)
    return replace(selected, step_size=new_sigma), record


def run(
    instance: ProblemInstance,
    strategy: StrategySpec,
    budget: int,
    seed: int,
    *,
    mutation: str = GAUSSIAN,
    provider=None,
    objective: Callable[[np.ndarray], float] | None = None,
) -> RunRecord:
    """Run until exactly ``budget`` evaluations (initial point included) are spent."""
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    if mutation not in MUTATION_MODES:
        raise ValueError(f"unknown mutation mode {mutation!r}; expected one of {MUTATION_MODES}")
    objective = objective or partial(evaluate, instance)
    rng = np.random.default_rng(seed)
    controller = Controller(strategy, provider, last_generation=budget - 1)

    x0 = sample_initial_point(instance, rng)
    state = EsState(current_x=x0, current_f=float(objective(x0)), step_size=controller.initial_sigma)
    history: list[EvaluationRecord] = []
    sigma_trace = [state.step_size]
    best_so_far = [state.current_f]
    while state.evaluations_used < budget:
        state, record = step(state, objective, controller, rng, history, budget=budget, mutation=mutation)
        sigma_trace.append(record.sigma_used)
        best_so_far.append(state.current_f)

    return RunRecord(
        function_id=instance.id,
        dimension=instance.dimension,
        strategy=strategy.name,
        seed=seed,
        budget=budget,
        records=history,
        sigma_trace=sigma_trace,
        best_so_far=best_so_far,
        transcripts=controller.transcripts,
        instance_seed=instance.instance_seed,
        f_opt=instance.f_opt,
        mutation=mutation,
    )

