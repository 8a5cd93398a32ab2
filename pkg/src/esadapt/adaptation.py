"""Step-size controllers for the (1+1)-ES."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence, Union

from .advisor import (
    PROFILES,
    SIGMA_BOUNDS,
    AdvisorConfig,
    AdvisorError,
    PromptTranscript,
    build_prompt,
    condense_log,
    parse_recommendation,
    query,
    sigma_changes_from,
)
from .advisor.transcripts import PARSE_FAILURE, TRANSPORT_FAILURE

if TYPE_CHECKING:
    from .es import EsState, EvaluationRecord

DEFAULT_SIGMA = 0.1
INCREASE = 1.5
DECREASE = 1.5 ** (-1 / 4)
DEFAULT_PERIOD = 50


@dataclass(frozen=True)
class Constant:
    sigma: float = DEFAULT_SIGMA

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ValueError(f"constant sigma must be positive, got {self.sigma}")

    @property
    def name(self) -> str:
        return "constant"

    @property
    def initial_sigma(self) -> float:
        return self.sigma


@dataclass(frozen=True)
class OneFifth:
    increase: float = INCREASE
    decrease: float = DECREASE
    initial_sigma: float = DEFAULT_SIGMA

    def __post_init__(self) -> None:
        if not self.increase > 1:
            raise ValueError(f"increase factor must exceed 1, got {self.increase}")
        if not 0 < self.decrease < 1:
            raise ValueError(f"decrease factor must lie in (0, 1), got {self.decrease}")
        if not self.initial_sigma > 0:
            raise ValueError("initial_sigma must be positive")

    @property
    def name(self) -> str:
        return "one-fifth"


@dataclass(frozen=True)
class PeriodicAdvisor:
    advisor: AdvisorConfig = field(default_factory=AdvisorConfig)
    period: int = DEFAULT_PERIOD
    bounds: tuple[float, float] = SIGMA_BOUNDS
    initial_sigma: float = DEFAULT_SIGMA

    def __post_init__(self) -> None:
        if self.period < 1:
            raise ValueError(f"period must be a positive integer, got {self.period}")
        low, high = self.bounds
        if not 0 < low < high < 1:
            raise ValueError(f"bounds must satisfy 0 < low < high < 1, got {self.bounds}")
        if not self.initial_sigma > 0:
            raise ValueError("initial_sigma must be positive")

    @property
    def name(self) -> str:
        return f"advisor:{self.advisor.name}"


StrategySpec = Union[Constant, OneFifth, PeriodicAdvisor]


def parse_strategy(
    text: str,
    advisors: dict[str, AdvisorConfig] | None = None,
    *,
    initial_sigma: float = DEFAULT_SIGMA,
    period: int = DEFAULT_PERIOD,
) -> StrategySpec:
    """``constant``, ``one-fifth`` or ``advisor:<profile>``."""
    text = text.strip()
    if text == "constant":
        return Constant(initial_sigma)
    if text == "one-fifth":
        return OneFifth(initial_sigma=initial_sigma)
    if text.startswith("advisor:"):
        profile = text.split(":", 1)[1]
        pool = {**PROFILES, **(advisors or {})}
        if profile not in pool:
            raise ValueError(f"unknown advisor profile {profile!r}; known: {sorted(pool)}")
        return PeriodicAdvisor(advisor=pool[profile], period=period, initial_sigma=initial_sigma)
    raise ValueError(f"unknown strategy {text!r}; expected constant, one-fifth or advisor:<profile>")


def constant_update(sigma: float) -> float:
    return sigma


def one_fifth_update(
    sigma: float,
    parent_f: float,
    offspring_f: float,
    increase: float = INCREASE,
    decrease: float = DECREASE,
) -> float:
    if offspring_f < parent_f:
        return increase * sigma
    if offspring_f > parent_f:
        return decrease * sigma
    return sigma


def periodic_advisor_update(
    state: EsState,
    history: Sequence[EvaluationRecord],
    spec: PeriodicAdvisor,
    provider,
) -> tuple[float, PromptTranscript | None]:
    generation = state.generation
    sigma = state.step_size
    if generation <= 0 or generation % spec.period:
        return sigma, None

    log_text = condense_log(history, sigma_changes_from(history), spec.advisor.char_budget)
    system_message, user_message = build_prompt(log_text, sigma)
    started = time.perf_counter()
    try:
        raw = query(provider, system_message, user_message)
    except AdvisorError as exc:
        transcript = PromptTranscript(
            generation=generation,
            rendered_system=system_message,
            rendered_user=user_message,
            raw_response="",
            parsed_sigma=None,
            clamped=False,
            failure=f"{TRANSPORT_FAILURE}: {exc}",
            latency_ms=_latency(provider, started),
        )
        return sigma, transcript

    new_sigma, clamped, parsed = parse_recommendation(raw, spec.bounds, sigma)
    transcript = PromptTranscript(
        generation=generation,
        rendered_system=system_message,
        rendered_user=user_message,
        raw_response=raw,
        parsed_sigma=new_sigma if parsed else None,
        clamped=clamped,
        failure=None if parsed else PARSE_FAILURE,
        latency_ms=_latency(provider, started),
    )
    return new_sigma, transcript


def _latency(provider, started: float) -> float:
    # offline providers report zero so their transcripts stay reproducible
    if not getattr(provider, "remote", False):
        return 0.0
    return round((time.perf_counter() - started) * 1000.0, 3)


class Controller:
    """Per-run step-size state. ``update`` runs once per generation, after selection."""

    def __init__(self, spec: StrategySpec, provider=None, last_generation: int | None = None) -> None:
        if isinstance(spec, PeriodicAdvisor) and provider is None:
            raise ValueError(f"strategy {spec.name} needs an advisor provider")
        self.spec = spec
        self.provider = provider
        self.last_generation = last_generation
        self.transcripts: list[PromptTranscript] = []

    @property
    def initial_sigma(self) -> float:
        return self.spec.initial_sigma

    def update(self, state: EsState, record: EvaluationRecord, history: Sequence[EvaluationRecord]) -> float:
        spec = self.spec
        if isinstance(spec, Constant):
            return constant_update(state.step_size)
        if isinstance(spec, OneFifth):
            return one_fifth_update(state.step_size, record.parent_f, record.offspring_f, spec.increase, spec.decrease)
        if self.last_generation is not None and state.generation >= self.last_generation:
            # nothing left for a recommendation to influence
            return state.step_size
        sigma, transcript = periodic_advisor_update(state, history, spec, self.provider)
        if transcript is not None:
            self.transcripts.append(transcript)
        return sigma
