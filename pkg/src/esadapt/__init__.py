"""(1+1)-ES step-size adaptation laboratory: constant, one-fifth rule and language-model advisors."""

from .adaptation import Constant, OneFifth, PeriodicAdvisor, one_fifth_update, parse_strategy
from .es import EsState, EvaluationRecord, RunRecord, mutate, run, step
from .problems import ProblemInstance, evaluate, make_instance, make_suite, sample_initial_point

__all__ = [
    "Constant",
    "EsState",
    "EvaluationRecord",
    "OneFifth",
    "PeriodicAdvisor",
    "ProblemInstance",
    "RunRecord",
    "evaluate",
    "make_instance",
    "make_suite",
    "mutate",
    "one_fifth_update",
    "parse_strategy",
    "run",
    "sample_initial_point",
    "step",
]
