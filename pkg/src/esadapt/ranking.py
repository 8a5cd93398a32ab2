"""Glicko-2 ratings for fixed-budget comparisons between step-size strategies."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .advisor import format_float
from .es import RunRecord

SCALE = 173.7178
DEFAULT_RATING = 1500.0
DEFAULT_DEVIATION = 350.0
DEFAULT_VOLATILITY = 0.06
DEFAULT_TAU = 0.5
CONVERGENCE_TOLERANCE = 1e-6
MAX_ITERATIONS = 100

TABLE_COLUMNS = ("method", "rating", "deviation", "volatility", "games", "wins", "draws", "losses")


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class GlickoState:
    rating: float = DEFAULT_RATING
    deviation: float = DEFAULT_DEVIATION
    volatility: float = DEFAULT_VOLATILITY

    def __post_init__(self) -> None:
        if not self.deviation > 0 or not self.volatility > 0:
            raise ValueError(f"deviation and volatility must be positive: {self}")

    @property
    def mu(self) -> float:
        return (self.rating - DEFAULT_RATING) / SCALE

    @property
    def phi(self) -> float:
        return self.deviation / SCALE


@dataclass(frozen=True)
class MatchResult:
    method_a: str
    method_b: str
    score_a: float
    function_id: int
    dimension: int
    round: int

    @property
    def score_b(self) -> float:
        return 1.0 - self.score_a


@dataclass(frozen=True)
class RankRow:
    method: str
    rating: float
    deviation: float
    volatility: float
    games: int
    wins: int
    draws: int
    losses: int


def _g(phi: float) -> float:
    return 1.0 / math.sqrt(1.0 + 3.0 * phi * phi / math.pi**2)


def _expected(mu: float, mu_j: float, phi_j: float) -> float:
    return 1.0 / (1.0 + math.exp(-_g(phi_j) * (mu - mu_j)))


def _new_volatility(phi: float, sigma: float, delta: float, v: float, tau: float) -> float:
    # Illinois-style regula falsi on f(x), x = ln(sigma'^2)
    a = math.log(sigma * sigma)

    def f(x: float) -> float:
        ex = math.exp(x)
        num = ex * (delta * delta - phi * phi - v - ex)
        den = 2.0 * (phi * phi + v + ex) ** 2
        return num / den - (x - a) / (tau * tau)

    A = a
    if delta * delta > phi * phi + v:
        B = math.log(delta * delta - phi * phi - v)
    else:
        k = 1
        while f(a - k * tau) < 0:
            k += 1
            if k > MAX_ITERATIONS:
                raise ConvergenceError("could not bracket the volatility root")
        B = a - k * tau
    f_a, f_b = f(A), f(B)
    for _ in range(MAX_ITERATIONS):
        if abs(B - A) <= CONVERGENCE_TOLERANCE:
            return math.exp(A / 2.0)
        C = A + (A - B) * f_a / (f_b - f_a)
        f_c = f(C)
        if f_c * f_b <= 0:
            A, f_a = B, f_b
        else:
            f_a /= 2.0
        B, f_b = C, f_c
    raise ConvergenceError(f"volatility iteration did not converge in {MAX_ITERATIONS} steps")


def glicko2_update(
    state: GlickoState,
    opponents: Sequence[tuple[GlickoState, float]],
    tau: float = DEFAULT_TAU,
) -> GlickoState:
    """One rating period for one player.

    ``opponents`` holds ``(opponent_state, score)`` pairs with scores in
    {0, 0.5, 1}. With no games the deviation grows and nothing else changes.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    mu, phi, sigma = state.mu, state.phi, state.volatility
    if not opponents:
        phi_star = math.sqrt(phi * phi + sigma * sigma)
        return GlickoState(state.rating, phi_star * SCALE, sigma)

    v_inv = 0.0
    gain = 0.0
    for opp, score in opponents:
        g = _g(opp.phi)
        e = _expected(mu, opp.mu, opp.phi)
        v_inv += g * g * e * (1.0 - e)
        gain += g * (score - e)
    v = 1.0 / v_inv
    delta = v * gain

    new_sigma = _new_volatility(phi, sigma, delta, v, tau)
    phi_star = math.sqrt(phi * phi + new_sigma * new_sigma)
    new_phi = 1.0 / math.sqrt(1.0 / (phi_star * phi_star) + 1.0 / v)
    new_mu = mu + new_phi * new_phi * gain
    return GlickoState(SCALE * new_mu + DEFAULT_RATING, SCALE * new_phi, new_sigma)


def compare_runs(run_a: RunRecord, run_b: RunRecord, budget: int) -> float:
    """1 if ``run_a`` has the lower best-so-far after ``budget`` evaluations, 0.5 on a tie."""
    for run in (run_a, run_b):
        if len(run.best_so_far) < budget:
            raise ValueError(
                f"run {run.strategy} f{run.function_id} seed {run.seed} has "
                f"{len(run.best_so_far)} evaluations, fewer than budget {budget}"
            )
    a = run_a.best_so_far[budget - 1]
    b = run_b.best_so_far[budget - 1]
    if a < b:
        return 1.0
    if a == b:
        return 0.5
    return 0.0


Cell = tuple[int, int]


def group_runs(runs: Iterable[RunRecord]) -> dict[str, dict[Cell, list[RunRecord]]]:
    """``method -> (function_id, dimension) -> runs`` sorted by seed."""
    grouped: dict[str, dict[Cell, list[RunRecord]]] = defaultdict(lambda: defaultdict(list))
    for run in runs:
        grouped[run.strategy][(run.function_id, run.dimension)].append(run)
    return {
        method: {cell: sorted(rs, key=lambda r: r.seed) for cell, rs in cells.items()}
        for method, cells in grouped.items()
    }


def build_tournament(
    runs: Mapping[str, Mapping[Cell, Sequence[RunRecord]]],
    rounds: int,
    budget: int,
    rng: np.random.Generator,
) -> list[MatchResult]:
    methods = sorted(runs)
    cells = sorted({cell for per_method in runs.values() for cell in per_method})
    missing = [
        f"{method} f{fid} d{dim}" for method in methods for fid, dim in cells if not runs[method].get((fid, dim))
    ]
    if missing:
        raise KeyError(f"missing runs for cells: {', '.join(missing)}")

    matches: list[MatchResult] = []
    for rnd in range(rounds):
        for fid, dim in cells:
            for a, b in combinations(methods, 2):
                pool_a = runs[a][(fid, dim)]
                pool_b = runs[b][(fid, dim)]
                run_a = pool_a[rng.integers(len(pool_a))]
                run_b = pool_b[rng.integers(len(pool_b))]
                matches.append(MatchResult(a, b, compare_runs(run_a, run_b, budget), fid, dim, rnd))
    return matches


def rank(
    match_results: Sequence[MatchResult],
    methods: Sequence[str],
    update_schedule: str = "round",
    tau: float = DEFAULT_TAU,
) -> list[RankRow]:
    """Rate every method; one Glicko-2 period per round (or one for everything with ``"single"``)."""
    if update_schedule not in ("round", "single"):
        raise ValueError(f"unknown update schedule {update_schedule!r}")
    known = set(methods)
    for m in match_results:
        for name in (m.method_a, m.method_b):
            if name not in known:
                raise KeyError(f"match references unknown method {name!r}")

    states = {m: GlickoState() for m in methods}
    tally = {m: [0, 0, 0] for m in methods}
    periods: dict[int, list[MatchResult]] = defaultdict(list)
    for m in match_results:
        periods[m.round if update_schedule == "round" else 0].append(m)
        for name, score in ((m.method_a, m.score_a), (m.method_b, m.score_b)):
            tally[name][0 if score == 1.0 else 1 if score == 0.5 else 2] += 1

    for period in sorted(periods):
        games: dict[str, list[tuple[GlickoState, float]]] = {m: [] for m in methods}
        for m in periods[period]:
            games[m.method_a].append((states[m.method_b], m.score_a))
            games[m.method_b].append((states[m.method_a], m.score_b))
        states = {m: glicko2_update(states[m], games[m], tau) for m in methods}

    rows = [
        RankRow(m, states[m].rating, states[m].deviation, states[m].volatility, sum(tally[m]), *tally[m])
        for m in methods
    ]
    return sorted(rows, key=lambda r: (-r.rating, r.method))


def rank_runs(
    runs: Iterable[RunRecord],
    rounds: int,
    seed: int,
    budget: int | None = None,
    dimension: int | None = None,
) -> list[RankRow]:
    runs = [r for r in runs if dimension is None or r.dimension == dimension]
    if not runs:
        raise ValueError(f"no runs to rank{'' if dimension is None else f' for dimension {dimension}'}")
    if budget is None:
        budget = min(r.budget for r in runs)
    grouped = group_runs(runs)
    matches = build_tournament(grouped, rounds, budget, np.random.default_rng(seed))
    return rank(matches, sorted(grouped))


def write_table(rows: Sequence[RankRow], path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TABLE_COLUMNS)
        for r in rows:
            writer.writerow(
                [
                    r.method,
                    format_float(r.rating),
                    format_float(r.deviation),
                    format_float(r.volatility),
                    r.games,
                    r.wins,
                    r.draws,
                    r.losses,
                ]
            )
    return path


def read_table(path: str | Path) -> list[RankRow]:
    with open(path, newline="") as fh:
        return [
            RankRow(
                row["method"],
                float(row["rating"]),
                float(row["deviation"]),
                float(row["volatility"]),
                int(row["games"]),
                int(row["wins"]),
                int(row["draws"]),
                int(row["losses"]),
            )
            for row in csv.DictReader(fh)
        ]
