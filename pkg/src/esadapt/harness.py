"""Experiment configuration and orchestration."""

from __future__ import annotations

import hashlib
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml

from . import problems
from .adaptation import DEFAULT_PERIOD, DEFAULT_SIGMA, PeriodicAdvisor, StrategySpec, parse_strategy
from .advisor import PROFILES, AdvisorConfig, make_provider, write_transcripts
from .es import GAUSSIAN, MUTATION_MODES, RunRecord, run
from .records import save_run, transcript_path

logger = logging.getLogger(__name__)

_shared_providers: dict[AdvisorConfig, Any] = {}
_shared_lock = threading.Lock()


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    function_ids: list[int]
    strategies: list[StrategySpec]
    dimensions: list[int] = field(default_factory=lambda: [2, 5, 30])
    runs_per_cell: int = 10
    budget: int = 1000
    mutation_mode: str = GAUSSIAN
    instance_seed: int = 0
    master_seed: int = 0
    output_dir: Path = Path("results")
    advisors: dict[str, AdvisorConfig] = field(default_factory=dict)
    base_dir: Path = Path(".")
    commit_on_advisor_failure: bool = False

    def __post_init__(self) -> None:
        if self.runs_per_cell < 1:
            raise ConfigError("runs_per_cell must be >= 1")
        if self.budget < 1:
            raise ConfigError("budget must be >= 1")
        if not self.strategies:
            raise ConfigError("at least one strategy is required")
        if self.mutation_mode not in MUTATION_MODES:
            raise ConfigError(f"mutation_mode must be one of {MUTATION_MODES}")
        names = [s.name for s in self.strategies]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate strategy names: {names}")
        if self.instance_seed < 0 or self.master_seed < 0:
            raise ConfigError("seeds must be non-negative")

    @property
    def records_dir(self) -> Path:
        return self.output_dir / "records"


def _advisor_from_dict(name: str, raw: dict) -> AdvisorConfig:
    raw = dict(raw)
    base = raw.pop("profile", None)
    try:
        if base is not None:
            if base not in PROFILES:
                raise ConfigError(f"advisor {name!r}: unknown profile {base!r}")
            return replace(PROFILES[base], name=name, **raw)
        return AdvisorConfig(name=name, **raw)
    except TypeError as exc:
        raise ConfigError(f"advisor {name!r}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def config_from_dict(raw: dict, base_dir: str | Path = ".") -> ExperimentConfig:
    raw = dict(raw)
    base_dir = Path(base_dir)
    try:
        advisors = {name: _advisor_from_dict(name, spec) for name, spec in (raw.pop("advisors", None) or {}).items()}
        initial_sigma = float(raw.pop("initial_sigma", DEFAULT_SIGMA))
        period = int(raw.pop("period", DEFAULT_PERIOD))
        strategies = []
        for entry in raw.pop("strategies", []) or []:
            if not isinstance(entry, str):
                raise ConfigError(f"strategy entries must be strings, got {entry!r}")
            strategies.append(parse_strategy(entry, advisors, initial_sigma=initial_sigma, period=period))
        if "function_ids" not in raw:
            raise ConfigError("config needs function_ids")
        output_dir = Path(raw.pop("output_dir", "results"))
        if not output_dir.is_absolute():
            output_dir = base_dir / output_dir
        known = set(ExperimentConfig.__dataclass_fields__) - {"strategies", "advisors", "output_dir", "base_dir"}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        config = ExperimentConfig(
            strategies=strategies, advisors=advisors, output_dir=output_dir, base_dir=base_dir, **raw
        )
        problems.make_suite(config.function_ids, config.dimensions, config.instance_seed)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc).strip("'\"")) from None
    return config


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return config_from_dict(raw, path.parent)


def derive_seed(master_seed: int, function_id: int, dimension: int, strategy_name: str, run_index: int) -> int:
    """Stable 63-bit seed: SHA-256 of the cell coordinates joined by '|'."""
    key = f"{master_seed}|{function_id}|{dimension}|{strategy_name}|{run_index}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big") >> 1


def strategy_slug(name: str) -> str:
    return name.replace(":", "-").replace("/", "-")


def record_path(records_dir: Path, function_id: int, dimension: int, strategy_name: str, run_index: int) -> Path:
    return records_dir / f"f{function_id:02d}_d{dimension}" / strategy_slug(strategy_name) / f"run{run_index:03d}.csv"


@dataclass(frozen=True)
class Cell:
    instance: problems.ProblemInstance
    strategy: StrategySpec
    run_index: int
    seed: int
    path: Path


def plan_cells(config: ExperimentConfig) -> list[Cell]:
    suite = problems.make_suite(config.function_ids, config.dimensions, config.instance_seed)
    cells = []
    for instance in suite:
        for strategy in config.strategies:
            for idx in range(config.runs_per_cell):
                seed = derive_seed(config.master_seed, instance.id, instance.dimension, strategy.name, idx)
                path = record_path(config.records_dir, instance.id, instance.dimension, strategy.name, idx)
                cells.append(Cell(instance, strategy, idx, seed, path))
    return cells


def _provider_for(strategy: StrategySpec, config: ExperimentConfig):
    if not isinstance(strategy, PeriodicAdvisor):
        return None
    advisor = strategy.advisor
    if advisor.provider == "http-chat":
        # one client per profile so pacing is shared by every run
        with _shared_lock:
            if advisor not in _shared_providers:
                _shared_providers[advisor] = make_provider(advisor, config.base_dir)
            return _shared_providers[advisor]
    # replay and surrogate state belongs to a single run
    return make_provider(advisor, config.base_dir)


@dataclass
class CellOutcome:
    cell: Cell
    status: str  # "done", "skipped" or "failed"
    message: str = ""


def execute_cell(cell: Cell, config: ExperimentConfig) -> CellOutcome:
    if cell.path.exists():
        return CellOutcome(cell, "skipped")
    try:
        provider = _provider_for(cell.strategy, config)
        record: RunRecord = run(
            cell.instance,
            cell.strategy,
            config.budget,
            cell.seed,
            mutation=config.mutation_mode,
            provider=provider,
        )
    except Exception as exc:
        logger.exception("cell %s failed", cell.path)
        return CellOutcome(cell, "failed", f"{type(exc).__name__}: {exc}")
    outages = [t for t in record.transcripts if t.transport_failed]
    failed_log = transcript_path(cell.path).with_suffix(".failed")
    if outages and not config.commit_on_advisor_failure:
        failed_log.parent.mkdir(parents=True, exist_ok=True)
        write_transcripts(record.transcripts, failed_log)
        return CellOutcome(cell, "failed", f"{len(outages)} advisor transport failures; see {failed_log}")
    save_run(record, cell.path)
    failed_log.unlink(missing_ok=True)
    return CellOutcome(cell, "done")


def execute(config: ExperimentConfig, jobs: int = 1) -> list[CellOutcome]:
    cells = plan_cells(config)
    config.records_dir.mkdir(parents=True, exist_ok=True)
    problems.write_manifest(
        problems.make_suite(config.function_ids, config.dimensions, config.instance_seed),
        config.output_dir / "suite.csv",
    )
    if jobs <= 1:
        return [execute_cell(c, config) for c in cells]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda c: execute_cell(c, config), cells))
