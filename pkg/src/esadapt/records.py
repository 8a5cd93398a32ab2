"""Line-delimited persistence of :class:`~esadapt.es.RunRecord`.

Layout::

    # function_id=1 dimension=2 strategy=constant seed=42 budget=1000 instance_seed=7 f_opt=-12.5 mutation=gaussian-isotropic
    generation,sigma_used,parent_f,offspring_f,accepted,best_so_far
    0,0.1,,3.25,,3.25
    1,0.1,3.25,4.0,false,3.25

Row 0 is the initial evaluation (no parent, no selection). Floats use the
shortest round-trip representation, so a save/load cycle is lossless.
"""

from __future__ import annotations

import os
from pathlib import Path

from .advisor import format_float, read_transcripts, write_transcripts
from .es import EvaluationRecord, RunRecord

COLUMNS = "generation,sigma_used,parent_f,offspring_f,accepted,best_so_far"
_HEADER_KEYS = ("function_id", "dimension", "strategy", "seed", "budget", "instance_seed", "f_opt", "mutation")


class RecordFormatError(ValueError):
    pass


def format_run(run: RunRecord) -> str:
    meta = {
        "function_id": run.function_id,
        "dimension": run.dimension,
        "strategy": run.strategy,
        "seed": run.seed,
        "budget": run.budget,
        "instance_seed": "" if run.instance_seed is None else run.instance_seed,
        "f_opt": format_float(run.f_opt),
        "mutation": run.mutation,
    }
    lines = ["# " + " ".join(f"{k}={meta[k]}" for k in _HEADER_KEYS), COLUMNS]
    f0 = format_float(run.best_so_far[0])
    lines.append(f"0,{format_float(run.sigma_trace[0])},,{f0},,{f0}")
    for rec, best in zip(run.records, run.best_so_far[1:]):
        lines.append(
            ",".join(
                (
                    str(rec.generation),
                    format_float(rec.sigma_used),
                    format_float(rec.parent_f),
                    format_float(rec.offspring_f),
                    "true" if rec.accepted else "false",
                    format_float(best),
                )
            )
        )
    return "\n".join(lines) + "\n"


def parse_run(text: str, source: str | Path = "<record>") -> RunRecord:
    lines = text.splitlines()
    if len(lines) < 3 or not lines[0].startswith("# "):
        raise RecordFormatError(f"{source}: missing header line")
    try:
        meta = dict(item.split("=", 1) for item in lines[0][2:].split())
    except ValueError:
        raise RecordFormatError(f"{source}:1: malformed header") from None
    missing = [k for k in _HEADER_KEYS if k not in meta]
    if missing:
        raise RecordFormatError(f"{source}:1: header lacks {missing}")
    if lines[1] != COLUMNS:
        raise RecordFormatError(f"{source}:2: unexpected column line {lines[1]!r}")

    records: list[EvaluationRecord] = []
    sigma_trace: list[float] = []
    best_so_far: list[float] = []
    for lineno, line in enumerate(lines[2:], start=3):
        cells = line.split(",")
        if len(cells) != 6:
            raise RecordFormatError(f"{source}:{lineno}: expected 6 fields, got {len(cells)}")
        try:
            generation = int(cells[0])
            sigma = float(cells[1])
            best = float(cells[5])
            if generation > 0:
                records.append(
                    EvaluationRecord(
                        generation=generation,
                        sigma_used=sigma,
                        parent_f=float(cells[2]),
                        offspring_f=float(cells[3]),
                        accepted=cells[4] == "true",
                    )
                )
        except ValueError as exc:
            raise RecordFormatError(f"{source}:{lineno}: {exc}") from None
        sigma_trace.append(sigma)
        best_so_far.append(best)

    budget = int(meta["budget"])
    if len(best_so_far) != budget:
        raise RecordFormatError(f"{source}: {len(best_so_far)} evaluation rows, header says budget={budget}")
    return RunRecord(
        function_id=int(meta["function_id"]),
        dimension=int(meta["dimension"]),
        strategy=meta["strategy"],
        seed=int(meta["seed"]),
        budget=budget,
        records=records,
        sigma_trace=sigma_trace,
        best_so_far=best_so_far,
        instance_seed=int(meta["instance_seed"]) if meta["instance_seed"] else None,
        f_opt=float(meta["f_opt"]),
        mutation=meta["mutation"],
    )


def transcript_path(record_path: str | Path) -> Path:
    record_path = Path(record_path)
    return record_path.with_name(record_path.stem + ".transcript.txt")


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def save_run(run: RunRecord, path: str | Path) -> Path:
    """Write transcripts (if any) first; the record file is the completion marker."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if run.transcripts:
        tmp = transcript_path(path).with_suffix(".tmp")
        write_transcripts(run.transcripts, tmp)
        os.replace(tmp, transcript_path(path))
    _atomic_write(path, format_run(run))
    return path


def load_run(path: str | Path) -> RunRecord:
    path = Path(path)
    run = parse_run(path.read_text(), path)
    tpath = transcript_path(path)
    if tpath.exists():
        run.transcripts = read_transcripts(tpath)
    return run


def find_record_files(root: str | Path) -> list[Path]:
    return sorted(p for p in Path(root).rglob("run*.csv") if p.is_file())


def load_runs(root: str | Path) -> list[RunRecord]:
    return [load_run(p) for p in find_record_files(root)]
