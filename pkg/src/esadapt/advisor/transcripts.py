"""Audit records of advisor exchanges and their text file format.

A transcript file is a sequence of blocks::

    === exchange 1 ===
    generation: 50
    parsed_sigma: 0.05
    clamped: false
    failure:
    latency_ms: 0.0
    --- system ---
    | <system message lines>
    --- user ---
    | <user message lines>
    --- response ---
    | <raw response lines>
    === end ===

Message lines carry a ``| `` prefix so their content can never be mistaken
for a delimiter.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .prompt import format_float

TRANSPORT_FAILURE = "transport error"
PARSE_FAILURE = "unparseable response"

_FIELDS = ("generation", "parsed_sigma", "clamped", "failure", "latency_ms")
_SECTIONS = ("system", "user", "response")


@dataclass(frozen=True)
class PromptTranscript:
    generation: int
    rendered_system: str
    rendered_user: str
    raw_response: str
    parsed_sigma: float | None
    clamped: bool
    failure: str | None = None
    latency_ms: float = 0.0

    @property
    def transport_failed(self) -> bool:
        return self.failure is not None and self.failure.startswith(TRANSPORT_FAILURE)


class TranscriptFormatError(ValueError):
    def __init__(self, path, lineno: int, message: str) -> None:
        super().__init__(f"{path}:{lineno}: {message}")
        self.lineno = lineno


def format_transcripts(transcripts: Iterable[PromptTranscript]) -> str:
    out: list[str] = []
    for index, t in enumerate(transcripts, start=1):
        out.append(f"=== exchange {index} ===")
        out.append(f"generation: {t.generation}")
        out.append(f"parsed_sigma: {'' if t.parsed_sigma is None else format_float(t.parsed_sigma)}")
        out.append(f"clamped: {'true' if t.clamped else 'false'}")
        out.append(f"failure: {'' if t.failure is None else t.failure.replace(chr(10), ' ')}")
        out.append(f"latency_ms: {format_float(t.latency_ms)}")
        for section, text in zip(_SECTIONS, (t.rendered_system, t.rendered_user, t.raw_response)):
            out.append(f"--- {section} ---")
            out.extend("| " + line for line in text.split("\n"))
        out.append("=== end ===")
    return "".join(line + "\n" for line in out)


def write_transcripts(transcripts: Iterable[PromptTranscript], path: str | Path) -> None:
    Path(path).write_text(format_transcripts(transcripts))


def parse_transcripts(text: str, path: str | Path = "<transcript>") -> list[PromptTranscript]:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    result: list[PromptTranscript] = []
    i = 0

    def fail(message: str):
        raise TranscriptFormatError(path, i + 1, message)

    while i < len(lines):
        if not lines[i].startswith("=== exchange "):
            fail(f"expected '=== exchange N ===', got {lines[i]!r}")
        i += 1
        fields: dict[str, str] = {}
        for name in _FIELDS:
            if i >= len(lines):
                fail(f"unexpected end of file, expected '{name}:'")
            key, sep, value = lines[i].partition(":")
            if key != name or not sep:
                fail(f"expected '{name}:', got {lines[i]!r}")
            fields[name] = value.strip()
            i += 1
        sections: dict[str, str] = {}
        for section in _SECTIONS:
            if i >= len(lines) or lines[i] != f"--- {section} ---":
                fail(f"expected '--- {section} ---'")
            i += 1
            body = []
            while i < len(lines) and lines[i].startswith("| "):
                body.append(lines[i][2:])
                i += 1
            sections[section] = "\n".join(body)
        if i >= len(lines) or lines[i] != "=== end ===":
            fail("expected '=== end ==='")
        i += 1
        try:
            generation = int(fields["generation"])
            parsed = float(fields["parsed_sigma"]) if fields["parsed_sigma"] else None
            latency = float(fields["latency_ms"])
        except ValueError as exc:
            i -= 1
            fail(f"bad numeric field: {exc}")
        if fields["clamped"] not in ("true", "false"):
            fail(f"clamped must be true/false, got {fields['clamped']!r}")
        result.append(
            PromptTranscript(
                generation=generation,
                rendered_system=sections["system"],
                rendered_user=sections["user"],
                raw_response=sections["response"],
                parsed_sigma=parsed,
                clamped=fields["clamped"] == "true",
                failure=fields["failure"] or None,
                latency_ms=latency,
            )
        )
    return result


def read_transcripts(path: str | Path) -> list[PromptTranscript]:
    return parse_transcripts(Path(path).read_text(), path)
