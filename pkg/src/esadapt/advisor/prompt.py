"""Log condensation, prompt rendering and reply parsing for the step-size advisor."""

from __future__ import annotations

import re
from typing import Iterable, Sequence

SYSTEM_MESSAGE = "You are a powerful and intelligent AI capable of analyzing logs and performing reasoning"

USER_TEMPLATE = (
    "Q: I am running an optimization process over an unknown function.\n"
    "I am using a 1+1-ES to optimize the function.\n"
    "f(x) = y indicates an evaluation.\n"
    "x1 -> x2 indicates that x1, using the current step size, produced a new candidate solution x2.\n"
    "It is extremely important that the step size you propose is contained between 0.999 and 0.001.\n"
    "Here's the log:```txt\n"
    "<LOG CONTENT>\n"
    "```\n"
    "I am currently using the following step size: <STEP SIZE>.\n"
    "Should I change it or not?\n"
    "Do you think that the current step size is good enough to make the process converge as soon as possible?\n"
    "Reply with the following structure:\n"
    "`Reasoning: <explanation>\n"
    "Recommended step size: <new step size>`"
)

SIGMA_BOUNDS = (0.001, 0.999)

_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_RECOMMENDATION_RE = re.compile(r"recommended\s+step[\s_-]*size[^\n\d]{0,40}?(" + _NUMBER + ")", re.IGNORECASE)
_ANY_NUMBER_RE = re.compile(_NUMBER)


def format_float(value: float) -> str:
    """Shortest decimal string that round-trips to ``value``."""
    return repr(float(value))


def evaluation_line(generation: int, fitness: float) -> str:
    return f"f(x{generation}) = {format_float(fitness)}"


def sigma_change_line(old: float, new: float) -> str:
    return f"step size changed: {format_float(old)} -> {format_float(new)}"


def truncation_marker(shown: int, total: int) -> str:
    return f"[log truncated: showing last {shown} of {total} entries]"


def sigma_changes_from(history: Sequence) -> list[tuple[int, float, float]]:
    """``(generation, old, new)`` for every σ change visible in ``history``.

    A change decided after generation g shows up as a different
    ``sigma_used`` at generation g + 1.
    """
    changes = []
    for prev, cur in zip(history, history[1:]):
        if cur.sigma_used != prev.sigma_used:
            changes.append((prev.generation, prev.sigma_used, cur.sigma_used))
    return changes


def condense_log(history: Sequence, sigma_changes: Iterable[tuple[int, float, float]], char_budget: int) -> str:
    by_generation: dict[int, list[str]] = {}
    for generation, old, new in sigma_changes:
        by_generation.setdefault(generation, []).append(sigma_change_line(old, new))

    lines = []
    for rec in history:
        lines.append(evaluation_line(rec.generation, rec.offspring_f))
        lines.extend(by_generation.pop(rec.generation, ()))
    # changes not attached to a logged evaluation go last, in generation order
    for generation in sorted(by_generation):
        lines.extend(by_generation[generation])

    text = "\n".join(lines)
    if len(text) <= char_budget:
        return text

    total = len(lines)
    # keep the newest lines whose joined length fits next to the marker
    kept = 0
    size = 0
    for line in reversed(lines):
        extra = len(line) + 1
        marker = truncation_marker(kept + 1, total)
        if len(marker) + size + extra > char_budget:
            break
        kept += 1
        size += extra
    marker = truncation_marker(kept, total)
    if len(marker) > char_budget:
        return ""
    return "\n".join([marker, *lines[total - kept :]])


def build_prompt(log_text: str, current_sigma: float) -> tuple[str, str]:
    user = USER_TEMPLATE.replace("<LOG CONTENT>", log_text, 1)
    # the sigma slot comes after the log, so a log containing the
    # placeholder text cannot capture it
    head, sep, tail = user.rpartition("<STEP SIZE>")
    return SYSTEM_MESSAGE, head + format_float(current_sigma) + tail


def parse_recommendation(
    raw_response: str,
    bounds: tuple[float, float] = SIGMA_BOUNDS,
    fallback_sigma: float = 0.1,
) -> tuple[float, bool, bool]:
    """Extract the recommended step size from a model reply.

    Returns ``(sigma, clamped, parsed)``. The last "Recommended step size"
    statement wins; failing that, the last number anywhere in the text.
    Unparseable replies return ``(fallback_sigma, False, False)``.
    """
    low, high = bounds
    matches = _RECOMMENDATION_RE.findall(raw_response)
    if matches:
        token = matches[-1]
    else:
        numbers = _ANY_NUMBER_RE.findall(raw_response)
        if not numbers:
            return fallback_sigma, False, False
        token = numbers[-1]
    value = float(token)
    clamped_value = min(max(value, low), high)
    return clamped_value, clamped_value != value, True
