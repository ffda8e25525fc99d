"""Shared record of acceptance outcomes (read by the terminal summary hook)."""

RESULTS: dict[int, tuple[bool, str, str]] = {}


def record(number: int, title: str, passed: bool, detail: str) -> str:
    RESULTS[number] = (passed, title, detail)
    return line(number)


def line(number: int) -> str:
    passed, title, detail = RESULTS[number]
    return f"criterion {number} {'PASS' if passed else 'FAIL'}: {title} ({detail})"
