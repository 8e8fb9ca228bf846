from collections import OrderedDict

# criterion -> list of (part, passed, detail); filled by test_acceptance
ACCEPTANCE: "OrderedDict[str, list]" = OrderedDict()


def record(criterion: str, part: str, passed: bool, detail: str):
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(passed), detail))
    return passed


def acceptance_lines() -> list[str]:
    lines = []
    for crit in sorted(ACCEPTANCE, key=lambda c: int(c[1:])):
        parts = ACCEPTANCE[crit]
        ok = all(p for _, p, _ in parts)
        body = "; ".join(f"{name}: {'ok' if p else 'FAIL'} ({d})" for name, p, d in parts)
        lines.append(f"{'PASS' if ok else 'FAIL'} {crit} {body}")
    return lines


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance_lines():
        terminalreporter.write_line(line)
