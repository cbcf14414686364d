"""Print one PASS/FAIL line per acceptance criterion after the run."""


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call" and outcome != "error":
                continue
            props = dict(getattr(rep, "user_properties", ()))
            if "criterion" not in props:
                continue
            status = "PASS" if rep.passed else "FAIL"
            detail = props.get("detail", "")
            lines.append((props["criterion"], f"criterion {props['criterion']:>2}  {status}  "
                                              f"{props.get('title', '')}  {detail}".rstrip()))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, text in sorted(lines):
            terminalreporter.write_line(text)
