import sys


def pytest_terminal_summary(terminalreporter):
    mod = next((m for m in list(sys.modules.values()) if hasattr(m, "ACCEPTANCE_RESULTS")), None)
    if mod is None or not mod.ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in mod.ACCEPTANCE_TITLES.items():
        ok, detail = mod.ACCEPTANCE_RESULTS.get(n, (False, "not run"))
        terminalreporter.write_line(f"criterion {n:2d} {title}: {'PASS' if ok else 'FAIL'} ({detail})")
