import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))  # make oracles importable


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    report = Path(__file__).parent.parent / ".acceptance_cache" / "criteria_report.txt"
    if report.exists():
        terminalreporter.section("acceptance criteria")
        terminalreporter.write(report.read_text())
        report.unlink()
