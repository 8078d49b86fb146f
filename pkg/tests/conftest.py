from __future__ import annotations

from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

# The noisy/clean sentence pair used throughout the alignment tests.
NOISY_TOKENS = (
    "I think the family will stay mentally healty as it is , "
    "without having emtional stress ."
).split()
CLEAN_TOKENS = (
    "I think the family will stay mentally healthy without having "
    "emotional stress ."
).split()


@pytest.fixture(scope="session")
def roundtrip_corpus():
    from gecval.corpus import parse_parallel_tsv

    text = (FIXTURES / "roundtrip_corpus.tsv").read_text(encoding="utf-8")
    return parse_parallel_tsv(text)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    lines = []
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py::test_criterion_" in nodeid:
                name = nodeid.split("::")[-1]
                lines.append((name, "PASS" if status == "passed" else "FAIL"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, verdict in sorted(lines):
            terminalreporter.write_line(f"{verdict}  {name}")
