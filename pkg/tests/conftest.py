from __future__ import annotations

import re

import pytest

from skillroute.backend import BackendConfig, MockBackend
from skillroute.embed import Embedder, HashingProvider
from skillroute.synthetic import question_id_in


@pytest.fixture
def embedder():
    return Embedder(HashingProvider(256))


def mock(model_id, responder=None, script=None, **cfg):
    return MockBackend(BackendConfig(model_id, "mock:test", **cfg), script=script, responder=responder)


def answer_table_backend(model_id, answers, **cfg):
    """Mock expert answering ``answers[qid]`` ("The answer is (X)"); ``None``
    in the table simulates a failed generation."""
    def respond(prompt, _n):
        ans = answers[question_id_in(prompt)]
        if ans is None:
            return None
        return f"{model_id} reasons it through. The answer is ({ans})."
    return mock(model_id, respond, **cfg)


def pytest_terminal_summary(terminalreporter):
    rows = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when == "call" and "test_acceptance.py" in rep.nodeid:
                name = re.sub(r"^.*::", "", rep.nodeid)
                rows.append((rep.location[1], f"[{'PASS' if outcome == 'passed' else 'FAIL'}] {name} "
                                         f"({rep.duration:.2f}s)"))
    if rows:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(rows):
            terminalreporter.write_line(line)
