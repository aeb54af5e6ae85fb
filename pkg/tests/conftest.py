from __future__ import annotations

import pytest

from corpusgen import fixture_corpus, synth_citation_set
from rweval.corpus import save_corpus


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when == "call" and "test_acceptance" in report.nodeid:
        status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        name = report.nodeid.split("::")[-1]
        print(f"\nACCEPTANCE {status}: {name}")


@pytest.fixture
def corpus():
    return fixture_corpus()


@pytest.fixture
def corpus_file(tmp_path):
    path = tmp_path / "corpus.json"
    save_corpus(fixture_corpus(), path)
    return path


@pytest.fixture
def twelve_paper_set():
    return synth_citation_set("PN", 12)
