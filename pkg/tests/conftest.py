import pytest

from heatbench.data import corpus_holidays, preprocess_corpus, synthesize_corpus
from heatbench.windowing import WindowSpec, build_datasets


@pytest.fixture(scope="session")
def small_frames():
    corpus = synthesize_corpus(2, 40, seed=3)
    return preprocess_corpus(corpus, corpus_holidays(corpus)).frames


@pytest.fixture(scope="session")
def small_split(small_frames):
    return build_datasets(small_frames, WindowSpec(12, 3), "sequential")


ACCEPTANCE_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = {}


@pytest.fixture
def acceptance(request):
    """Record one criterion's outcome; the lines are repeated in the terminal summary."""
    results = request.config.stash[ACCEPTANCE_KEY]

    def record(number: int, title: str, ok: bool, detail: str) -> None:
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        results[number] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(ACCEPTANCE_KEY, {})
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
