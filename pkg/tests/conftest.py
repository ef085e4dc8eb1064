import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from itts_lab.encoder import EncoderConfig, init_weights  # noqa: E402
from itts_lab.synth import generate_corpus  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def small_config():
    return EncoderConfig.desk(hidden_dim=8, embed_dim=6, channels=5, kernel_width=3, seed=3)


@pytest.fixture(scope="session")
def small_weights(small_config):
    return init_weights(small_config)


@pytest.fixture(scope="session")
def desk_config():
    return EncoderConfig.desk(seed=0)


@pytest.fixture(scope="session")
def desk_weights(desk_config):
    return init_weights(desk_config)


@pytest.fixture(scope="session")
def corpus12():
    return generate_corpus(12, seed=5, max_words=14)


@pytest.fixture(scope="session")
def pinned():
    return json.loads((FIXTURES / "drift_200.json").read_text())


@pytest.fixture(scope="session")
def pinned_records(desk_config, desk_weights, pinned):
    from itts_lab.pipeline import compute_corpus_drift
    corpus = generate_corpus(pinned["corpus"]["n_sentences"], seed=pinned["corpus"]["seed"])
    return compute_corpus_drift(corpus, desk_weights, desk_config, pinned["k_max"])


# one PASS/FAIL line per acceptance criterion in the terminal summary
_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.skipped:
        return
    if report.when == "call" or report.failed:
        number, title = marker.args
        prev = _CRITERIA.get(number, (title, True))[1]
        _CRITERIA[number] = (title, prev and report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok = _CRITERIA[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number}: {title}")
