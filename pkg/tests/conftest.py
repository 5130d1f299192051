import pytest

from hoegkit.extraction import extract
from hoegkit.features import build_feature_config, fit_normalization
from hoegkit.io import build_otc_fixture


@pytest.fixture
def otc():
    return build_otc_fixture()


@pytest.fixture
def execution_a(otc):
    (ex,) = extract(otc, "cc")
    return ex


@pytest.fixture
def otc_features(otc, execution_a):
    cfg = build_feature_config([execution_a], otc)
    return cfg, fit_normalization([execution_a], otc, cfg)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_line():
    """Record one PASS/FAIL line; printed now and again in the terminal summary."""

    def record(number: int, title: str, ok: bool | None, detail: str) -> bool:
        status = "SKIP" if ok is None else "PASS" if ok else "FAIL"
        line = f"criterion {number} {status}: {title} ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
