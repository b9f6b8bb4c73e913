import pytest

from dephasing_control import SpectralParams, build_env


@pytest.fixture(scope="session")
def env_s3():
    return build_env(SpectralParams(3.0), 2000, 50.0)


@pytest.fixture(scope="session")
def env_s4():
    return build_env(SpectralParams(4.0), 2000, 50.0)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
