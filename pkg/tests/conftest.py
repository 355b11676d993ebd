import pytest

from kslab.grid.field import GridSpec


def pytest_addoption(parser: pytest.Parser) -> None:
    parser.addoption(
        "--runslow", action="store_true", default=False, help="run acceptance-scale tests"
    )


def pytest_configure(config: pytest.Config) -> None:
    config.addinivalue_line("markers", "slow: acceptance-scale run, needs --runslow")


def pytest_collection_modifyitems(config: pytest.Config, items: list[pytest.Item]) -> None:
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def line() -> GridSpec:
    """The reference 1D grid: 512 cells on [-8, 8)."""
    return GridSpec(1, 512, 8.0)


@pytest.fixture
def plane() -> GridSpec:
    return GridSpec(2, 64, 6.0)
