import numpy as np
import pytest

from qworkstats.bits import index_to_bits
from qworkstats.lattice import heavy_hex_layout
from qworkstats.samples import TPMSamples

_ACCEPTANCE: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    detail = dict(item.user_properties).get("detail", "")
    status = "PASS" if call.excinfo is None else "FAIL"
    _ACCEPTANCE[number] = (status, title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        status, title, detail = _ACCEPTANCE[number]
        line = f"criterion {number:2d} {status}  {title}"
        terminalreporter.write_line(f"{line}  [{detail}]" if detail else line)


@pytest.fixture(scope="session")
def hh6():
    return heavy_hex_layout(size_hint=6)


@pytest.fixture(scope="session")
def hh10():
    return heavy_hex_layout(size_hint=10)


def full_basis_samples(n: int) -> TPMSamples:
    bits = index_to_bits(np.arange(1 << n), n).astype(np.uint8)
    return TPMSamples(bits, bits.copy())
