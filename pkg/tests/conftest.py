import pytest

from epistoch import _pykernels

try:
    from epistoch import _ckernels
except ImportError:  # compiled core not built
    _ckernels = None

BACKENDS = [_pykernels] + ([_ckernels] if _ckernels is not None else [])


@pytest.fixture(params=BACKENDS, ids=lambda m: m.BACKEND)
def backend(request):
    return request.param


requires_compiled = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")


# one summary line per acceptance criterion, shown at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}
ACCEPTANCE_NOTES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
    for note in ACCEPTANCE_NOTES:
        terminalreporter.write_line(f"note: {note}")
