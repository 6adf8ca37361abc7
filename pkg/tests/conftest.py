import pytest

_AC_LINES: dict[int, str] = {}


class ACRecorder:
    """Collects one verdict line per acceptance criterion."""

    def __init__(self, number: int, title: str):
        self.number = number
        self.title = title
        self.notes: list[str] = []

    def note(self, text: str) -> None:
        self.notes.append(text)


@pytest.fixture
def ac(request):
    marker = request.node.get_closest_marker("ac")
    rec = ACRecorder(*marker.args)
    yield rec
    rep = getattr(request.node, "rep_call", None)
    ok = rep is not None and rep.passed
    detail = "; ".join(rec.notes)
    _AC_LINES[rec.number] = f"AC{rec.number:<2} {'PASS' if ok else 'FAIL'}  {rec.title}" + (f"  [{detail}]" if detail else "")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_configure(config):
    config.addinivalue_line("markers", "ac(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _AC_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_AC_LINES):
        terminalreporter.write_line(_AC_LINES[k])
