import pytest

from cwcovert.keying import KeyingStatistics

CARRIER = (
    "cq cq cq calling cq this is XXXXXX testing a radio system.  "
    "forgive any interruption.  have a good day."
)
COVERT = "Mr. Watson come here, I want to see you."
KEY = "secret"

# ITU-R M.1677-1 chart, transcribed independently of the package table.
ITU_CHART = """
a .-      b -...    c -.-.    d -..     e .       f ..-.    g --.
h ....    i ..      j .---    k -.-     l .-..    m --      n -.
o ---     p .--.    q --.-    r .-.     s ...     t -       u ..-
v ...-    w .--     x -..-    y -.--    z --..
1 .----   2 ..---   3 ...--   4 ....-   5 .....
6 -....   7 --...   8 ---..   9 ----.   0 -----
. .-.-.-  , --..--  ? ..--..  / -..-.   = -...-   ' .----.
"""


def itu_chart():
    tokens = ITU_CHART.split()
    return dict(zip(tokens[::2], tokens[1::2]))


@pytest.fixture
def chart():
    return itu_chart()


@pytest.fixture(scope="session")
def sender_stats():
    return KeyingStatistics(0.060, 0.010, 0.180, 0.010)


_ACCEPTANCE = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    ok = call.excinfo is None
    prev = _ACCEPTANCE.get(number, (title, True))
    _ACCEPTANCE[number] = (title, prev[1] and ok)


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, ok = _ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}")
