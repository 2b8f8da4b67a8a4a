import mpmath
import pytest

_mp = mpmath.MPContext()
_mp.dps = 50


def closed_form_v(x) -> float:
    """sqrt(pi) exp(x^2) erfc(x) from mpmath's erfc at 50 digits.

    Independent of every route in the package (none of them calls erfc).
    """
    x = _mp.mpf(x)
    return float(_mp.sqrt(_mp.pi) * _mp.exp(x * x) * _mp.erfc(x))


def closed_form_v_mp(x):
    x = _mp.mpf(x)
    return _mp.sqrt(_mp.pi) * _mp.exp(x * x) * _mp.erfc(x)


@pytest.fixture(scope="session")
def mp50():
    return _mp


# criterion number -> (passed, detail); filled by test_acceptance, printed at the end
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(n: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[n] = (bool(passed), detail)
    print(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
