"""The eleven acceptance criteria at their stated tolerances.

Each test prints one ``[PASS]``/``[FAIL]`` line, visible without ``-s``.
The same checks back ``qselector check``.
"""
import pytest

from qselector import acceptance


@pytest.fixture(scope="module")
def results():
    return {}


@pytest.mark.parametrize("check", acceptance.CHECKS, ids=lambda c: c.__name__.removeprefix("check_"))
def test_criterion(check, results, capsys):
    result = check()
    results[result.number] = result
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.line()


def test_all_criteria_numbered(results):
    assert sorted(results) == list(range(1, 12))
