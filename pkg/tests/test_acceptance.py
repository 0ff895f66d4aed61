"""The acceptance suite, one test per criterion.

Each test prints a ``PASS``/``FAIL`` line straight to the terminal (past
pytest's capture) so the table shows up in ``pytest -v`` logs.
"""
import pytest

from paravolt.acceptance import CRITERIA, SUITES, run_suite


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    (res,) = run_suite("core", only=[number])
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.detail


def test_quick_suite_is_a_subset():
    assert set(SUITES["quick"]) < set(SUITES["core"])
    assert SUITES["core"] == tuple(range(1, 11))


def test_cli_accept_exit_code(capsys):
    from paravolt.cli import main

    assert main(["accept", "--only", "1,2"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("PASS   1.") and out[-1] == "2/2 criteria passed"
