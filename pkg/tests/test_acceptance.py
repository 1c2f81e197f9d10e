"""The twelve acceptance criteria, each at its stated tolerance and time budget.

Every criterion prints one ``PASS``/``FAIL`` line; run with ``-s`` to see them
as they finish.
"""

import pytest

from nmforge import acceptance


SLOW = {3, 8, 9, 12}


@pytest.mark.parametrize(
    "number", [pytest.param(k, marks=pytest.mark.slow) if k in SLOW else k for k in sorted(acceptance.CRITERIA)]
)
def test_criterion(number, capsys):
    result = acceptance.run(number)
    with capsys.disabled():
        print("\n" + result.line)
    assert result.passed, result.details
