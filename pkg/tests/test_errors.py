import pytest

from hamcount import (
    BoundViolationError,
    DomainError,
    GraphFormatError,
    HamCountError,
    InvalidGraphError,
    NoAcceptanceError,
    OracleCapError,
    SamplerNumericError,
    SamplingBudgetError,
    ScalingError,
    TrialGroupError,
)


@pytest.mark.parametrize(
    "exc_type, code",
    [
        (HamCountError, 1),
        (InvalidGraphError, 3),
        (GraphFormatError, 3),
        (ScalingError, 4),
        (NoAcceptanceError, 5),
        (SamplingBudgetError, 5),
        (OracleCapError, 6),
        (DomainError, 7),
        (BoundViolationError, 8),
        (SamplerNumericError, 8),
    ],
)
def test_exit_codes(exc_type, code):
    assert exc_type.exit_code == code


def test_hierarchy():
    assert issubclass(OracleCapError, DomainError)
    assert issubclass(DomainError, ValueError)
    assert issubclass(InvalidGraphError, ValueError)
    assert issubclass(SamplerNumericError, BoundViolationError)


def test_graph_format_error_names_line():
    e = GraphFormatError("bad token", lineno=4, path="g.txt")
    assert str(e) == "g.txt:line 4: bad token"
    assert e.lineno == 4
    assert str(GraphFormatError("empty")) == "empty"


def test_oracle_cap_error_message():
    e = OracleCapError("hamilton_dp", 30, 22, "HAM_ORACLE_CAP")
    assert "30" in str(e)
    assert "22" in str(e)
    assert "HAM_ORACLE_CAP" in str(e)


def test_sampling_budget_error_keeps_cycles():
    e = SamplingBudgetError(3, ["a"], 100)
    assert e.cycles == ["a"]
    assert e.trials == 100
    assert "1 of 3" in str(e)


def test_trialgroup_error_types():
    e = TrialGroupError("2 chunks failed", [ZeroDivisionError(), KeyError("x")])
    assert e.get_error_types() == {ZeroDivisionError, KeyError}
    assert len(e.exceptions) == 2
