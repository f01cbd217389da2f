import json

import numpy as np
import pytest

from ensrlab.errors import InputError
from ensrlab.verify import (FIXTURES, SUITES, claim, erasure_membership, load_fixture,
                            report_json, round_floats, run_suite)


def test_round_floats():
    out = round_floats({"a": 1 / 3, "b": [np.float64(2.0), np.int64(3), np.bool_(True)],
                        "c": float("inf"), "d": np.array([0.1, 0.2]), 1: "x"})
    assert out == {"a": 0.333333333333, "b": [2.0, 3, True], "c": "inf", "d": [0.1, 0.2],
                   "1": "x"}
    assert round_floats(float("nan")) == "nan"


@pytest.mark.parametrize("name", FIXTURES)
def test_fixtures_load(name):
    j = load_fixture(name)
    assert j.p.sum() == pytest.approx(1.0)


def test_fixture_values():
    np.testing.assert_allclose(load_fixture("bsc_0.1_uniform").p, [[0.45, 0.05], [0.05, 0.45]])
    with pytest.raises(InputError):
        load_fixture("nope")


def test_claim_shape():
    c = claim("x", 0.1, 1e-3, True, extra=1)
    assert c == {"claim": "x", "observed": 0.1, "tolerance": 1e-3, "passed": True,
                 "details": {"extra": 1}}


def test_unknown_suite():
    with pytest.raises(InputError):
        run_suite("everything")
    assert "all" not in SUITES


def test_erasure_membership_on_bsc():
    res = erasure_membership(load_fixture("bsc_0.1_uniform"), 0.32, "strong", 0.05, 0.5)
    assert res["found"]


def test_tensor_suite_is_deterministic():
    a = report_json(run_suite("tensor", seed=1))
    b = report_json(run_suite("tensor", seed=1))
    assert a == b
    doc = json.loads(a)
    assert doc["passed"] and doc["seed"] == 1 and doc["failed_claims"] == []
