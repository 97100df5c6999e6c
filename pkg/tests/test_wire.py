import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rooftune.budget import Budget, EvalOutcome, StopReason
from rooftune.search import KernelConfig
from rooftune.stats import OnlineStats
from rooftune.wire import decode_outcome, dumps, encode_outcome, parse_param, worker_argv

reals = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=200, deadline=None)
@given(count=st.integers(0, 10**6), mean=reals, csum=st.floats(0, 1e300), elapsed=st.floats(0, 1e6),
       reason=st.sampled_from(list(StopReason)), error=st.none() | st.text(max_size=40),
       warnings=st.lists(st.text(max_size=20), max_size=3))
def test_outcome_round_trips_exactly(count, mean, csum, elapsed, reason, error, warnings):
    out = EvalOutcome(OnlineStats(count, mean, csum), reason, elapsed, error=error, warnings=warnings)
    line = encode_outcome("synthetic", {"id": "c1", "location": 0.1}, out)
    assert "\n" not in line
    record, back = decode_outcome(line)
    assert back.stats == out.stats
    assert back.stop_reason is reason
    assert back.elapsed == elapsed and back.error == error and back.warnings == warnings
    assert record["config"] == {"id": "c1", "location": 0.1}


def test_encoding_is_byte_stable():
    out = EvalOutcome(OnlineStats(3, 2.0, 2.0), StopReason.CI_CONVERGED, 0.03)
    a = encode_outcome("dgemm", {"n": 1, "m": 2, "k": 3}, out)
    b = encode_outcome("dgemm", {"k": 3, "m": 2, "n": 1}, out)
    assert a == b
    assert a.index('"config"') < a.index('"count"') < a.index('"stop_reason"')
    assert json.loads(a)["variance"] == 1.0


def test_dumps_formats():
    assert dumps(0.1) == "0.10000000000000001"
    assert dumps(2.0) == "2.0"
    assert dumps(math.inf) == "null" and dumps(math.nan) == "null"
    assert dumps({"b": [1, True, None], "a": "x"}) == '{"a": "x", "b": [1, true, null]}'
    assert json.loads(dumps({"a": {"b": [1.5]}}, indent=2)) == {"a": {"b": [1.5]}}
    with pytest.raises(TypeError):
        dumps(object())


@pytest.mark.parametrize("line", ["", "not json", "[1, 2]", '{"schema": 99}', '{"schema": 1, "count": 2}'])
def test_decode_rejects_garbage(line):
    with pytest.raises(ValueError):
        decode_outcome(line)


def test_parse_param_types():
    assert parse_param("n=4000") == ("n", 4000)
    assert parse_param("location=100.5") == ("location", 100.5)
    assert parse_param("id=c4") == ("id", "c4")
    with pytest.raises(ValueError):
        parse_param("novalue")


def test_worker_argv_carries_budget_and_exact_floats():
    cfg = KernelConfig.make("synthetic", id="c1", location=0.1 + 0.2, scale=1.0)
    argv = worker_argv(cfg, Budget(max_count=17, enable_prune_stop=False), 12.5, 3, 9)
    assert argv[:2] == ["worker", "--kernel"]
    params = dict(parse_param(argv[i + 1]) for i, a in enumerate(argv) if a == "--param")
    assert params["location"] == 0.1 + 0.2
    assert "--no-prune" in argv and "--no-ci-stop" not in argv
    assert argv[argv.index("--max-count") + 1] == "17"
    assert float(argv[argv.index("--best") + 1]) == 12.5
