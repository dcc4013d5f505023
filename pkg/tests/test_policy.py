import json

import numpy as np
import pytest

from conftest import tiny_model
from gmasimt.policy import (PolicyTrace, StreamingTranslator, actions_from_delays, replay,
                            simulate_streaming, teacher_forced_trace, validate_trace, wait_k_trace)


def test_wait_k_examples():
    assert wait_k_trace(1, 3, 3).g == [1, 2, 3]
    assert wait_k_trace(3, 3, 3).g == [3, 3, 3]
    assert wait_k_trace(5, 10, 8).g == [5, 6, 7, 8, 9, 10, 10, 10]
    with pytest.raises(ValueError):
        wait_k_trace(0, 3, 3)


def test_wait_k_traces_validate():
    for k in range(1, 6):
        for J in range(1, 8):
            t = wait_k_trace(k, J, 6)
            assert validate_trace(t) is None
            assert replay(t.actions) == t.g


def test_validate_violations():
    assert "monotonicity" in validate_trace(PolicyTrace([2, 1], "RRWW", 2))
    assert "causality" in validate_trace(PolicyTrace([1, 2], "WRRW", 2))
    assert "exceeds" in validate_trace(PolicyTrace([1, 4], "RWRRRW", 3))
    assert "reads exceed" in validate_trace(PolicyTrace([1, 2], "RWRRW", 2))
    assert "final write" in validate_trace(PolicyTrace([1], "RWR", 2))
    assert "other than" in validate_trace(PolicyTrace([1], "RX", 2))
    assert "writes" in validate_trace(PolicyTrace([1, 1], "RW", 2))
    assert "no writes" in validate_trace(PolicyTrace([], "R", 2))


def test_replay_and_actions():
    assert replay("RRWRWW") == [2, 3, 3]
    assert actions_from_delays([2, 3, 3]) == "RRWRWW"
    with pytest.raises(ValueError):
        replay("RQ")


def test_trace_record_round_trip():
    t = PolicyTrace([1, 2, 2], "RWRWW", 2, layer_positions=[[1.5, 2.25, 2.5]])
    rec = json.loads(t.to_json(["a", "b"]))
    assert rec["hypothesis"] == "a b" and rec["actions"] == "RWRWW"
    back = PolicyTrace.from_record(rec)
    assert back.g == t.g and back.actions == t.actions and back.word_delays == [1, 2]
    with pytest.raises(KeyError):
        PolicyTrace.from_record({"g": [1]})


def test_unit_steps_give_wait_two_diagonal():
    m = tiny_model(random_predictor=False, delta=0.0)
    m.params["out.b"].data[3] = -1e9     # never write EOS
    _, trace = simulate_streaming(m, [4, 5, 6, 7, 8, 4, 5, 6], max_len=6)
    assert trace.g[:6] == [2, 3, 4, 5, 6, 7]
    assert validate_trace(trace) is None


def test_large_delta_is_offline():
    m = tiny_model(delta=50.0)
    x = [4, 5, 6, 7]
    _, trace = simulate_streaming(m, x)
    assert trace.actions.startswith("R" * len(x) + "W")
    assert set(trace.g) == {len(x)}


@pytest.mark.parametrize("seed", range(8))
def test_streaming_traces_valid(seed):
    rng = np.random.default_rng(seed)
    m = tiny_model(layers=int(rng.integers(1, 4)), heads=2, seed=seed,
                   delta=float(rng.choice([0.0, 0.5, 1.0, 2.0])),
                   sharing_mode=str(rng.choice(["all_independent", "share_heads", "share_layers", "share_all"])))
    x = list(rng.integers(4, 9, size=int(rng.integers(1, 12))))
    ids, trace = simulate_streaming(m, x)
    assert validate_trace(trace) is None
    assert trace.actions.count("R") == max(trace.g) <= len(x)
    assert len(ids) + trace.eos == len(trace.g) or trace.truncated


def test_causality_hypothesis_depends_only_on_read_prefix():
    m = tiny_model(delta=0.0)
    x = [4, 5, 6, 7, 8, 4, 5, 6, 7, 8]
    ids, trace = simulate_streaming(m, x, max_len=4)
    # change every unread word: the written tokens must not change
    read = trace.actions.count("R")
    if read < len(x):
        y = x[:read] + [8] * (len(x) - read)
        ids2, trace2 = simulate_streaming(m, y, max_len=4)
        assert ids2[:len(ids)] == ids[:len(ids2)]
        assert trace2.g[:len(trace.g)] == trace.g[:len(trace2.g)]


def test_truncation_flag():
    m = tiny_model(delta=50.0)
    _, trace = simulate_streaming(m, [4, 5], max_len=1)
    assert trace.truncated or trace.eos


def test_streaming_session_api():
    m = tiny_model(random_predictor=False, delta=0.0)
    s = StreamingTranslator(m)
    assert s.next_action()[0] == "READ"
    s.feed(4)
    assert s.next_action() == ("READ", 2)
    s.feed(5)
    action, _ = s.next_action()
    assert action == "WRITE" and s.g == [2]
    s.finish()
    with pytest.raises(RuntimeError):
        s.feed(6)


@pytest.mark.parametrize("layers, mode", [(1, "share_heads"), (3, "share_heads"),
                                          (2, "all_independent"), (3, "share_layers"),
                                          (3, "share_all")])
def test_delta_monotone_teacher_forced(layers, mode):
    # predictors read the first layer's query, which never sees the source
    m = tiny_model(layers=layers, heads=2, sharing_mode=mode)
    rng = np.random.default_rng(3)
    for _ in range(5):
        x = list(rng.integers(4, 9, size=9))
        y = list(rng.integers(4, 9, size=7))
        prev = None
        for delta in (0.0, 0.5, 1.0, 2.0, 4.0):
            g = np.array(teacher_forced_trace(m, x, y, delta).g)
            if prev is not None:
                assert (g >= prev).all()
            prev = g


def test_positions_ignore_delta():
    x, y = [4, 5, 6, 7, 8, 4, 5], [5, 6, 7, 8]
    m = tiny_model(layers=3, heads=2)
    assert (teacher_forced_trace(m, x, y, 0.0).layer_positions
            == teacher_forced_trace(m, x, y, 3.0).layer_positions)
    # with per-layer inputs only the first layer is independent of delta
    m = tiny_model(layers=3, heads=2, predictor_input="layer")
    a = teacher_forced_trace(m, x, y, 0.0).layer_positions
    b = teacher_forced_trace(m, x, y, 3.0).layer_positions
    assert a[0] == b[0] and a[1:] != b[1:]


def test_hypothesis_never_empty():
    m = tiny_model()
    m.params["out.b"].data[3] = 1e3      # EOS dominates every step
    ids, trace = simulate_streaming(m, [4, 5, 6])
    assert len(ids) == 1 and trace.eos and len(trace.g) == 2
    assert validate_trace(trace) is None


def test_length_limit_respects_position_table():
    m = tiny_model()                     # max_positions = 32
    m.params["out.b"].data[3] = -1e9     # never write EOS
    ids, trace = simulate_streaming(m, [4, 5, 6, 7, 8, 4, 5, 6, 7, 8, 4, 5])
    assert trace.truncated and len(ids) == 31
    assert validate_trace(trace) is None
