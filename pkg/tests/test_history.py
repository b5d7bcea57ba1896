import random
from collections import deque

import numpy as np
import pytest

from sbp.history import (
    HistoryConfig,
    HistoryState,
    collect_dataset,
    collect_datasets,
    ints_to_pm1,
)
from sbp.trace_io import PC_LOOP, SyntheticScenario, Trace, TraceRecord, gen_loop
from tests.conftest import random_trace


def test_ints_to_pm1_bit_order():
    # bit 0 is the newest outcome and lands in column 0
    out = ints_to_pm1([0b0101], 4)
    assert out.tolist() == [[1, -1, 1, -1]]
    assert out.dtype == np.int8


def test_ints_to_pm1_empty_width():
    assert ints_to_pm1([3, 7], 0).shape == (2, 0)


def test_history_state_matches_reference_queue():
    """Oracle: explicit deques of recent outcomes, newest first."""
    config = HistoryConfig(gh=6, lh=3)
    state = HistoryState(config)
    ref_g = deque(maxlen=6)
    ref_l = {}
    rng = random.Random(2)
    pcs = [10, 20, 30]
    for _ in range(400):
        pc = rng.choice(pcs)
        taken = rng.random() < 0.5
        state.update(pc, taken)
        ref_g.appendleft(taken)
        ref_l.setdefault(pc, deque(maxlen=3)).appendleft(taken)
        for i, bit in enumerate(ref_g):
            assert (state.ghr >> i) & 1 == int(bit)
        for i, bit in enumerate(ref_l[pc]):
            assert (state.lhr(pc) >> i) & 1 == int(bit)


def test_features_layout():
    config = HistoryConfig(gh=3, lh=2)
    state = HistoryState(config)
    for taken in (True, False, True, True):  # same pc: GHR == LHR tail
        state.update(7, taken)
    f = state.features(7)
    # GHR segment first (newest=index 0), then LHR segment
    assert f.tolist() == [1, 1, -1, 1, 1]


def test_config_validation():
    with pytest.raises(ValueError):
        HistoryConfig(gh=0, lh=0)
    with pytest.raises(ValueError):
        HistoryConfig(gh=-1, lh=2)
    assert HistoryConfig(gh=4, lh=0).l == 4


def test_warmup_boundary():
    config = HistoryConfig(gh=5, lh=3)
    trace = random_trace(100, n_pcs=2, seed=4)
    datasets = collect_datasets(trace, config)
    total = sum(ds.m for ds in datasets.values())
    assert total == 100 - 8  # first gh+lh records are warmup only


def test_samples_use_history_before_update():
    # Single branch, alternating outcomes: with gh=1 the feature is the
    # previous outcome, so it must be the opposite of the label every time.
    records = [TraceRecord(5, i % 2 == 0) for i in range(50)]
    ds = collect_dataset(Trace(records), HistoryConfig(gh=1, lh=0), 5)
    assert ds.m == 49
    assert np.all((ds.x[:, 0] == 1) != ds.y)


def test_loop_lhr_mirrors_ghr():
    # One static branch only: its local history equals the global history.
    trace = gen_loop(SyntheticScenario(kind="loop", length=500, loop_period=5))
    ds = collect_dataset(trace, HistoryConfig(gh=4, lh=4), PC_LOOP)
    assert np.array_equal(ds.x[:, :4], ds.x[:, 4:])


def test_missing_target_gives_empty_dataset():
    trace = random_trace(50, seed=1)
    ds = collect_dataset(trace, HistoryConfig(gh=4, lh=2), 0xDEAD)
    assert ds.m == 0
    assert ds.taken_rate == 0.0
    assert ds.x.shape == (0, 6)


def test_targets_filter():
    trace = random_trace(300, n_pcs=3, seed=6)
    pc = trace.records[250].pc
    only = collect_datasets(trace, HistoryConfig(gh=4, lh=2), targets={pc})
    assert set(only) == {pc}
    full = collect_datasets(trace, HistoryConfig(gh=4, lh=2))
    assert only[pc].m == full[pc].m
    assert np.array_equal(only[pc].x, full[pc].x)
