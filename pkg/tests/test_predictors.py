import pytest

from sbp.errors import ConfigError
from sbp.hints import Q3_4, HintSet, SlbiuConfig, SparsityHint
from sbp.predictors import (
    BASELINE_LATENCY,
    SLBIU_LATENCY,
    Gshare,
    Slbiu,
    TageLite,
    TageLiteConfig,
    fold,
)


def make_slbiu(hints, lh=4, gh=8, n=4, nnz=4, q=8):
    unit = Slbiu(SlbiuConfig(lh=lh, gh=gh, n=n, nnz=nnz, q=q))
    unit.load(HintSet("", SlbiuConfig(lh=lh, gh=gh, n=n, nnz=nnz, q=q), hints))
    return unit


def test_fold():
    assert fold(0b1111_0000, 4) == 0b1111
    assert fold(0b1010_0110, 4) == 0b1100
    assert fold(123, 0) == 0
    assert fold(0, 8) == 0


def test_slbiu_miss():
    unit = make_slbiu([])
    pred = unit.predict(0x42, 0)
    assert not pred.hit
    assert pred.latency_cycles == BASELINE_LATENCY


def test_slbiu_single_weight_sign_flip():
    hint = SparsityHint(0x42, 0.0, [(2, 1.0)], Q3_4)
    unit = make_slbiu([hint])
    taken_hist = unit.predict(0x42, 0b100)
    not_taken_hist = unit.predict(0x42, 0b000)
    assert taken_hist.hit and taken_hist.direction is True
    assert not_taken_hist.direction is False
    assert taken_hist.latency_cycles == SLBIU_LATENCY


def test_slbiu_zero_sum_is_taken():
    # sign rule: sum >= 0 predicts taken
    hint = SparsityHint(0x42, 1.0, [(0, 1.0)], Q3_4)
    unit = make_slbiu([hint])
    assert unit.predict(0x42, 0b0).direction is True  # 1.0 - 1.0 = 0


def test_slbiu_local_history_path():
    # index gh+1 selects LHR bit 1
    hint = SparsityHint(0x42, 0.0, [(9, 2.0)], Q3_4)
    unit = make_slbiu([hint], lh=4, gh=8)
    assert unit.predict(0x42, 0).direction is False
    unit.update(0x42, True)  # LHR = 0b01
    assert unit.predict(0x42, 0).direction is False
    unit.update(0x42, False)  # LHR = 0b10
    assert unit.predict(0x42, 0).direction is True


def test_slbiu_update_misses_are_no_ops():
    unit = make_slbiu([SparsityHint(0x42, 0.0, [(0, 1.0)], Q3_4)])
    unit.update(0x99, True)  # not resident
    assert unit.entries[0x42][1] == 0


def test_slbiu_capacity():
    hints = [SparsityHint(pc, 0.0, [(0, 1.0)], Q3_4) for pc in range(3)]
    unit = Slbiu(SlbiuConfig(lh=4, gh=8, n=2, nnz=1, q=8))
    with pytest.raises(ConfigError):
        unit.load(HintSet("", SlbiuConfig(lh=4, gh=8, n=3, nnz=1, q=8), hints))


def test_slbiu_load_resets_lhr():
    hint = SparsityHint(0x42, 0.0, [(0, 1.0)], Q3_4)
    unit = make_slbiu([hint])
    unit.update(0x42, True)
    unit.load(HintSet("", unit.config, [hint]))
    assert unit.entries[0x42][1] == 0


def test_slbiu_adder_width_covers_extremes():
    # nnz saturated weights plus intercept at the format limits must not
    # overflow the q + ceil(log2(nnz+1)) adder
    entries = [(j, -8.0 if j % 2 else 7.9375) for j in range(4)]
    hint = SparsityHint(0x42, -8.0, entries, Q3_4)
    unit = make_slbiu([hint], nnz=4)
    for ghr in (0b0000, 0b1111, 0b0101):
        unit.predict(0x42, ghr)  # internal overflow assert must hold


def test_gshare_learns_and_suppresses():
    g = Gshare(6, 8)
    pc, ghr = 0x7, 0b1011
    assert g.predict(pc, ghr) is False  # init weakly not-taken
    g.update(pc, ghr, True)
    g.update(pc, ghr, True)
    assert g.predict(pc, ghr) is True
    g.update(pc, ghr, False, suppress=True)  # halt-update: no effect
    assert g.predict(pc, ghr) is True
    g.update(pc, ghr, False)
    g.update(pc, ghr, False)
    assert g.predict(pc, ghr) is False


def test_gshare_counter_saturation():
    g = Gshare(4, 4)
    for _ in range(10):
        g.update(1, 0, True)
    assert max(g.counters) == 3
    for _ in range(20):
        g.update(1, 0, False)
    assert min(g.counters) == 0


def test_tage_config_validation():
    with pytest.raises(ValueError):
        TageLiteConfig(num_tables=2, history_lengths=(8, 8))
    with pytest.raises(ValueError):
        TageLiteConfig(num_tables=3, history_lengths=(4, 8))
    assert TageLiteConfig(num_tables=3).history_lengths == (4, 8, 16)


def test_tage_allocates_on_misprediction():
    t = TageLite(TageLiteConfig(num_tables=2, table_entries=16, tag_bits=6,
                                base_entries=16))
    pc, ghr = 0x9, 0b1101
    assert t.predict(pc, ghr) is False  # bimodal init
    t.update(pc, ghr, True)  # mispredict: allocate an entry owned by pc
    assert t.allocations(pc) == 1
    owners = [e.owner for table in t.tables for e in table if e.valid]
    assert owners == [pc]


def test_tage_suppress_freezes_state():
    cfg = TageLiteConfig(num_tables=2, table_entries=16, tag_bits=6, base_entries=16)
    t = TageLite(cfg)
    pc, ghr = 0x9, 0b1101
    t.predict(pc, ghr)
    t.update(pc, ghr, True, suppress=True)
    assert t.allocations(pc) == 0
    assert not any(e.valid for table in t.tables for e in table)
    assert t.base == [1] * 16


def test_tage_snapshot_statistics():
    t = TageLite(TageLiteConfig(num_tables=2, table_entries=16, tag_bits=6,
                                base_entries=16))
    assert t.unique_entries_avg(0x9) == 0.0
    t.predict(0x9, 0b1)
    t.update(0x9, 0b1, True)
    t.snapshot()
    t.snapshot()
    assert t.unique_entries_avg(0x9) == 1.0
    assert t.unique_entries_avg(0xBAD) == 0.0


def test_tage_longest_match_provides():
    cfg = TageLiteConfig(num_tables=2, table_entries=32, tag_bits=8, base_entries=32,
                         history_lengths=(2, 6))
    t = TageLite(cfg)
    pc = 0x3
    # Same short history, different long history: train the long table to
    # distinguish what the short table cannot.
    for _ in range(8):
        t.predict(pc, 0b000001)
        t.update(pc, 0b000001, True)
        t.predict(pc, 0b110001)
        t.update(pc, 0b110001, False)
    assert t.predict(pc, 0b000001) is True
    assert t.predict(pc, 0b110001) is False
