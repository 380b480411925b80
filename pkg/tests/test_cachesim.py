import numpy as np
import pytest

from rooflab.cachesim import (
    ARRAY_ID_SHIFT,
    CacheConfig,
    CacheLevelConfig,
    SimOutcome,
    bundled_cachesim_path,
    hit_rate_report,
    load_cache_config,
    simulate,
)
from rooflab.errors import ValidationError
from rooflab.tracefile import AccessTrace

DESK = CacheConfig(
    l1=CacheLevelConfig(capacity_bytes=4608, line_bytes=128, associativity=4),
    l2=CacheLevelConfig(capacity_bytes=92160, line_bytes=128, associativity=16),
)


def _trace(ids, offsets, sizes=None):
    n = len(offsets)
    if sizes is None:
        sizes = [16] * n
    return AccessTrace.from_arrays(ids, offsets, sizes)


class PyTwoLevel:
    """List-based re-implementation used as an oracle for the compiled core.

    Each set is a list of line tags, most recent first.  The event order
    matches the simulator: L1 lookup, then on a miss the L2 lookup with
    its eviction and back-invalidation, then the L1 fill.
    """

    def __init__(self, config):
        self.config = config
        self.l1 = [[] for _ in range(config.l1.num_sets)]
        self.l2 = [[] for _ in range(config.l2.num_sets)]
        self.counts = {"l1_hits": 0, "l1_misses": 0, "l2_hits": 0, "l2_misses": 0}

    def _touch(self, line):
        cfg = self.config
        set1 = self.l1[line % cfg.l1.num_sets]
        if line in set1:
            set1.remove(line)
            set1.insert(0, line)
            self.counts["l1_hits"] += 1
            return
        self.counts["l1_misses"] += 1

        ratio = cfg.l2.line_bytes // cfg.l1.line_bytes
        line2 = line // ratio
        set2 = self.l2[line2 % cfg.l2.num_sets]
        if line2 in set2:
            set2.remove(line2)
            set2.insert(0, line2)
            self.counts["l2_hits"] += 1
        else:
            self.counts["l2_misses"] += 1
            if len(set2) == cfg.l2.associativity:
                victim2 = set2.pop()
                for covered in range(victim2 * ratio, (victim2 + 1) * ratio):
                    vset = self.l1[covered % cfg.l1.num_sets]
                    if covered in vset:
                        vset.remove(covered)
            set2.insert(0, line2)

        if len(set1) == cfg.l1.associativity:
            set1.pop()
        set1.insert(0, line)

    def run(self, trace):
        lookups = 0
        line_bytes = self.config.l1.line_bytes
        for aid, offset, size in zip(trace.ids, trace.offsets, trace.sizes):
            addr = (int(aid) << ARRAY_ID_SHIFT) + int(offset)
            first = addr // line_bytes
            last = (addr + int(size) - 1) // line_bytes
            for line in range(first, last + 1):
                self._touch(line)
                lookups += 1
        c = self.counts
        from rooflab.metrics import LevelBytes

        return SimOutcome(
            accesses=len(trace),
            l1_lookups=lookups,
            l1_hits=c["l1_hits"],
            l1_misses=c["l1_misses"],
            l2_hits=c["l2_hits"],
            l2_misses=c["l2_misses"],
            bytes=LevelBytes(
                l1=float(trace.total_bytes()),
                l2=float(c["l1_misses"] * line_bytes),
                hbm=float(c["l2_misses"] * self.config.l2.line_bytes),
            ),
        )


def test_level_config_validation():
    with pytest.raises(ValidationError, match="power of two"):
        CacheLevelConfig(capacity_bytes=768, line_bytes=96, associativity=2)
    with pytest.raises(ValidationError, match="associativity"):
        CacheLevelConfig(capacity_bytes=512, line_bytes=128, associativity=0)
    with pytest.raises(ValidationError, match="whole number of sets"):
        CacheLevelConfig(capacity_bytes=1000, line_bytes=128, associativity=4)
    cfg = CacheLevelConfig(capacity_bytes=4608, line_bytes=128, associativity=4)
    assert cfg.num_sets == 9
    assert cfg.num_lines == 36


def test_pair_validation():
    small = CacheLevelConfig(capacity_bytes=512, line_bytes=64, associativity=2)
    big = CacheLevelConfig(capacity_bytes=4096, line_bytes=128, associativity=4)
    CacheConfig(l1=small, l2=big)
    with pytest.raises(ValidationError, match="smaller"):
        CacheConfig(l1=big, l2=small)


def test_from_dict_rejects_unknown_and_missing():
    good = {"capacity_bytes": 4608, "line_bytes": 128, "associativity": 4}
    with pytest.raises(ValidationError, match="unknown fields: banks"):
        CacheLevelConfig.from_dict({**good, "banks": 4})
    with pytest.raises(ValidationError, match="missing fields: associativity"):
        CacheLevelConfig.from_dict({"capacity_bytes": 4608, "line_bytes": 128})
    with pytest.raises(ValidationError, match="missing fields: l2"):
        CacheConfig.from_dict({"l1": good})


def test_load_bundled_desk_config():
    config = load_cache_config(bundled_cachesim_path())
    assert config == DESK
    assert config.l1.num_sets == 9
    assert config.l2.num_sets == 45


def test_round_trip_dict():
    assert CacheConfig.from_dict(DESK.to_dict()) == DESK


def test_empty_trace():
    outcome = simulate(_trace([], [], []), DESK)
    assert outcome.accesses == 0
    assert outcome.l1_lookups == 0
    assert outcome.l1_hit_rate == 0.0
    assert outcome.l2_hit_rate == 0.0
    assert outcome.bytes.l1 == 0.0


def test_hand_worked_example():
    # L1: two direct-mapped 32 B lines; L2: two direct-mapped 64 B lines.
    config = CacheConfig(
        l1=CacheLevelConfig(capacity_bytes=64, line_bytes=32, associativity=1),
        l2=CacheLevelConfig(capacity_bytes=128, line_bytes=64, associativity=1),
    )
    trace = _trace(
        ids=[0, 0, 0, 0, 0, 0],
        offsets=[0, 28, 64, 0, 128, 32],
        sizes=[32, 8, 16, 4, 32, 4],
    )
    outcome = simulate(trace, config)
    assert outcome.accesses == 6
    assert outcome.l1_lookups == 7  # the 8-byte access at 28 spans two lines
    assert outcome.l1_hits == 1
    assert outcome.l1_misses == 6
    assert outcome.l2_hits == 2
    assert outcome.l2_misses == 4
    assert outcome.bytes.l1 == 96.0
    assert outcome.bytes.l2 == 192.0
    assert outcome.bytes.hbm == 256.0


def test_inclusion_back_invalidates_l1():
    # L1 could hold all three lines, but the L2 is only two ways deep, so
    # refetching the first line must miss in L1 after its L2 eviction.
    config = CacheConfig(
        l1=CacheLevelConfig(capacity_bytes=512, line_bytes=128, associativity=4),
        l2=CacheLevelConfig(capacity_bytes=256, line_bytes=128, associativity=2),
    )
    trace = _trace(ids=[0, 0, 0, 0], offsets=[0, 128, 256, 0])
    outcome = simulate(trace, config)
    assert outcome.l1_hits == 0
    assert outcome.l1_misses == 4
    assert outcome.l2_misses == 4


def test_byte_identities_are_definitional():
    rng = np.random.default_rng(3)
    n = 5000
    trace = _trace(
        ids=rng.integers(0, 4, n),
        offsets=(rng.integers(0, 4096, n) * 16),
        sizes=[16] * n,
    )
    outcome = simulate(trace, DESK)
    assert outcome.bytes.l1 == float(trace.total_bytes())
    assert outcome.bytes.l2 == float(outcome.l1_misses * DESK.l1.line_bytes)
    assert outcome.bytes.hbm == float(outcome.l2_misses * DESK.l2.line_bytes)
    assert outcome.l1_hits + outcome.l1_misses == outcome.l1_lookups
    assert outcome.l2_hits + outcome.l2_misses == outcome.l1_misses


V100_LIKE = CacheConfig(
    l1=CacheLevelConfig(capacity_bytes=131072, line_bytes=128, associativity=4),
    l2=CacheLevelConfig(capacity_bytes=6291456, line_bytes=128, associativity=16),
)
TINY_SPANNING = CacheConfig(
    l1=CacheLevelConfig(capacity_bytes=256, line_bytes=32, associativity=2),
    l2=CacheLevelConfig(capacity_bytes=512, line_bytes=64, associativity=4),
)


@pytest.mark.parametrize(
    "config,aligned",
    [(DESK, True), (V100_LIKE, True), (TINY_SPANNING, False)],
    ids=["desk", "v100-like", "tiny-spanning"],
)
def test_matches_pure_python_oracle(config, aligned):
    rng = np.random.default_rng(17)
    n = 10_000
    ids = rng.integers(0, 4, n)
    if aligned:
        offsets = rng.integers(0, 2048, n) * 16
        sizes = np.full(n, 16)
    else:
        offsets = rng.integers(0, 1024, n)
        sizes = rng.integers(1, 49, n)
    trace = _trace(ids, offsets, sizes)
    assert simulate(trace, config) == PyTwoLevel(config).run(trace)


def test_spanning_access_lookup_count():
    config = CacheConfig(
        l1=CacheLevelConfig(capacity_bytes=64, line_bytes=4, associativity=1),
        l2=CacheLevelConfig(capacity_bytes=64, line_bytes=4, associativity=1),
    )
    outcome = simulate(_trace([0], [0], [16]), config)
    assert outcome.accesses == 1
    assert outcome.l1_lookups == 4


def test_offsets_must_fit_below_id_bits():
    trace = _trace([0], [1 << ARRAY_ID_SHIFT], [16])
    with pytest.raises(ValidationError, match="offsets"):
        simulate(trace, DESK)


def test_outcome_round_trip():
    trace = _trace([0, 1], [0, 128])
    outcome = simulate(trace, DESK)
    assert SimOutcome.from_dict(outcome.to_dict()) == outcome


def test_hit_rate_report():
    base = simulate(_trace([0] * 4, [0, 128, 256, 0]), DESK)
    tuned = simulate(_trace([0] * 4, [0, 0, 0, 0]), DESK)
    report = hit_rate_report([("before", base), ("after", tuned)])
    assert [row["label"] for row in report["rows"]] == ["before", "after"]
    assert report["l1_hit_rate_delta"] == tuned.l1_hit_rate - base.l1_hit_rate
    assert report["l2_hit_rate_delta"] == tuned.l2_hit_rate - base.l2_hit_rate
    with pytest.raises(ValidationError):
        hit_rate_report([])
