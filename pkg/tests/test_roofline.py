import pytest

from rooflab.errors import DomainError, ValidationError
from rooflab.machine import bundled_machine_path, load_machine
from rooflab.metrics import InstructionCounters, KernelMetrics, LevelBytes
from rooflab.roofline import (
    BANDWIDTH_BOUND,
    COMPUTE_BOUND,
    achieved_throughput,
    all_points,
    arithmetic_intensity,
    attainable,
    classify,
    load_report,
    locality_gaps,
    mix_fma_ratio,
    report_from_dict,
    report_to_dict,
    save_report,
    trajectory,
)

PEAK = 6717440000000.0
HBM_BW = 9.0e11


def test_arithmetic_intensity_and_domain():
    assert arithmetic_intensity(100.0, 50.0) == 2.0
    with pytest.raises(DomainError):
        arithmetic_intensity(100.0, 0.0)
    with pytest.raises(DomainError):
        arithmetic_intensity(-1.0, 10.0)


def test_achieved_throughput():
    assert achieved_throughput(3.0e12, 2.0) == 1.5e12
    with pytest.raises(DomainError):
        achieved_throughput(1.0, 0.0)


def test_attainable_below_and_above_ridge():
    assert attainable(PEAK, HBM_BW, 1.0) == HBM_BW
    assert attainable(PEAK, HBM_BW, 100.0) == PEAK
    ridge = PEAK / HBM_BW
    assert attainable(PEAK, HBM_BW, ridge) == PEAK


def test_attainable_near_published_ridge_value():
    # At an intensity of 7.46 the HBM roof sits a hair under the
    # FP64 FMA ceiling; the rounded headline value is good to 0.1%.
    value = attainable(PEAK, HBM_BW, 7.46)
    assert value == 7.46 * HBM_BW
    assert abs(value - 6.717e12) / 6.717e12 < 1e-3


def test_classify_tie_is_compute_bound():
    balance = PEAK / HBM_BW
    assert classify(PEAK, HBM_BW, balance * 0.999) == BANDWIDTH_BOUND
    assert classify(PEAK, HBM_BW, balance) == COMPUTE_BOUND
    assert classify(PEAK, HBM_BW, balance * 1.001) == COMPUTE_BOUND


def test_locality_gaps_example():
    assert locality_gaps(LevelBytes(l1=4.0e11, l2=2.0e11, hbm=2.0e11)) == (2.0, 1.0)
    with pytest.raises(DomainError):
        locality_gaps(LevelBytes(l1=1.0, l2=0.0, hbm=1.0))


def _record(label, runtime, flops, system=None, with_bytes=True):
    return KernelMetrics(
        label=label,
        runtime=runtime,
        counters=InstructionCounters(dadd=flops),
        bytes=LevelBytes(l1=4.0e11, l2=2.0e11, hbm=1.0e11) if with_bytes else None,
        system=system,
    )


@pytest.fixture()
def v100():
    return load_machine(bundled_machine_path())


def test_single_record_has_points_but_no_speedups(v100):
    report = trajectory([_record("k", 1.0, 10**12)], v100)
    (seq,) = report.sequences
    assert seq.cumulative_speedup is None
    (entry,) = seq.entries
    assert entry.step_speedup is None
    assert {p.level for p in entry.points} == {"L1", "L2", "HBM"}
    assert entry.fraction_of_peak == pytest.approx(1e12 / PEAK)
    assert entry.fraction_of_adjusted_peak is None


def test_trajectory_speedups_and_fma_fractions(v100):
    records = [
        _record("a", 4.0, 4 * 10**12),
        _record("b", 2.0, 4 * 10**12),
        _record("c", 1.0, 4 * 10**12),
    ]
    report = trajectory(records, v100, fma_ratio=0.58)
    (seq,) = report.sequences
    assert seq.cumulative_speedup == 4.0
    assert [e.step_speedup for e in seq.entries] == [None, 2.0, 2.0]
    entry = seq.entries[-1]
    assert entry.fraction_of_adjusted_peak == pytest.approx(
        4e12 / (PEAK * 0.79), rel=1e-12
    )


def test_trajectory_groups_by_system(v100):
    records = [
        _record("v0", 2.0, 10**12, system="sys-a"),
        _record("v1", 1.0, 10**12, system="sys-a"),
        _record("v0", 10.0, 10**12, system="sys-b"),
        _record("v1", 2.0, 10**12, system="sys-b"),
    ]
    report = trajectory(records, v100)
    assert [seq.system for seq in report.sequences] == ["sys-a", "sys-b"]
    assert report.sequences[0].cumulative_speedup == 2.0
    assert report.sequences[1].cumulative_speedup == 5.0
    assert len(all_points(report)) == 12


def test_trajectory_point_classification(v100):
    # flops/hbm_bytes = 10 sits right of the 7.46 HBM ridge.
    record = KernelMetrics(
        label="k",
        runtime=1.0,
        counters=InstructionCounters(dadd=10**13),
        bytes=LevelBytes(l1=4.0e12, l2=2.0e12, hbm=1.0e12),
    )
    report = trajectory([record], v100)
    points = {p.level: p for p in report.sequences[0].entries[0].points}
    assert points["HBM"].bound == COMPUTE_BOUND
    assert points["HBM"].ai == 10.0
    assert points["HBM"].attainable == PEAK
    assert points["L2"].ai == 5.0
    assert report.sequences[0].entries[0].gaps == (2.0, 2.0)


def test_trajectory_ceiling_selection(v100):
    report = trajectory([_record("k", 1.0, 10**12)], v100, ceiling_label="FP64 no-FMA")
    assert report.ceiling_label == "FP64 no-FMA"
    entry = report.sequences[0].entries[0]
    assert entry.fraction_of_peak == pytest.approx(1e12 / (PEAK / 2))


def test_trajectory_needs_records(v100):
    with pytest.raises(ValidationError):
        trajectory([], v100)


def test_div_weight_flows_into_flops(v100):
    record = KernelMetrics(
        label="k", runtime=1.0, counters=InstructionCounters(dadd=100, ddiv=10)
    )
    heavy = trajectory([record], v100, div_weight=5.0)
    assert heavy.sequences[0].entries[0].flops == 150.0


def test_report_round_trip(tmp_path, v100):
    records = [
        _record("v0", 2.0, 10**12, system="s"),
        _record("v1", 1.0, 2 * 10**12, system="s"),
    ]
    report = trajectory(records, v100, fma_ratio=0.58, div_weight=2.0)
    assert report_from_dict(report_to_dict(report)) == report
    path = tmp_path / "report.json"
    save_report(report, path)
    assert load_report(path) == report


def test_report_from_dict_rejects_garbage():
    with pytest.raises(ValidationError):
        report_from_dict({"machine": {}})


def test_mix_fma_ratio():
    records = [
        KernelMetrics(label="a", runtime=1.0, counters=InstructionCounters(dfma=3)),
        KernelMetrics(label="b", runtime=1.0, counters=InstructionCounters(dadd=1, dmul=1)),
    ]
    assert mix_fma_ratio(records) == 0.6
