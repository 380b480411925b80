import json

import pytest

from rooflab.errors import DomainError, ValidationError
from rooflab.machine import (
    ComputeCeiling,
    MachineDescription,
    MemoryLevel,
    bundled_machine_path,
    fma_adjusted_peak,
    fma_fraction,
    load_machine,
    machine_balance,
    machine_from_dict,
    machine_to_dict,
    save_machine,
    theoretical_peak,
)

V100_PEAK = 6717440000000.0


def test_theoretical_peak_exact_product():
    assert theoretical_peak(80, 32, 2, 1.312e9) == V100_PEAK


def test_theoretical_peak_scales_with_lanes():
    assert theoretical_peak(80, 64, 2, 1.312e9) == 2 * V100_PEAK == 1.343488e13


@pytest.mark.parametrize("bad", [
    dict(num_units=0, lanes_per_unit=32, ops_per_lane_cycle=2, clock_hz=1e9),
    dict(num_units=80, lanes_per_unit=-1, ops_per_lane_cycle=2, clock_hz=1e9),
    dict(num_units=80, lanes_per_unit=32, ops_per_lane_cycle=0, clock_hz=1e9),
    dict(num_units=80, lanes_per_unit=32, ops_per_lane_cycle=2, clock_hz=0.0),
])
def test_theoretical_peak_rejects_non_positive(bad):
    with pytest.raises(DomainError):
        theoretical_peak(**bad)


def test_fma_fraction_spec_values():
    assert fma_fraction(0.58) == 0.79
    assert fma_fraction(1.0) == 1.0
    assert fma_fraction(0.0) == 0.5


def test_fma_adjusted_peak_identity_at_full_fma():
    assert fma_adjusted_peak(V100_PEAK, 1.0) == V100_PEAK


def test_fma_adjusted_peak_monotone_in_ratio():
    peaks = [fma_adjusted_peak(V100_PEAK, r / 20) for r in range(21)]
    assert all(a < b for a, b in zip(peaks, peaks[1:]))


@pytest.mark.parametrize("ratio", [-0.01, 1.01, 2.0])
def test_fma_ratio_domain(ratio):
    with pytest.raises(DomainError):
        fma_adjusted_peak(V100_PEAK, ratio)


def test_machine_balance_value():
    assert machine_balance(V100_PEAK, 9.0e11) == pytest.approx(7.46382222, rel=1e-8)


def test_machine_balance_halving_bandwidth_doubles_exactly():
    import random

    rng = random.Random(7)
    for _ in range(200):
        peak = rng.uniform(1e9, 1e14)
        bw = rng.uniform(1e8, 1e13)
        assert machine_balance(peak, bw / 2) == 2 * machine_balance(peak, bw)


def test_machine_balance_domain():
    with pytest.raises(DomainError):
        machine_balance(0.0, 9e11)
    with pytest.raises(DomainError):
        machine_balance(V100_PEAK, 0.0)


@pytest.fixture()
def v100():
    return load_machine(bundled_machine_path())


def test_bundled_machine_core_numbers(v100):
    assert v100.derived_peak == V100_PEAK
    assert v100.default_ceiling().label == "FP64 FMA"
    assert v100.ceiling("FP64 no-FMA").peak_flop_per_s == V100_PEAK / 2
    assert [lv.name for lv in v100.levels] == ["L1", "L2", "HBM"]
    assert v100.balance("HBM") == pytest.approx(7.4638, abs=1e-4)
    assert v100.cache_sim is not None
    assert v100.sm_resources.register_file == 65536


def test_level_and_ceiling_lookup_errors(v100):
    with pytest.raises(ValidationError):
        v100.level("L3")
    with pytest.raises(ValidationError):
        v100.ceiling("FP32 FMA")


def test_machine_round_trip(tmp_path, v100):
    path = tmp_path / "copy.machine"
    save_machine(v100, path)
    again = load_machine(path)
    assert again == v100


def test_ceiling_order_does_not_matter(v100):
    data = machine_to_dict(v100)
    data["ceilings"] = list(reversed(data["ceilings"]))
    data["levels"] = list(reversed(data["levels"]))
    reordered = machine_from_dict(data)
    assert reordered.default_ceiling() == v100.default_ceiling()
    assert reordered.balance("HBM") == v100.balance("HBM")


def _valid_dict():
    return {
        "name": "toy",
        "num_units": 4,
        "lanes_per_unit": 8,
        "ops_per_lane_cycle": 2,
        "clock_hz": 1.0e9,
        "levels": [{"name": "DRAM", "bandwidth_bytes_per_s": 1.0e10}],
        "ceilings": [{"label": "FMA", "precision": "FP64", "peak_flop_per_s": 64.0e9}],
    }


def test_missing_field_is_named():
    data = _valid_dict()
    del data["clock_hz"]
    with pytest.raises(ValidationError, match="clock_hz"):
        machine_from_dict(data)


def test_negative_bandwidth_is_named():
    data = _valid_dict()
    data["levels"][0]["bandwidth_bytes_per_s"] = -1.0
    with pytest.raises(ValidationError, match="bandwidth_bytes_per_s"):
        machine_from_dict(data)


def test_unknown_top_level_field_rejected():
    data = _valid_dict()
    data["turbo_mode"] = True
    with pytest.raises(ValidationError, match="turbo_mode"):
        machine_from_dict(data)


def test_derived_peak_must_match_a_ceiling():
    data = _valid_dict()
    data["ceilings"][0]["peak_flop_per_s"] = 60.0e9
    with pytest.raises(ValidationError, match="derived peak"):
        machine_from_dict(data)


def test_duplicate_level_names_rejected():
    data = _valid_dict()
    data["levels"].append({"name": "DRAM", "bandwidth_bytes_per_s": 2.0e10})
    with pytest.raises(ValidationError, match="duplicate"):
        machine_from_dict(data)


def test_load_machine_bad_json(tmp_path):
    path = tmp_path / "broken.machine"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ValidationError, match="not valid JSON"):
        load_machine(path)


def test_direct_construction_validates():
    with pytest.raises(ValidationError):
        MachineDescription(
            name="x",
            num_units=1,
            lanes_per_unit=1,
            ops_per_lane_cycle=1,
            clock_hz=1e9,
            levels=(),
            ceilings=(ComputeCeiling("c", "FP64", 1e9),),
        )
    with pytest.raises(ValidationError):
        MemoryLevel("HBM", 0.0)
