import numpy as np
import pytest

from feedergp.errors import FeederValidationError
from feedergp.feeder import (
    Bus,
    DerUnit,
    Feeder,
    LineSegment,
    LoadPoint,
    canon_phases,
    flatten_index,
)

from conftest import make_two_bus


def test_minimal_two_bus_document():
    f = make_two_bus()
    assert len(f.buses) == 2
    assert len(f.lines) == 1
    assert len(f.loads) == 1
    assert f.n_nodes == 1


def test_canon_phases_orders_and_rejects():
    assert canon_phases("cba") == "abc"
    assert canon_phases("b") == "b"
    with pytest.raises(FeederValidationError):
        canon_phases("ad")
    with pytest.raises(FeederValidationError):
        canon_phases("")


def test_cycle_edge_rejected():
    f = make_two_bus()
    extra = LineSegment("child", "src", "a", ((0.1 + 0.2j,),))
    with pytest.raises(FeederValidationError, match="not radial"):
        Feeder(
            source_bus=f.source_bus,
            source_vpu=f.source_vpu,
            buses=f.buses,
            lines=f.lines + (extra,),
            loads=f.loads,
            ders=f.ders,
            sbase_kva=f.sbase_kva,
            vbase_kv=f.vbase_kv,
        )


def test_disconnected_bus_rejected():
    f = make_two_bus()
    with pytest.raises(FeederValidationError):
        Feeder(
            source_bus=f.source_bus,
            source_vpu=f.source_vpu,
            buses=f.buses + (Bus("island", "a"),),
            lines=f.lines,
            loads=f.loads,
            ders=f.ders,
            sbase_kva=f.sbase_kva,
            vbase_kv=f.vbase_kv,
        )


def test_child_phases_must_be_fed():
    # child carries phase b but the only line into it carries phase a
    with pytest.raises(FeederValidationError):
        Feeder(
            source_bus="src",
            source_vpu=(1.0,),
            buses=(Bus("src", "a"), Bus("child", "b")),
            lines=(LineSegment("src", "child", "a", ((0.1 + 0.2j,),)),),
            loads=(),
            ders=(),
            sbase_kva=1000.0,
            vbase_kv=2.4,
        )


def test_load_phase_must_exist_at_bus():
    f = make_two_bus()
    with pytest.raises(FeederValidationError):
        Feeder(
            source_bus=f.source_bus,
            source_vpu=f.source_vpu,
            buses=f.buses,
            lines=f.lines,
            loads=(LoadPoint("child", "b", 10.0, 2.0, "residential"),),
            ders=f.ders,
            sbase_kva=f.sbase_kva,
            vbase_kv=f.vbase_kv,
        )


def test_der_bus_must_exist():
    f = make_two_bus()
    with pytest.raises(FeederValidationError):
        Feeder(
            source_bus=f.source_bus,
            source_vpu=f.source_vpu,
            buses=f.buses,
            lines=f.lines,
            loads=f.loads,
            ders=(DerUnit("nowhere", "a", 5.0),),
            sbase_kva=f.sbase_kva,
            vbase_kv=f.vbase_kv,
        )


def test_negative_load_rejected():
    with pytest.raises(FeederValidationError):
        LoadPoint("child", "a", -5.0, 0.0, "residential")


def test_line_needs_positive_resistance():
    with pytest.raises(FeederValidationError):
        LineSegment("a", "b", "a", ((complex(-0.1, 0.3),),))


def test_flatten_two_bus_excludes_source():
    f = make_two_bus()
    assert flatten_index(f) == [("child", "a")]


def test_flatten_orders_bfs_then_phase():
    # source feeds m (abc) which feeds leaf (bc): bfs order, phases sorted
    z3 = tuple(tuple(0.2 + 0.4j if i == j else 0.05 + 0.15j for j in range(3)) for i in range(3))
    z2 = tuple(tuple(0.2 + 0.4j if i == j else 0.05 + 0.15j for j in range(2)) for i in range(2))
    f = Feeder(
        source_bus="s",
        source_vpu=(1.0, 1.0, 1.0),
        buses=(Bus("s", "abc"), Bus("m", "abc"), Bus("leaf", "bc")),
        lines=(
            LineSegment("s", "m", "abc", z3),
            LineSegment("m", "leaf", "bc", z2),
        ),
        loads=(),
        ders=(),
        sbase_kva=1000.0,
        vbase_kv=2.4,
    )
    assert flatten_index(f) == [
        ("m", "a"),
        ("m", "b"),
        ("m", "c"),
        ("leaf", "b"),
        ("leaf", "c"),
    ]
    assert f.flat_index[("leaf", "c")] == 4


def test_flatten_deterministic_across_rebuilds():
    a = make_two_bus()
    b = make_two_bus()
    assert flatten_index(a) == flatten_index(b)


def test_depth_map():
    f = make_two_bus()
    assert f.depth["src"] == 0
    assert f.depth["child"] == 1


def test_zbase():
    f = make_two_bus()
    # 1000 * 2.4^2 / 1000 kVA
    assert f.zbase_ohm == pytest.approx(5.76)


def test_123_phase_node_counts(feeder_123):
    flat = flatten_index(feeder_123)
    per = {"a": 0, "b": 0, "c": 0}
    for _, p in flat:
        per[p] += 1
    assert per == {"a": 99, "b": 84, "c": 95}
    assert feeder_123.n_nodes == 278
    assert 2 * feeder_123.n_nodes == 556
    assert len(feeder_123.buses) == 123
