import numpy as np
import pytest

from feedergp.errors import FeederParseError
from feedergp.feeder import flatten_index
from feedergp.feeder_io import (
    emit_feeder,
    load_feeder,
    parse_feeder,
    save_feeder,
)
from feedergp.synthetic import generate_synthetic_feeder

from conftest import make_two_bus

MINIMAL_DOC = """
[source]
bus=src phases=a vpu=1.0 sbase_kva=1000 vbase_kv=2.4

[bus]
src a
child a

[line]
src child a 0.3+j0.6

[load]
child a 80 30 industrial
"""


def test_parse_minimal_document():
    f = parse_feeder(MINIMAL_DOC)
    assert [b.id for b in f.buses] == ["src", "child"]
    assert f.lines[0].z_matrix[0, 0] == 0.3 + 0.6j
    assert f.loads[0].base_p_kw == 80.0
    assert f.loads[0].loadshape == "industrial"


def test_round_trip_is_identity_on_emitted_text():
    f = make_two_bus()
    text = emit_feeder(f)
    assert emit_feeder(parse_feeder(text)) == text


def test_round_trip_synthetic_feeders():
    for seed in range(4):
        f = generate_synthetic_feeder(12, "mixed", 2, seed=seed)
        text = emit_feeder(f)
        g = parse_feeder(text)
        assert emit_feeder(g) == text
        assert flatten_index(g) == flatten_index(f)


def test_save_load(tmp_path):
    f = make_two_bus()
    path = tmp_path / "feeder.txt"
    save_feeder(f, path)
    g = load_feeder(path)
    assert emit_feeder(g) == emit_feeder(f)


def test_parse_error_reports_line_number():
    doc = MINIMAL_DOC.replace("src child a 0.3+j0.6", "src child a banana")
    with pytest.raises(FeederParseError, match=r"line \d+"):
        parse_feeder(doc)


def test_unknown_section_rejected():
    with pytest.raises(FeederParseError):
        parse_feeder(MINIMAL_DOC + "\n[capacitor]\nchild a 100\n")


def test_missing_source_rejected():
    doc = "\n".join(
        ln for ln in MINIMAL_DOC.splitlines() if not ln.startswith("bus=src")
    )
    with pytest.raises(FeederParseError):
        parse_feeder(doc)


def test_comment_and_blank_lines_ignored():
    doc = MINIMAL_DOC.replace("[bus]", "# a comment\n\n[bus]")
    f = parse_feeder(doc)
    assert len(f.buses) == 2


def test_wrong_impedance_entry_count():
    # two-phase line needs 4 entries, give 3
    doc = MINIMAL_DOC.replace("child a\n", "child ab\n").replace(
        "src child a 0.3+j0.6",
        "src child ab 0.3+0.6j 0.05+0.1j 0.05+0.1j",
    )
    with pytest.raises(FeederParseError):
        parse_feeder(doc)


def test_complex_field_forms():
    doc = MINIMAL_DOC.replace("0.3+j0.6", "3e-1+j6e-1")
    f = parse_feeder(doc)
    assert f.lines[0].z_matrix[0, 0] == pytest.approx(0.3 + 0.6j)


def test_packaged_feeder_matches_builder():
    # the shipped text file is a snapshot of build_feeder_123(); regenerate
    # it if either side changes
    from importlib.resources import files

    from feedergp.synthetic import build_feeder_123

    packaged = files("feedergp").joinpath("data/feeder_123bus.txt").read_text()
    assert emit_feeder(build_feeder_123()) == packaged
