import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scalekit.accounting import ModelShape, count_params, chinchilla_tokens
from scalekit.errors import DuplicateLabel, InputError, LocatedError, MalformedNumber, SchemaMismatch
from scalekit.planner import EvalRecord
from scalekit.records import (
    COLUMNS,
    DOWNSTREAM_COLUMNS,
    RecordFile,
    _bundled_text,
    dump_records,
    load_bundled,
    parse_records,
)

HEADER = "# scalekit-records: 1\n" + ",".join(COLUMNS) + "\n"

# (family, label, training FLOPs, Pile test loss) typed from the published
# zero-shot evaluation table; None where the table has "-".
PUBLISHED_TABLE = [
    ("GPT-J", "6.1B", 1.7e22, 1.613),
    ("GPT-NeoX", "20B", 6.4e22, 1.519),
    ("OPT", "125M", 4.1e20, None),
    ("OPT", "350M", 1.1e21, None),
    ("OPT", "1.3B", 3.2e21, None),
    ("OPT", "2.7B", 6.1e21, None),
    ("OPT", "6.7B", 1.4e22, None),
    ("OPT", "13B", 2.7e22, None),
    ("Pythia", "70M", 1.6e20, 2.504),
    ("Pythia", "160M", 4.1e20, 2.186),
    ("Pythia", "410M", 1.1e21, 1.971),
    ("Pythia", "1B", 2.2e21, 1.845),
    ("Pythia", "1.4B", 3.2e21, 1.793),
    ("Pythia", "2.8B", 6.1e21, 1.720),
    ("Pythia", "6.9B", 1.4e22, 1.626),
    ("Pythia", "12B", 2.4e22, 1.582),
    ("Pythia-dedup", "70M", 1.6e20, 2.549),
    ("Pythia-dedup", "160M", 4.1e20, 2.204),
    ("Pythia-dedup", "410M", 1.1e21, 1.989),
    ("Pythia-dedup", "1B", 2.2e21, 1.858),
    ("Pythia-dedup", "1.4B", 3.2e21, 1.889),
    ("Pythia-dedup", "2.8B", 6.1e21, 1.724),
    ("Pythia-dedup", "6.9B", 1.4e22, 1.644),
    ("Pythia-dedup", "12B", 2.4e22, 1.601),
    ("Cerebras-GPT", "111M", 2.6e18, 2.608),
    ("Cerebras-GPT", "256M", 1.3e19, 2.349),
    ("Cerebras-GPT", "590M", 6.1e19, 2.181),
    ("Cerebras-GPT", "1.3B", 2.8e20, 1.997),
    ("Cerebras-GPT", "2.7B", 1.1e21, 1.834),
    ("Cerebras-GPT", "6.7B", 6.3e21, 1.704),
    ("Cerebras-GPT", "13B", 2.3e22, 1.572),
    ("Cerebras-GPT-muP", "111M", 2.6e18, 2.588),
    ("Cerebras-GPT-muP", "256M", 1.3e19, 2.359),
    ("Cerebras-GPT-muP", "590M", 6.1e19, 2.155),
    ("Cerebras-GPT-muP", "1.3B", 2.8e20, 1.984),
    ("Cerebras-GPT-muP", "2.7B", 1.1e21, 1.846),
]


def test_bundled_file_sizes():
    cg = parse_records(_bundled_text("cerebras_gpt.csv")).rows
    assert len(cg) == 12
    assert sum(r.family == "Cerebras-GPT" for r in cg) == 7
    assert sum(r.family == "Cerebras-GPT-muP" for r in cg) == 5
    thirteen = next(r for r in cg if r.key == ("Cerebras-GPT", "13B"))
    assert thirteen.pile_xent == 1.572 and thirteen.train_flops == 2.3e22
    assert len(parse_records(_bundled_text("pythia.csv")).rows) == 16
    assert len(parse_records(_bundled_text("others.csv")).rows) == 8


def test_bundled_matches_published_table():
    recs = load_bundled()
    assert len(recs) == len(PUBLISHED_TABLE)
    for family, label, flops, xent in PUBLISHED_TABLE:
        matches = [r for r in recs if (r.train_flops, r.pile_xent) == (flops, xent) and r.key == (family, label)]
        assert len(matches) == 1, (family, label)
    pairs = [(r.train_flops, r.pile_xent) for r in recs if r.pile_xent is not None]
    assert len(pairs) == len(set(pairs))


def test_bundled_cerebras_rows_are_consistent():
    for r in load_bundled():
        if r.is_cerebras:
            assert r.params == count_params(r.shape)
            assert r.tokens == chinchilla_tokens(r.params)
        assert r.dedup == (r.family == "Pythia-dedup")
        assert set(r.downstream) == set(DOWNSTREAM_COLUMNS)


def test_data_dir_override(tmp_path, monkeypatch):
    for name in ("cerebras_gpt.csv", "pythia.csv"):
        (tmp_path / name).write_text(HEADER)
    (tmp_path / "others.csv").write_text(HEADER + "X,1B,1000000000,1e21,2.0,,0,,,,,,,,,,,,,,\n")
    monkeypatch.setenv("SCALEKIT_DATA", str(tmp_path))
    recs = load_bundled()
    assert [r.key for r in recs] == [("X", "1B")]
    monkeypatch.setenv("SCALEKIT_DATA", str(tmp_path / "missing"))
    with pytest.raises(InputError):
        load_bundled()


def test_empty_rows_section():
    assert parse_records(HEADER) == RecordFile("1", [])
    assert parse_records("# comment\n" + HEADER + "\n# trailing\n").rows == []


def test_duplicate_reported_at_second_line():
    row = "X,1B,1000000000,1e21,2.0,,0,,,,,,,,,,,,,,\n"
    with pytest.raises(DuplicateLabel) as err:
        parse_records(HEADER + row + "# note\n" + row)
    assert err.value.line == 5


def test_malformed_number_location():
    with pytest.raises(MalformedNumber) as err:
        parse_records(HEADER + "X,1B,1000000000,1e2x,2.0,,0,,,,,,,,,,,,,,\n")
    assert (err.value.line, err.value.column) == (3, 4)
    with pytest.raises(MalformedNumber) as err:
        parse_records(HEADER + "X,1B,1.5,1e21,2.0,,0,,,,,,,,,,,,,,\n")
    assert err.value.column == 3
    with pytest.raises(MalformedNumber):
        parse_records(HEADER + "X,1B,10,nan,2.0,,0,,,,,,,,,,,,,,\n")


@pytest.mark.parametrize(
    "text",
    [
        ",".join(COLUMNS) + "\n",  # no version line
        "# scalekit-records: 9\n" + ",".join(COLUMNS) + "\n",
        "# scalekit-records: 1\nfamily,label\n",
        HEADER + "X,1B,1000000000\n",
        HEADER + "X,1B,,1e21,2.0,,0,,,,,,,,,,,,,,\n",
        HEADER + "X,1B,10,1e21,2.0,,0,768,,,,,,,,,,,,,\n",
        "# scalekit-records: 1\n",
    ],
)
def test_schema_mismatch(text):
    with pytest.raises(SchemaMismatch):
        parse_records(text)


def test_invalid_record_values_are_located():
    with pytest.raises(LocatedError) as err:
        parse_records(HEADER + "X,1B,10,1e21,2.0,,0,,,,,,,1.5,,,,,,,\n")
    assert err.value.line == 3


def test_integers_accept_scientific_notation():
    rec = parse_records(HEADER + "X,1B,1.3e9,1e21,-,3e11,1,,,,,,,,,,,,,,\n").rows[0]
    assert rec.params == 1_300_000_000 and rec.tokens == 300_000_000_000 and rec.pile_xent is None
    assert rec.dedup


def test_bundled_round_trip():
    rf = RecordFile(rows=load_bundled())
    text = dump_records(rf)
    assert parse_records(text) == rf
    assert dump_records(parse_records(text)) == text


acc = st.floats(0.0, 1.0, allow_nan=False)
labels = st.text(alphabet=st.characters(whitelist_categories=("Lu", "Ll", "Nd"), whitelist_characters=".-_ "), min_size=1, max_size=8).map(str.strip).filter(bool)


@st.composite
def records(draw):
    shape = None
    if draw(st.booleans()):
        k = draw(st.sampled_from([64, 128]))
        shape = ModelShape.gpt(k * draw(st.integers(1, 40)), draw(st.integers(0, 48)), k)
    return EvalRecord(
        family=draw(labels),
        label=draw(labels),
        params=draw(st.integers(1, 10**13)),
        train_flops=draw(st.floats(1e-3, 1e30, allow_nan=False)),
        pile_xent=draw(st.none() | st.floats(1e-6, 20.0)),
        tokens=draw(st.none() | st.integers(0, 10**13)),
        downstream=draw(st.dictionaries(st.sampled_from(DOWNSTREAM_COLUMNS), acc)),
        shape=shape,
        dedup=draw(st.booleans()),
    )


@settings(max_examples=200)
@given(st.lists(records(), max_size=10, unique_by=lambda r: r.key))
def test_round_trip_property(rows):
    rf = RecordFile(rows=rows)
    back = parse_records(dump_records(rf))
    assert back.rows == rows
