import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rbfpu.datasets import (
    DomainTransform,
    SplitSpec,
    load_delimited,
    load_points,
    read_results,
    rescale_to_unit,
    split_indices,
    validation_split,
    write_delimited,
    write_results,
)
from rbfpu.errors import DegenerateDomainError, DuplicateNodeError, ParseError, RBFPUError, ValidationError
from rbfpu.geometry import Dataset


def test_load_basic(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("0 0 1\n1 1 2\n")
    ds = load_delimited(p, 2)
    assert ds.n == 2
    assert ds.values.tolist() == [1.0, 2.0]


def test_load_comments_commas_blank_lines(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("# x,y,z\n\n0.5, 1.5, 10\n  2,3 ,4\n# trailing\n")
    ds = load_delimited(p, 2)
    assert ds.nodes.tolist() == [[0.5, 1.5], [2.0, 3.0]]
    assert ds.values.tolist() == [10.0, 4.0]


def test_load_reports_bad_line(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("0 0 1\n# ok\n1 1\n")
    with pytest.raises(ParseError, match=":3"):
        load_delimited(p, 2)
    p.write_text("0 0 1\n1 x 2\n")
    with pytest.raises(ParseError) as info:
        load_delimited(p, 2)
    assert info.value.line == 2


def test_load_reports_duplicate_lines(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("0 0 1\n1 1 2\n0 0 5\n")
    with pytest.raises(DuplicateNodeError, match="lines 1 and 3"):
        load_delimited(p, 2)


def test_load_missing_file(tmp_path):
    with pytest.raises(ValidationError):
        load_delimited(tmp_path / "nope.txt", 2)


def test_load_glacier_sized_file(tmp_path):
    rng = np.random.default_rng(0)
    xy = rng.random((8345, 2)) * [4000.0, 3000.0]
    z = rng.random(8345) * 800
    p = tmp_path / "glacier.txt"
    write_delimited(p, Dataset(xy, z))
    assert load_delimited(p, 2).n == 8345


def test_write_then_load_is_lossless(tmp_path):
    rng = np.random.default_rng(1)
    ds = Dataset(rng.standard_normal((50, 3)) * 1e3, rng.standard_normal(50) * 1e-7)
    p = tmp_path / "d.txt"
    write_delimited(p, ds)
    back = load_delimited(p, 3)
    assert back.nodes.tobytes() == ds.nodes.tobytes()
    assert back.values.tobytes() == ds.values.tobytes()


def test_load_points_accepts_optional_value(tmp_path):
    p = tmp_path / "p.txt"
    p.write_text("0.1 0.2\n0.3 0.4 9\n")
    assert load_points(p, 2).tolist() == [[0.1, 0.2], [0.3, 0.4]]


def test_rescale_examples():
    ds, tr = rescale_to_unit(Dataset([[0, 0], [2, 4]], [1, 2]))
    assert ds.nodes.tolist() == [[0, 0], [1, 1]]
    assert tr.scale.tolist() == [0.5, 0.25]
    assert ds.values.tolist() == [1, 2]
    unit = Dataset([[0, 0], [1, 1], [0.3, 0.7]], [1, 2, 3])
    ds, tr = rescale_to_unit(unit)
    assert tr.offset.tolist() == [0, 0] and tr.scale.tolist() == [1, 1]
    assert ds.nodes.tobytes() == unit.nodes.tobytes()
    with pytest.raises(DegenerateDomainError):
        rescale_to_unit(Dataset([[0, 1], [2, 1]], [1, 2]))


def test_rescale_roundtrip_and_axis_scaling():
    rng = np.random.default_rng(2)
    raw = Dataset(rng.random((100, 2)) * [500.0, 3.0] + [1e4, -7.0], rng.random(100))
    unit, tr = rescale_to_unit(raw)
    assert unit.in_unit_cube()
    assert np.abs(tr.inverse(tr.forward(raw.nodes)) - raw.nodes).max() <= 1e-12 * np.abs(raw.nodes).max()
    assert np.abs(tr.inverse(unit.nodes) - raw.nodes).max() <= 1e-11
    i, j = 3, 71
    np.testing.assert_allclose(unit.nodes[i] - unit.nodes[j], (raw.nodes[i] - raw.nodes[j]) * tr.scale, rtol=1e-12)
    again = DomainTransform.from_dict(tr.to_dict())
    assert again.forward(raw.nodes).tobytes() == tr.forward(raw.nodes).tobytes()


def test_split_examples():
    ds = Dataset(np.arange(10.0)[:, None], np.arange(10.0))
    a = split_indices(10, SplitSpec(3, seed=42))
    b = split_indices(10, SplitSpec(3, seed=42))
    assert a[1].tolist() == b[1].tolist() and len(a[1]) == 3
    train, hold = validation_split(ds, SplitSpec(9, seed=1))
    assert train.n == 1 and hold.n == 9
    with pytest.raises(ValidationError):
        validation_split(ds, SplitSpec(10))
    with pytest.raises(ValidationError):
        validation_split(ds, SplitSpec(0))


def test_split_glacier_sizes():
    train, hold = split_indices(8345, SplitSpec(90, seed=7))
    assert len(train) == 8255 and len(hold) == 90


@settings(max_examples=50)
@given(n=st.integers(2, 300), data=st.data())
def test_split_is_partition(n, data):
    k = data.draw(st.integers(1, n - 1))
    seed = data.draw(st.integers(0, 2**63 - 1))
    train, hold = split_indices(n, SplitSpec(k, seed))
    assert sorted(np.concatenate([train, hold]).tolist()) == list(range(n))
    assert len(hold) == k


def test_write_results(tmp_path):
    p = tmp_path / "r.csv"
    write_results(p, [("N=289", 1.03e-5, 2.36e-4, 0.8)])
    lines = p.read_text().splitlines()
    assert lines == ["label,rmse,mae,seconds", "N=289,1.03000e-05,2.36000e-04,8.00000e-01"]
    write_results(p, [])
    assert p.read_text() == "label,rmse,mae,seconds\n"


def test_write_results_roundtrip(tmp_path):
    rows = [("a", 1.234567e-3, 9.87654e2, 1.5), ("b", float("nan"), 0.0, 12.0)]
    p = tmp_path / "r.csv"
    write_results(p, rows)
    header, back = read_results(p)
    assert header == ("label", "rmse", "mae", "seconds")
    assert back[0] == ("a", 1.23457e-3, 9.87654e2, 1.5)
    assert back[1][0] == "b" and np.isnan(back[1][1])


def test_write_results_bad_path(tmp_path):
    with pytest.raises(RBFPUError, match="nodir"):
        write_results(tmp_path / "nodir" / "r.csv", [])
