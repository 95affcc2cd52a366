"""Tests for table rendering and atomic output."""

import numpy as np
import pytest

from nondetlab.errors import DataError
from nondetlab.recorder import TableSet, atomic_write, read_table, render_table
from nondetlab.workers import run_parallel


def test_render_table_cells():
    text = render_table(["a", "b", "c", "d"], [[0.1, None, True, np.int64(3)]], header="# lab")
    assert text == "# lab\na,b,c,d\n0.10000000000000001,,1,3\n"


def test_read_table_skips_header(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text(render_table(["x", "y"], [[1, 2.5], [3, 4.0]], header="# lab run"))
    assert read_table(path) == [{"x": "1", "y": "2.5"}, {"x": "3", "y": "4"}]
    with pytest.raises(DataError):
        read_table(tmp_path / "missing.csv")


def test_atomic_write_replaces_file(tmp_path):
    path = tmp_path / "sub" / "out.txt"
    atomic_write(path, "first")
    atomic_write(path, b"second")
    assert path.read_text() == "second"
    assert sorted(p.name for p in path.parent.iterdir()) == ["out.txt"]


def test_table_set_writes_only_on_commit(tmp_path):
    tables = TableSet("# lab")
    tables.add(tmp_path / "a.csv", ["x"], [[1]])
    tables.add(tmp_path / "b.csv", ["y"], [[2]])
    assert not any(tmp_path.iterdir())
    assert tables.commit() == [tmp_path / "a.csv", tmp_path / "b.csv"]
    assert read_table(tmp_path / "b.csv") == [{"y": "2"}]


@pytest.mark.parametrize("workers", [1, 4])
def test_run_parallel_keeps_input_order(workers):
    assert run_parallel(lambda x: x * x, range(20), workers) == [x * x for x in range(20)]
