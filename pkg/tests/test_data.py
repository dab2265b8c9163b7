import numpy as np
import pytest

from rcit.data import DataMatrix
from rcit.exceptions import InvalidInputError


def test_roundtrip_exact(tmp_path, rng):
    m = DataMatrix.from_array(rng.standard_normal((7, 3)), ["a", "b", "c"])
    m.to_csv(tmp_path / "d.csv")
    back = DataMatrix.read_csv(tmp_path / "d.csv")
    np.testing.assert_array_equal(back.values, m.values)
    assert back.column_names == ("a", "b", "c")


def test_default_names():
    assert DataMatrix.from_array(np.zeros((2, 2))).column_names == ("V1", "V2")


def test_columns(rng):
    m = DataMatrix.from_array(rng.standard_normal((4, 3)), ["a", "b", "c"])
    np.testing.assert_array_equal(m.columns(["c", "a"]), m.values[:, [2, 0]])
    with pytest.raises(InvalidInputError, match="unknown columns: q"):
        m.columns(["q"])


@pytest.mark.parametrize("text,msg", [
    ("", "empty file"),
    ("a,b\n1,2\n3\n", "row 3 has 1 fields"),
    ("a,b\n1,x\n", "column 'b': cannot parse 'x'"),
    ("a,b\n1,nan\n", "non-finite"),
])
def test_read_errors(tmp_path, text, msg):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(InvalidInputError, match=msg):
        DataMatrix.read_csv(path)


def test_duplicate_names():
    with pytest.raises(InvalidInputError):
        DataMatrix(np.zeros((2, 2)), ("a", "a"))


def test_array_protocol(rng):
    m = DataMatrix.from_array(rng.standard_normal((3, 2)))
    assert np.asarray(m).shape == (3, 2)
