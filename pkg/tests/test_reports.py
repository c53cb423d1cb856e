import io
import json
import math

import numpy as np

from biplate.reports import dump_json, fmt, jsonable, write_csv


def test_fmt():
    assert fmt(None) == ""
    assert fmt(True) == "true" and fmt(np.bool_(False)) == "false"
    assert fmt(np.int64(3)) == "3"
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(float("nan")) == "nan" and fmt(-math.inf) == "-inf"
    assert fmt("disk:1") == "disk:1"


def test_write_csv_fixed_columns():
    text = write_csv([{"b": 2.0, "a": 1}, {"a": 3}], ("a", "b"))
    assert text == "a,b\n1,2\n3,\n"
    buf = io.StringIO()
    assert write_csv([{"a": "x,y"}], ("a",), buf) == ""
    assert buf.getvalue() == 'a\n"x,y"\n'


def test_json_is_sorted_and_plain():
    obj = {"z": np.array([1.0, np.nan]), "a": (np.int32(2), np.float64(0.1))}
    text = dump_json(obj)
    assert list(json.loads(text)) == ["a", "z"]
    assert json.loads(text)["z"] == [1.0, "nan"]
    assert jsonable(np.bool_(True)) is True
