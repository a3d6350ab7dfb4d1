import json

import numpy as np
import pytest

from sldelay.reports import fmt, render_csv, render_json, write_csv, write_json


class TestFmt:
    def test_none_is_empty_field(self):
        assert fmt(None) == ""

    def test_bool_lowercase(self):
        assert fmt(True) == "true"
        assert fmt(False) == "false"

    def test_float_shortest_roundtrip(self):
        assert fmt(0.1) == "0.1"
        assert fmt(1.0 / 3.0) == "0.3333333333333333"
        assert float(fmt(math_pi := 3.141592653589793)) == math_pi

    def test_numpy_scalars_render_as_plain_floats(self):
        assert fmt(np.float64(0.25)) == "0.25"
        assert fmt(np.int64(7)) == "7.0" or fmt(np.int64(7)) == "7"
        assert fmt(np.float64("nan")) == "nan"

    def test_int_and_str_pass_through(self):
        assert fmt(12) == "12"
        assert fmt("b-plain") == "b-plain"


class TestRenderCsv:
    def test_layout(self):
        text = render_csv(
            ["n", "s"],
            [[1, 0.5], [2, None]],
            comments=["digest: abc"],
            trailing_comments=["max: 0.5"],
        )
        assert text == "# digest: abc\nn,s\n1,0.5\n2,\n# max: 0.5\n"

    def test_no_comments(self):
        assert render_csv(["x"], [[1.5]]) == "x\n1.5\n"

    def test_write_matches_render_and_leaves_no_temp(self, tmp_path):
        path = tmp_path / "table.csv"
        write_csv(path, ["a", "b"], [[1, 2]], comments=["c"])
        assert path.read_text() == render_csv(["a", "b"], [[1, 2]], comments=["c"])
        assert list(tmp_path.iterdir()) == [path]

    def test_rewrite_is_bit_identical(self, tmp_path):
        path = tmp_path / "table.csv"
        rows = [[k, np.float64(k) / 7.0] for k in range(20)]
        write_csv(path, ["n", "v"], rows)
        first = path.read_bytes()
        write_csv(path, ["n", "v"], rows)
        assert path.read_bytes() == first


class TestJson:
    def test_sorted_keys_and_trailing_newline(self):
        text = render_json({"b": 1, "a": [1, 2]})
        assert text.endswith("\n")
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text) == {"a": [1, 2], "b": 1}

    def test_write_roundtrip(self, tmp_path):
        path = tmp_path / "report.json"
        doc = {"passed": True, "checks": [{"name": "x", "measured": 0.5}]}
        write_json(path, doc)
        assert json.loads(path.read_text()) == doc
        assert path.read_text() == render_json(doc)
