import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from besovmhd.fields import Grid, SpectralField, mode, sample_divergence_free
from besovmhd.io import MAGIC, _clean, read_snapshot, svg_line_chart, write_json, write_snapshot


@given(st.integers(min_value=0, max_value=1000), st.sampled_from([16, 32]))
def test_snapshot_round_trip_is_bit_exact(tmp_path_factory, seed, n):
    g = Grid(2, n, L=3.0)
    u = sample_divergence_free(g, seed)
    s = SpectralField(g, u.coeffs[:1] + 0.5, zero_mean=False)
    path = tmp_path_factory.mktemp("snap") / "f.bin"
    write_snapshot(path, {"u": u, "s": s})
    back = read_snapshot(path)
    assert list(back) == ["u", "s"]
    assert back["u"].grid == g
    assert np.array_equal(back["u"].coeffs, u.coeffs)
    assert np.array_equal(back["s"].coeffs, s.coeffs)
    assert back["s"].zero_mean is False


def test_snapshot_rejects_bad_files(tmp_path):
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"nope\n")
    with pytest.raises(ValueError):
        read_snapshot(bad)
    good = tmp_path / "good.bin"
    write_snapshot(good, {"u": mode(Grid(2, 16), (1, 0))})
    raw = good.read_bytes()
    assert raw.startswith(MAGIC)
    (tmp_path / "cut.bin").write_bytes(raw[:-8])
    with pytest.raises(ValueError):
        read_snapshot(tmp_path / "cut.bin")


def test_clean_handles_special_values():
    out = _clean({"a": float("inf"), "b": np.float64(1.5), "c": np.arange(2), "d": np.bool_(True),
                  "e": (float("-inf"), float("nan"))})
    assert out == {"a": "inf", "b": 1.5, "c": [0, 1], "d": True, "e": ["-inf", "nan"]}


def test_write_json_sorted_and_atomic(tmp_path):
    path = tmp_path / "sub" / "r.json"
    text = write_json(path, {"z": 1, "a": float("inf")})
    assert json.loads(path.read_text()) == {"a": "inf", "z": 1}
    assert text.index('"a"') < text.index('"z"')
    assert not (tmp_path / "sub" / "r.json.tmp").exists()


def test_svg_embeds_data():
    svg = svg_line_chart({"s": ([0, 1, 2], [1.0, 0.1, 0.01])}, title="t<1>", logy=True)
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert "t&lt;1&gt;" in svg
    assert "<polyline" in svg and "0.01" in svg
