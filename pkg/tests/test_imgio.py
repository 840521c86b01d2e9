import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import rangesr as rs
from rangesr.errors import FormatError
from rangesr.imgio import (
    read_pgm,
    read_png,
    read_ppm,
    segment_visualization,
    write_pgm,
    write_png,
    write_ppm,
)


def test_read_p5_8bit(tmp_path):
    p = tmp_path / "a.pgm"
    p.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 128, 255, 64]))
    img = read_pgm(p)
    np.testing.assert_array_equal(img.data, [[0, 128], [255, 64]])


def test_read_p5_16bit_exact(tmp_path):
    p = tmp_path / "a.pgm"
    payload = np.array([[0, 1], [65535, 300]], dtype=">u2")
    p.write_bytes(b"P5\n2 2\n65535\n" + payload.tobytes())
    img = read_pgm(p)
    np.testing.assert_array_equal(img.data, [[0, 1], [65535, 300]])


def test_read_p2_with_comments(tmp_path):
    p = tmp_path / "a.pgm"
    p.write_text("P2\n# a comment\n3 1\n# more\n255\n7 0 200\n")
    img = read_pgm(p)
    np.testing.assert_array_equal(img.data, [[7, 0, 200]])


def test_truncated_payload(tmp_path):
    p = tmp_path / "bad.pgm"
    p.write_bytes(b"P5\n2 2\n255\n" + bytes([1, 2]))
    with pytest.raises(FormatError, match="unexpected end of data"):
        read_pgm(p)


def test_unsupported_maxval_names_field(tmp_path):
    p = tmp_path / "bad.pgm"
    p.write_bytes(b"P5\n2 2\n300\n" + bytes(8))
    with pytest.raises(FormatError, match="maxval"):
        read_pgm(p)


def test_malformed_width_names_field(tmp_path):
    p = tmp_path / "bad.pgm"
    p.write_bytes(b"P5\nxx 2\n255\n")
    with pytest.raises(FormatError, match="width"):
        read_pgm(p)


def test_p2_sample_above_maxval(tmp_path):
    p = tmp_path / "bad.pgm"
    p.write_text("P2\n2 1\n255\n7 300\n")
    with pytest.raises(FormatError, match="maxval"):
        read_pgm(p)


def test_pgm_roundtrip_bytes_both_depths(tmp_path):
    rng = np.random.default_rng(0)
    for maxval in (255, 65535):
        data = rng.integers(0, maxval + 1, size=(7, 5)).astype(np.float32)
        p = tmp_path / f"r{maxval}.pgm"
        write_pgm(p, rs.RangeImage(data), maxval=maxval)
        first = p.read_bytes()
        back = read_pgm(p)
        np.testing.assert_array_equal(back.data, data)
        write_pgm(p, back, maxval=maxval)
        assert p.read_bytes() == first


def test_write_pgm_quantizes_and_defaults_16bit(tmp_path):
    p = tmp_path / "q.pgm"
    write_pgm(p, rs.RangeImage(np.array([[0.4, 0.6, 70000.0]], dtype=np.float32)))
    assert p.read_bytes().startswith(b"P5\n3 1\n65535\n")
    np.testing.assert_array_equal(read_pgm(p).data, [[0, 1, 65535]])


def test_ppm_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    img = rs.ColorImage(rng.integers(0, 256, size=(4, 6, 3), dtype=np.uint8))
    p = tmp_path / "c.ppm"
    write_ppm(p, img)
    back = read_ppm(p)
    np.testing.assert_array_equal(back.data, img.data)
    first = p.read_bytes()
    write_ppm(p, back)
    assert p.read_bytes() == first


def test_png_roundtrip(tmp_path):
    rng = np.random.default_rng(2)
    img = rs.ColorImage(rng.integers(0, 256, size=(5, 3, 3), dtype=np.uint8))
    p = tmp_path / "c.png"
    write_png(p, img)
    back = read_png(p)
    np.testing.assert_array_equal(back.data, img.data)


def test_png_16bit_rejected(tmp_path):
    from PIL import Image

    p = tmp_path / "deep.png"
    Image.fromarray(np.zeros((4, 4), dtype=np.uint16)).save(p)
    with pytest.raises(FormatError, match="bit depth"):
        read_png(p)


def test_read_image_dispatch(tmp_path):
    pgm = tmp_path / "r.pgm"
    write_pgm(pgm, rs.RangeImage(np.ones((2, 2), dtype=np.float32)))
    assert isinstance(rs.read_image(pgm, "range"), rs.RangeImage)
    png = tmp_path / "c.png"
    write_png(png, rs.ColorImage(np.zeros((2, 2, 3), dtype=np.uint8)))
    assert isinstance(rs.read_image(png, "color"), rs.ColorImage)
    with pytest.raises(FormatError):
        rs.read_image(png, "range")  # PNG is not a range format
    with pytest.raises(ValueError):
        rs.read_image(pgm, "nope")


@settings(max_examples=25, derandomize=True, deadline=None)
@given(
    w=st.integers(1, 9),
    h=st.integers(1, 9),
    maxval=st.sampled_from([255, 65535]),
    seed=st.integers(0, 1000),
)
def test_pgm_roundtrip_property(tmp_path_factory, w, h, maxval, seed):
    rng = np.random.default_rng(seed)
    data = rng.integers(0, maxval + 1, size=(h, w)).astype(np.float32)
    p = tmp_path_factory.mktemp("pgm") / "x.pgm"
    write_pgm(p, rs.RangeImage(data), maxval=maxval)
    np.testing.assert_array_equal(read_pgm(p).data, data)


def test_segment_visualization_shape():
    ids = np.array([[0, 1], [2, 2]], dtype=np.int32)
    viz = segment_visualization(ids)
    assert viz.shape == (2, 2, 3) and viz.dtype == np.uint8
    assert not np.array_equal(viz[0, 0], viz[0, 1])
