import numpy as np

from gazecap.imageio import read_pgm, read_ppm, write_pgm, write_ppm


def test_ppm_round_trip(tmp_path):
    img = np.random.default_rng(0).integers(0, 256, size=(5, 7, 3)).astype(np.uint8)
    write_ppm(tmp_path / "a.ppm", img, comments={"seed": 3, "tool": "x"})
    np.testing.assert_array_equal(read_ppm(tmp_path / "a.ppm"), img)
    assert b"# seed=3" in (tmp_path / "a.ppm").read_bytes()


def test_pgm_round_trip_16_and_8_bit(tmp_path):
    v = np.random.default_rng(1).random((4, 6))
    write_pgm(tmp_path / "a.pgm", v)
    np.testing.assert_allclose(read_pgm(tmp_path / "a.pgm"), v, atol=0.5 / 65535)
    write_pgm(tmp_path / "b.pgm", v, bits=8)
    np.testing.assert_allclose(read_pgm(tmp_path / "b.pgm"), v, atol=0.5 / 255)


def test_pgm_raster_starting_with_whitespace_byte(tmp_path):
    v = np.full((2, 2), 10 / 255)  # byte 0x0a is a newline
    write_pgm(tmp_path / "n.pgm", v, bits=8)
    np.testing.assert_allclose(read_pgm(tmp_path / "n.pgm"), v)
