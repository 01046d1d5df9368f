import numpy as np
import pytest
from PIL import Image

from rainforge import load_image, save_image
from rainforge.exceptions import DecodeError, UnsupportedFormatError


def write_png(path, array_u8):
    Image.fromarray(array_u8, mode="RGB").save(path, format="PNG")


class TestLoadImage:
    def test_white_pixel(self, tmp_path):
        path = tmp_path / "w.png"
        write_png(path, np.full((1, 1, 3), 255, dtype=np.uint8))
        assert np.array_equal(load_image(path), np.ones((1, 1, 3)))

    def test_black_pixel(self, tmp_path):
        path = tmp_path / "b.png"
        write_png(path, np.zeros((1, 1, 3), dtype=np.uint8))
        assert np.array_equal(load_image(path), np.zeros((1, 1, 3)))

    def test_8bit_mapping(self, tmp_path):
        # reference decode: the same bytes PIL wrote come back divided by 255
        data = np.zeros((2, 2, 3), dtype=np.uint8)
        data[0, 0] = (128, 64, 32)
        path = tmp_path / "q.png"
        write_png(path, data)
        img = load_image(path)
        assert img[0, 0, 0] == pytest.approx(128 / 255, abs=1e-12)
        assert img[0, 0, 1] == pytest.approx(64 / 255, abs=1e-12)
        assert img.shape == (2, 2, 3)

    def test_grayscale_file_expands_to_three_channels(self, tmp_path):
        path = tmp_path / "g.png"
        Image.fromarray(np.full((3, 3), 77, dtype=np.uint8), mode="L").save(path)
        img = load_image(path)
        assert img.shape == (3, 3, 3)
        assert np.ptp(img, axis=2).max() == 0.0

    def test_jpeg_reads(self, tmp_path, rng):
        path = tmp_path / "p.jpg"
        data = (rng.random((16, 16, 3)) * 255).astype(np.uint8)
        Image.fromarray(data, mode="RGB").save(path, format="JPEG")
        img = load_image(path)
        assert img.shape == (16, 16, 3)
        assert img.min() >= 0.0 and img.max() <= 1.0

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_image(tmp_path / "nope.png")

    def test_not_an_image(self, tmp_path):
        path = tmp_path / "fake.png"
        path.write_text("this is not a png")
        with pytest.raises(UnsupportedFormatError):
            load_image(path)

    def test_unsupported_container(self, tmp_path):
        path = tmp_path / "img.bmp"
        Image.fromarray(np.zeros((2, 2, 3), dtype=np.uint8)).save(path, format="BMP")
        with pytest.raises(UnsupportedFormatError):
            load_image(path)

    def test_truncated_file(self, tmp_path, rng):
        path = tmp_path / "t.png"
        write_png(path, (rng.random((64, 64, 3)) * 255).astype(np.uint8))
        path.write_bytes(path.read_bytes()[:200])
        with pytest.raises((DecodeError, UnsupportedFormatError)):
            load_image(path)


class TestSaveImage:
    def test_roundtrip_quantization_bound(self, tmp_path, rng):
        img = rng.random((9, 7, 3))
        path = tmp_path / "r.png"
        save_image(img, path)
        assert np.abs(load_image(path) - img).max() <= 1 / 255

    def test_single_channel_writes_grayscale(self, tmp_path):
        path = tmp_path / "gray.png"
        save_image(np.linspace(0, 1, 16).reshape(4, 4), path)
        with Image.open(path) as im:
            assert im.mode == "L"
            assert im.format == "PNG"

    def test_nan_rejected(self, tmp_path):
        img = np.zeros((2, 2, 3))
        img[0, 0, 0] = np.nan
        with pytest.raises(ValueError):
            save_image(img, tmp_path / "nan.png")

    def test_out_of_range_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            save_image(np.full((2, 2, 3), 1.5), tmp_path / "hot.png")
