"""Unit tests for frame loading, interval sampling and resizing."""

import sys

import numpy as np
import pytest
from PIL import Image

from fcmir.errors import ConfigError, IngestError
from fcmir.ingest import (
    load_frames,
    resize_pixels_to_width,
    resize_to_width,
    sample_indices,
    save_png,
)
from fcmir.models import Frame


def _write_png(path, pixels):
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(pixels).save(path)


class TestLoadFrames:
    def test_numeric_order(self, tmp_path):
        """frame_10 sorts after frame_2; indices are contiguous from 0."""
        for number, value in [(10, 30), (2, 10), (3, 20)]:
            _write_png(tmp_path / f"frame_{number}.png", np.full((4, 5, 3), value, np.uint8))

        frames = load_frames(tmp_path, fps=2.0)

        assert [f.index for f in frames] == [0, 1, 2]
        assert [int(f.pixels[0, 0, 0]) for f in frames] == [10, 20, 30]
        assert [f.timestamp_s for f in frames] == [0.0, 0.5, 1.0]
        assert frames[0].source_path.endswith("frame_2.png")

    def test_mixed_sizes_are_accepted(self, tmp_path):
        _write_png(tmp_path / "a_1.png", np.zeros((4, 5, 3), np.uint8))
        _write_png(tmp_path / "a_2.png", np.zeros((6, 7, 3), np.uint8))

        frames = load_frames(tmp_path)

        assert [(f.height, f.width) for f in frames] == [(4, 5), (6, 7)]

    def test_grayscale_png_becomes_rgb(self, tmp_path):
        Image.fromarray(np.full((3, 3), 77, np.uint8)).save(tmp_path / "f_0.png")
        frames = load_frames(tmp_path)
        assert frames[0].pixels.shape == (3, 3, 3)

    def test_empty_directory(self, tmp_path):
        with pytest.raises(IngestError, match="no frames"):
            load_frames(tmp_path)

    def test_missing_source(self, tmp_path):
        with pytest.raises(IngestError, match="not found"):
            load_frames(tmp_path / "missing")

    def test_undecodable_image(self, tmp_path):
        (tmp_path / "frame_0.png").write_bytes(b"not a png")
        with pytest.raises(IngestError, match="Failed to decode"):
            load_frames(tmp_path)

    def test_video_without_decoder(self, tmp_path):
        video = tmp_path / "clip.mp4"
        video.write_bytes(b"\x00")
        with pytest.raises(ConfigError, match="decoder"):
            load_frames(video, kind="video_file")

    def test_unknown_kind(self, tmp_path):
        with pytest.raises(ConfigError, match="Unknown source kind"):
            load_frames(tmp_path, kind="stream")

    def test_video_through_decoder_command(self, tmp_path):
        """The decoder command writes frame PNGs into {output}."""
        script = tmp_path / "decode.py"
        script.write_text(
            "import sys\n"
            "import numpy as np\n"
            "from PIL import Image\n"
            "out = sys.argv[1]\n"
            "for i in range(3):\n"
            "    image = Image.fromarray(np.full((4, 4, 3), i, np.uint8))\n"
            "    image.save(f'{out}/frame_{i:06d}.png')\n"
        )
        video = tmp_path / "clip.mp4"
        video.write_bytes(b"\x00")

        frames = load_frames(
            video, kind="video_file", fps=3.0, decoder_cmd=f"{sys.executable} {script} {{output}}"
        )

        assert len(frames) == 3
        assert all(f.source_path == str(video) for f in frames)
        assert frames[2].timestamp_s == pytest.approx(2 / 3)

    def test_failing_decoder(self, tmp_path):
        video = tmp_path / "clip.mp4"
        video.write_bytes(b"\x00")
        with pytest.raises(IngestError, match="Decoder exited"):
            load_frames(
                video,
                kind="video_file",
                decoder_cmd=f"{sys.executable} -c \"import sys; sys.exit(3)\"",
            )


class TestSampleIndices:
    def test_half_second_at_30fps(self):
        assert sample_indices(30.0, 0.5, 45) == [0, 15, 30]

    def test_skip_clamps_to_one(self):
        assert sample_indices(10.0, 0.05, 4) == [0, 1, 2, 3]

    def test_floor_of_fractional_rate(self):
        assert sample_indices(29.97, 1.0, 60) == [0, 29, 58]

    def test_float_error_is_absorbed(self):
        assert sample_indices(100.0, 0.29, 30) == [0, 29]

    def test_invalid_rate(self):
        with pytest.raises(ValueError):
            sample_indices(0.0, 0.5, 10)


class TestResize:
    def test_aspect_ratio(self):
        pixels = np.zeros((2400, 1080, 3), np.uint8)
        assert resize_pixels_to_width(pixels, 512).shape == (1138, 512, 3)

    def test_never_upscales(self):
        frame = Frame(index=0, timestamp_s=0.0, pixels=np.zeros((10, 384, 3), np.uint8))
        assert resize_to_width(frame, 512) is frame

    def test_solid_color_is_preserved(self):
        frame = Frame(index=4, timestamp_s=2.0, pixels=np.full((300, 600, 3), 123, np.uint8))
        resized = resize_to_width(frame, 200)
        assert resized.width == 200
        assert resized.index == 4
        assert np.all(resized.pixels == 123)

    def test_target_too_small(self):
        with pytest.raises(ValueError, match="target width"):
            resize_pixels_to_width(np.zeros((10, 100, 3), np.uint8), 8)


def test_save_png_is_lossless(tmp_path):
    """PNG output decodes to the exact pixels that were written."""
    pixels = np.random.default_rng(0).integers(0, 256, (9, 7, 3), dtype=np.uint8)
    path = tmp_path / "nested" / "out.png"
    save_png(pixels, path)
    with Image.open(path) as img:
        assert np.array_equal(np.asarray(img), pixels)
