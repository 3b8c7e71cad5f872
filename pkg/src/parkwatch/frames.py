"""Grayscale frame I/O: strict binary PGM in, PGM/PPM out.

A "video" is a directory of binary PGM files; name order is frame order.
The reader is deliberately strict (exact payload length, maxval 255 only)
so that a malformed upload fails loudly instead of shifting every later
frame by a few bytes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class NoFrames(ValueError):
    """Directory holds no .pgm files."""


class DimensionMismatch(ValueError):
    """Frames of one sequence disagree on width or height."""


class UnreadableFrame(ValueError):
    """File is not a binary PGM with maxval 255, or its payload is short or long."""


_HEADER = re.compile(rb"^P5[ \t\r\n]+(\d+)[ \t\r\n]+(\d+)[ \t\r\n]+(\d+)[ \t\r\n]")


@dataclass(frozen=True)
class Frame:
    """One grayscale image; pixels is a (height, width) uint8 array."""

    width: int
    height: int
    pixels: np.ndarray
    index: int

    def __post_init__(self):
        if self.pixels.shape != (self.height, self.width):
            raise ValueError(
                f"pixel array is {self.pixels.shape}, frame says {self.height}x{self.width}")


@dataclass(frozen=True)
class FrameSequence:
    """An ordered, dimension-checked directory of frames."""

    directory: Path
    names: tuple[str, ...]
    width: int
    height: int

    def __len__(self):
        return len(self.names)


def decode_pgm(raw: bytes) -> np.ndarray:
    """Binary PGM bytes to a (height, width) uint8 array."""
    m = _HEADER.match(raw)
    if not m:
        raise UnreadableFrame("not a binary PGM header")
    width, height, maxval = (int(g) for g in m.groups())
    if maxval != 255:
        raise UnreadableFrame(f"maxval {maxval}, only 255 is supported")
    if width < 1 or height < 1:
        raise UnreadableFrame(f"degenerate dimensions {width}x{height}")
    payload = raw[m.end():]
    if len(payload) != width * height:
        raise UnreadableFrame(
            f"payload is {len(payload)} bytes, {width}x{height} needs {width * height}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width)


def write_pgm(pixels: np.ndarray) -> bytes:
    """(height, width) uint8 array to binary PGM bytes."""
    h, w = pixels.shape
    return b"P5\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(pixels, dtype=np.uint8).tobytes()


def write_ppm(rgb: np.ndarray) -> bytes:
    """(height, width, 3) uint8 array to binary PPM bytes."""
    h, w, _ = rgb.shape
    return b"P6\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(rgb, dtype=np.uint8).tobytes()


def open_sequence(directory: str | Path) -> FrameSequence:
    """Discover the .pgm files of a directory as one frame sequence.

    Frame order is byte-wise lexicographic file name order, so it never
    depends on filesystem enumeration order or zero padding conventions.
    """
    directory = Path(directory)
    names = sorted(p.name for p in directory.iterdir()
                   if p.is_file() and p.name.endswith(".pgm"))
    if not names:
        raise NoFrames(f"no .pgm files in {directory}")
    width = height = None
    for name in names:
        with open(directory / name, "rb") as f:
            head = f.read(64)
        m = _HEADER.match(head)
        if not m:
            raise UnreadableFrame(f"{name}: not a binary PGM header")
        w, h, maxval = (int(g) for g in m.groups())
        if maxval != 255:
            raise UnreadableFrame(f"{name}: maxval {maxval}, only 255 is supported")
        if width is None:
            width, height = w, h
        elif (w, h) != (width, height):
            raise DimensionMismatch(
                f"{name} is {w}x{h}, sequence started at {width}x{height}")
    return FrameSequence(directory, tuple(names), width, height)


def read_frame(seq: FrameSequence, i: int) -> Frame:
    """Decode frame i of a sequence."""
    if not 0 <= i < len(seq.names):
        raise IndexError(f"frame {i} of a {len(seq.names)}-frame sequence")
    raw = (seq.directory / seq.names[i]).read_bytes()
    pixels = decode_pgm(raw)
    if pixels.shape != (seq.height, seq.width):
        raise DimensionMismatch(
            f"{seq.names[i]} is {pixels.shape[1]}x{pixels.shape[0]}, "
            f"sequence is {seq.width}x{seq.height}")
    return Frame(seq.width, seq.height, pixels, i)
