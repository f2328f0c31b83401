"""Sprite detection by exact (or tolerance-bounded) sliding-window matching.

Frames are RGB arrays of shape (H, W, 3); templates are RGBA arrays whose
alpha-0 pixels are wildcards.  Image files are PNG.
"""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ingest import FrameRecord


@dataclass(frozen=True, eq=False)
class SpriteTemplate:
    name: str
    pixels: np.ndarray   # (h, w, 4) uint8

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 4:
            raise ValueError(f"template {self.name!r} must be RGBA")
        if not (px[:, :, 3] != 0).any():
            raise ValueError(f"template {self.name!r} has no opaque pixel")
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def mask(self) -> np.ndarray:
        return self.pixels[:, :, 3] != 0


def match_template(frame: np.ndarray, tmpl: SpriteTemplate, tolerance: int = 0) -> list[tuple[int, int]]:
    """(x, y) of every placement where all opaque template pixels match.

    A pixel matches when each channel differs by at most `tolerance`.
    Positions come back in row-major order.
    """
    if tolerance < 0:
        raise ValueError("tolerance must be nonnegative")
    frame = np.asarray(frame)
    H, W = frame.shape[:2]
    h, w = tmpl.height, tmpl.width
    if h > H or w > W:
        return []
    f = frame[:, :, :3].astype(np.int16)
    rgb = tmpl.pixels[:, :, :3].astype(np.int16)
    ok = np.ones((H - h + 1, W - w + 1), dtype=bool)
    for dy, dx in zip(*np.nonzero(tmpl.mask)):
        window = f[dy:dy + H - h + 1, dx:dx + W - w + 1]
        ok &= (np.abs(window - rgb[dy, dx]) <= tolerance).all(axis=2)
        if not ok.any():
            return []
    ys, xs = np.nonzero(ok)
    return [(int(x), int(y)) for y, x in zip(ys, xs)]


def suppress_overlaps(positions, w: int, h: int) -> list[tuple[int, int]]:
    """Keep matches in order, dropping any whose box overlaps an already kept box."""
    kept: list[tuple[int, int]] = []
    for x, y in positions:
        if all(abs(x - kx) >= w or abs(y - ky) >= h for kx, ky in kept):
            kept.append((x, y))
    return kept


def detect_bag(frame: np.ndarray, sheet: list[SpriteTemplate], tolerance: int = 0) -> dict[str, int]:
    """Sprite name -> on-screen count, overlaps suppressed per sprite only."""
    if not sheet:
        raise ValueError("empty spritesheet")
    counts = {}
    for tmpl in sheet:
        n = len(suppress_overlaps(match_template(frame, tmpl, tolerance), tmpl.width, tmpl.height))
        if n:
            counts[tmpl.name] = n
    return counts


# -- files -------------------------------------------------------------------

def load_png(path, mode: str = "RGB") -> np.ndarray:
    from PIL import Image
    with Image.open(path) as im:
        return np.asarray(im.convert(mode))


def save_png(path, pixels: np.ndarray) -> None:
    from PIL import Image
    Image.fromarray(np.asarray(pixels, dtype=np.uint8)).save(path, format="PNG")


def load_spritesheet(directory) -> list[SpriteTemplate]:
    """One template per PNG file; the file stem names the sprite."""
    paths = sorted(Path(directory).glob("*.png"))
    if not paths:
        raise FileNotFoundError(f"no PNG sprites in {directory}")
    return [SpriteTemplate(p.stem, load_png(p, "RGBA")) for p in paths]


_DIGITS = re.compile(r"(\d+)(?!.*\d)")


def frame_timestamp(path) -> int:
    """Seconds from the last run of digits in the file stem ('frame_0012.png' -> 12)."""
    m = _DIGITS.search(Path(path).stem)
    if not m:
        raise ValueError(f"no timestamp in frame file name {Path(path).name!r}")
    return int(m.group(1))


def detect_directory(directory, sheet: list[SpriteTemplate], tolerance: int = 0,
                     threads: int = 1) -> list[FrameRecord]:
    """Symbolic frame records for every PNG in a directory, sorted by timestamp."""
    paths = sorted(Path(directory).glob("*.png"), key=frame_timestamp)
    stamps = [frame_timestamp(p) for p in paths]
    if len(set(stamps)) != len(stamps):
        raise ValueError(f"duplicate frame timestamps in {directory}")

    def one(p):
        return detect_bag(load_png(p), sheet, tolerance)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            bags = list(ex.map(one, paths))
    else:
        bags = [one(p) for p in paths]
    return [FrameRecord(t, b, str(p)) for t, p, b in zip(stamps, paths, bags)]
