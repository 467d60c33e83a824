"""Raster file I/O: PNG (8-bit, 1/3/4 channels), binary PPM/PGM, and PFM.

PFM stores 32-bit float imagery, rows bottom-to-top, with a negative scale
marking little-endian data (the only byte order written here).
"""

from __future__ import annotations

import os
import re

import numpy as np
from PIL import Image

__all__ = [
    "read_image",
    "write_image",
    "read_png",
    "write_png",
    "read_pnm",
    "write_pnm",
    "read_pfm",
    "write_pfm",
]

_PNM_HEADER = re.compile(rb"^(P[56])\s+(\d+)\s+(\d+)\s+(\d+)\s", re.DOTALL)


def read_image(path: str | os.PathLike) -> np.ndarray:
    ext = os.path.splitext(path)[1].lower()
    if ext == ".png":
        return read_png(path)
    if ext in (".ppm", ".pgm"):
        return read_pnm(path)
    if ext == ".pfm":
        return read_pfm(path)
    raise ValueError(f"unsupported image format {ext!r}")


def write_image(path: str | os.PathLike, image: np.ndarray):
    ext = os.path.splitext(path)[1].lower()
    if ext == ".png":
        write_png(path, image)
    elif ext in (".ppm", ".pgm"):
        write_pnm(path, image)
    elif ext == ".pfm":
        write_pfm(path, image)
    else:
        raise ValueError(f"unsupported image format {ext!r}")


def read_png(path) -> np.ndarray:
    with Image.open(path) as img:
        if img.mode not in ("L", "RGB", "RGBA"):
            img = img.convert("RGB")
        return np.asarray(img, dtype=np.uint8)


def write_png(path, image: np.ndarray):
    image = _check_uint8(image)
    mode = {1: "L", 3: "RGB", 4: "RGBA"}[1 if image.ndim == 2 else image.shape[2]]
    Image.fromarray(image.squeeze() if mode == "L" else image, mode=mode).save(path)


def read_pnm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    match = _PNM_HEADER.match(data)
    if not match:
        raise ValueError(f"not a binary PPM/PGM file: {path}")
    magic, width, height, maxval = (
        match.group(1),
        int(match.group(2)),
        int(match.group(3)),
        int(match.group(4)),
    )
    if maxval != 255:
        raise ValueError("only 8-bit PPM/PGM supported")
    channels = 3 if magic == b"P6" else 1
    pixels = np.frombuffer(
        data, dtype=np.uint8, count=width * height * channels, offset=match.end()
    )
    out = pixels.reshape(height, width, channels)
    return out[:, :, 0] if channels == 1 else out.copy()


def write_pnm(path, image: np.ndarray):
    image = _check_uint8(image)
    if image.ndim == 3 and image.shape[2] == 1:
        image = image[:, :, 0]
    if image.ndim == 2:
        magic = b"P5"
    elif image.shape[2] == 3:
        magic = b"P6"
    else:
        raise ValueError("PPM/PGM supports 1 or 3 channels")
    header = b"%s\n%d %d\n255\n" % (magic, image.shape[1], image.shape[0])
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(image).tobytes())


def read_pfm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic not in (b"Pf", b"PF"):
            raise ValueError(f"not a PFM file: {path}")
        width, height = (int(v) for v in fh.readline().split())
        scale = float(fh.readline())
        channels = 3 if magic == b"PF" else 1
        dtype = "<f4" if scale < 0 else ">f4"
        pixels = np.frombuffer(fh.read(width * height * channels * 4), dtype=dtype)
    shape = (height, width, channels) if channels == 3 else (height, width)
    return np.flipud(pixels.reshape(shape)).astype(np.float32)


def write_pfm(path, image: np.ndarray):
    image = np.asarray(image, dtype=np.float32)
    if image.ndim == 3 and image.shape[2] == 1:
        image = image[:, :, 0]
    if image.ndim == 2:
        magic = b"Pf"
    elif image.ndim == 3 and image.shape[2] == 3:
        magic = b"PF"
    else:
        raise ValueError("PFM supports 1 or 3 channels")
    with open(path, "wb") as fh:
        fh.write(magic + b"\n")
        fh.write(b"%d %d\n" % (image.shape[1], image.shape[0]))
        fh.write(b"-1.0\n")  # negative scale: little-endian
        fh.write(np.flipud(image).astype("<f4").tobytes())


def _check_uint8(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image)
    if image.dtype != np.uint8:
        raise ValueError("expected uint8 image")
    if image.ndim not in (2, 3) or (image.ndim == 3 and image.shape[2] not in (1, 3, 4)):
        raise ValueError(f"unsupported image shape {image.shape}")
    return image
