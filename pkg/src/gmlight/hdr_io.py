"""PFM and Radiance RGBE codecs plus the in-memory panorama type.

Panoramas are kept top-to-bottom, row-major, as float64 so that row indices
line up with the polar angle used in :mod:`gmlight.sphere`.  PFM is the
canonical interchange format; values are stored as float32 on disk.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError


@dataclass(frozen=True, eq=False)
class Panorama:
    pixels: np.ndarray  # (height, width, 3), linear radiance

    def __post_init__(self):
        p = np.array(self.pixels, dtype=np.float64)
        if p.ndim != 3 or p.shape[2] != 3:
            raise ValueError(f"panorama pixels must have shape (height, width, 3), got {p.shape}")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError("panorama must have at least one row and one column")
        if not np.all(np.isfinite(p)):
            raise ValueError("panorama contains non-finite values")
        if np.any(p < 0):
            raise ValueError("panorama contains negative values")
        p.setflags(write=False)
        object.__setattr__(self, "pixels", p)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width


def luminance(pixels: np.ndarray) -> np.ndarray:
    """Rec.709 luminance of an (..., 3) array."""
    return 0.2126 * pixels[..., 0] + 0.7152 * pixels[..., 1] + 0.0722 * pixels[..., 2]


# -- PFM ---------------------------------------------------------------------

_PFM_HEADER = re.compile(rb"PF\n(\d+) (\d+)\n(\S+)\n")


def read_pfm(data: bytes) -> Panorama:
    if data[:3] == b"Pf\n":
        raise FormatError("grayscale PFM ('Pf') is not supported", 0)
    if data[:3] != b"PF\n":
        raise FormatError("missing 'PF' magic", 0)
    m = _PFM_HEADER.match(data)
    if m is None:
        raise FormatError("malformed PFM header", 3)
    width, height = int(m.group(1)), int(m.group(2))
    try:
        scale = float(m.group(3))
    except ValueError:
        raise FormatError(f"bad PFM scale {m.group(3)!r}", m.start(3)) from None
    if width < 1 or height < 1:
        raise FormatError("PFM dimensions must be positive", m.start(1))
    if scale == 0.0 or not np.isfinite(scale):
        raise FormatError("PFM scale must be finite and nonzero", m.start(3))
    start = m.end()
    need = width * height * 3 * 4
    if len(data) - start < need:
        raise FormatError(f"truncated PFM payload: expected {need} bytes, found {len(data) - start}", len(data))
    dtype = "<f4" if scale < 0 else ">f4"
    flat = np.frombuffer(data, dtype=dtype, count=width * height * 3, offset=start)
    bad = np.flatnonzero(~np.isfinite(flat))
    if bad.size:
        raise FormatError("non-finite value in PFM payload", start + 4 * int(bad[0]))
    neg = np.flatnonzero(flat < 0)
    if neg.size:
        raise FormatError("negative radiance in PFM payload", start + 4 * int(neg[0]))
    pixels = flat.reshape(height, width, 3)[::-1].astype(np.float64)
    if abs(scale) != 1.0:
        pixels = pixels * abs(scale)
    return Panorama(pixels)


def write_pfm(pano: Panorama) -> bytes:
    header = f"PF\n{pano.width} {pano.height}\n-1.000000\n".encode("ascii")
    payload = np.ascontiguousarray(pano.pixels[::-1], dtype="<f4").tobytes()
    return header + payload


# -- Radiance RGBE -----------------------------------------------------------

_RESOLUTION = re.compile(rb"-Y (\d+) \+X (\d+)")


def _rgbe_to_float(rgbe: np.ndarray) -> np.ndarray:
    e = rgbe[..., 3].astype(np.int64)
    scale = np.where(e == 0, 0.0, np.ldexp(1.0, e - 136))
    return rgbe[..., :3].astype(np.float64) * scale[..., None]


def _read_scanline(data: bytes, pos: int, width: int) -> tuple[np.ndarray, int]:
    if pos + 4 > len(data):
        raise FormatError("truncated RGBE scanline", pos)
    head = data[pos : pos + 4]
    rle = 8 <= width <= 0x7FFF and head[0] == 2 and head[1] == 2 and not head[2] & 0x80
    if not rle:
        end = pos + 4 * width
        if end > len(data):
            raise FormatError("truncated flat RGBE scanline", len(data))
        return np.frombuffer(data, dtype=np.uint8, count=4 * width, offset=pos).reshape(width, 4), end
    if (head[2] << 8 | head[3]) != width:
        raise FormatError(f"RLE scanline length {head[2] << 8 | head[3]} != width {width}", pos)
    pos += 4
    line = np.empty((4, width), dtype=np.uint8)
    for ch in range(4):
        x = 0
        while x < width:
            if pos >= len(data):
                raise FormatError("truncated RLE scanline", pos)
            count = data[pos]
            pos += 1
            if count > 128:
                count -= 128
                if x + count > width or pos >= len(data):
                    raise FormatError("RLE run overflows scanline", pos - 1)
                line[ch, x : x + count] = data[pos]
                pos += 1
            else:
                if count == 0 or x + count > width or pos + count > len(data):
                    raise FormatError("bad RLE literal run", pos - 1)
                line[ch, x : x + count] = np.frombuffer(data, dtype=np.uint8, count=count, offset=pos)
                pos += count
            x += count
    return line.T, pos


def read_rgbe(data: bytes) -> Panorama:
    if not (data.startswith(b"#?RADIANCE") or data.startswith(b"#?RGBE")):
        raise FormatError("unknown HDR header (expected #?RADIANCE or #?RGBE)", 0)
    pos = 0
    while True:
        nl = data.find(b"\n", pos)
        if nl < 0:
            raise FormatError("unterminated RGBE header", pos)
        line = data[pos:nl]
        pos = nl + 1
        if line.startswith(b"FORMAT=") and line.strip() != b"FORMAT=32-bit_rle_rgbe":
            raise FormatError(f"unsupported pixel format {line.decode(errors='replace')}", nl - len(line))
        if not line.strip():
            break
    nl = data.find(b"\n", pos)
    m = _RESOLUTION.fullmatch(data[pos:nl].strip()) if nl >= 0 else None
    if m is None:
        raise FormatError("unsupported or missing resolution line (only '-Y h +X w')", pos)
    height, width = int(m.group(1)), int(m.group(2))
    if width < 1 or height < 1:
        raise FormatError("RGBE dimensions must be positive", pos)
    pos = nl + 1
    rgbe = np.empty((height, width, 4), dtype=np.uint8)
    for row in range(height):
        rgbe[row], pos = _read_scanline(data, pos, width)
    return Panorama(_rgbe_to_float(rgbe))


# -- files -------------------------------------------------------------------


def load(path: str | Path) -> Panorama:
    """Read a panorama, picking the codec from the file extension."""
    path = Path(path)
    data = path.read_bytes()
    suffix = path.suffix.lower()
    if suffix == ".pfm":
        return read_pfm(data)
    if suffix in (".hdr", ".rgbe", ".pic"):
        return read_rgbe(data)
    raise FormatError(f"unsupported panorama extension {path.suffix!r} (use .pfm or .hdr)")


def save(pano: Panorama, path: str | Path) -> None:
    path = Path(path)
    if path.suffix.lower() != ".pfm":
        raise ValueError("panoramas are written as .pfm only")
    path.write_bytes(write_pfm(pano))
