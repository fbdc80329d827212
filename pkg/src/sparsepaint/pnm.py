"""PNM family codecs: P5 (PGM) grayscale, P6 (PPM) color, P4 (PBM) masks.

8-bit throughout, except the 16-bit tonal sidecar variant which stores
fixed-point values so that over- and undershooting stored pixel values
survive a round trip: stored = round((v + 256) * 64), covering
[-256, 767.98...] in steps of 1/64. PBM convention: a set bit (black)
marks a stored pixel.
"""

from __future__ import annotations

import numpy as np

from .grid import Image, Mask, clamp_to_bytes

_OFFSET = 256.0
_SCALE = 64.0


def _read_header(data: bytes, expect: bytes, n_fields: int):
    if not data.startswith(expect):
        raise ValueError(f"not a {expect.decode()} file")
    fields = []
    pos = 2
    while len(fields) < n_fields:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated header")
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace after the last header field
    return fields, pos


def write_image(path, img: Image):
    """Write a PGM (1 channel) or PPM (3 channels), clamped to 8 bit."""
    raw = clamp_to_bytes(img)
    if img.channels == 1:
        header = f"P5\n{img.width} {img.height}\n255\n".encode()
        body = raw[0].tobytes()
    elif img.channels == 3:
        header = f"P6\n{img.width} {img.height}\n255\n".encode()
        body = np.moveaxis(raw, 0, -1).tobytes()
    else:
        raise ValueError("only 1- or 3-channel images can be written")
    with open(path, "wb") as fh:
        fh.write(header + body)


def read_image(path) -> Image:
    """Read a binary PGM or PPM (8 or 16 bit)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] == b"P5":
        (w, h, maxval), pos = _read_header(data, b"P5", 3)
        channels = 1
    elif data[:2] == b"P6":
        (w, h, maxval), pos = _read_header(data, b"P6", 3)
        channels = 3
    else:
        raise ValueError("unsupported PNM magic (want P5 or P6)")
    if maxval < 256:
        arr = np.frombuffer(data, dtype=np.uint8, count=w * h * channels,
                            offset=pos).astype(np.float64)
    else:
        arr = np.frombuffer(data, dtype=">u2", count=w * h * channels,
                            offset=pos).astype(np.float64)
    if channels == 1:
        return Image(arr.reshape(1, h, w))
    return Image(np.moveaxis(arr.reshape(h, w, 3), -1, 0))


def write_mask(path, mask: Mask):
    """Write a PBM (P4); set bits mark stored pixels."""
    h, w = mask.height, mask.width
    header = f"P4\n{w} {h}\n".encode()
    bits = np.packbits(mask.indicator.astype(bool), axis=1)
    with open(path, "wb") as fh:
        fh.write(header + bits.tobytes())


def read_mask(path) -> Mask:
    with open(path, "rb") as fh:
        data = fh.read()
    (w, h), pos = _read_header(data, b"P4", 2)
    row_bytes = (w + 7) // 8
    raw = np.frombuffer(data, dtype=np.uint8, count=h * row_bytes, offset=pos)
    bits = np.unpackbits(raw.reshape(h, row_bytes), axis=1)[:, :w]
    return Mask(bits)


def write_tonal(path, values: Image, mask: Mask, wide=False):
    """Serialize stored pixel values: g at mask pixels, 0 elsewhere.

    ``wide`` selects the 16-bit fixed-point variant that keeps values
    outside [0, 255] representable.
    """
    data = np.where(mask.indicator[None].astype(bool), values.data, 0.0)
    if not wide:
        write_image(path, Image(data))
        return
    enc = np.clip(np.rint((data + _OFFSET) * _SCALE), 0, 65535).astype(">u2")
    if values.channels == 1:
        header = f"P5\n{values.width} {values.height}\n65535\n".encode()
        body = enc[0].tobytes()
    elif values.channels == 3:
        header = f"P6\n{values.width} {values.height}\n65535\n".encode()
        body = np.moveaxis(enc, 0, -1).tobytes()
    else:
        raise ValueError("only 1- or 3-channel tonal data can be written")
    with open(path, "wb") as fh:
        fh.write(header + body)


def read_tonal(path, wide=False) -> Image:
    """Read a tonal sidecar written by :func:`write_tonal`."""
    img = read_image(path)
    if not wide:
        return img
    return Image(img.data / _SCALE - _OFFSET)
