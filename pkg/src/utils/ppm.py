"""Binary P6 PPM codec (maxval 255 only)"""
from pathlib import Path
from typing import Optional, Union

import numpy as np

from src.utils.errors import ContractError, DataError

_WHITESPACE = b" \t\r\n\v\f"


def quantize(image: np.ndarray) -> np.ndarray:
    """Map [0,1] values to bytes with round-half-up; anything else is refused"""
    values = np.asarray(image, dtype=np.float64)
    if not np.all(np.isfinite(values)) or values.size and (values.min() < 0.0 or values.max() > 1.0):
        raise ContractError("pixel values must lie in [0, 1]")
    return np.floor(values * 255.0 + 0.5).astype(np.uint8)


def encode_ppm(image: np.ndarray) -> bytes:
    """Encode an (h, w, 3) image with values in [0, 1]"""
    if image.ndim != 3 or image.shape[2] != 3:
        raise ContractError(f"PPM images must be (h, w, 3), got {image.shape}")
    h, w, _ = image.shape
    pixels = quantize(image)
    return f"P6\n{w} {h}\n255\n".encode("ascii") + pixels.tobytes()


def _read_token(data: bytes, pos: int, source: Optional[Union[str, Path]]) -> tuple[bytes, int]:
    while pos < len(data):
        if data[pos : pos + 1] == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
        elif data[pos] in _WHITESPACE:
            pos += 1
        else:
            break
    start = pos
    while pos < len(data) and data[pos] not in _WHITESPACE and data[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise DataError("truncated PPM header", source)
    return data[start:pos], pos


def decode_ppm(data: bytes, source: Optional[Union[str, Path]] = None) -> np.ndarray:
    """Decode P6 bytes into an (h, w, 3) float64 image scaled to [0, 1]"""
    magic, pos = _read_token(data, 0, source)
    if magic != b"P6":
        raise DataError(f"not a P6 PPM (magic {magic[:8]!r})", source)
    fields = []
    for _ in range(3):
        token, pos = _read_token(data, pos, source)
        if not token.isdigit():
            raise DataError(f"malformed PPM header field {token[:16]!r}", source)
        fields.append(int(token))
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise DataError(f"PPM dimensions must be positive, got {width}x{height}", source)
    if maxval != 255:
        raise DataError(f"PPM maxval must be 255, got {maxval}", source)
    if pos >= len(data) or data[pos] not in _WHITESPACE:
        raise DataError("missing whitespace after PPM header", source)
    pos += 1

    expected = width * height * 3
    payload = data[pos : pos + expected]
    if len(payload) != expected:
        raise DataError(f"PPM pixel data truncated: {len(payload)} of {expected} bytes", source)
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return pixels.astype(np.float64) / float(maxval)


def read_ppm(path: Path) -> np.ndarray:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise DataError(f"cannot read file: {e}", path) from e
    return decode_ppm(data, path)


def compose_panel(images: list[np.ndarray], rows: int, cols: int, pad: int) -> np.ndarray:
    """Tile (h, w, 3) images row-major onto a white canvas"""
    if rows < 1 or cols < 1 or pad < 0:
        raise ContractError(f"invalid panel layout {rows}x{cols} pad {pad}")
    if rows * cols < len(images):
        raise ContractError(f"{len(images)} images do not fit a {rows}x{cols} panel")
    if not images:
        raise ContractError("panel needs at least one image")
    h, w, _ = images[0].shape
    if any(img.shape != images[0].shape for img in images):
        raise ContractError("panel images must share one shape")

    canvas = np.ones((rows * h + (rows + 1) * pad, cols * w + (cols + 1) * pad, 3), dtype=np.float64)
    for k, img in enumerate(images):
        r, c = divmod(k, cols)
        top = pad + r * (h + pad)
        left = pad + c * (w + pad)
        canvas[top : top + h, left : left + w] = img
    return canvas


def chw_to_hwc(image: np.ndarray) -> np.ndarray:
    return np.transpose(np.asarray(image), (1, 2, 0))


def hwc_to_chw(image: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.transpose(np.asarray(image), (2, 0, 1)))
