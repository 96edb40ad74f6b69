"""Netpbm image I/O (PGM and PPM, ASCII and binary)."""
import numpy as np

LUMA = np.array([0.299, 0.587, 0.114])
_CHANNELS = {b"P2": 1, b"P5": 1, b"P3": 3, b"P6": 3}


class PnmError(ValueError):
    pass


def _tokens(data, start, count):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    out = []
    i = start
    while len(out) < count:
        if i >= len(data):
            raise PnmError("truncated header")
        c = data[i:i + 1]
        if c == b"#":
            while i < len(data) and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j:j + 1].isspace() and data[j:j + 1] != b"#":
                j += 1
            out.append(data[i:j])
            i = j
    return out, i


def parse_pnm(data):
    """Decode PNM bytes into ``(array, maxval)``; arrays are (h, w) or (h, w, 3)."""
    magic = data[:2]
    if magic not in _CHANNELS:
        raise PnmError(f"unsupported or missing magic number {magic!r}")
    (w, h, maxval), pos = _tokens(data, 2, 3)
    try:
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise PnmError("non-integer header field") from None
    if w <= 0 or h <= 0 or not 0 < maxval < 65536:
        raise PnmError(f"bad header: {w}x{h}, maxval {maxval}")
    ch = _CHANNELS[magic]
    count = w * h * ch
    if magic in (b"P2", b"P3"):
        vals, _ = _tokens(data, pos, count)
        arr = np.array([int(v) for v in vals], dtype=np.int64)
    else:
        pos += 1  # single whitespace after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        raw = data[pos:pos + count * dtype.itemsize]
        if len(raw) < count * dtype.itemsize:
            raise PnmError("truncated pixel data")
        arr = np.frombuffer(raw, dtype=dtype).astype(np.int64)
    if arr.max(initial=0) > maxval:
        raise PnmError("pixel value exceeds maxval")
    shape = (h, w) if ch == 1 else (h, w, 3)
    return arr.reshape(shape), maxval


def read_pnm(path):
    with open(path, "rb") as fh:
        return parse_pnm(fh.read())


def read_gray(path):
    """Load a PGM/PPM as float intensities in [0, 1]; color is reduced to luminance."""
    arr, maxval = read_pnm(path)
    img = arr.astype(float) / maxval
    if img.ndim == 3:
        img = img @ LUMA
    return img


def encode_pgm(img, maxval=255, binary=True):
    img = np.asarray(img)
    if img.ndim != 2:
        raise ValueError("PGM needs a 2-D array")
    vals = np.clip(np.rint(img), 0, maxval).astype(np.int64)
    h, w = vals.shape
    head = f"{'P5' if binary else 'P2'}\n{w} {h}\n{maxval}\n".encode()
    if binary:
        dtype = ">u2" if maxval > 255 else "u1"
        return head + vals.astype(dtype).tobytes()
    body = "\n".join(" ".join(str(v) for v in row) for row in vals)
    return head + body.encode() + b"\n"


def write_pgm(path, img, maxval=255, binary=True):
    with open(path, "wb") as fh:
        fh.write(encode_pgm(img, maxval, binary))


def to_byte_range(img):
    """Min-max rescale to [0, 255]; returns ``(scaled, lo, hi)``."""
    img = np.asarray(img, dtype=float)
    lo, hi = float(img.min()), float(img.max())
    span = hi - lo
    scaled = np.zeros_like(img) if span == 0 else (img - lo) * (255.0 / span)
    return scaled, lo, hi
