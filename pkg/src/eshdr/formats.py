"""File codecs: PFM radiance maps, binary PPM/PGM frames with metadata
sidecars, the ESHDR1 binary event stream, flow maps, and a CSV event dump.

All binary readers report the byte offset of the first offending byte via
:class:`~eshdr.errors.FormatError`.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import FormatError, ValidationError
from .imgcore import Domain, LdrFrame, NormalizedImage, RadianceImage

# ---------------------------------------------------------------------------
# PFM (portable float map)
# ---------------------------------------------------------------------------
# Header: b"PF\n<width> <height>\n<scale>\n" (PF = 3 channels, Pf = 1).
# Negative scale => little-endian samples. Rows are stored bottom-to-top.


def write_pfm(path, data: np.ndarray) -> None:
    """Write an HxW or HxWxC float32 array as PFM (little-endian, scale -1)."""
    arr = np.asarray(data, dtype=np.float32)
    if arr.ndim == 2:
        arr = arr[:, :, np.newaxis]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise ValidationError(f"PFM supports 1 or 3 channels, got shape {arr.shape}")
    h, w, c = arr.shape
    tag = b"PF" if c == 3 else b"Pf"
    with open(path, "wb") as f:
        f.write(tag + b"\n")
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(b"-1.0\n")
        f.write(np.flipud(arr).astype("<f4").tobytes())


def _read_pfm_token(f, path):
    """One whitespace-delimited header token; returns (token, offset_of_token)."""
    token = b""
    start = f.tell()
    while True:
        ch = f.read(1)
        if ch == b"":
            raise FormatError("unexpected end of PFM header", path=path, offset=f.tell())
        if ch.isspace():
            if token:
                return token, start
            start = f.tell()
            continue
        token += ch


def read_pfm(path) -> np.ndarray:
    """Read a PFM file into an HxWxC float32 array."""
    path = str(path)
    with open(path, "rb") as f:
        tag = f.read(2)
        if tag not in (b"PF", b"Pf"):
            raise FormatError(
                f"bad PFM magic {tag!r}, expected b'PF' or b'Pf'", path=path, offset=0
            )
        channels = 3 if tag == b"PF" else 1
        wtok, woff = _read_pfm_token(f, path)
        htok, hoff = _read_pfm_token(f, path)
        stok, soff = _read_pfm_token(f, path)
        try:
            w, h = int(wtok), int(htok)
        except ValueError:
            raise FormatError("PFM width/height not integers", path=path, offset=woff)
        try:
            scale = float(stok)
        except ValueError:
            raise FormatError("PFM scale not a float", path=path, offset=soff)
        if w < 1 or h < 1:
            raise FormatError(f"PFM dimensions must be >= 1, got {w}x{h}", path=path, offset=woff)
        if scale == 0:
            raise FormatError("PFM scale must be nonzero", path=path, offset=soff)
        data_offset = f.tell()
        count = w * h * channels
        buf = f.read(4 * count)
        if len(buf) != 4 * count:
            raise FormatError(
                f"PFM payload truncated: expected {4 * count} bytes, got {len(buf)}",
                path=path,
                offset=data_offset + len(buf),
            )
        dtype = "<f4" if scale < 0 else ">f4"
        arr = np.frombuffer(buf, dtype=dtype).reshape(h, w, channels).astype(np.float32)
        arr = np.flipud(arr).copy()
        mag = abs(scale)
        if mag != 1.0:
            arr *= np.float32(mag)
        return arr


def write_radiance_pfm(path, img: RadianceImage) -> None:
    write_pfm(path, img.data)


def read_radiance_pfm(path) -> RadianceImage:
    return RadianceImage(read_pfm(path))


def write_linear_pfm(path, img: NormalizedImage) -> None:
    img.require(Domain.LINEAR)
    write_pfm(path, img.data)


def read_linear_pfm(path) -> NormalizedImage:
    return NormalizedImage(np.clip(read_pfm(path), 0.0, 1.0), Domain.LINEAR)


# ---------------------------------------------------------------------------
# PPM / PGM (binary, maxval 255) + sidecar metadata
# ---------------------------------------------------------------------------


def write_ppm(path, codes: np.ndarray) -> None:
    """Write uint8 codes as binary PPM (P6, 3 channels) or PGM (P5, 1)."""
    arr = np.asarray(codes)
    if arr.ndim == 2:
        arr = arr[:, :, np.newaxis]
    if arr.dtype != np.uint8 or arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise ValidationError(f"PPM writer needs uint8 HxWx{{1,3}} codes, got {arr.dtype} {arr.shape}")
    h, w, c = arr.shape
    magic = b"P6" if c == 3 else b"P5"
    with open(path, "wb") as f:
        f.write(magic + b"\n")
        f.write(f"{w} {h}\n255\n".encode("ascii"))
        f.write(arr.tobytes())


def _read_pnm_token(f, path):
    token = b""
    start = f.tell()
    while True:
        ch = f.read(1)
        if ch == b"":
            raise FormatError("unexpected end of PNM header", path=path, offset=f.tell())
        if ch == b"#":  # comment until end of line
            while ch not in (b"\n", b""):
                ch = f.read(1)
            continue
        if ch.isspace():
            if token:
                return token, start
            start = f.tell()
            continue
        token += ch


def read_ppm(path) -> np.ndarray:
    """Read binary PPM/PGM into uint8 HxWxC codes."""
    path = str(path)
    with open(path, "rb") as f:
        magic = f.read(2)
        if magic not in (b"P6", b"P5"):
            raise FormatError(
                f"bad PNM magic {magic!r}, expected b'P6' or b'P5'", path=path, offset=0
            )
        channels = 3 if magic == b"P6" else 1
        tokens = []
        for _ in range(3):
            tok, off = _read_pnm_token(f, path)
            tokens.append((tok, off))
        try:
            w, h, maxval = (int(t) for t, _ in tokens)
        except ValueError:
            raise FormatError("PNM header fields not integers", path=path, offset=tokens[0][1])
        if maxval != 255:
            raise FormatError(f"only maxval 255 supported, got {maxval}", path=path, offset=tokens[2][1])
        data_offset = f.tell()
        count = w * h * channels
        buf = f.read(count)
        if len(buf) != count:
            raise FormatError(
                f"PNM payload truncated: expected {count} bytes, got {len(buf)}",
                path=path,
                offset=data_offset + len(buf),
            )
        return np.frombuffer(buf, dtype=np.uint8).reshape(h, w, channels).copy()


def sidecar_path(frame_path) -> Path:
    return Path(str(frame_path) + ".meta")


def write_ldr_frame(path, frame: LdrFrame) -> None:
    """PPM pixel data plus a `key: value` sidecar with the capture metadata."""
    write_ppm(path, frame.data)
    lines = [
        f"ev: {frame.ev!r}",
        f"exposure_time: {frame.exposure_time!r}",
        f"timestamp: {frame.timestamp}",
    ]
    sidecar_path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_sidecar(path) -> dict:
    meta = {}
    try:
        text = Path(path).read_text(encoding="ascii")
    except FileNotFoundError:
        raise FormatError("missing metadata sidecar", path=str(path))
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise FormatError(f"sidecar line {lineno} is not `key: value`", path=str(path))
        key, value = line.split(":", 1)
        meta[key.strip()] = value.strip()
    return meta


def read_ldr_frame(path) -> LdrFrame:
    codes = read_ppm(path)
    meta = read_sidecar(sidecar_path(path))
    try:
        return LdrFrame(
            data=codes,
            ev=float(meta["ev"]),
            exposure_time=float(meta["exposure_time"]),
            timestamp=int(meta["timestamp"]),
        )
    except KeyError as exc:
        raise FormatError(f"sidecar missing key {exc}", path=str(sidecar_path(path)))


# ---------------------------------------------------------------------------
# ESHDR1 event stream
# ---------------------------------------------------------------------------
# Layout (little-endian):
#   magic   7 bytes  b"ESHDR1\0"
#   u32     version (= 1)
#   u32     width
#   u32     height
#   f64     contrast threshold c
#   f64     log floor
#   u64     event count N
#   N x 16-byte records: u64 t_ns, u16 x, u16 y, i8 polarity, 3 pad bytes

EVENT_MAGIC = b"ESHDR1\x00"
_HEADER = struct.Struct("<7sIIIddQ")
_RECORD_DTYPE = np.dtype(
    [("t", "<u8"), ("x", "<u2"), ("y", "<u2"), ("p", "i1"), ("pad", "V3")]
)


def write_events(path, stream) -> None:
    """Serialize an EventStream (see eshdr.eventsim) to an ESHDR1 file."""
    n = len(stream.t)
    rec = np.zeros(n, dtype=_RECORD_DTYPE)
    rec["t"] = stream.t
    rec["x"] = stream.x
    rec["y"] = stream.y
    rec["p"] = stream.polarity
    with open(path, "wb") as f:
        f.write(
            _HEADER.pack(
                EVENT_MAGIC, 1, stream.width, stream.height, float(stream.c), float(stream.log_floor), n
            )
        )
        f.write(rec.tobytes())


def read_events(path):
    """Deserialize an ESHDR1 file into an EventStream."""
    from .eventsim import EventStream  # local import to avoid a cycle

    path = str(path)
    with open(path, "rb") as f:
        header = f.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise FormatError(
                f"ESHDR1 header truncated: expected {_HEADER.size} bytes, got {len(header)}",
                path=path,
                offset=len(header),
            )
        magic, version, width, height, c, log_floor, count = _HEADER.unpack(header)
        if magic != EVENT_MAGIC:
            raise FormatError(
                f"bad magic {magic!r}, expected {EVENT_MAGIC!r}", path=path, offset=0
            )
        if version != 1:
            raise FormatError(f"unsupported ESHDR1 version {version}", path=path, offset=7)
        payload = f.read(count * _RECORD_DTYPE.itemsize)
        if len(payload) != count * _RECORD_DTYPE.itemsize:
            raise FormatError(
                f"event payload truncated: expected {count * _RECORD_DTYPE.itemsize} bytes, "
                f"got {len(payload)}",
                path=path,
                offset=_HEADER.size + len(payload),
            )
        rec = np.frombuffer(payload, dtype=_RECORD_DTYPE)
        bad = np.flatnonzero(~np.isin(rec["p"], (-1, 1)))
        if bad.size:
            raise FormatError(
                f"invalid polarity {int(rec['p'][bad[0]])} in record {int(bad[0])}",
                path=path,
                offset=_HEADER.size + int(bad[0]) * _RECORD_DTYPE.itemsize + 12,
            )
        return EventStream(
            width=int(width),
            height=int(height),
            c=float(c),
            log_floor=float(log_floor),
            t=rec["t"].astype(np.int64),
            x=rec["x"].astype(np.int32),
            y=rec["y"].astype(np.int32),
            polarity=rec["p"].astype(np.int8),
        )


def write_events_csv(path, stream) -> None:
    """Debug export, one `t_ns,x,y,p` row per event."""
    with open(path, "w", encoding="ascii") as f:
        f.write("t_ns,x,y,p\n")
        for t, x, y, p in zip(stream.t, stream.x, stream.y, stream.polarity):
            f.write(f"{int(t)},{int(x)},{int(y)},{int(p)}\n")


# ---------------------------------------------------------------------------
# Flow fields: PFM with channels (u, v, validity)
# ---------------------------------------------------------------------------


def write_flow_pfm(path, flow) -> None:
    packed = np.stack(
        [
            flow.u.astype(np.float32),
            flow.v.astype(np.float32),
            flow.validity.astype(np.float32),
        ],
        axis=2,
    )
    write_pfm(path, packed)


def read_flow_pfm(path):
    from .align import FlowField  # local import to avoid a cycle

    arr = read_pfm(path)
    if arr.shape[2] != 3:
        raise FormatError(
            f"flow PFM must have 3 channels (u, v, validity), got {arr.shape[2]}", path=str(path)
        )
    return FlowField(u=arr[:, :, 0], v=arr[:, :, 1], validity=arr[:, :, 2] > 0.5)
