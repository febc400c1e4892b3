"""Persistence: the LFZ binary container, PNG sub-aperture grids and path JSON.

LFZ layout (all little-endian): magic ``b"LFZ1"``, five uint32 dims
``(ny, nx, nv, nu, nc)``, two float64 pitches ``(spatial, angular)``, then
the float32 samples in row-major ``(y, x, v, u, c)`` order. Every file write
goes to a temporary file in the target directory and is renamed into place.
"""

import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np
import png

from .core import LightField
from .forward import MotionPath

__all__ = [
    "LfzFormatError",
    "write_lfz",
    "read_lfz",
    "lfz_bytes",
    "parse_lfz",
    "export_png_grid",
    "import_png_grid",
    "write_png",
    "read_png",
    "write_path_json",
    "read_path_json",
    "path_to_json",
    "path_from_json",
    "write_json",
    "atomic_write",
    "srgb_to_linear",
]

MAGIC = b"LFZ1"
_HEADER = struct.Struct("<4s5I2d")
PATH_JSON_VERSION = 1


class LfzFormatError(ValueError):
    """Malformed LFZ container or light field file."""


def atomic_write(path, data):
    """Write ``data`` (bytes) to ``path`` via a temporary file and rename."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def lfz_bytes(lf):
    """Serialise a light field to LFZ bytes."""
    if not isinstance(lf, LightField):
        lf = LightField(lf)
    header = _HEADER.pack(MAGIC, *lf.dims, float(lf.spatial_pitch), float(lf.angular_pitch))
    return header + np.ascontiguousarray(lf.data, dtype="<f4").tobytes()


def parse_lfz(buf):
    """Parse LFZ bytes into a :class:`LightField`."""
    buf = bytes(buf)
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise LfzFormatError("not an LFZ file (bad magic)")
    if len(buf) < _HEADER.size:
        raise LfzFormatError(f"truncated LFZ header: {len(buf)} of {_HEADER.size} bytes")
    _, ny, nx, nv, nu, nc, sp, ap = _HEADER.unpack_from(buf)
    dims = (ny, nx, nv, nu, nc)
    if min(dims) == 0:
        raise LfzFormatError(f"LFZ dims must be nonzero, got {dims}")
    if nc not in (1, 3):
        raise LfzFormatError(f"LFZ channel count must be 1 or 3, got {nc}")
    if not (sp > 0 and ap > 0):
        raise LfzFormatError("LFZ pitches must be positive")
    expected = ny * nx * nv * nu * nc * 4
    payload = len(buf) - _HEADER.size
    if payload != expected:
        raise LfzFormatError(f"LFZ payload size mismatch: expected {expected} bytes, got {payload}")
    data = np.frombuffer(buf, dtype="<f4", offset=_HEADER.size).reshape(dims)
    try:
        return LightField(data.astype(np.float32), sp, ap)
    except ValueError as e:
        raise LfzFormatError(str(e)) from e


def write_lfz(lf, sink):
    """Write ``lf`` to a path or a binary file object."""
    buf = lfz_bytes(lf)
    if hasattr(sink, "write"):
        sink.write(buf)
    else:
        atomic_write(sink, buf)


def read_lfz(source):
    """Read a light field from a path or a binary file object."""
    if hasattr(source, "read"):
        return parse_lfz(source.read())
    return parse_lfz(Path(source).read_bytes())


# ---------------------------------------------------------------- PNG

def srgb_to_linear(x):
    x = np.asarray(x, dtype=np.float64)
    return np.where(x <= 0.04045, x / 12.92, ((x + 0.055) / 1.055) ** 2.4)


def _png_bytes(img, bitdepth=16):
    img = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[..., 0]
    peak = (1 << bitdepth) - 1
    q = np.rint(img * peak).astype(np.uint16 if bitdepth == 16 else np.uint8)
    h, w = q.shape[:2]
    greyscale = q.ndim == 2
    rows = q.reshape(h, -1)
    writer = png.Writer(w, h, greyscale=greyscale, bitdepth=bitdepth)
    import io

    out = io.BytesIO()
    writer.write(out, rows.tolist())
    return out.getvalue()


def write_png(path, img, bitdepth=16):
    """Clamp to [0, 1] and write an ``(h, w)`` or ``(h, w, 1|3)`` image."""
    atomic_write(path, _png_bytes(img, bitdepth))


def read_png(path):
    """Read a PNG as float64 in [0, 1] with shape ``(h, w, c)``; c is 1 or 3."""
    w, h, rows, info = png.Reader(filename=str(path)).asDirect()
    arr = np.array([np.asarray(r) for r in rows], dtype=np.float64)
    planes = info["planes"]
    arr = arr.reshape(h, w, planes)
    arr /= (1 << info["bitdepth"]) - 1
    if info.get("alpha"):
        arr = arr[..., :-1]
    if arr.shape[2] == 2:
        arr = arr[..., :1]
    return arr


def view_name(v, u):
    return f"view_v{v:02d}_u{u:02d}.png"


def export_png_grid(lf, directory, bitdepth=16):
    """Write every sub-aperture view as ``view_vVV_uUU.png`` into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    data = lf.data if isinstance(lf, LightField) else LightField(lf).data
    for v in range(data.shape[2]):
        for u in range(data.shape[3]):
            write_png(directory / view_name(v, u), data[:, :, v, u, :], bitdepth)


def import_png_grid(directory, nu, nv, srgb=False):
    """Assemble a light field from ``view_vVV_uUU.png`` files.

    8- and 16-bit images map linearly to [0, 1]; ``srgb=True`` additionally
    applies the inverse sRGB transfer curve.
    """
    directory = Path(directory)
    missing = [(v, u) for v in range(nv) for u in range(nu)
               if not (directory / view_name(v, u)).is_file()]
    if missing:
        listed = ", ".join(f"(v={v}, u={u})" for v, u in missing[:8])
        more = "" if len(missing) <= 8 else f" and {len(missing) - 8} more"
        raise FileNotFoundError(f"missing view files: {listed}{more}")
    views = {}
    shape = None
    for v in range(nv):
        for u in range(nu):
            img = read_png(directory / view_name(v, u))
            if shape is None:
                shape = img.shape
            elif img.shape != shape:
                raise ValueError(f"view (v={v}, u={u}) has shape {img.shape}, expected {shape}")
            views[v, u] = img
    h, w, c = shape
    out = np.empty((h, w, nv, nu, c), dtype=np.float64)
    for (v, u), img in views.items():
        out[:, :, v, u, :] = img
    if srgb:
        out = srgb_to_linear(out)
    return LightField(out)


# ---------------------------------------------------------------- JSON

def write_json(path, obj):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    atomic_write(path, text.encode("utf-8"))


def path_to_json(path):
    cp = path.control_points
    return {
        "version": PATH_JSON_VERSION,
        "n": int(cp.shape[0]),
        "control_points": cp.tolist(),
        "units": "px, py in angular samples; pz in spatial samples per angular sample",
    }


def path_from_json(doc):
    if not isinstance(doc, dict) or "control_points" not in doc:
        raise ValueError("path JSON needs a control_points field")
    cp = np.asarray(doc["control_points"], dtype=np.float64)
    if "n" in doc and int(doc["n"]) != cp.shape[0]:
        raise ValueError(f"path JSON declares n={doc['n']} but has {cp.shape[0]} control points")
    return MotionPath(cp)


def write_path_json(path, motion_path):
    write_json(path, path_to_json(motion_path))


def read_path_json(path):
    with open(path, encoding="utf-8") as fh:
        return path_from_json(json.load(fh))
