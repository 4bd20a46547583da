"""File formats: grayscale images, result documents and config files.

Predictions and ground truth share one JSON layout::

    {"schema": "overlapseg/1",
     "images": [{"image": name, "width": W, "height": H,
                 "objects": [{"id": 0, "contour": [[x, y], ...], ...}],
                 "concave_points": [[x, y], ...]}]}

Coordinates are rounded to three decimals and keys are written in a fixed
order, so identical inputs give identical bytes.
"""
import json
import os
import tempfile
from dataclasses import fields

import numpy as np
from PIL import Image, ImageDraw, UnidentifiedImageError

from .exceptions import ImageReadError, InvalidConfig, SchemaMismatch
from .geometry import rasterize_polygon
from .gp import KernelSpec
from .pipeline import PipelineConfig

SCHEMA = "overlapseg/1"
IMAGE_SUFFIXES = (".png", ".pgm")
DECIMALS = 3


def read_image(path):
    """Read an image file as a ``(H, W)`` uint8 array.

    Colour inputs are converted to luminance; 16-bit inputs are rejected.
    """
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode in ("I;16", "I;16B", "I", "F"):
                raise ImageReadError(f"{path}: expected 8-bit data, got mode {im.mode}")
            arr = np.asarray(im.convert("L"), dtype=np.uint8)
    except (OSError, UnidentifiedImageError, ValueError) as exc:
        if isinstance(exc, ImageReadError):
            raise
        raise ImageReadError(f"{path}: {exc}") from exc
    return arr.copy()


def _atomic_write(path, data):
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_image(path, image):
    """Write a uint8 array (grayscale or RGB) as PNG, atomically."""
    import io as _io

    buf = _io.BytesIO()
    Image.fromarray(np.asarray(image, dtype=np.uint8)).save(buf, format="PNG")
    _atomic_write(path, buf.getvalue())


def render_overlay(image, contours, color=(255, 0, 0)):
    """Draw closed contours over a grayscale image; returns an RGB array."""
    im = Image.fromarray(np.asarray(image, dtype=np.uint8)).convert("RGB")
    draw = ImageDraw.Draw(im)
    for c in contours:
        pts = [tuple(p) for p in np.asarray(c, dtype=float)]
        if len(pts) >= 2:
            draw.line(pts + [pts[0]], fill=color, width=1)
    return np.asarray(im)


def _round(points):
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    # adding 0.0 turns -0.0 into 0.0 so the text form is stable
    return [[round(float(x), DECIMALS) + 0.0, round(float(y), DECIMALS) + 0.0] for x, y in pts]


def _num(v):
    if v is None:
        return None
    v = float(v)
    if not np.isfinite(v):
        return None
    return round(v, 6) + 0.0


def image_record(name, width, height, objects=None, concave_points=()):
    """One entry of ``images``; ``objects`` is a list of dicts or None to omit."""
    rec = {"image": name, "width": int(width), "height": int(height)}
    if objects is not None:
        rec["objects"] = objects
    rec["concave_points"] = _round(concave_points)
    return rec


def result_record(name, image_shape, result, timing=None):
    """Serialize a :class:`SegmentationResult` for one image."""
    objects = []
    for obj in result.objects:
        entry = {"id": int(obj.id), "component": int(obj.component), "contour": _round(obj.contour)}
        if obj.cost is not None:
            entry["cost"] = {k: _num(getattr(obj.cost, k))
                             for k in ("concavity", "ellipticity", "symmetry", "total")}
        else:
            entry["cost"] = None
        k = obj.kernel
        entry["kernel"] = None if k is None else {
            "family": k.family, "length_scale": _num(k.length_scale),
            "noise_variance": _num(k.noise_variance), "signal_variance": _num(k.signal_variance),
            "rq_alpha": _num(k.rq_alpha)}
        objects.append(entry)
    rec = image_record(name, image_shape[1], image_shape[0], objects, result.concave_points)
    if timing is not None:
        rec["timing_seconds"] = round(float(timing), 3)
    return rec


def ground_truth_record(name, truth, n_samples=360):
    """Serialize a synthetic :class:`GroundTruth` for one image."""
    objects = []
    for o in truth.objects:
        e = o.ellipse
        objects.append({
            "id": int(o.id), "contour": _round(o.contour(n_samples)),
            "ellipse": {"cx": _num(e.cx), "cy": _num(e.cy), "semi_major": _num(e.semi_major),
                        "semi_minor": _num(e.semi_minor), "rotation": _num(e.rotation)},
        })
    return image_record(name, truth.width, truth.height, objects, truth.concave_points)


def make_document(images, **meta):
    doc = {"schema": SCHEMA}
    if meta:
        doc["meta"] = meta
    doc["images"] = list(images)
    return doc


def dumps(doc):
    return json.dumps(doc, separators=(",", ":"), allow_nan=False, ensure_ascii=False) + "\n"


def write_json(path, doc):
    _atomic_write(path, dumps(doc).encode("utf-8"))


def _check_points(value, where):
    if not isinstance(value, list) or any(
            not isinstance(p, list) or len(p) != 2
            or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in p)
            for p in value):
        raise SchemaMismatch(f"{where}: expected a list of [x, y] pairs")


def validate_document(doc):
    """Raise :class:`SchemaMismatch` unless ``doc`` follows the shared layout."""
    if not isinstance(doc, dict) or not isinstance(doc.get("images"), list):
        raise SchemaMismatch("document must be an object with an 'images' list")
    if doc.get("schema", SCHEMA) != SCHEMA:
        raise SchemaMismatch(f"unsupported schema {doc.get('schema')!r}")
    seen = set()
    for i, rec in enumerate(doc["images"]):
        where = f"images[{i}]"
        if not isinstance(rec, dict):
            raise SchemaMismatch(f"{where}: expected an object")
        for key, kind in (("image", str), ("width", int), ("height", int)):
            if not isinstance(rec.get(key), kind) or isinstance(rec.get(key), bool):
                raise SchemaMismatch(f"{where}: missing or invalid {key!r}")
        if rec["image"] in seen:
            raise SchemaMismatch(f"{where}: duplicate image {rec['image']!r}")
        seen.add(rec["image"])
        _check_points(rec.get("concave_points"), f"{where}.concave_points")
        if "objects" in rec:
            if not isinstance(rec["objects"], list):
                raise SchemaMismatch(f"{where}.objects: expected a list")
            for j, obj in enumerate(rec["objects"]):
                if not isinstance(obj, dict) or "id" not in obj:
                    raise SchemaMismatch(f"{where}.objects[{j}]: missing 'id'")
                _check_points(obj.get("contour"), f"{where}.objects[{j}].contour")
    return doc


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaMismatch(f"{path}: {exc}") from exc
    return validate_document(doc)


def object_masks(record):
    """Rasterize every object contour of an image record."""
    w, h = record["width"], record["height"]
    out = []
    for obj in record.get("objects", []):
        c = np.asarray(obj["contour"], dtype=float).reshape(-1, 2)
        out.append(rasterize_polygon(c, w, h) if len(c) >= 3 else np.zeros((h, w), dtype=bool))
    return out


def _parse_value(raw, default, key):
    text = raw.strip()
    if text.lower() in ("none", "null", ""):
        return None
    try:
        if isinstance(default, bool):
            if text.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return text.lower() in ("true", "1", "yes")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, str):
            return text
        # tuple-valued or unset fields: comma separated numbers, else a scalar
        parts = [p.strip() for p in text.split(",") if p.strip()]
        if len(parts) > 1:
            return tuple(float(p) for p in parts)
        return float(parts[0])
    except ValueError as exc:
        raise InvalidConfig(f"{key}: cannot parse {raw.strip()!r}") from exc


def parse_config(text):
    """Parse ``key = value`` lines into a :class:`PipelineConfig`.

    Blank lines and ``#`` comments are ignored.  Keys are the field names of
    :class:`PipelineConfig`; tuples are written as comma separated numbers.
    """
    defaults = {f.name: f.default for f in fields(PipelineConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfig(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in defaults:
            raise InvalidConfig(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise InvalidConfig(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(raw, defaults[key], key)
    cfg = PipelineConfig(**values)
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    def bad(msg):
        raise InvalidConfig(msg)

    if cfg.opening_radius is None or cfg.opening_radius < 0:
        bad("opening_radius must be a non-negative integer")
    if cfg.min_component_area is None or cfg.min_component_area < 1:
        bad("min_component_area must be at least 1")
    for key in ("alpha", "beta", "group_penalty"):
        v = getattr(cfg, key)
        if v is None or not np.isfinite(v) or v < 0:
            bad(f"{key} must be a non-negative number")
    if cfg.radial_range is not None:
        r = cfg.radial_range
        if not isinstance(r, tuple) or len(r) != 2 or not 0 < r[0] <= r[1]:
            bad("radial_range must be 'low, high' with 0 < low <= high")
    f = cfg.radial_range_factors
    if not isinstance(f, tuple) or len(f) != 2 or not 0 < f[0] <= f[1]:
        bad("radial_range_factors must be 'low, high' with 0 < low <= high")
    if cfg.node_budget is None or cfg.node_budget < 1:
        bad("node_budget must be positive")
    if cfg.n_samples is None or cfg.n_samples < 3:
        bad("n_samples must be at least 3")
    try:
        KernelSpec(family=str(cfg.kernel), rq_alpha=cfg.rq_alpha)
    except (ValueError, TypeError):
        bad(f"unknown kernel {cfg.kernel!r} or invalid rq_alpha")
    for key in ("length_scale", "noise_variance"):
        v = getattr(cfg, key)
        if v is not None and (not np.isfinite(v) or v < 0 or key == "length_scale" and v == 0):
            bad(f"{key} must be positive")
    if cfg.rho1 is None or cfg.rho1 <= 0:
        bad("rho1 must be positive")
    if cfg.jsc_threshold is None or not 0 < cfg.jsc_threshold <= 1:
        bad("jsc_threshold must lie in (0, 1]")
    return cfg


def read_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise InvalidConfig(f"{path}: {exc}") from exc
    return parse_config(text)


def format_config(cfg):
    """Inverse of :func:`parse_config`."""
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if v is None:
            text = "none"
        elif isinstance(v, tuple):
            text = ", ".join(repr(float(x)) for x in v)
        else:
            text = str(v)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"
