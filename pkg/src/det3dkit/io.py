"""JSONL readers/writers: the toolkit's public wire contract.

One frame per line:

    {"schema_version": "1.0", "frame_id": "...",
     "intrinsics": {"fx":..., "fy":..., "cx":..., "cy":..., "width":..., "height":...},
     "boxes": [{"label": "...", "score": 0.9, "box2d": [x1,y1,x2,y2],
                "center": [x,y,z], "dims": [w,l,h], "rotation": [9 row-major]}]}

Ground-truth files omit "score"; prediction files require it. "box2d" is
optional. Rotations are always written as row-major 3x3 matrices; a
{"rot6d": {"a": [...], "b": [...]}} alternative is accepted on read. Units:
meters for lengths, radians for angles, reals for pixels.
"""

import json

import numpy as np

from .errors import InvariantViolation, ParseError, SchemaVersionError
from .geometry import Box2D, Box3D, CameraIntrinsics, rot6d_to_matrix, Rot6D
from .metrics import Detection, GroundTruth

SCHEMA_VERSION = "1.0"


def _require(record, key, line_no):
    if key not in record:
        raise ParseError(line_no, f"missing required field '{key}'")
    return record[key]


def _finite(value, line_no, field):
    arr = np.asarray(value, dtype=float)
    if not np.isfinite(arr).all():
        raise InvariantViolation(line_no, field, "non-finite value")
    return arr


def _parse_intrinsics(obj, line_no):
    try:
        return CameraIntrinsics(
            fx=float(obj["fx"]),
            fy=float(obj["fy"]),
            cx=float(obj["cx"]),
            cy=float(obj["cy"]),
            width=int(obj["width"]),
            height=int(obj["height"]),
        )
    except KeyError as e:
        raise ParseError(line_no, f"intrinsics missing {e}")
    except ValueError as e:
        raise InvariantViolation(line_no, "intrinsics", str(e))


def _parse_box3d(entry, line_no):
    center = _finite(_require(entry, "center", line_no), line_no, "center")
    dims = _finite(_require(entry, "dims", line_no), line_no, "dims")
    if "rotation" in entry:
        rot = _finite(entry["rotation"], line_no, "rotation")
        if rot.shape != (9,):
            raise InvariantViolation(line_no, "rotation", "expected 9 row-major values")
        rotation = rot.reshape(3, 3)
    elif "rot6d" in entry:
        r6 = entry["rot6d"]
        rotation = rot6d_to_matrix(
            Rot6D(
                a=_finite(r6["a"], line_no, "rot6d.a"),
                b=_finite(r6["b"], line_no, "rot6d.b"),
            )
        )
    else:
        raise ParseError(line_no, "box needs 'rotation' or 'rot6d'")
    try:
        return Box3D(center=center, dims=dims, rotation=rotation)
    except Exception as e:
        raise InvariantViolation(line_no, "box3d", str(e))


def _parse_box2d(entry, line_no):
    if "box2d" not in entry:
        return None
    v = _finite(entry["box2d"], line_no, "box2d")
    if v.shape != (4,):
        raise InvariantViolation(line_no, "box2d", "expected 4 values")
    try:
        return Box2D(*v)
    except ValueError as e:
        raise InvariantViolation(line_no, "box2d", str(e))


def _read_frames(path, with_score):
    items = []
    intrinsics = {}
    seen = set()
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(line_no, f"invalid JSON: {e}")
            version = record.get("schema_version", SCHEMA_VERSION)
            if version != SCHEMA_VERSION:
                raise SchemaVersionError(f"line {line_no}: unsupported version {version!r}")
            fid = str(_require(record, "frame_id", line_no))
            if fid in seen:
                raise ParseError(line_no, f"duplicate frame_id {fid!r}")
            seen.add(fid)
            if "intrinsics" in record:
                intrinsics[fid] = _parse_intrinsics(record["intrinsics"], line_no)
            for entry in record.get("boxes", []):
                label = str(_require(entry, "label", line_no))
                box3d = _parse_box3d(entry, line_no)
                box2d = _parse_box2d(entry, line_no)
                if with_score:
                    score = _require(entry, "score", line_no)
                    _finite(score, line_no, "score")
                    try:
                        items.append(
                            Detection(
                                frame_id=fid,
                                label=label,
                                score=float(score),
                                box3d=box3d,
                                box2d=box2d,
                            )
                        )
                    except ValueError as e:
                        raise InvariantViolation(line_no, "score", str(e))
                else:
                    items.append(GroundTruth(frame_id=fid, label=label, box3d=box3d))
    return items, intrinsics


def read_gt(path):
    """Ground-truth boxes and per-frame intrinsics from a JSONL file."""
    return _read_frames(path, with_score=False)


def read_pred(path):
    """Scored detections and per-frame intrinsics from a JSONL file."""
    return _read_frames(path, with_score=True)


def _box_entry(item):
    entry = {
        "label": item.label,
        "center": [float(v) for v in item.box3d.center],
        "dims": [float(v) for v in item.box3d.dims],
        "rotation": [float(v) for v in item.box3d.rotation.reshape(-1)],
    }
    if isinstance(item, Detection):
        entry["score"] = float(item.score)
        if item.box2d is not None:
            entry["box2d"] = [item.box2d.x1, item.box2d.y1, item.box2d.x2, item.box2d.y2]
    return entry


def write_boxes(items, path, intrinsics=None):
    """Write GroundTruth or Detection items as one JSONL frame per line."""
    by_frame = {}
    for item in items:
        by_frame.setdefault(item.frame_id, []).append(item)
    frame_ids = sorted(set(by_frame) | set(intrinsics or {}))
    with open(path, "w", encoding="utf-8") as f:
        for fid in frame_ids:
            record = {"schema_version": SCHEMA_VERSION, "frame_id": fid}
            if intrinsics and fid in intrinsics:
                K = intrinsics[fid]
                record["intrinsics"] = {
                    "fx": K.fx,
                    "fy": K.fy,
                    "cx": K.cx,
                    "cy": K.cy,
                    "width": K.width,
                    "height": K.height,
                }
            record["boxes"] = [_box_entry(i) for i in by_frame.get(fid, [])]
            f.write(json.dumps(record, sort_keys=True) + "\n")


def report_to_json(report):
    """Canonical key-sorted JSON text of a MetricReport; byte-stable."""
    return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"


def write_report(report, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(report_to_json(report))


def report_to_csv(report):
    """CSV summary: one row per class plus a mean row, benchmark-style rounding.

    AP and ODS columns are percentages with one decimal; TP errors keep three
    decimals.
    """
    lines = ["class,ap_dist,mate,mase,maoe,ods,ods_base,ods_novel"]

    def fmt_pct(v):
        return "" if v is None else f"{100.0 * v:.1f}"

    for label in sorted(report.per_class):
        c = report.per_class[label]
        row_ods = None
        try:
            from .metrics import ods as _ods

            row_ods = _ods(c.ap_dist, c.ate, c.ase, c.aoe)
        except Exception:
            pass
        lines.append(
            f"{label},{fmt_pct(c.ap_dist)},{c.ate:.3f},{c.ase:.3f},{c.aoe:.3f},"
            f"{fmt_pct(row_ods)},,"
        )
    lines.append(
        f"mean,{fmt_pct(report.ap_dist)},{report.mate:.3f},{report.mase:.3f},"
        f"{report.maoe:.3f},{fmt_pct(report.ods)},{fmt_pct(report.ods_base)},"
        f"{fmt_pct(report.ods_novel)}"
    )
    return "\n".join(lines) + "\n"
