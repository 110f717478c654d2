"""GDSII stream writer and reader for the rectangle/SREF subset.

Records are big-endian: a 2-byte total length, a record type byte and a
data type byte.  Supported records::

    HEADER BGNLIB LIBNAME UNITS ENDLIB BGNSTR STRNAME ENDSTR
    BOUNDARY SREF LAYER DATATYPE XY SNAME ENDEL

Each rectangle becomes a BOUNDARY with a closed five-point XY ring.
"""

from __future__ import annotations

import math
import struct
from datetime import datetime

from ..errors import GridViolation, MalformedRecord, UnsupportedRecord
from .db import DEFAULT_LAYERS, LayerId, LayoutDb, Rect, Ref, Structure

HEADER = 0x0002
BGNLIB = 0x0102
LIBNAME = 0x0206
UNITS = 0x0305
ENDLIB = 0x0400
BGNSTR = 0x0502
STRNAME = 0x0606
ENDSTR = 0x0700
BOUNDARY = 0x0800
SREF = 0x0A00
LAYER = 0x0D02
DATATYPE = 0x0E02
XY = 0x1003
ENDEL = 0x1100
SNAME = 0x1206

RECORD_NAMES = {
    HEADER: "HEADER", BGNLIB: "BGNLIB", LIBNAME: "LIBNAME", UNITS: "UNITS",
    ENDLIB: "ENDLIB", BGNSTR: "BGNSTR", STRNAME: "STRNAME", ENDSTR: "ENDSTR",
    BOUNDARY: "BOUNDARY", SREF: "SREF", LAYER: "LAYER", DATATYPE: "DATATYPE",
    XY: "XY", ENDEL: "ENDEL", SNAME: "SNAME",
}

GDS_VERSION = 600
EPOCH = (1970, 1, 1, 0, 0, 0)


def encode_real8(x: float) -> bytes:
    """Excess-64 base-16 real.  Exact for every double in range."""
    if x == 0:
        return bytes(8)
    sign = 0x80 if x < 0 else 0
    m, e = math.frexp(abs(x))
    e16 = -(-e // 4)
    mant = int(math.ldexp(m, 53)) << (e + 3 - 4 * e16)
    exp = e16 + 64
    if not 0 <= exp < 128:
        raise ValueError(f"{x} is outside the GDSII real range")
    return bytes([sign | exp]) + mant.to_bytes(7, "big")


def decode_real8(b: bytes) -> float:
    sign = -1.0 if b[0] & 0x80 else 1.0
    exp = (b[0] & 0x7F) - 64
    mant = int.from_bytes(b[1:8], "big")
    return sign * math.ldexp(mant, 4 * exp - 56)


def _record(rid: int, payload: bytes = b"") -> bytes:
    if len(payload) % 2:
        payload += b"\0"
    size = 4 + len(payload)
    if size > 0xFFFF:
        raise ValueError("GDSII record too long")
    return struct.pack(">HH", size, rid) + payload


def _int2(*values: int) -> bytes:
    return struct.pack(f">{len(values)}h", *values)


def _int4(*values: int) -> bytes:
    for v in values:
        if not isinstance(v, int) or isinstance(v, bool):
            raise GridViolation(f"coordinate {v!r} is not on the database grid")
        if not -(2**31) <= v < 2**31:
            raise GridViolation(f"coordinate {v} overflows a 4-byte integer")
    return struct.pack(f">{len(values)}i", *values)


def _ascii(s: str) -> bytes:
    return s.encode("ascii")


def _stamp(ts: datetime | None) -> bytes:
    t = EPOCH if ts is None else (ts.year, ts.month, ts.day, ts.hour, ts.minute, ts.second)
    return _int2(*t, *t)


def emit_gdsii(db: LayoutDb, timestamp: datetime | None = None) -> bytes:
    """Serialize ``db``.  Timestamps default to 1970-01-01 for byte-stable output."""
    db.validate()
    out = [
        _record(HEADER, _int2(GDS_VERSION)),
        _record(BGNLIB, _stamp(timestamp)),
        _record(LIBNAME, _ascii(db.name)),
        _record(UNITS, encode_real8(1.0 / db.db_per_user) + encode_real8(db.db_unit)),
    ]
    for s in db.structures.values():
        out.append(_record(BGNSTR, _stamp(timestamp)))
        out.append(_record(STRNAME, _ascii(s.name)))
        for r in s.rects:
            lid = db.layers[r.layer]
            out.append(_record(BOUNDARY))
            out.append(_record(LAYER, _int2(lid.gds_layer)))
            out.append(_record(DATATYPE, _int2(lid.gds_datatype)))
            out.append(_record(XY, _int4(r.x0, r.y0, r.x1, r.y0, r.x1, r.y1, r.x0, r.y1, r.x0, r.y0)))
            out.append(_record(ENDEL))
        for ref in s.refs:
            out.append(_record(SREF))
            out.append(_record(SNAME, _ascii(ref.structure)))
            out.append(_record(XY, _int4(ref.x, ref.y)))
            out.append(_record(ENDEL))
        out.append(_record(ENDSTR))
    out.append(_record(ENDLIB))
    return b"".join(out)


def _iter_records(data: bytes):
    pos = 0
    while pos < len(data):
        if pos + 4 > len(data):
            raise MalformedRecord(pos, "truncated record header")
        size, rid = struct.unpack_from(">HH", data, pos)
        if size < 4 or size % 2:
            raise MalformedRecord(pos, f"bad record length {size}")
        if pos + size > len(data):
            raise MalformedRecord(pos, f"record of {size} bytes runs past end of stream")
        if rid not in RECORD_NAMES:
            raise UnsupportedRecord(rid, pos)
        yield pos, rid, data[pos + 4 : pos + size]
        pos += size


def _str(payload: bytes) -> str:
    return payload.rstrip(b"\0").decode("ascii")


def _ints(payload: bytes, width: int, pos: int, count: int | None = None) -> tuple[int, ...]:
    if len(payload) % width or (count is not None and len(payload) != count * width):
        raise MalformedRecord(pos, f"payload of {len(payload)} bytes is not {count or 'n'} x {width}-byte ints")
    fmt = ">%d%s" % (len(payload) // width, "h" if width == 2 else "i")
    return struct.unpack(fmt, payload)


def _ring_to_rect(xy: tuple[int, ...], layer: str, pos: int) -> Rect:
    if len(xy) != 10:
        raise MalformedRecord(pos, "boundary is not a closed 5-point ring")
    pts = list(zip(xy[0::2], xy[1::2]))
    if pts[0] != pts[4]:
        raise MalformedRecord(pos, "boundary ring is not closed")
    xs = sorted({p[0] for p in pts})
    ys = sorted({p[1] for p in pts})
    if len(xs) != 2 or len(ys) != 2:
        raise MalformedRecord(pos, "boundary is not an axis-aligned rectangle")
    corners = {(x, y) for x in xs for y in ys}
    if set(pts[:4]) != corners:
        raise MalformedRecord(pos, "boundary is not an axis-aligned rectangle")
    return Rect(layer, xs[0], ys[0], xs[1], ys[1])


def parse_gdsii(data: bytes, layers: dict[str, LayerId] | None = None) -> LayoutDb:
    """Inverse of :func:`emit_gdsii`.

    Layer numbers map back to names through ``layers``; unknown numbers get
    a synthetic ``L<layer>D<datatype>`` name.  The top structure is the one
    no other structure references (the last such one if several).
    """
    table = dict(DEFAULT_LAYERS if layers is None else layers)
    by_number = {(l.gds_layer, l.gds_datatype): name for name, l in table.items()}
    db = LayoutDb(layers=table)
    records = _iter_records(data)

    def expect(rid: int):
        try:
            pos, got, payload = next(records)
        except StopIteration:
            raise MalformedRecord(len(data), f"stream ends before {RECORD_NAMES[rid]}") from None
        if got != rid:
            raise MalformedRecord(pos, f"expected {RECORD_NAMES[rid]}, found {RECORD_NAMES[got]}")
        return pos, payload

    expect(HEADER)
    pos, payload = expect(BGNLIB)
    _ints(payload, 2, pos, 12)
    db.name = _str(expect(LIBNAME)[1])
    pos, payload = expect(UNITS)
    if len(payload) != 16:
        raise MalformedRecord(pos, "UNITS needs two 8-byte reals")
    user = decode_real8(payload[:8])
    db.db_unit = decode_real8(payload[8:])
    db.db_per_user = round(1.0 / user)

    while True:
        try:
            pos, rid, payload = next(records)
        except StopIteration:
            raise MalformedRecord(len(data), "missing ENDLIB") from None
        if rid == ENDLIB:
            break
        if rid != BGNSTR:
            raise MalformedRecord(pos, f"expected BGNSTR or ENDLIB, found {RECORD_NAMES[rid]}")
        _ints(payload, 2, pos, 12)
        name = _str(expect(STRNAME)[1])
        rects: list[Rect] = []
        refs: list[Ref] = []
        while True:
            try:
                pos, rid, payload = next(records)
            except StopIteration:
                raise MalformedRecord(len(data), f"structure {name} is not terminated") from None
            if rid == ENDSTR:
                break
            if rid == BOUNDARY:
                lpos, lp = expect(LAYER)
                (gl,) = _ints(lp, 2, lpos, 1)
                dpos, dp = expect(DATATYPE)
                (dt,) = _ints(dp, 2, dpos, 1)
                xpos, xp = expect(XY)
                xy = _ints(xp, 4, xpos)
                expect(ENDEL)
                lname = by_number.get((gl, dt))
                if lname is None:
                    lname = f"L{gl}D{dt}"
                    table[lname] = LayerId(lname, gl, dt)
                    by_number[(gl, dt)] = lname
                rects.append(_ring_to_rect(xy, lname, xpos))
            elif rid == SREF:
                sname = _str(expect(SNAME)[1])
                xpos, xp = expect(XY)
                x, y = _ints(xp, 4, xpos, 2)
                expect(ENDEL)
                refs.append(Ref(sname, x, y))
            else:
                raise MalformedRecord(pos, f"unexpected {RECORD_NAMES[rid]} inside structure {name}")
        if name in db.structures:
            raise MalformedRecord(pos, f"duplicate structure {name}")
        db.structures[name] = Structure(name, tuple(rects), tuple(refs))
    rest = next(records, None)
    if rest is not None:
        raise MalformedRecord(rest[0], "data after ENDLIB")

    referenced = {r.structure for s in db.structures.values() for r in s.refs}
    roots = [n for n in db.structures if n not in referenced]
    db.top = roots[-1] if roots else None
    return db
