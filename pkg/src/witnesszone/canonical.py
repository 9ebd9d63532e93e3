"""Canonical byte encoding for protocol records.

Every record that is hashed or signed goes through this module so that
digests and signatures are stable across processes and platforms.  The
format is deliberately simple:

* a record is ``lp(type_name) || lp(field_1) || ... || lp(field_n)`` with
  fields in declaration order, where ``lp`` is a 4-byte big-endian length
  prefix;
* integers are fixed-width 8-byte big-endian (signed);
* reals are the shortest round-trip decimal text, UTF-8;
* strings are UTF-8; byte strings are raw;
* sequences are a 4-byte count followed by length-prefixed items;
* string-keyed maps are encoded as sequences of key/value pairs sorted by
  key, making the encoding independent of insertion order.

Record types register a schema at import time (see :func:`register`);
:func:`decode` reconstructs the original dataclass instance.
"""

from __future__ import annotations

import struct
from typing import Any, Callable

__all__ = [
    "CanonicalError",
    "register",
    "encode",
    "decode",
    "encode_scalar",
    "decode_scalar",
]


class CanonicalError(ValueError):
    """Unknown record type or malformed canonical bytes."""


def _lp(payload: bytes) -> bytes:
    return struct.pack(">I", len(payload)) + payload


def _read_lp(buf: bytes, offset: int) -> tuple[bytes, int]:
    if offset + 4 > len(buf):
        raise CanonicalError("truncated length prefix")
    (n,) = struct.unpack_from(">I", buf, offset)
    offset += 4
    if offset + n > len(buf):
        raise CanonicalError("truncated field payload")
    return buf[offset : offset + n], offset + n


# -- field codecs ------------------------------------------------------------

def _enc_i64(v: Any) -> bytes:
    return struct.pack(">q", int(v))


def _dec_i64(b: bytes) -> int:
    if len(b) != 8:
        raise CanonicalError("bad integer width")
    return struct.unpack(">q", b)[0]


def _enc_f64(v: Any) -> bytes:
    return repr(float(v)).encode("ascii")


def _dec_f64(b: bytes) -> float:
    try:
        return float(b.decode("ascii"))
    except (UnicodeDecodeError, ValueError) as exc:
        raise CanonicalError("bad real encoding") from exc


def _enc_str(v: Any) -> bytes:
    # str subclasses (e.g. string-valued enums) encode their str content
    if isinstance(v, str):
        return v.encode("utf-8")
    raise CanonicalError(f"expected str, got {type(v).__name__}")


def _dec_str(b: bytes) -> str:
    try:
        return b.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CanonicalError("bad string encoding") from exc


def _enc_bytes(v: Any) -> bytes:
    return bytes(v)


def _dec_bytes(b: bytes) -> bytes:
    return b


def _enc_bool(v: Any) -> bytes:
    return b"\x01" if v else b"\x00"


def _dec_bool(b: bytes) -> bool:
    if b == b"\x01":
        return True
    if b == b"\x00":
        return False
    raise CanonicalError("bad boolean encoding")


_SCALAR_TAGS = {bool: 0, int: 1, float: 2, str: 3, bytes: 4}
_SCALAR_ENC = {0: _enc_bool, 1: _enc_i64, 2: _enc_f64, 3: _enc_str, 4: _enc_bytes}
_SCALAR_DEC = {0: _dec_bool, 1: _dec_i64, 2: _dec_f64, 3: _dec_str, 4: _dec_bytes}


def encode_scalar(v: Any) -> bytes:
    """Encode a tagged scalar (bool, int, float, str, or bytes)."""
    for typ, tag in _SCALAR_TAGS.items():
        if isinstance(v, typ):  # bool checked before int
            return bytes([tag]) + _SCALAR_ENC[tag](v)
    raise CanonicalError(f"unsupported scalar type {type(v).__name__}")


def decode_scalar(b: bytes) -> Any:
    if not b:
        raise CanonicalError("empty scalar")
    tag = b[0]
    if tag not in _SCALAR_DEC:
        raise CanonicalError(f"unknown scalar tag {tag}")
    return _SCALAR_DEC[tag](b[1:])


class _Codec:
    def __init__(self, enc: Callable[[Any], bytes], dec: Callable[[bytes], Any]):
        self.enc = enc
        self.dec = dec


I64 = _Codec(_enc_i64, _dec_i64)
F64 = _Codec(_enc_f64, _dec_f64)
STR = _Codec(_enc_str, _dec_str)
BYTES = _Codec(_enc_bytes, _dec_bytes)
BOOL = _Codec(_enc_bool, _dec_bool)
SCALAR = _Codec(encode_scalar, decode_scalar)


def seq_of(item: _Codec) -> _Codec:
    def enc(values: Any) -> bytes:
        items = list(values)
        out = struct.pack(">I", len(items))
        for v in items:
            out += _lp(item.enc(v))
        return out

    def dec(b: bytes) -> tuple:
        if len(b) < 4:
            raise CanonicalError("truncated sequence")
        (n,) = struct.unpack_from(">I", b, 0)
        offset = 4
        values = []
        for _ in range(n):
            payload, offset = _read_lp(b, offset)
            values.append(item.dec(payload))
        if offset != len(b):
            raise CanonicalError("trailing bytes in sequence")
        return tuple(values)

    return _Codec(enc, dec)


def map_of(value: _Codec) -> _Codec:
    """String-keyed map, entries sorted by key."""

    def enc(mapping: Any) -> bytes:
        items = sorted(mapping.items())
        out = struct.pack(">I", len(items))
        for k, v in items:
            out += _lp(_enc_str(k)) + _lp(value.enc(v))
        return out

    def dec(b: bytes) -> dict:
        if len(b) < 4:
            raise CanonicalError("truncated map")
        (n,) = struct.unpack_from(">I", b, 0)
        offset = 4
        result = {}
        for _ in range(n):
            kb, offset = _read_lp(b, offset)
            vb, offset = _read_lp(b, offset)
            result[_dec_str(kb)] = value.dec(vb)
        if offset != len(b):
            raise CanonicalError("trailing bytes in map")
        return result

    return _Codec(enc, dec)


def record_of(type_name: str) -> _Codec:
    """Nested record field; the payload is a full self-describing record."""

    def enc(v: Any) -> bytes:
        data = encode(v)
        got = _peek_name(data)
        if got != type_name:
            raise CanonicalError(f"expected nested {type_name!r}, got {got!r}")
        return data

    def dec(b: bytes) -> Any:
        v = decode(b)
        got = _peek_name(b)
        if got != type_name:
            raise CanonicalError(f"expected nested {type_name!r}, got {got!r}")
        return v

    return _Codec(enc, dec)


# -- registry ----------------------------------------------------------------

class _Schema:
    def __init__(self, name: str, cls: type, fields: tuple[tuple[str, _Codec], ...]):
        self.name = name
        self.cls = cls
        self.fields = fields


_BY_NAME: dict[str, _Schema] = {}
_BY_CLS: dict[type, _Schema] = {}


def register(name: str, cls: type, fields: tuple[tuple[str, _Codec], ...]) -> None:
    """Register a record type; called at import time by the defining module."""
    schema = _Schema(name, cls, fields)
    _BY_NAME[name] = schema
    _BY_CLS[cls] = schema


def _peek_name(data: bytes) -> str:
    name_bytes, _ = _read_lp(data, 0)
    return _dec_str(name_bytes)


def encode(record: Any) -> bytes:
    schema = _BY_CLS.get(type(record))
    if schema is None:
        raise CanonicalError(f"unregistered record type {type(record).__name__}")
    out = _lp(_enc_str(schema.name))
    for field_name, codec in schema.fields:
        out += _lp(codec.enc(getattr(record, field_name)))
    return out


def decode(data: bytes) -> Any:
    name = _peek_name(data)
    schema = _BY_NAME.get(name)
    if schema is None:
        raise CanonicalError(f"unregistered record type {name!r}")
    _, offset = _read_lp(data, 0)
    kwargs = {}
    for field_name, codec in schema.fields:
        payload, offset = _read_lp(data, offset)
        kwargs[field_name] = codec.dec(payload)
    if offset != len(data):
        raise CanonicalError("trailing bytes after record")
    try:
        return schema.cls(**kwargs)
    except CanonicalError:
        raise
    except (TypeError, ValueError) as exc:
        # field values that fail the record's own invariants are malformed input
        raise CanonicalError(f"invalid {name} field values: {exc}") from exc
