"""Minimal TOML emitter for experiment configs.

Covers the subset this package writes: nested tables, homogeneous lists of
scalars, strings, booleans, ints, and floats.  Floats use repr, which
round-trips exactly through any compliant parser.
"""

import json


def dumps(data: dict) -> str:
    lines = []
    _emit_table(data, [], lines)
    return "\n".join(lines) + "\n"


def _emit_table(table: dict, path: list, lines: list):
    scalars = {k: v for k, v in table.items() if not isinstance(v, dict)}
    subtables = {k: v for k, v in table.items() if isinstance(v, dict)}
    if path and (scalars or not subtables):
        lines.append(f"[{'.'.join(_key(p) for p in path)}]")
    for k, v in scalars.items():
        lines.append(f"{_key(k)} = {_value(v)}")
    for k, v in subtables.items():
        if lines and lines[-1] != "":
            lines.append("")
        _emit_table(v, path + [k], lines)


def _key(k: str) -> str:
    if k and all(c.isalnum() or c in "-_" for c in k):
        return k
    return json.dumps(k)


def _value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if v != v or v in (float("inf"), float("-inf")):
            return {float("inf"): "inf", float("-inf"): "-inf"}.get(v, "nan")
        r = repr(v)
        return r if ("." in r or "e" in r or "E" in r) else r + ".0"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__} to TOML")
