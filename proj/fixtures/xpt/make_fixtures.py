"""Writes the XPORT v5 test fixtures and their expected contents.

The writer here is deliberately separate from the C++ parser. After writing,
each file is read back with pandas.read_sas as a cross-check.

    python3 fixtures/xpt/make_fixtures.py
"""

import json
import math
import pathlib
import struct

import pandas as pd

HERE = pathlib.Path(__file__).resolve().parent
STAMP = "01JAN20:00:00:00"


def pad(text, n):
    data = text.encode("ascii")
    assert len(data) <= n
    return data + b" " * (n - len(data))


def record(text):
    data = text.encode("ascii") if isinstance(text, str) else text
    assert len(data) == 80, len(data)
    return data


def header(kind, tail="0" * 30):
    return record("HEADER RECORD*******" + kind.ljust(8) + "HEADER RECORD!!!!!!!" + tail + "  ")


def ieee_to_ibm(value, missing=None):
    """8-byte IBM hexadecimal float for a finite double, or a missing sentinel."""
    if missing is not None:
        return missing.encode("ascii") + b"\x00" * 7
    if value == 0:
        return b"\x00" * 8
    sign = 0x80 if value < 0 else 0
    mantissa, exp2 = math.frexp(abs(value))  # value = mantissa * 2**exp2, 0.5 <= mantissa < 1
    # align to a power of 16
    shift = (-exp2) % 4
    exp16 = (exp2 + shift) // 4
    frac = int(mantissa * (1 << 56)) >> shift
    assert frac < (1 << 56)
    return bytes([sign | (exp16 + 64)]) + frac.to_bytes(7, "big")


def namestr(var, index, position):
    ntype = 1 if var["type"] == "numeric" else 2
    out = struct.pack(">hhhh", ntype, 0, var["length"], index + 1)
    out += pad(var["name"], 8) + pad(var.get("label", ""), 40) + pad("", 8)
    out += struct.pack(">hhh", 0, 0, 0) + b"\x00\x00" + pad("", 8) + struct.pack(">hh", 0, 0)
    out += struct.pack(">i", position) + b"\x00" * 52
    assert len(out) == 140
    return out


def encode_cell(var, cell):
    if var["type"] == "character":
        return pad(cell or "", var["length"])
    if isinstance(cell, str):  # missing sentinel such as "." or "A"
        return ieee_to_ibm(None, cell)[: var["length"]]
    return ieee_to_ibm(float(cell))[: var["length"]]


def pad80(data, fill=b" "):
    rem = len(data) % 80
    return data if rem == 0 else data + fill * (80 - rem)


def write(path, members):
    out = header("LIBRARY")
    out += record(pad("SAS", 8) + pad("SAS", 8) + pad("SASLIB", 8) + pad("9.4", 8) + pad("X64_7PRO", 8) + b" " * 24 + STAMP.encode())
    out += record(STAMP.encode() + b" " * 64)
    for m in members:
        out += header("MEMBER", "000000000000000001600000000140")
        out += header("DSCRPTR")
        out += record(pad("SAS", 8) + pad(m["name"], 8) + pad("SASDATA", 8) + pad("9.4", 8) + pad("X64_7PRO", 8) + b" " * 24 + STAMP.encode())
        out += record(STAMP.encode() + b" " * 16 + pad(m.get("label", ""), 40) + pad("", 8))
        out += header("NAMESTR", "000000%04d00000000000000000000" % len(m["variables"]))
        block = b""
        position = 0
        for i, v in enumerate(m["variables"]):
            block += namestr(v, i, position)
            position += v["length"]
        out += pad80(block)
        out += header("OBS")
        rows = b""
        for row in m["rows"]:
            for v, cell in zip(m["variables"], row):
                rows += encode_cell(v, cell)
        out += pad80(rows)
    path.write_bytes(out)


def check_with_pandas(path, member):
    frame = pd.read_sas(path, format="xport")
    for j, v in enumerate(member["variables"]):
        got = list(frame[v["name"]])
        for row, value in zip(member["rows"], got):
            cell = row[j]
            if v["type"] == "character":
                text = value.decode() if isinstance(value, bytes) else value
                assert (text or "").rstrip() == (cell or ""), (path, v["name"], text, cell)
            elif isinstance(cell, str):
                assert math.isnan(value), (path, v["name"], value)
            else:
                assert value == cell, (path, v["name"], value, cell)


GOLDEN = [
    {
        "name": "DEMO",
        "label": "golden",
        "variables": [
            {"name": "SEQN", "type": "numeric", "length": 8, "label": "Respondent sequence number"},
            {"name": "LBXGLU", "type": "numeric", "length": 8, "label": "Fasting glucose (mg/dL)"},
        ],
        "rows": [[1.0, 95.0], [2.0, "."], [3.0, 126.5]],
    }
]

MIXED = [
    {
        "name": "MIXED",
        "variables": [
            {"name": "SEQN", "type": "numeric", "length": 8},
            {"name": "CODE", "type": "character", "length": 3},
            {"name": "SHORT", "type": "numeric", "length": 4},
            {"name": "TINY", "type": "numeric", "length": 8},
        ],
        "rows": [
            [10.0, "AB", 1.5, -0.15625],
            [11.0, "", ".", "A"],
            [10.0, "XYZ", 100.0, 1e-30],
        ],
    }
]

EMPTY = [{"name": "EMPTY", "variables": [{"name": "SEQN", "type": "numeric", "length": 8}], "rows": []}]

TWO = [
    {"name": "A", "variables": [{"name": "SEQN", "type": "numeric", "length": 8},
                                {"name": "X", "type": "numeric", "length": 8}], "rows": [[1.0, 2.0], [2.0, 3.0]]},
    {"name": "B", "variables": [{"name": "SEQN", "type": "numeric", "length": 8},
                                {"name": "Y", "type": "character", "length": 1}], "rows": [[2.0, "y"]]},
]


def expected(members):
    return {
        "members": [
            {
                "name": m["name"],
                "variables": [{"name": v["name"], "type": v["type"], "length": v["length"]} for v in m["variables"]],
                "rows": m["rows"],
            }
            for m in members
        ]
    }


if __name__ == "__main__":
    for name, members in [("golden", GOLDEN), ("mixed", MIXED), ("empty", EMPTY), ("two_members", TWO)]:
        path = HERE / (name + ".xpt")
        write(path, members)
        if len(members) == 1 and members[0]["rows"]:
            check_with_pandas(path, members[0])
        (HERE / (name + ".json")).write_text(json.dumps(expected(members), indent=1) + "\n")
        print("wrote", path.name)
