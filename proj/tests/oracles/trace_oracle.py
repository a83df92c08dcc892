#!/usr/bin/env python3
"""Independent trace digest check.

Runs the CLI to dump a trace, then rebuilds the canonical scene and outputs
bytes of every record from the parsed JSON with Python's own encoder, hashes
them with hashlib, and compares the result against both the digest the CLI
printed and the checked-in golden value.

Usage: trace_oracle.py <cli> <project> <playlog> <golden-digest-file> <workdir>
"""

import hashlib
import json
import pathlib
import struct
import subprocess
import sys


def canonical(value):
    return json.dumps(value, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def check_coordinate(hex_text):
    if len(hex_text) != 16 or hex_text != hex_text.lower():
        raise AssertionError(f"bad coordinate encoding {hex_text!r}")
    value = struct.unpack(">d", bytes.fromhex(hex_text))[0]
    if value != value or value in (float("inf"), float("-inf")):
        raise AssertionError(f"non-finite coordinate {hex_text}")
    if hex_text == "8000000000000000":
        raise AssertionError("negative zero must be encoded as +0.0")


def main():
    cli, project, playlog, golden_file, workdir = sys.argv[1:6]
    work = pathlib.Path(workdir)
    work.mkdir(parents=True, exist_ok=True)
    trace_path = work / "oracle_trace.jsonl"

    printed = subprocess.run([cli, "run", project, "--events", playlog, "--trace", str(trace_path)],
                             check=True, capture_output=True, text=True).stdout.strip()

    header = json.loads(pathlib.Path(playlog).read_text().splitlines()[0])
    sha = hashlib.sha256()
    expected_tick = 0
    for line in trace_path.read_text(encoding="utf-8").splitlines():
        record = json.loads(line)
        assert record["tick"] == expected_tick, (record["tick"], expected_tick)
        assert record["scene"]["tick"] == expected_tick
        assert record["outputs"]["tick"] == expected_tick
        layers = [(e["layer"]) for e in record["scene"]["entries"]]
        assert layers == sorted(layers), f"entries out of painter order at tick {expected_tick}"
        for entry in record["scene"]["entries"]:
            check_coordinate(entry["x"])
            check_coordinate(entry["y"])
        sha.update(canonical(record["scene"]))
        sha.update(canonical(record["outputs"]))
        expected_tick += 1
    assert expected_tick == header["end_tick"] + 1, (expected_tick, header["end_tick"])

    recomputed = sha.hexdigest()
    golden = pathlib.Path(golden_file).read_text().strip()
    print(f"cli:        {printed}\nrecomputed: {recomputed}\ngolden:     {golden}")
    if not (printed == recomputed == golden):
        sys.exit(1)


if __name__ == "__main__":
    main()
