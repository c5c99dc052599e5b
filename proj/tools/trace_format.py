#!/usr/bin/env python3
# Copyright 2026 The halluprobe Authors
# SPDX-License-Identifier: Apache-2.0
"""Reader and writer for halluprobe trace files (.htr), standard library only.

An extractor that captures activations from a real model uses write_traces()
to hand them to the C++ tools. Layout (little-endian):

    "HPRB" u32 version=1
    u32 num_hidden_sites, num_layers, heads_per_layer, hidden_dim, head_dim
    u64 sample_count
    per sample:
      u16 id_len, id bytes (UTF-8)
      u8 label (0 hallucination, 1 correct, 255 unlabeled)
      u8 has_logprob, [f64 logprob]
      f32[feature_length] site vectors, hidden-state sites by layer, then
      heads by (layer, head)
"""

from __future__ import annotations

import argparse
import array
import math
import struct
import sys
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Optional, Sequence

MAGIC = b"HPRB"
VERSION = 1
UNLABELED = 255


@dataclass(frozen=True)
class ModelConfig:
    num_hidden_sites: int
    num_layers: int
    heads_per_layer: int
    hidden_dim: int
    head_dim: int

    def total_sites(self) -> int:
        return self.num_hidden_sites + self.num_layers * self.heads_per_layer

    def feature_length(self) -> int:
        return self.num_hidden_sites * self.hidden_dim + self.num_layers * self.heads_per_layer * self.head_dim

    def sites(self) -> list[str]:
        hidden = [f"hs:{l}" for l in range(self.num_hidden_sites)]
        heads = [f"ah:{l}:{h}" for l in range(self.num_layers) for h in range(self.heads_per_layer)]
        return hidden + heads


# 41 hidden-state sites (embedding output plus 40 layers) and 40 x 32 heads.
REFERENCE_SCALE = ModelConfig(41, 40, 32, 4096, 128)


@dataclass
class Trace:
    sample_id: str
    features: Sequence[float]
    label: Optional[int] = None  # 1 correct, 0 hallucination
    answer_logprob: Optional[float] = None


@dataclass
class TraceFile:
    config: ModelConfig
    traces: list[Trace] = field(default_factory=list)


class TraceFormatError(ValueError):
    pass


def aggregate(step_vectors: Sequence[Sequence[float]]) -> list[float]:
    """Mean over generation steps of one site's last-position activations."""
    if not step_vectors:
        raise TraceFormatError("no generation steps to aggregate")
    width = len(step_vectors[0])
    if any(len(v) != width for v in step_vectors):
        raise TraceFormatError("step vectors differ in length")
    return [math.fsum(v[j] for v in step_vectors) / len(step_vectors) for j in range(width)]


def _check_trace(config: ModelConfig, t: Trace) -> None:
    if len(t.features) != config.feature_length():
        raise TraceFormatError(f"{t.sample_id}: {len(t.features)} features, expected {config.feature_length()}")
    if not all(math.isfinite(x) for x in t.features):
        raise TraceFormatError(f"{t.sample_id}: non-finite feature")
    if t.label not in (None, 0, 1):
        raise TraceFormatError(f"{t.sample_id}: label must be 0, 1 or None")
    if t.answer_logprob is not None and not math.isfinite(t.answer_logprob):
        raise TraceFormatError(f"{t.sample_id}: non-finite logprob")
    if len(t.sample_id.encode()) > 0xFFFF:
        raise TraceFormatError("sample id too long")


def write_traces(out: BinaryIO, data: TraceFile) -> None:
    c = data.config
    out.write(MAGIC)
    out.write(struct.pack("<6I", VERSION, c.num_hidden_sites, c.num_layers, c.heads_per_layer, c.hidden_dim, c.head_dim))
    out.write(struct.pack("<Q", len(data.traces)))
    for t in data.traces:
        _check_trace(c, t)
        sid = t.sample_id.encode()
        out.write(struct.pack("<H", len(sid)) + sid)
        out.write(struct.pack("<B", UNLABELED if t.label is None else t.label))
        if t.answer_logprob is None:
            out.write(b"\x00")
        else:
            out.write(struct.pack("<Bd", 1, t.answer_logprob))
        values = array.array("f", t.features)
        if sys.byteorder != "little":
            values.byteswap()
        out.write(values.tobytes())


def _take(data: bytes, pos: int, n: int, what: str) -> tuple[bytes, int]:
    if pos + n > len(data):
        raise TraceFormatError(f"truncated while reading {what}")
    return data[pos : pos + n], pos + n


def read_traces(src: BinaryIO) -> TraceFile:
    data = src.read()
    magic, pos = _take(data, 0, 4, "magic")
    if magic != MAGIC:
        raise TraceFormatError("not a trace file")
    raw, pos = _take(data, pos, 24, "header")
    version, *dims = struct.unpack("<6I", raw)
    if version != VERSION:
        raise TraceFormatError(f"unsupported version {version}")
    config = ModelConfig(*dims)
    raw, pos = _take(data, pos, 8, "sample count")
    (count,) = struct.unpack("<Q", raw)
    out = TraceFile(config)
    length = config.feature_length()
    for _ in range(count):
        raw, pos = _take(data, pos, 2, "id length")
        (id_len,) = struct.unpack("<H", raw)
        sid, pos = _take(data, pos, id_len, "sample id")
        raw, pos = _take(data, pos, 2, "label and flag")
        label, flag = raw[0], raw[1]
        if label not in (0, 1, UNLABELED) or flag > 1:
            raise TraceFormatError("invalid label or logprob flag")
        logprob = None
        if flag:
            raw, pos = _take(data, pos, 8, "logprob")
            (logprob,) = struct.unpack("<d", raw)
        raw, pos = _take(data, pos, 4 * length, "site vectors")
        values = array.array("f")
        values.frombytes(raw)
        if sys.byteorder != "little":
            values.byteswap()
        t = Trace(sid.decode(), values.tolist(), None if label == UNLABELED else label, logprob)
        _check_trace(config, t)
        out.traces.append(t)
    if pos != len(data):
        raise TraceFormatError("trailing bytes after last sample")
    return out


# Interop fixture shared with the C++ checker (tests/trace_interop.cpp). All
# values are exact in float32 so both sides can compare with ==.
INTEROP_CONFIG = ModelConfig(3, 2, 2, 4, 2)


def interop_fixture() -> TraceFile:
    n = INTEROP_CONFIG.feature_length()
    # Sample 0 goes through the aggregation rule: two steps whose mean is (j + 1) / 8.
    steps = [[(j + 1) / 8 - 0.5 for j in range(n)], [(j + 1) / 8 + 0.5 for j in range(n)]]
    return TraceFile(
        INTEROP_CONFIG,
        [
            Trace("py-000", aggregate(steps), 1, -0.25),
            Trace("py-001", [-(j + 1) / 4 for j in range(n)], None, None),
            Trace("py-002", [0.0] * n, 0, -3.5),
        ],
    )


def _same(a: TraceFile, b: TraceFile) -> bool:
    return a.config == b.config and [
        (t.sample_id, list(t.features), t.label, t.answer_logprob) for t in a.traces
    ] == [(t.sample_id, list(t.features), t.label, t.answer_logprob) for t in b.traces]


def main(argv: Iterable[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("write-fixture", help="write the interop fixture").add_argument("path")
    sub.add_parser("check-fixture", help="verify a file equals the interop fixture").add_argument("path")
    sub.add_parser("dump", help="print a summary of a trace file").add_argument("path")
    sub.add_parser("census", help="print the reference-scale site census")
    args = parser.parse_args(argv)

    try:
        if args.command == "write-fixture":
            with open(args.path, "wb") as f:
                write_traces(f, interop_fixture())
        elif args.command == "check-fixture":
            with open(args.path, "rb") as f:
                got = read_traces(f)
            if not _same(got, interop_fixture()):
                print(f"{args.path}: contents differ from the interop fixture", file=sys.stderr)
                return 1
            print(f"{args.path}: ok ({len(got.traces)} samples)")
        elif args.command == "dump":
            with open(args.path, "rb") as f:
                got = read_traces(f)
            print(f"config {got.config} sites={got.config.total_sites()} samples={len(got.traces)}")
            for t in got.traces:
                print(f"{t.sample_id}\tlabel={t.label}\tlogprob={t.answer_logprob}")
        elif args.command == "census":
            sites = REFERENCE_SCALE.sites()
            print(f"{len(sites)} sites: {sites[0]} .. {sites[REFERENCE_SCALE.num_hidden_sites - 1]}, {sites[-1]}")
    except (OSError, TraceFormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
