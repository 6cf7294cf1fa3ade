"""Token sequences for progressive meshes and the ``.vrpm`` container.

Layout: ``BOS, base faces (9 tokens each), SEP, records (12 or 10 tokens), EOS``.
Coordinate tokens are the bin values themselves, shared by all three axes;
the four specials follow them.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidRecordError, StreamFormatError
from .halfedge import GridSpec, HalfEdgeMesh, canonical_order, vertex_rank_key
from .progressive import ProgressiveMesh, VSplitRecord, iter_levels, partition_ring

MAGIC = b"VRPM"
VERSION = 1
HEADER = struct.Struct("<4sIIQ")  # magic, version, n_bins, token count
TEXT_HEADER = "# pmcodec-tokens v1 n_bins={}"

BASELINE_TOKENS_PER_FACE = 9
INTERIOR_RECORD_TOKENS = 12
BOUNDARY_RECORD_TOKENS = 10


@dataclass(frozen=True)
class Vocabulary:
    n_bins: int = 128

    @property
    def bos(self) -> int:
        return self.n_bins

    @property
    def sep(self) -> int:
        return self.n_bins + 1

    @property
    def eos(self) -> int:
        return self.n_bins + 2

    @property
    def nil(self) -> int:
        return self.n_bins + 3

    @property
    def size(self) -> int:
        return self.n_bins + 4

    def is_coord(self, tok: int) -> bool:
        return 0 <= tok < self.n_bins

    def name(self, tok: int) -> str:
        specials = {self.bos: "<bos>", self.sep: "<sep>", self.eos: "<eos>", self.nil: "<nil>"}
        return specials.get(tok, str(tok))


@dataclass
class TokenStream:
    n_bins: int
    tokens: list[int] = field(default_factory=list)

    @property
    def vocab(self) -> Vocabulary:
        return Vocabulary(self.n_bins)

    def __len__(self):
        return len(self.tokens)


def _coord_tokens(c, n_bins):
    for x in c:
        if not 0 <= x < n_bins:
            raise InvalidRecordError(f"coordinate {c} outside the {n_bins}-bin grid")
    return [int(c[0]), int(c[1]), int(c[2])]


def encode_m0(mesh: HalfEdgeMesh, n_bins: int = 128) -> list[int]:
    out = []
    for face in canonical_order(mesh):
        for v in face:
            out += _coord_tokens(mesh.position(v), n_bins)
    return out


def encode_vsplit(record: VSplitRecord, n_bins: int = 128) -> list[int]:
    if record.l is None and record.r is None:
        raise InvalidRecordError("only one of v_l and v_r may be NIL")
    nil = Vocabulary(n_bins).nil
    out = _coord_tokens(record.s, n_bins)
    for c in (record.l, record.r):
        out += [nil] if c is None else _coord_tokens(c, n_bins)
    return out + _coord_tokens(record.t, n_bins)


def encode_pm(pm: ProgressiveMesh) -> TokenStream:
    n = pm.grid.n_bins
    voc = Vocabulary(n)
    tokens = [voc.bos] + encode_m0(pm.base, n) + [voc.sep]
    for rec in pm.records:
        tokens += encode_vsplit(rec, n)
    tokens.append(voc.eos)
    return TokenStream(n, tokens)


def decode_pm(stream: TokenStream) -> ProgressiveMesh:
    """Parse a complete stream back into base mesh and records.

    Purely syntactic: records are not applied here, so geometric
    consistency is only checked when the result is replayed.
    """
    voc = stream.vocab
    toks = list(stream.tokens)
    pos = 0

    def fail(msg):
        raise StreamFormatError(f"token {pos}: {msg}")

    def coord():
        nonlocal pos
        c = toks[pos : pos + 3]
        if len(c) < 3 or not all(voc.is_coord(x) for x in c):
            fail("expected three coordinate tokens")
        pos += 3
        return tuple(c)

    if not toks or toks[0] != voc.bos:
        fail("stream must start with <bos>")
    pos = 1
    base = HalfEdgeMesh()
    while pos < len(toks) and toks[pos] != voc.sep:
        ids = []
        for _ in range(3):
            c = coord()
            v = base.find_vertex(c)
            ids.append(base.add_vertex(c) if v is None else v)
        base.add_face(*ids)
    if pos >= len(toks):
        fail("missing <sep>")
    pos += 1
    records = []
    while pos < len(toks) and toks[pos] != voc.eos:
        s = coord()
        sides = []
        for _ in range(2):
            if pos < len(toks) and toks[pos] == voc.nil:
                pos += 1
                sides.append(None)
            else:
                sides.append(coord())
        t = coord()
        records.append(VSplitRecord(s, sides[0], sides[1], t))
    if pos >= len(toks):
        fail("missing <eos>")
    if pos != len(toks) - 1:
        fail("tokens after <eos>")
    return ProgressiveMesh(base, records, GridSpec(stream.n_bins))


def expected_length(pm: ProgressiveMesh) -> int:
    return (
        3
        + BASELINE_TOKENS_PER_FACE * pm.base.n_faces
        + INTERIOR_RECORD_TOKENS * pm.n_interior
        + BOUNDARY_RECORD_TOKENS * pm.n_boundary
    )


@dataclass
class CompressionReport:
    ratio: float
    m0_fraction: float
    boundary_fraction: float
    ratio_with_specials: float
    f0: int
    faces: int
    n_interior: int
    n_boundary: int
    n_tokens: int

    def as_dict(self):
        return dict(self.__dict__)


def compression_report(pm: ProgressiveMesh) -> CompressionReport:
    """Token cost relative to 9 tokens per face; specials excluded from ``ratio``."""
    f0 = pm.base.n_faces
    n_int, n_bnd = pm.n_interior, pm.n_boundary
    faces = f0 + 2 * n_int + n_bnd
    m0 = BASELINE_TOKENS_PER_FACE * f0
    body = m0 + INTERIOR_RECORD_TOKENS * n_int + BOUNDARY_RECORD_TOKENS * n_bnd
    baseline = BASELINE_TOKENS_PER_FACE * faces
    n_rec = n_int + n_bnd
    return CompressionReport(
        ratio=body / baseline,
        m0_fraction=m0 / body,
        boundary_fraction=n_bnd / n_rec if n_rec else 0.0,
        ratio_with_specials=(body + 3) / baseline,
        f0=f0,
        faces=faces,
        n_interior=n_int,
        n_boundary=n_bnd,
        n_tokens=body + 3,
    )


# -- ablation: records without half-edge ordering ---------------------------


def encode_vsplit_no_halfedge(record: VSplitRecord, extra, n_bins: int = 128) -> list[int]:
    """Record plus one ring vertex naming the half that moves to ``v_t``."""
    toks = encode_vsplit(record, n_bins)
    return toks[:-3] + _coord_tokens(extra, n_bins) + toks[-3:]


def encode_pm_no_halfedge(pm: ProgressiveMesh) -> TokenStream:
    """Stream where each record also carries a disambiguating ring vertex.

    The extra vertex is the lowest-ranked vertex re-homed to ``v_t``, falling
    back to the lowest-ranked vertex kept by ``v_s`` and then ``v_s`` itself
    when both halves are empty.
    """
    n = pm.grid.n_bins
    voc = Vocabulary(n)
    tokens = [voc.bos] + encode_m0(pm.base, n) + [voc.sep]
    levels = iter_levels(pm)
    for rec, (_, mesh) in zip(pm.records, levels):
        s = mesh.find_vertex(rec.s)
        l = None if rec.l is None else mesh.find_vertex(rec.l)
        r = None if rec.r is None else mesh.find_vertex(rec.r)
        stay, move = partition_ring(mesh, s, l, r)
        pick = move or stay
        if pick:
            extra = min((mesh.position(v) for v in pick), key=vertex_rank_key)
        else:
            extra = rec.s
        tokens += encode_vsplit_no_halfedge(rec, extra, n)
    tokens.append(voc.eos)
    return TokenStream(n, tokens)


# -- containers -------------------------------------------------------------


def dumps_stream(stream: TokenStream) -> bytes:
    if stream.n_bins + 4 > 1 << 16:
        raise ValueError("vocabulary does not fit 16-bit tokens")
    body = np.asarray(stream.tokens, dtype="<u2").tobytes()
    return HEADER.pack(MAGIC, VERSION, stream.n_bins, len(stream.tokens)) + body


def loads_stream(data: bytes) -> TokenStream:
    if len(data) < HEADER.size:
        raise StreamFormatError(f"truncated header: {len(data)} of {HEADER.size} bytes", len(data))
    magic, version, n_bins, count = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise StreamFormatError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise StreamFormatError(f"unsupported version {version}", 4)
    if n_bins < 2 or n_bins + 4 > 1 << 16:
        raise StreamFormatError(f"invalid n_bins {n_bins}", 8)
    need = HEADER.size + 2 * count
    if len(data) < need:
        raise StreamFormatError(f"truncated body: expected {count} tokens", len(data))
    if len(data) > need:
        raise StreamFormatError("trailing bytes after last token", need)
    toks = np.frombuffer(data, dtype="<u2", count=count, offset=HEADER.size)
    bad = np.nonzero(toks >= n_bins + 4)[0]
    if len(bad):
        raise StreamFormatError(f"token id {int(toks[bad[0]])} outside vocabulary", HEADER.size + 2 * int(bad[0]))
    return TokenStream(int(n_bins), [int(t) for t in toks])


def write_stream(stream: TokenStream, sink) -> None:
    data = dumps_stream(stream)
    if isinstance(sink, (str, Path)):
        Path(sink).write_bytes(data)
    else:
        sink.write(data)


def read_stream(source) -> TokenStream:
    if isinstance(source, (str, Path)):
        data = Path(source).read_bytes()
    else:
        data = source.read()
    return loads_stream(data)


def dumps_text(stream: TokenStream) -> str:
    lines = [TEXT_HEADER.format(stream.n_bins)]
    lines += [str(t) for t in stream.tokens]
    return "\n".join(lines) + "\n"


def loads_text(text: str) -> TokenStream:
    n_bins = 128
    tokens = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        body, _, comment = line.partition("#")
        m = re.search(r"n_bins=(\d+)", comment)
        if m:
            n_bins = int(m.group(1))
        body = body.strip()
        if not body:
            continue
        try:
            tokens.append(int(body))
        except ValueError:
            raise StreamFormatError(f"line {lineno}: not a token id: {body!r}") from None
    return TokenStream(n_bins, tokens)
