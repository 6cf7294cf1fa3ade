"""Incremental, geometry-aware decoding of token streams.

A :class:`DecoderState` consumes one token at a time, exposes the exact set
of tokens that can legally come next, and applies every completed vertex
split immediately, so the mesh it holds is valid at every group boundary.
"""

from __future__ import annotations

import enum
import random
from collections import Counter, defaultdict
from dataclasses import dataclass

import numpy as np

from .codec import TokenStream, Vocabulary
from .errors import MeshError, RejectedTokenError
from .halfedge import HalfEdgeMesh, validate_manifold
from .progressive import VSplitRecord, vsplit_apply


class Phase(enum.Enum):
    BOS = "expect-bos"
    M0 = "base-mesh"
    VSPLIT = "vertex-split"
    DONE = "done"


@dataclass
class Snapshot:
    mesh: HalfEdgeMesh
    level: int  # records applied so far
    stale: bool  # a partial group is buffered and not yet reflected
    in_base: bool  # still inside the base-mesh section

    @property
    def empty(self) -> bool:
        return self.mesh.n_faces == 0


class _CoordTrie:
    """x -> y -> {z} over the current vertex coordinates, with prefix counts."""

    def __init__(self):
        self.tree: dict[int, dict[int, set[int]]] = defaultdict(lambda: defaultdict(set))
        self.per_x: Counter = Counter()

    def add(self, c):
        self.tree[c[0]][c[1]].add(c[2])
        self.per_x[c[0]] += 1

    def copy(self):
        t = _CoordTrie()
        for x, ys in self.tree.items():
            for y, zs in ys.items():
                if zs:
                    t.tree[x][y] = set(zs)
        t.per_x = Counter(self.per_x)
        return t

    def completions(self, prefix):
        p = len(prefix)
        if p == 0:
            return {x for x, n in self.per_x.items() if n}
        ys = self.tree.get(prefix[0], {})
        if p == 1:
            return {y for y, zs in ys.items() if zs}
        return set(ys.get(prefix[1], ()))


def _open_tokens(n_bins, prefix, bad):
    """Next coordinate tokens under ``prefix`` that leave some completion outside ``bad``."""
    p = len(prefix)
    cap = n_bins ** (2 - p)
    prefix = tuple(prefix)
    hits = Counter(c[p] for c in bad if c[:p] == prefix)
    return {x for x in range(n_bins) if hits.get(x, 0) < cap}


class DecoderState:
    def __init__(self, n_bins: int = 128):
        self.vocab = Vocabulary(n_bins)
        self.mesh = HalfEdgeMesh()
        self.phase = Phase.BOS
        self.buffer: list[int] = []
        self.level = 0
        self.n_tokens = 0
        self.last_event: str | None = None
        self._trie = _CoordTrie()
        self._sep_cache: tuple[int, bool] | None = None

    @property
    def n_bins(self) -> int:
        return self.vocab.n_bins

    @property
    def done(self) -> bool:
        return self.phase is Phase.DONE

    @property
    def at_boundary(self) -> bool:
        return not self.buffer

    def copy(self) -> "DecoderState":
        st = DecoderState.__new__(DecoderState)
        st.vocab = self.vocab
        st.mesh = self.mesh.copy()
        st.phase = self.phase
        st.buffer = list(self.buffer)
        st.level = self.level
        st.n_tokens = self.n_tokens
        st.last_event = self.last_event
        st._trie = self._trie.copy()
        st._sep_cache = self._sep_cache
        return st

    # -- legality ----------------------------------------------------------

    def _sep_legal(self) -> bool:
        nf = self.mesh.n_faces
        if nf == 0:
            return False
        if self._sep_cache is None or self._sep_cache[0] != nf:
            self._sep_cache = (nf, validate_manifold(self.mesh).ok)
        return self._sep_cache[1]

    def _face_bad_set(self, slot):
        """Coordinates that may not fill vertex ``slot`` (1 or 2) of the pending face."""
        m = self.mesh
        c1 = tuple(self.buffer[0:3])
        v1 = m.find_vertex(c1)
        if slot == 1:
            bad = {c1}
            if v1 is not None:
                bad |= {m.position(m.dest(h)) for h in m.outgoing(v1)}
            return bad
        c2 = tuple(self.buffer[3:6])
        v2 = m.find_vertex(c2)
        bad = {c1, c2}
        if v2 is not None:
            bad |= {m.position(m.dest(h)) for h in m.outgoing(v2)}
        if v1 is not None:
            bad |= {m.position(m.origin(m.prev(h))) for h in m.outgoing(v1)}
            if v2 is not None:
                h = m.halfedge(v2, v1)
                if h is not None:
                    bad.add(m.position(m.dest(m.next(h))))
        return bad

    def _parse_record(self):
        """(field being filled, its prefix, fields completed so far)."""
        b = self.buffer
        nil = self.vocab.nil
        if len(b) < 3:
            return "s", b, {}
        got = {"s": tuple(b[:3])}
        i = 3
        for name in ("l", "r"):
            if i >= len(b):
                return name, [], got
            if b[i] == nil:
                got[name] = None
                i += 1
                continue
            if len(b) - i < 3:
                return name, b[i:], got
            got[name] = tuple(b[i : i + 3])
            i += 3
        return "t", b[i:], got

    def _ring_coords(self, s_coord, exclude=None):
        m = self.mesh
        s = m.find_vertex(s_coord)
        coords = [m.position(w) for w in m.neighbors(s)]
        return [c for c in coords if c != exclude], m.is_boundary_vertex(s)

    def allowed_tokens(self) -> set[int]:
        voc = self.vocab
        n = voc.n_bins
        if self.phase is Phase.BOS:
            return {voc.bos}
        if self.phase is Phase.DONE:
            return set()
        if self.phase is Phase.M0:
            slot, k = divmod(len(self.buffer), 3)
            prefix = self.buffer[3 * slot :]
            if slot == 0:
                out = set(range(n))
                if k == 0 and self._sep_legal():
                    out.add(voc.sep)
                return out
            return _open_tokens(n, prefix, self._face_bad_set(slot))

        name, prefix, got = self._parse_record()
        p = len(prefix)
        if name == "s":
            out = self._trie.completions(prefix)
            if p == 0 and not self.buffer:
                out.add(voc.eos)
            return out
        if name in ("l", "r"):
            ring, on_border = self._ring_coords(got["s"], exclude=got.get("l"))
            out = {c[p] for c in ring if tuple(c[:p]) == tuple(prefix)}
            if p == 0 and on_border and (name == "l" or got["l"] is not None):
                out.add(voc.nil)
            return out
        # v_t: any free grid point
        tree = self._trie.tree
        if p == 0:
            full = {x for x, c in self._trie.per_x.items() if c >= n * n}
        elif p == 1:
            full = {y for y, zs in tree.get(prefix[0], {}).items() if len(zs) >= n}
        else:
            full = tree.get(prefix[0], {}).get(prefix[1], set())
        return set(range(n)) - full

    def mask(self) -> np.ndarray:
        """Allowed set as a boolean vector over the vocabulary."""
        m = np.zeros(self.vocab.size, dtype=bool)
        idx = list(self.allowed_tokens())
        m[idx] = True
        return m

    def _explain(self, tok) -> str:
        voc = self.vocab
        if self.phase is Phase.BOS:
            return "stream must start with <bos>"
        if self.phase is Phase.DONE:
            return "stream already ended with <eos>"
        if self.phase is Phase.M0:
            if tok == voc.sep:
                return "<sep> needs a complete, non-empty manifold base mesh"
            if tok == voc.eos:
                return "<eos> is only legal after <sep>"
            if not voc.is_coord(tok):
                return f"{voc.name(tok)} cannot appear inside the base mesh"
            return "face would be degenerate, duplicated, or break edge-manifoldness/orientation"
        name, prefix, got = self._parse_record()
        if tok == voc.eos:
            return "<eos> is only legal at a record boundary"
        if tok == voc.nil:
            if name == "r" and got.get("l") is None:
                return "only one of v_l and v_r may be <nil>"
            if name in ("l", "r"):
                return "<nil> needs v_s on the boundary"
            return "<nil> only stands for a whole v_l or v_r"
        if not voc.is_coord(tok):
            return f"{voc.name(tok)} cannot appear inside a record"
        return {
            "s": "v_s must be a vertex of the current mesh",
            "l": "(v_s, v_l) must be an edge of the current mesh",
            "r": "(v_s, v_r) must be an edge of the current mesh distinct from v_l",
            "t": "v_t must not coincide with an existing vertex",
        }[name]

    # -- transitions -------------------------------------------------------

    def step(self, tok: int) -> str | None:
        """Consume ``tok``; return the kind of group it completed, if any."""
        tok = int(tok)
        if tok not in self.allowed_tokens():
            raise RejectedTokenError(tok, self._explain(tok), self.n_tokens)
        voc = self.vocab
        self.n_tokens += 1
        event = None
        if self.phase is Phase.BOS:
            self.phase = Phase.M0
            event = "bos"
        elif self.phase is Phase.M0:
            if tok == voc.sep:
                self.phase = Phase.VSPLIT
                event = "sep"
            else:
                self.buffer.append(tok)
                if len(self.buffer) == 9:
                    self._add_base_face()
                    event = "face"
        elif tok == voc.eos:
            self.phase = Phase.DONE
            event = "eos"
        else:
            self.buffer.append(tok)
            name, prefix, got = self._parse_record()
            if name == "t" and len(prefix) == 3:
                self._apply_record(got, tuple(prefix))
                event = "record"
        self.last_event = event
        return event

    def _vertex(self, c):
        v = self.mesh.find_vertex(c)
        if v is None:
            v = self.mesh.add_vertex(c)
            self._trie.add(c)
        return v

    def _add_base_face(self):
        b = self.buffer
        coords = [tuple(b[i : i + 3]) for i in (0, 3, 6)]
        ids = [self._vertex(c) for c in coords]
        self.mesh.add_face(*ids)
        self.buffer = []

    def _apply_record(self, got, t):
        rec = VSplitRecord(got["s"], got["l"], got["r"], t)
        vsplit_apply(self.mesh, rec)
        self._trie.add(t)
        self.level += 1
        self.buffer = []

    def current_mesh(self) -> Snapshot:
        return Snapshot(self.mesh.copy(), self.level, bool(self.buffer), self.phase in (Phase.BOS, Phase.M0))


def decode_stream(stream: TokenStream, on_boundary=None) -> DecoderState:
    """Feed a whole stream through a fresh state.

    ``on_boundary(state, event)`` is called after every completed group.
    """
    state = DecoderState(stream.n_bins)
    for tok in stream.tokens:
        event = state.step(tok)
        if event is not None and on_boundary is not None:
            on_boundary(state, event)
    return state


def check_stream(stream: TokenStream) -> tuple[bool, str]:
    """Whether ``stream`` decodes completely; the reason when it does not."""
    try:
        state = decode_stream(stream)
    except MeshError as exc:
        return False, str(exc)
    if not state.done:
        return False, "stream ended before <eos>"
    return True, "ok"


def _sample_face(state: DecoderState, rng: random.Random, attempts: int = 64):
    for _ in range(attempts):
        trial = state.copy()
        toks = []
        for _ in range(9):
            allowed = trial.allowed_tokens() - {trial.vocab.sep}
            tok = rng.choice(sorted(allowed))
            trial.step(tok)
            toks.append(tok)
        if validate_manifold(trial.mesh).ok:
            return trial, toks
    raise RuntimeError("could not extend the base mesh without breaking it")


def sample_sequence(
    seed: int,
    max_tokens: int = 512,
    stop_probability: float = 0.1,
    n_bins: int = 128,
    masked: bool = True,
) -> TokenStream:
    """Random stream drawn token by token from the legal set.

    ``max_tokens`` bounds the tokens after ``<bos>``. The sampler ends the
    base mesh / the stream with probability ``stop_probability`` at each
    boundary where ``<sep>`` / ``<eos>`` is legal, and whenever the budget
    could not fit another group. Base-mesh faces are resampled if they would
    leave the base mesh non-manifold, so ``<sep>`` always stays reachable.
    With ``masked=False`` tokens come uniformly from the whole vocabulary
    and sampling stops at the first rejected token.
    """
    if max_tokens < 11:
        raise ValueError("max_tokens must be at least 11")
    rng = random.Random(seed)
    state = DecoderState(n_bins)
    voc = state.vocab
    out = [voc.bos]
    state.step(voc.bos)

    if not masked:
        while len(out) - 1 < max_tokens and not state.done:
            tok = rng.randrange(voc.size)
            out.append(tok)
            try:
                state.step(tok)
            except MeshError:
                break
        return TokenStream(n_bins, out)

    def left():
        return max_tokens - (len(out) - 1)

    while True:
        if state.mesh.n_faces and state._sep_legal() and (left() < 9 + 2 or rng.random() < stop_probability):
            state.step(voc.sep)
            out.append(voc.sep)
            break
        state, toks = _sample_face(state, rng)
        out += toks

    while True:
        if left() < 12 + 1 or rng.random() < stop_probability:
            state.step(voc.eos)
            out.append(voc.eos)
            break
        while True:
            allowed = state.allowed_tokens() - {voc.eos}
            tok = rng.choice(sorted(allowed))
            out.append(tok)
            if state.step(tok) == "record":
                break
    return TokenStream(n_bins, out)
