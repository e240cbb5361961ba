"""Problem instances: degree-sequence pairs and bipartite graphs.

Text encodings
--------------
* degree-sequence pair: ``"a1,a2,...;b1,b2,..."`` (decimal, comma separated,
  semicolon between the two sides). Entries are sorted non-increasing on
  parse.
* bipartite graph: biadjacency bit rows ``"110;011;101"``; row ``i`` lists
  the neighbours of ``u_i`` among ``v_1..v_n'``.

Graph files additionally accept graph6 and sparse6 lines, as written by
nauty's ``genbg``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from .errors import NotConnected, NotRealizable, ParseError

_PAIR_RE = re.compile(r"^\s*\d+(\s*,\s*\d+)*\s*;\s*\d+(\s*,\s*\d+)*\s*$")


@dataclass(frozen=True, order=True)
class DegreeSequencePair:
    a: tuple[int, ...]
    b: tuple[int, ...]

    def __post_init__(self):
        if not self.a or not self.b:
            raise NotRealizable("both sides need at least one vertex")
        if any(x <= 0 for x in self.a + self.b):
            raise NotRealizable("degrees must be positive")
        if list(self.a) != sorted(self.a, reverse=True) or list(self.b) != sorted(self.b, reverse=True):
            raise NotRealizable("degree sequences must be non-increasing")
        if not gale_ryser(self.a, self.b):
            raise NotRealizable(f"{self} has no bipartite realization")

    @property
    def n(self) -> int:
        return len(self.a)

    @property
    def n2(self) -> int:
        return len(self.b)

    @property
    def n_edges(self) -> int:
        return sum(self.a)

    @property
    def max_degree(self) -> int:
        return max(self.a[0], self.b[0])

    def __str__(self):
        return ",".join(map(str, self.a)) + ";" + ",".join(map(str, self.b))


@dataclass(frozen=True)
class BipartiteGraph:
    """Bipartite graph stored as one column bitmask per row vertex."""

    n_rows: int
    n_cols: int
    rows: tuple[int, ...]

    def __post_init__(self):
        if len(self.rows) != self.n_rows:
            raise ValueError("row count mismatch")
        full = (1 << self.n_cols) - 1
        if any(r & ~full for r in self.rows):
            raise ValueError("row mask wider than column count")

    @classmethod
    def from_edges(cls, n_rows, n_cols, edges) -> BipartiteGraph:
        rows = [0] * n_rows
        for i, j in edges:
            rows[i] |= 1 << j
        return cls(n_rows, n_cols, tuple(rows))

    def has_edge(self, i, j) -> bool:
        return bool(self.rows[i] >> j & 1)

    @property
    def edges(self) -> list[tuple[int, int]]:
        """Edges ``(row, col)`` in lexicographic order."""
        return [(i, j) for i in range(self.n_rows) for j in range(self.n_cols) if self.rows[i] >> j & 1]

    @property
    def n_edges(self) -> int:
        return sum(r.bit_count() for r in self.rows)

    def row_degrees(self) -> list[int]:
        return [r.bit_count() for r in self.rows]

    def col_degrees(self) -> list[int]:
        return [sum(r >> j & 1 for r in self.rows) for j in range(self.n_cols)]

    def is_connected(self) -> bool:
        if self.n_rows + self.n_cols == 0:
            return True
        seen_rows = {0} if self.n_rows else set()
        seen_cols: set[int] = set() if self.n_rows else {0}
        stack = [("u", 0)] if self.n_rows else [("v", 0)]
        while stack:
            side, x = stack.pop()
            if side == "u":
                for j in range(self.n_cols):
                    if self.rows[x] >> j & 1 and j not in seen_cols:
                        seen_cols.add(j)
                        stack.append(("v", j))
            else:
                for i in range(self.n_rows):
                    if self.rows[i] >> x & 1 and i not in seen_rows:
                        seen_rows.add(i)
                        stack.append(("u", i))
        return len(seen_rows) == self.n_rows and len(seen_cols) == self.n_cols

    def __str__(self):
        return ";".join(
            "".join("1" if r >> j & 1 else "0" for j in range(self.n_cols)) for r in self.rows
        )


def gale_ryser(a, b) -> bool:
    """Whether the pair ``(a, b)`` has a simple bipartite realization.

    Dominance of ``a`` (sorted non-increasing) by the conjugate of ``b``.
    """
    a = sorted(a, reverse=True)
    if any(x < 0 for x in a) or any(x < 0 for x in b):
        return False
    if sum(a) != sum(b):
        return False
    if a and a[0] > len(b):
        return False
    partial_a = partial_conj = 0
    for k in range(len(a)):
        partial_a += a[k]
        partial_conj += sum(1 for x in b if x > k)
        if partial_a > partial_conj:
            return False
    return True


def parse_degree_pair(text: str) -> DegreeSequencePair:
    if not _PAIR_RE.match(text):
        pos = _first_bad_position(text, set("0123456789,; \t"))
        raise ParseError("expected 'a1,a2,...;b1,b2,...'", position=pos)
    left, right = text.split(";")
    a = tuple(sorted((int(x) for x in left.split(",")), reverse=True))
    b = tuple(sorted((int(x) for x in right.split(",")), reverse=True))
    if sum(a) != sum(b):
        raise NotRealizable(f"degree sums differ ({sum(a)} != {sum(b)})")
    return DegreeSequencePair(a, b)


def parse_biadjacency(text: str, require_connected: bool = True) -> BipartiteGraph:
    text = text.strip()
    if not text:
        raise ParseError("empty biadjacency string", position=0)
    pos = _first_bad_position(text, set("01;"))
    if pos is not None:
        raise ParseError(f"unexpected character {text[pos]!r}", position=pos)
    parts = text.split(";")
    width = len(parts[0])
    offset = 0
    for p in parts:
        if len(p) != width or not p:
            raise ParseError(f"row length {len(p)} differs from {width}", position=offset)
        offset += len(p) + 1
    rows = tuple(sum(1 << j for j, ch in enumerate(p) if ch == "1") for p in parts)
    g = BipartiteGraph(len(parts), width, rows)
    if require_connected and not g.is_connected():
        raise NotConnected(f"graph {g} is not connected")
    return g


def parse_instance(text: str):
    """Parse either encoding; a comma or any digit above 1 marks a degree pair."""
    stripped = text.strip()
    if "," not in stripped and set(stripped) <= set("01;"):
        return parse_biadjacency(stripped)
    return parse_degree_pair(stripped)


def _first_bad_position(text, allowed):
    for i, ch in enumerate(text):
        if ch not in allowed:
            return i
    return None


def format_instance(instance) -> str:
    return str(instance)


# --------------------------------------------------------------------------
# enumeration


def _nonincreasing(total, max_part, length):
    """Non-increasing positive sequences of exactly ``length`` parts."""
    if length == 0:
        if total == 0:
            yield ()
        return
    lo = -(-total // length)
    for first in range(min(total - (length - 1), max_part), lo - 1, -1):
        for rest in _nonincreasing(total - first, first, length - 1):
            yield (first,) + rest


def enumerate_pairs(max_n: int, max_n2: int) -> Iterator[DegreeSequencePair]:
    """All realizable pairs with ``|a| <= max_n`` and ``|b| <= max_n2``.

    Pairs are ordered (``(a, b)`` and ``(b, a)`` both appear when both fit),
    entries strictly positive, and the stream is strictly increasing in
    ``(a, b)`` tuple order.
    """
    firsts = []
    for length in range(1, max_n + 1):
        for total in range(length, length * max_n2 + 1):
            firsts.extend(_nonincreasing(total, max_n2, length))
    firsts.sort()
    seconds_by_sum: dict[int, list[tuple[int, ...]]] = {}
    for length in range(1, max_n2 + 1):
        for total in range(length, length * max_n + 1):
            seconds_by_sum.setdefault(total, []).extend(_nonincreasing(total, max_n, length))
    for lst in seconds_by_sum.values():
        lst.sort()
    for a in firsts:
        for b in seconds_by_sum.get(sum(a), ()):
            if b[0] <= len(a) and gale_ryser(a, b):
                yield DegreeSequencePair(a, b)


def enumerate_bipartite_graphs(n: int, n2: int | None = None, connected: bool = True) -> list[BipartiteGraph]:
    """Bipartite graphs on ``n + n2`` vertices up to isomorphism (small n only).

    The canonical form of a graph is the lexicographically smallest sorted
    row tuple over all column permutations; rows are free to permute, so
    sorting them is optimal for a fixed column order.
    """
    n2 = n if n2 is None else n2
    if n * n2 > 25:
        raise ValueError("brute-force enumeration is limited to n * n2 <= 25")
    perms = list(itertools.permutations(range(n2)))
    seen: set[tuple[int, ...]] = set()
    out = []
    for rows in itertools.combinations_with_replacement(range(1 << n2), n):
        best = None
        for p in perms:
            key = tuple(sorted(sum(1 << p[j] for j in range(n2) if r >> j & 1) for r in rows))
            if best is None or key < best:
                best = key
        if best in seen:
            continue
        seen.add(best)
        g = BipartiteGraph(n, n2, best)
        if connected and not g.is_connected():
            continue
        out.append(g)
    out.sort(key=lambda g: (g.n_edges, g.rows))
    return out


# --------------------------------------------------------------------------
# scaling families

_FAMILIES = {
    "A": lambda n: (n - 1, n - 2, 2, 1),
    "B": lambda n: (n - 1, n - 2, 3),
    "C": lambda n: (n - 1, n - 2, 1, 1, 1),
}


def scaling_family(family: str, n: int) -> DegreeSequencePair:
    """Half-regular pattern ``(n-1, n-2, ...); (2, ..., 2)`` with ``n`` twos."""
    family = family.upper()
    if family not in _FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of A, B, C")
    if n < 4:
        raise ValueError("scaling families need n >= 4")
    a = tuple(sorted(_FAMILIES[family](n), reverse=True))
    return DegreeSequencePair(a, (2,) * n)


# --------------------------------------------------------------------------
# graph files


def _sixbits(data: str, start: int):
    for ch in data[start:]:
        v = ord(ch) - 63
        if not 0 <= v < 64:
            raise ValueError(f"invalid character {ch!r}")
        for shift in range(5, -1, -1):
            yield v >> shift & 1


def _decode_n(data: str):
    """Decode the N(n) header; returns (n, offset of the payload)."""
    if not data:
        raise ValueError("empty")
    first = ord(data[0]) - 63
    if first < 63:
        return first, 1
    if len(data) > 1 and ord(data[1]) - 63 == 63:
        if len(data) < 8:
            raise ValueError("truncated size field")
        n = 0
        for ch in data[2:8]:
            n = (n << 6) | (ord(ch) - 63)
        return n, 8
    if len(data) < 4:
        raise ValueError("truncated size field")
    n = 0
    for ch in data[1:4]:
        n = (n << 6) | (ord(ch) - 63)
    return n, 4


def decode_graph6(line: str) -> tuple[int, list[tuple[int, int]]]:
    n, off = _decode_n(line)
    need = n * (n - 1) // 2
    bits = list(itertools.islice(_sixbits(line, off), need))
    if len(bits) < need:
        raise ValueError("graph6 payload too short")
    if len(line) - off != -(-need // 6):
        raise ValueError("graph6 payload length mismatch")
    edges = []
    k = 0
    for j in range(1, n):
        for i in range(j):
            if bits[k]:
                edges.append((i, j))
            k += 1
    return n, edges


def decode_sparse6(line: str) -> tuple[int, list[tuple[int, int]]]:
    if not line.startswith(":"):
        raise ValueError("sparse6 lines start with ':'")
    n, off = _decode_n(line[1:])
    bits = list(_sixbits(line, off + 1))
    k = (n - 1).bit_length() if n > 1 else 1
    edges = []
    v = 0
    pos = 0
    while pos + 1 + k <= len(bits):
        b = bits[pos]
        x = 0
        for t in range(k):
            x = (x << 1) | bits[pos + 1 + t]
        pos += 1 + k
        if b:
            v += 1
        if v >= n:
            break
        if x > v:
            v = x
        elif x < n:
            edges.append((x, v))
    return n, edges


def _bipartite_from_simple(n: int, edges) -> BipartiteGraph:
    """Split a connected simple graph into sides; vertex 0 lands in U."""
    adj: list[list[int]] = [[] for _ in range(n)]
    for x, y in edges:
        if x == y:
            raise ValueError("self-loop in bipartite input")
        adj[x].append(y)
        adj[y].append(x)
    colour = [-1] * n
    for s in range(n):
        if colour[s] >= 0:
            continue
        colour[s] = 0
        stack = [s]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if colour[y] < 0:
                    colour[y] = 1 - colour[x]
                    stack.append(y)
                elif colour[y] == colour[x]:
                    raise ValueError("graph is not bipartite")
    left = [v for v in range(n) if colour[v] == 0]
    right = [v for v in range(n) if colour[v] == 1]
    li = {v: i for i, v in enumerate(left)}
    ri = {v: j for j, v in enumerate(right)}
    bi_edges = set()
    for x, y in edges:
        if colour[x] == 1:
            x, y = y, x
        bi_edges.add((li[x], ri[y]))
    return BipartiteGraph.from_edges(len(left), len(right), sorted(bi_edges))


def parse_graph_line(line: str, require_connected: bool = True) -> BipartiteGraph:
    line = line.strip()
    if set(line) <= set("01;"):
        return parse_biadjacency(line, require_connected)
    try:
        if line.startswith(":"):
            n, edges = decode_sparse6(line)
        else:
            n, edges = decode_graph6(line)
        g = _bipartite_from_simple(n, edges)
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    if require_connected and not g.is_connected():
        raise NotConnected(f"graph {g} is not connected")
    return g


def read_graph_file(path, require_connected: bool = True) -> Iterator[BipartiteGraph]:
    """Stream bipartite graphs from a file, one encoding per line.

    Blank lines, ``#`` comments and ``>>graph6<<`` / ``>>sparse6<<`` headers
    are skipped.
    """
    with Path(path).open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            for header in (">>graph6<<", ">>sparse6<<"):
                if line.startswith(header):
                    line = line[len(header):]
            if not line or line.startswith("#"):
                continue
            try:
                yield parse_graph_line(line, require_connected)
            except ParseError as exc:
                raise ParseError(exc.reason, position=exc.position, line=lineno) from None
