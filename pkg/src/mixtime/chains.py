"""The four example chains, their canonical path schemes and theory bounds.

States are integers used as bitmasks:

* realizations: bit ``i * n' + j`` is set iff ``u_i`` and ``v_j`` are adjacent;
* matchings: bit ``k`` is set iff the k-th edge of the host graph (edges in
  lexicographic ``(row, col)`` order) is matched.

Both encodings are canonical, and the symmetric difference of two states is
their XOR.
"""

from __future__ import annotations

import math
from collections import Counter

from .chain_api import MarkovChain, Proposal
from .errors import (
    NoNearPerfectMatching,
    NoPerfectMatching,
    NotRealizable,
    SchemePathInvalid,
    WeightsNotFinalized,
)
from .instances import BipartiteGraph, DegreeSequencePair, parse_biadjacency


def _bits(x):
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


# --------------------------------------------------------------------------
# switch chains


class _SwitchChain(MarkovChain):
    def __init__(self, pair: DegreeSequencePair):
        self.instance = pair
        self.n = pair.n
        self.n2 = pair.n2
        self._full = (1 << self.n2) - 1
        self._row_pairs = [(i, k) for i in range(self.n) for k in range(i + 1, self.n)]

    def arbitrary_state(self) -> int:
        """Greedy realization: each row takes the columns of largest residual degree."""
        residual = list(self.instance.b)
        state = 0
        for i, d in enumerate(self.instance.a):
            cols = sorted(range(self.n2), key=lambda j: (-residual[j], j))[:d]
            for j in cols:
                if residual[j] == 0:
                    raise NotRealizable(f"{self.instance} has no bipartite realization")
                residual[j] -= 1
                state |= 1 << (i * self.n2 + j)
        if any(residual):
            raise NotRealizable(f"{self.instance} has no bipartite realization")
        return state

    def rows(self, state: int) -> list[int]:
        return [(state >> (i * self.n2)) & self._full for i in range(self.n)]

    def has_edge(self, state: int, i: int, j: int) -> bool:
        return bool(state >> (i * self.n2 + j) & 1)

    def encode(self, state: int) -> str:
        return str(BipartiteGraph(self.n, self.n2, tuple(self.rows(state))))

    def decode(self, text: str) -> int:
        g = parse_biadjacency(text, require_connected=False)
        if (g.n_rows, g.n_cols) != (self.n, self.n2):
            raise ValueError("realization has the wrong shape")
        if g.row_degrees() != list(self.instance.a) or g.col_degrees() != list(self.instance.b):
            raise ValueError("realization does not match the degree sequences")
        return sum(r << (i * self.n2) for i, r in enumerate(g.rows))

    def switches(self, state: int) -> list[int]:
        """Targets of all degree-preserving switches, one per switch.

        For rows ``i < k`` every column ``a`` in ``row_i & ~row_k`` paired
        with a column ``b`` in ``row_k & ~row_i`` is exactly one switch.
        """
        n2 = self.n2
        full = self._full
        out = []
        for i, k in self._row_pairs:
            ri = (state >> (i * n2)) & full
            rk = (state >> (k * n2)) & full
            only_i = ri & ~rk
            only_k = rk & ~ri
            if not only_i or not only_k:
                continue
            si, sk = i * n2, k * n2
            a = only_i
            while a:
                la = a & -a
                a ^= la
                b = only_k
                while b:
                    lb = b & -b
                    b ^= lb
                    x = la | lb
                    out.append(state ^ (x << si) ^ (x << sk))
        return out

    def instance_id(self) -> str:
        return str(self.instance)


class SwitchChainOne(_SwitchChain):
    """Switch chain choosing ``i <= k`` and ``j <= l`` uniformly."""

    kind = "switch1"

    def __init__(self, pair):
        super().__init__(pair)
        self.n_choices = (self.n * (self.n + 1) // 2) * (self.n2 * (self.n2 + 1) // 2)
        self.kappa = 1.0 / self.n_choices

    def neighbours(self, state):
        kappa = self.kappa
        return [Proposal(t, kappa) for t in self.switches(state)]

    def choices(self, state):
        """Literal transcription of the rule: yields the result of every choice."""
        for i in range(self.n):
            for k in range(i, self.n):
                for j in range(self.n2):
                    for l in range(j, self.n2):
                        e1 = self.has_edge(state, i, j)
                        e2 = self.has_edge(state, k, l)
                        f1 = self.has_edge(state, i, l)
                        f2 = self.has_edge(state, k, j)
                        distinct = i != k and j != l
                        if distinct and e1 and e2 and not f1 and not f2:
                            flip = [(i, j), (k, l), (i, l), (k, j)]
                        elif distinct and not e1 and not e2 and f1 and f2:
                            flip = [(i, l), (k, j), (i, j), (k, l)]
                        else:
                            yield state
                            continue
                        t = state
                        for r, c in flip:
                            t ^= 1 << (r * self.n2 + c)
                        yield t


class SwitchChainTwo(_SwitchChain):
    """Switch chain on pairs of non-adjacent edges plus one artificial edge."""

    kind = "switch2"

    def __init__(self, pair):
        super().__init__(pair)
        m = pair.n_edges
        adjacent = sum(d * (d - 1) // 2 for d in pair.a) + sum(d * (d - 1) // 2 for d in pair.b)
        self.n_pairs = (m + 1) * m // 2 - adjacent
        self.kappa = 1.0 / self.n_pairs

    def neighbours(self, state):
        kappa = self.kappa
        return [Proposal(t, kappa) for t in self.switches(state)]

    def choices(self, state):
        """Literal transcription: every unordered non-adjacent pair of E + {u0 v0}."""
        edges = [(i, j) for i in range(self.n) for j in range(self.n2) if self.has_edge(state, i, j)]
        edges.append(None)
        for x in range(len(edges)):
            for y in range(x + 1, len(edges)):
                e1, e2 = edges[x], edges[y]
                if e1 is None or e2 is None:
                    yield state
                    continue
                (i, j), (k, l) = e1, e2
                if i == k or j == l:
                    continue  # adjacent pairs are not choices
                if not self.has_edge(state, i, l) and not self.has_edge(state, k, j):
                    t = state
                    for r, c in ((i, j), (k, l), (i, l), (k, j)):
                        t ^= 1 << (r * self.n2 + c)
                    yield t
                else:
                    yield state


# --------------------------------------------------------------------------
# matching chains


class _MatchingChain(MarkovChain):
    def __init__(self, graph: BipartiteGraph):
        if graph.n_rows != graph.n_cols:
            raise NoNearPerfectMatching("matching chains need |U| = |V|")
        self.instance = graph
        self.n = graph.n_rows
        self.edges = graph.edges
        self.edge_index = {e: k for k, e in enumerate(self.edges)}

    def instance_id(self) -> str:
        return str(self.instance)

    def arbitrary_state(self) -> int:
        """A maximum matching found with augmenting paths."""
        n = self.n
        adj = [[j for j in range(n) if self.instance.has_edge(i, j)] for i in range(n)]
        col_mate = [-1] * n

        def augment(i, seen):
            for j in adj[i]:
                if j in seen:
                    continue
                seen.add(j)
                if col_mate[j] < 0 or augment(col_mate[j], seen):
                    col_mate[j] = i
                    return True
            return False

        for i in range(n):
            augment(i, set())
        size = sum(1 for j in range(n) if col_mate[j] >= 0)
        if size < n - 1:
            raise NoNearPerfectMatching(
                f"maximum matching of {self.instance} has size {size} < {n - 1}"
            )
        return sum(1 << self.edge_index[(col_mate[j], j)] for j in range(n) if col_mate[j] >= 0)

    def mates(self, state: int):
        """Per row and per column, the index of the matched edge (or -1)."""
        row_edge = [-1] * self.n
        col_edge = [-1] * self.n
        for k in _bits(state):
            i, j = self.edges[k]
            row_edge[i] = k
            col_edge[j] = k
        return row_edge, col_edge

    def is_perfect(self, state: int) -> bool:
        return state.bit_count() == self.n

    def holes(self, state: int):
        """Unmatched ``(row, col)`` of a near-perfect matching, else None."""
        if self.is_perfect(state):
            return None
        row_edge, col_edge = self.mates(state)
        return row_edge.index(-1), col_edge.index(-1)

    def encode(self, state: int) -> str:
        return str(BipartiteGraph.from_edges(self.n, self.n, [self.edges[k] for k in _bits(state)]))

    def decode(self, text: str) -> int:
        g = parse_biadjacency(text, require_connected=False)
        state = 0
        for e in g.edges:
            if e not in self.edge_index:
                raise ValueError(f"edge {e} is not in the host graph")
            state |= 1 << self.edge_index[e]
        if any(d > 1 for d in g.row_degrees() + g.col_degrees()) or g.n_edges < self.n - 1:
            raise ValueError("not a perfect or near-perfect matching")
        return state


class MatchingChainOne(_MatchingChain):
    """Edge-choice chain with uniform stationary distribution."""

    kind = "matching1"

    def __init__(self, graph):
        super().__init__(graph)
        self.kappa = 1.0 / len(self.edges)

    def choices(self, state):
        """Result of every edge choice, stays included."""
        if self.is_perfect(state):
            for k in range(len(self.edges)):
                yield state & ~(1 << k) if state >> k & 1 else state
            return
        row_edge, col_edge = self.mates(state)
        hu, hv = row_edge.index(-1), col_edge.index(-1)
        for k, (i, j) in enumerate(self.edges):
            if state >> k & 1:
                yield state
            elif i == hu and j == hv:
                yield state | 1 << k
            elif i == hu:
                yield state ^ (1 << col_edge[j]) | 1 << k
            elif j == hv:
                yield state ^ (1 << row_edge[i]) | 1 << k
            else:
                yield state

    def neighbours(self, state):
        kappa = self.kappa
        return [Proposal(t, kappa) for t in self.choices(state) if t != state]


class MatchingChainTwo(_MatchingChain):
    """Vertex-choice chain with Metropolis weights ``|M| / |N(u, v)|``.

    Weights need the exact counts of perfect and near-perfect matchings, so
    they are only available after :meth:`finalize_weights` has seen the full
    state list.
    """

    kind = "matching2"
    needs_weight_pass = True

    def __init__(self, graph):
        super().__init__(graph)
        self._perfect_count = None
        self._hole_counts = None

    def choices(self, state):
        """Yields ``(target, kappa)`` for every choice, stays included."""
        n = self.n
        if self.is_perfect(state):
            for k in _bits(state):
                yield state & ~(1 << k), 1.0 / n
            return
        kappa = 1.0 / (2 * n)
        row_edge, col_edge = self.mates(state)
        hu, hv = row_edge.index(-1), col_edge.index(-1)
        hole_edge = self.edge_index.get((hu, hv))
        for z in range(n):  # z in U
            if z == hu:
                yield (state | 1 << hole_edge if hole_edge is not None else state), kappa
            elif (z, hv) in self.edge_index:
                yield state ^ (1 << row_edge[z]) | 1 << self.edge_index[(z, hv)], kappa
            else:
                yield state, kappa
        for z in range(n):  # z in V
            if z == hv:
                yield (state | 1 << hole_edge if hole_edge is not None else state), kappa
            elif (hu, z) in self.edge_index:
                yield state ^ (1 << col_edge[z]) | 1 << self.edge_index[(hu, z)], kappa
            else:
                yield state, kappa

    def neighbours(self, state):
        return [Proposal(t, k) for t, k in self.choices(state) if t != state]

    def finalize_weights(self, states) -> None:
        perfect = 0
        holes: Counter = Counter()
        for s in states:
            h = self.holes(s)
            if h is None:
                perfect += 1
            else:
                holes[h] += 1
        if perfect == 0:
            raise NoPerfectMatching(f"{self.instance} has no perfect matching")
        self._perfect_count = perfect
        self._hole_counts = dict(holes)

    @property
    def weights_final(self) -> bool:
        return self._perfect_count is not None

    def weight(self, state) -> float:
        if self._perfect_count is None:
            raise WeightsNotFinalized("matching2 weights need the full state list")
        h = self.holes(state)
        if h is None:
            return 1.0
        return self._perfect_count / self._hole_counts[h]


CHAINS = {
    "matching1": MatchingChainOne,
    "matching2": MatchingChainTwo,
    "switch1": SwitchChainOne,
    "switch2": SwitchChainTwo,
}


def make_chain(kind: str, instance) -> MarkovChain:
    """Build a chain from its kind and an instance object or string."""
    from .instances import parse_biadjacency, parse_degree_pair

    if kind not in CHAINS:
        raise ValueError(f"unknown chain {kind!r}; expected one of {', '.join(CHAINS)}")
    if isinstance(instance, str):
        instance = parse_degree_pair(instance) if kind.startswith("switch") else parse_biadjacency(instance)
    if kind.startswith("switch") and not isinstance(instance, DegreeSequencePair):
        raise TypeError("switch chains take a degree-sequence pair")
    if kind.startswith("matching") and not isinstance(instance, BipartiteGraph):
        raise TypeError("matching chains take a bipartite graph")
    return CHAINS[kind](instance)


# --------------------------------------------------------------------------
# canonical path schemes


class CanonicalScheme:
    """Symmetric-difference unwinding along the chain's own moves.

    From the current state ``z`` the path moves to the neighbour that
    shrinks ``|z xor y|`` the most; ties go to the move touching the lowest
    differing element, then to the smallest state index. Every step strictly
    reduces the difference, so the path is simple. If no reducing move
    exists the remainder is completed by a shortest path (loops spliced
    out); ``fallbacks`` counts how often that happened.
    """

    def __init__(self, name):
        self.name = name
        self.fallbacks = 0
        self._bfs = None

    def __getstate__(self):
        d = self.__dict__.copy()
        d["_bfs"] = None
        return d

    def build_path(self, g, x: int, y: int) -> list[int]:
        from .congestion import bfs_scheme

        if x == y:
            raise SchemePathInvalid(x, y, "paths are only defined for x != y")
        states = g.states
        target = states[y]
        indptr, indices = g.indptr, g.indices
        path = []
        z = x
        visited = [x]
        while z != y:
            cur = (states[z] ^ target).bit_count()
            best = None
            for a in range(indptr[z], indptr[z + 1]):
                w = int(indices[a])
                if w == z or g.prob[a] <= 0:
                    continue
                d = (states[w] ^ target).bit_count()
                if d >= cur:
                    continue
                moved = states[z] ^ states[w]
                key = (d, (moved & -moved).bit_length(), w)
                if best is None or key < best[0]:
                    best = (key, a, w)
            if best is None:
                self.fallbacks += 1
                if self._bfs is None:
                    self._bfs = bfs_scheme()
                rest = self._bfs.build_path(g, z, y)
                path.extend(rest)
                visited.extend(int(indices[a]) for a in rest)
                break
            path.append(best[1])
            z = best[2]
            visited.append(z)
        return _splice(g, path, visited)


def _splice(g, path, visited):
    """Drop cycles so each state appears once."""
    if len(set(visited)) == len(visited):
        return path
    out_arcs: list[int] = []
    out_states = [visited[0]]
    pos = {visited[0]: 0}
    for arc, v in zip(path, visited[1:]):
        if v in pos:
            cut = pos[v]
            for s in out_states[cut + 1:]:
                del pos[s]
            out_states = out_states[: cut + 1]
            out_arcs = out_arcs[:cut]
        else:
            pos[v] = len(out_states)
            out_states.append(v)
            out_arcs.append(arc)
    return out_arcs


def matching_canonical_scheme() -> CanonicalScheme:
    return CanonicalScheme("canonical-matching")


def switch_canonical_scheme() -> CanonicalScheme:
    return CanonicalScheme("canonical-switch")


def canonical_scheme_for(chain: MarkovChain) -> CanonicalScheme:
    if chain.kind.startswith("matching"):
        return matching_canonical_scheme()
    return switch_canonical_scheme()


# --------------------------------------------------------------------------
# closed-form bounds


def broder_bound(n_edges: int, n_near: int, n_perfect: int, omega: int, epsilon: float) -> float:
    """Upper bound on the mixing time of the edge-choice matching chain."""
    return 16 ** 2 * n_edges ** 2 * (n_near / n_perfect) ** 4 * math.log(omega / epsilon)


def greenhill_bound(d_max: int, n_edges: int, epsilon: float):
    """Polynomial switch-chain bound; None unless ``3 <= d_max <= sqrt(|E|)/4``."""
    if not 3 <= d_max <= math.sqrt(n_edges) / 4:
        return None
    return d_max ** 14 * n_edges ** 9 * (n_edges * math.log(n_edges) + math.log(1 / epsilon)) / 10


def matching_counts(chain: _MatchingChain, states) -> tuple[int, int]:
    """(perfect, near-perfect) counts over a state list."""
    perfect = sum(1 for s in states if chain.is_perfect(s))
    return perfect, len(states) - perfect


def theory_bound(chain: MarkovChain, states, epsilon: float):
    """Closed-form bound for the chain when one applies, else None."""
    if chain.kind == "matching1":
        perfect, near = matching_counts(chain, states)
        if perfect == 0:
            return None
        return broder_bound(len(chain.edges), near, perfect, len(states), epsilon)
    if chain.kind == "switch1":
        return greenhill_bound(chain.instance.max_degree, chain.instance.n_edges, epsilon)
    return None
