"""Explicit state graphs: construction by full scan, checks and statistics."""

from __future__ import annotations

import math
from array import array
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from .chain_api import MarkovChain, make_rng
from .errors import NotErgodic, NotUniform, SizeCapExceeded

DEFAULT_BUILD_CAP = 1_000_000
REVERSIBILITY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class StateGraph:
    """Transition structure of a chain on its full state space.

    Arcs are stored in CSR form (``indptr``, ``indices``) with rows sorted by
    target and loops stored explicitly, so ``prob`` holds every nonzero entry
    of P. ``kappa`` is the aggregated proposal probability of each arc (zero
    on loops).
    """

    states: list
    indptr: np.ndarray
    indices: np.ndarray
    kappa: np.ndarray
    prob: np.ndarray
    weights: np.ndarray
    pi: np.ndarray
    chain: MarkovChain | None = None
    loop_shift: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def rows(self) -> np.ndarray:
        """Source index of every stored arc."""
        if "rows" not in self._cache:
            self._cache["rows"] = np.repeat(np.arange(self.n_states), np.diff(self.indptr))
        return self._cache["rows"]

    @property
    def is_loop(self) -> np.ndarray:
        return self.rows == self.indices

    @property
    def n_arcs(self) -> int:
        """Number of non-loop arcs with positive probability."""
        return int(np.count_nonzero(~self.is_loop & (self.prob > 0)))

    def loop_probs(self) -> np.ndarray:
        diag = np.zeros(self.n_states)
        mask = self.is_loop
        diag[self.rows[mask]] = self.prob[mask]
        return diag

    def matrix(self) -> sp.csr_matrix:
        n = self.n_states
        return sp.csr_matrix((self.prob, self.indices, self.indptr), shape=(n, n), copy=True)

    def dense(self, dtype=np.float64) -> np.ndarray:
        return self.matrix().toarray().astype(dtype, copy=False)

    def arc_index(self, u: int, v: int) -> int:
        """Position of arc ``(u, v)`` in the CSR arrays, or -1."""
        lo, hi = self.indptr[u], self.indptr[u + 1]
        pos = lo + int(np.searchsorted(self.indices[lo:hi], v))
        if pos < hi and self.indices[pos] == v:
            return pos
        return -1

    def out_arcs(self, u: int):
        """Non-loop arcs ``(arc index, target)`` leaving ``u`` with positive probability."""
        return [
            (a, int(self.indices[a]))
            for a in range(self.indptr[u], self.indptr[u + 1])
            if self.indices[a] != u and self.prob[a] > 0
        ]

    def adjacency(self) -> sp.csr_matrix:
        """Unweighted non-loop adjacency (positive-probability arcs)."""
        if "adj" not in self._cache:
            keep = ~self.is_loop & (self.prob > 0)
            n = self.n_states
            self._cache["adj"] = sp.csr_matrix(
                (np.ones(int(keep.sum())), (self.rows[keep], self.indices[keep])), shape=(n, n)
            )
        return self._cache["adj"]

    def encode(self, i: int) -> str:
        if self.chain is None:
            return str(self.states[i])
        return self.chain.encode(self.states[i])

    @classmethod
    def from_matrix(cls, P, weights=None, states=None) -> StateGraph:
        """Wrap an explicit transition matrix (dense or sparse)."""
        coo = sp.coo_matrix(P, dtype=np.float64)
        n = coo.shape[0]
        r, c, v = coo.row.astype(np.int64), coo.col.astype(np.int64), coo.data
        missing = np.setdiff1d(np.arange(n), r[r == c])
        # every state gets an explicit loop entry, possibly zero
        r = np.concatenate([r, missing])
        c = np.concatenate([c, missing])
        v = np.concatenate([v, np.zeros(len(missing))])
        order = np.lexsort((c, r))
        r, c, v = r[order], c[order], v[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(r, minlength=n), out=indptr[1:])
        w = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)
        return cls(
            states=list(range(n)) if states is None else list(states),
            indptr=indptr,
            indices=c,
            kappa=np.where(r == c, 0.0, v),
            prob=v.copy(),
            weights=w,
            pi=w / w.sum(),
        )


def build(
    chain: MarkovChain,
    max_states: int = DEFAULT_BUILD_CAP,
    check: bool = True,
) -> StateGraph:
    """Enumerate the state graph of ``chain`` by breadth-first scan.

    States are indexed in discovery order; the new states found while
    expanding one state are appended in their canonical order. For each
    distinct target the proposal probabilities are summed and the
    transition probability is ``kappa * min(1, w(v) / w(u))``; the loop
    probability is the residual of the row.
    """
    start = chain.arbitrary_state()
    index = {start: 0}
    states = [start]
    src = array("q")
    dst = array("q")
    kap = array("d")
    q = 0
    while q < len(states):
        u = states[q]
        acc: dict = {}
        for target, kappa in chain.neighbours(u):
            if target != u:
                acc[target] = acc.get(target, 0.0) + kappa
        fresh = sorted(t for t in acc if t not in index)
        if len(states) + len(fresh) > max_states:
            raise SizeCapExceeded(len(states) + len(fresh), max_states)
        for t in fresh:
            index[t] = len(states)
            states.append(t)
        for t, k in acc.items():
            src.append(q)
            dst.append(index[t])
            kap.append(k)
        q += 1

    n = len(states)
    if chain.needs_weight_pass:
        chain.finalize_weights(states)
    weights = np.fromiter((chain.weight(s) for s in states), dtype=np.float64, count=n)

    src_a = np.frombuffer(src, dtype=np.int64)
    dst_a = np.frombuffer(dst, dtype=np.int64)
    kap_a = np.frombuffer(kap, dtype=np.float64)
    prob_a = kap_a * np.minimum(1.0, weights[dst_a] / weights[src_a])
    loop = 1.0 - np.bincount(src_a, weights=prob_a, minlength=n)
    loop = np.maximum(loop, 0.0)

    all_src = np.concatenate([src_a, np.arange(n)])
    all_dst = np.concatenate([dst_a, np.arange(n)])
    order = np.lexsort((all_dst, all_src))
    indices = all_dst[order]
    kappa = np.concatenate([kap_a, np.zeros(n)])[order]
    prob = np.concatenate([prob_a, loop])[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(all_src, minlength=n), out=indptr[1:])

    g = StateGraph(
        states=states,
        indptr=indptr,
        indices=indices,
        kappa=kappa,
        prob=prob,
        weights=weights,
        pi=weights / weights.sum(),
        chain=chain,
    )
    if check:
        report = check_ergodic(g)
        if not report.ok:
            raise NotErgodic(report.violations)
    return g


@dataclass
class ErgodicityReport:
    connected: bool
    aperiodic: bool
    reversible: bool
    period: int
    max_balance_error: float
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def check_ergodic(g: StateGraph, tol: float = REVERSIBILITY_TOL) -> ErgodicityReport:
    """Check connectivity, aperiodicity and detailed balance."""
    n = g.n_states
    violations = []
    P = g.matrix()
    P.eliminate_zeros()
    n_comp, _ = csgraph.connected_components(P, directed=True, connection="strong")
    connected = n_comp == 1
    if not connected:
        violations.append(f"not strongly connected ({n_comp} components)")

    period = _period(g) if connected else 0
    aperiodic = period == 1
    if connected and not aperiodic:
        violations.append(f"periodic with period {period}")

    F = sp.diags(g.pi) @ P
    diff = abs(F - F.T)
    err = float(diff.max()) if diff.nnz else 0.0
    reversible = err <= tol
    if not reversible:
        violations.append(f"not reversible (max |pi(x)P(x,y) - pi(y)P(y,x)| = {err:.3e})")
    return ErgodicityReport(connected, aperiodic, reversible, period, err, violations)


def _period(g: StateGraph) -> int:
    """Period of a strongly connected graph via BFS levels."""
    if np.any(g.loop_probs() > 0):
        return 1
    n = g.n_states
    if n == 1:
        return 1
    adj = g.adjacency()
    levels = csgraph.shortest_path(adj, unweighted=True, indices=0)
    src, dst = adj.nonzero()
    d = 0
    for s, t in zip(levels[src], levels[dst]):
        d = math.gcd(d, int(s + 1 - t))
        if d == 1:
            break
    return abs(d) if d else 1


def loop_reduce(g: StateGraph, fraction: float = 0.99) -> StateGraph:
    """Remove ``fraction`` of the smallest loop probability from every loop.

    With ``c = fraction * min_i P(i, i)`` the new matrix is
    ``(P - c I) / (1 - c)``: off-diagonal entries are scaled by ``1/(1-c)``
    and rows still sum to one. Requires a uniform stationary distribution.
    The returned graph records ``c`` in ``loop_shift``.
    """
    if not 0 <= fraction < 1:
        raise ValueError("fraction must lie in [0, 1)")
    if not np.allclose(g.pi, g.pi[0], rtol=0, atol=1e-15):
        raise NotUniform("loop reduction needs a uniform stationary distribution")
    loops = g.loop_probs()
    c = fraction * float(loops.min())
    if c == 0.0:
        return g
    loop = g.is_loop
    prob = np.where(loop, (g.prob - c) / (1.0 - c), g.prob / (1.0 - c))
    return replace(g, prob=prob, loop_shift=c, _cache={})


@dataclass
class GraphStats:
    n_states: int
    n_arcs: int
    diameter: int | None
    avg_path_length: float | None
    avg_degree: float
    avg_loop_prob: float
    pi_min: float


def graph_stats(g: StateGraph, max_states_for_paths: int = 20_000, chunk: int = 256) -> GraphStats:
    """Structural statistics; distances use unweighted BFS on non-loop arcs.

    Diameter and average path length need one BFS per state and are left
    as None above ``max_states_for_paths``.
    """
    n = g.n_states
    n_arcs = g.n_arcs
    diameter = None
    avg_len = None
    if n == 1:
        diameter, avg_len = 0, 0.0
    elif n <= max_states_for_paths:
        adj = g.adjacency()
        diameter = 0
        total = 0.0
        for lo in range(0, n, chunk):
            d = csgraph.shortest_path(adj, unweighted=True, indices=np.arange(lo, min(n, lo + chunk)))
            if np.isinf(d).any():
                raise NotErgodic(["state graph is not connected"])
            diameter = max(diameter, int(d.max()))
            total += float(d.sum())
        avg_len = total / (n * (n - 1))
    return GraphStats(
        n_states=n,
        n_arcs=n_arcs,
        diameter=diameter,
        avg_path_length=avg_len,
        avg_degree=n_arcs / n,
        avg_loop_prob=float(g.loop_probs().mean()),
        pi_min=float(g.pi.min()),
    )


def walk_many(g: StateGraph, start: int, t: int, n_walks: int, seed=None) -> np.ndarray:
    """Final state indices of ``n_walks`` independent walks on the built graph."""
    rng = make_rng(seed)
    n = g.n_states
    cum = np.empty_like(g.prob)
    for u in range(n):
        lo, hi = g.indptr[u], g.indptr[u + 1]
        cum[lo:hi] = np.cumsum(g.prob[lo:hi])
        cum[hi - 1] = 1.0
    # row u's cumulative values live in (u, u + 1]
    key = cum + g.rows
    pos = np.full(n_walks, start, dtype=np.int64)
    for _ in range(t):
        r = rng.random(n_walks)
        arc = np.searchsorted(key, pos + r, side="right")
        pos = g.indices[np.minimum(arc, g.indptr[pos + 1] - 1)]
    return pos


def export(g: StateGraph, edges_path, states_path) -> None:
    """Write ``src dst kappa prob`` lines and an index -> encoding table."""
    with Path(edges_path).open("w", newline="\n") as fh:
        for a in range(len(g.indices)):
            fh.write(f"{g.rows[a]} {g.indices[a]} {g.kappa[a]:.17g} {g.prob[a]:.17g}\n")
    with Path(states_path).open("w", newline="\n") as fh:
        for i in range(g.n_states):
            fh.write(f"{i} {g.encode(i)}\n")
