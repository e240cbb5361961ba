"""Canonical-path congestion bound with pluggable path schemes."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import csgraph

from .errors import SchemePathInvalid, Unreachable
from .state_graph import StateGraph

SOURCE_CHUNK = 32


class PathScheme:
    """One simple path per ordered pair of distinct states.

    ``build_path`` returns the path as a list of arc positions (indices into
    the graph's CSR arrays) and must be a pure function of its arguments.
    """

    name = "abstract"

    def build_path(self, g: StateGraph, x: int, y: int) -> list[int]:
        raise NotImplementedError


class BFSScheme(PathScheme):
    """Shortest paths on non-loop arcs; each hop takes the smallest-index state
    that is one step closer to the target."""

    name = "bfs"

    def build_path(self, g, x, y):
        if x == y:
            raise SchemePathInvalid(x, y, "paths are only defined for x != y")
        dist = _distances_to(g, y)
        if not np.isfinite(dist[x]):
            raise Unreachable(f"state {y} is unreachable from {x}")
        path = []
        z = x
        while z != y:
            want = dist[z] - 1
            for a in range(g.indptr[z], g.indptr[z + 1]):
                w = g.indices[a]
                if w != z and g.prob[a] > 0 and dist[w] == want:
                    path.append(a)
                    z = int(w)
                    break
        return path


def _distances_to(g: StateGraph, y: int) -> np.ndarray:
    cache = g._cache.setdefault("dist_to", {})
    if y not in cache:
        if len(cache) > 4096:
            cache.clear()
        adj_t = g._cache.get("adj_t")
        if adj_t is None:
            adj_t = g._cache["adj_t"] = g.adjacency().T.tocsr()
        cache[y] = csgraph.shortest_path(adj_t, unweighted=True, indices=y)
    return cache[y]


def bfs_scheme() -> BFSScheme:
    return BFSScheme()


@dataclass
class CongestionResult:
    rho: float
    bound: float
    bottleneck_arc: tuple[int, int] | None
    path_length_max: int
    scheme: str = ""
    total_load: float = 0.0
    deposited: float = 0.0
    loads: np.ndarray | None = field(default=None, repr=False)


def validate_path(g: StateGraph, x: int, y: int, path) -> None:
    if not path:
        raise SchemePathInvalid(x, y, "empty path")
    seen = {x}
    z = x
    for a in path:
        if not 0 <= a < len(g.indices):
            raise SchemePathInvalid(x, y, f"arc index {a} out of range")
        if g.rows[a] != z:
            raise SchemePathInvalid(x, y, f"arc {a} does not leave state {z}")
        w = int(g.indices[a])
        if w == z or g.prob[a] <= 0:
            raise SchemePathInvalid(x, y, f"arc {a} is a loop or has zero probability")
        if w in seen:
            raise SchemePathInvalid(x, y, f"path revisits state {w}")
        seen.add(w)
        z = w
    if z != y:
        raise SchemePathInvalid(x, y, f"path ends at {z}")


def _source_loads(g: StateGraph, scheme: PathScheme, sources):
    arcs: list[int] = []
    amounts: list[float] = []
    deposited = 0.0
    longest = 0
    pi = g.pi
    n = g.n_states
    for x in sources:
        for y in range(n):
            if y == x:
                continue
            path = scheme.build_path(g, x, y)
            validate_path(g, x, y, path)
            length = len(path)
            amount = pi[x] * pi[y] * length
            arcs.extend(path)
            amounts.extend([amount] * length)
            deposited += amount * length
            longest = max(longest, length)
    loads = np.bincount(np.asarray(arcs, dtype=np.int64), weights=np.asarray(amounts), minlength=len(g.indices))
    return loads, deposited, longest


_worker_state: dict = {}


def _init_worker(g, scheme):
    _worker_state["g"] = g
    _worker_state["scheme"] = scheme


def _worker(sources):
    return _source_loads(_worker_state["g"], _worker_state["scheme"], sources)


def congestion_bound(
    g: StateGraph,
    scheme: PathScheme,
    epsilon: float,
    workers: int = 1,
    keep_loads: bool = False,
) -> CongestionResult:
    """Maximum load congestion of ``scheme`` and the resulting mixing bound.

    Each path from x to y deposits ``pi(x) pi(y) |p|`` on every arc it uses;
    the congestion is the largest ``load(u, v) / (pi(u) P(u, v))``. Sources
    are processed in fixed chunks whose partial loads are summed in chunk
    order, so the result does not depend on ``workers``.
    """
    n = g.n_states
    if n == 1:
        return CongestionResult(0.0, 0.0, None, 0, scheme.name)
    chunks = [range(lo, min(n, lo + SOURCE_CHUNK)) for lo in range(0, n, SOURCE_CHUNK)]
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(g, scheme)) as pool:
            parts = list(pool.map(_worker, chunks))
    else:
        parts = [_source_loads(g, scheme, c) for c in chunks]
    loads = np.zeros(len(g.indices))
    deposited = 0.0
    longest = 0
    for part_loads, part_dep, part_long in parts:
        loads += part_loads
        deposited += part_dep
        longest = max(longest, part_long)

    capacity = g.pi[g.rows] * g.prob
    ratio = np.zeros_like(loads)
    used = loads > 0
    ratio[used] = loads[used] / capacity[used]
    best = int(np.argmax(ratio))
    rho = float(ratio[best])
    bound = rho * (math.log(1.0 / epsilon) + math.log(1.0 / float(g.pi.min())))
    return CongestionResult(
        rho=rho,
        bound=bound,
        bottleneck_arc=(int(g.rows[best]), int(g.indices[best])),
        path_length_max=longest,
        scheme=scheme.name,
        total_load=float(loads.sum()),
        deposited=deposited,
        loads=loads if keep_loads else None,
    )


def write_loads(path, g: StateGraph, result: CongestionResult) -> None:
    """Per-arc CSV ``src,dst,load,pi_u_Puv,ratio`` for non-loop arcs."""
    if result.loads is None:
        raise ValueError("congestion_bound was run without keep_loads=True")
    capacity = g.pi[g.rows] * g.prob
    with Path(path).open("w", newline="\n") as fh:
        fh.write("src,dst,load,pi_u_Puv,ratio\n")
        for a in range(len(g.indices)):
            if g.rows[a] == g.indices[a]:
                continue
            ratio = result.loads[a] / capacity[a] if capacity[a] > 0 else 0.0
            fh.write(f"{g.rows[a]},{g.indices[a]},{result.loads[a]:.12g},{capacity[a]:.12g},{ratio:.12g}\n")
