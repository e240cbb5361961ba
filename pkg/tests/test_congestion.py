import math

import numpy as np
import pytest

from mixtime.chains import canonical_scheme_for, make_chain
from mixtime.congestion import PathScheme, bfs_scheme, congestion_bound, validate_path, write_loads
from mixtime.errors import SchemePathInvalid
from mixtime.mixing import total_mixing_time
from mixtime.state_graph import build

CASES = [
    ("switch1", "2,2,1;2,2,1"),
    ("switch2", "3,2,2,1;3,2,2,1"),
    ("matching1", "111;111;111"),
    ("matching2", "110;111;011"),
]


def _oracle_congestion(g, scheme, eps):
    """Direct double loop over pairs with a dict of arc loads."""
    load = {}
    for x in range(g.n_states):
        for y in range(g.n_states):
            if x == y:
                continue
            path = scheme.build_path(g, x, y)
            for a in path:
                load[a] = load.get(a, 0.0) + g.pi[x] * g.pi[y] * len(path)
    rho = max(v / (g.pi[g.rows[a]] * g.prob[a]) for a, v in load.items())
    return rho, rho * (math.log(1 / eps) + math.log(1 / g.pi.min()))


@pytest.mark.parametrize("kind,inst", CASES)
@pytest.mark.parametrize("which", ["bfs", "canonical"])
def test_congestion_matches_direct_sum(kind, inst, which):
    g = build(make_chain(kind, inst))
    scheme = bfs_scheme() if which == "bfs" else canonical_scheme_for(g.chain)
    res = congestion_bound(g, scheme, 1e-3)
    rho, bound = _oracle_congestion(g, scheme, 1e-3)
    assert res.rho == pytest.approx(rho, rel=1e-12)
    assert res.bound == pytest.approx(bound, rel=1e-12)
    # every path deposits pi(x) pi(y) |p| on each of its |p| arcs
    assert res.total_load == pytest.approx(res.deposited, rel=1e-12)


@pytest.mark.parametrize("kind,inst", CASES)
def test_congestion_bounds_tau(kind, inst):
    g = build(make_chain(kind, inst))
    tau = total_mixing_time(g, 1e-3).tau
    for scheme in (bfs_scheme(), canonical_scheme_for(g.chain)):
        assert tau <= congestion_bound(g, scheme, 1e-3).bound


def test_two_state_congestion(two_state_pair):
    g = build(make_chain("switch1", two_state_pair))
    for scheme in (bfs_scheme(), canonical_scheme_for(g.chain)):
        res = congestion_bound(g, scheme, 1e-3)
        assert res.rho == pytest.approx(220.5, rel=1e-12)
        assert 1675.5 <= res.bound <= 1676.5


def test_workers_do_not_change_result():
    g = build(make_chain("switch1", "3,2,2,1;3,2,2,1"))
    one = congestion_bound(g, bfs_scheme(), 1e-3, keep_loads=True)
    two = congestion_bound(g, bfs_scheme(), 1e-3, workers=2, keep_loads=True)
    assert one.rho == two.rho
    assert np.array_equal(one.loads, two.loads)


def test_bfs_paths_are_shortest():
    g = build(make_chain("matching1", "111;111;111"))
    from scipy.sparse import csgraph

    dist = csgraph.shortest_path(g.adjacency(), unweighted=True)
    scheme = bfs_scheme()
    for x in range(0, g.n_states, 3):
        for y in range(g.n_states):
            if x != y:
                assert len(scheme.build_path(g, x, y)) == dist[x, y]


def test_canonical_paths_are_simple_and_valid():
    for kind, inst in CASES:
        g = build(make_chain(kind, inst))
        scheme = canonical_scheme_for(g.chain)
        for x in range(g.n_states):
            for y in range(g.n_states):
                if x != y:
                    validate_path(g, x, y, scheme.build_path(g, x, y))


def test_switch_canonical_needs_no_fallback():
    g = build(make_chain("switch1", "3,2,2,1;3,2,2,1"))
    scheme = canonical_scheme_for(g.chain)
    congestion_bound(g, scheme, 1e-3)
    assert scheme.fallbacks == 0


class _Broken(PathScheme):
    name = "broken"

    def build_path(self, g, x, y):
        return [g.arc_index(x, x)]


def test_invalid_paths_are_rejected():
    g = build(make_chain("switch1", "2,2,1;2,2,1"))
    with pytest.raises(SchemePathInvalid):
        congestion_bound(g, _Broken(), 1e-3)
    with pytest.raises(SchemePathInvalid):
        bfs_scheme().build_path(g, 0, 0)


def test_write_loads(tmp_path):
    g = build(make_chain("matching1", "11;11"))
    res = congestion_bound(g, bfs_scheme(), 1e-3, keep_loads=True)
    out = tmp_path / "loads.csv"
    write_loads(out, g, res)
    lines = out.read_text().splitlines()
    assert lines[0] == "src,dst,load,pi_u_Puv,ratio"
    assert len(lines) == 1 + g.n_arcs
    assert max(float(r.split(",")[4]) for r in lines[1:]) == pytest.approx(res.rho, rel=1e-11)
