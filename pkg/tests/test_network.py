import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from iabsim import network as nw
from iabsim.channel import AntennaPattern
from iabsim.mobility import wrap_angle

PAT = AntennaPattern(math.pi / 12, math.pi / 4)


def _node(i, kind, x, y, z=6.0, n_panels=4, n_sectors=5):
    return nw.Node(i, kind, (x, y, z), nw.make_panels(n_panels, n_sectors, PAT))


def test_panel_geometry():
    panels = nw.make_panels(4, 5, PAT)
    assert [p.orientation_az for p in panels] == pytest.approx([0, math.pi / 2, math.pi, -math.pi / 2])
    p = panels[0]
    assert p.sector_width == pytest.approx(math.pi / 5)
    dirs = np.array(p.sector_directions)
    assert np.allclose(np.diff(dirs), math.pi / 5)
    assert dirs[2] == pytest.approx(0.0)
    with pytest.raises(ValueError):
        nw.Panel(0.0, 0, PAT)


def test_sector_covers_boresight_and_edges():
    p = nw.make_panels(1, 4, PAT)[0]       # facing east; slices of 45 degrees
    node = (0.0, 0.0)
    for s, d in enumerate(p.sector_directions):
        assert nw.sector_covers(p, s, node, (math.cos(d), math.sin(d)))
    # sector 1 spans [-45, 0) degrees: right edge at 0 is excluded, left edge included
    assert not nw.sector_covers(p, 1, node, (1.0, 0.0))
    assert nw.sector_covers(p, 2, node, (1.0, 0.0))
    with pytest.raises(IndexError):
        nw.sector_covers(p, 4, node, (1.0, 0.0))


@given(st.floats(-math.pi, math.pi), st.integers(1, 6), st.integers(1, 6), st.integers(0, 5))
def test_sector_indices_match_angle_oracle(az, n_panels, n_sectors, which):
    panel = nw.make_panels(n_panels, n_sectors, PAT)[which % n_panels]
    target = (100 * math.cos(az), 100 * math.sin(az))
    got = int(nw.sector_indices(panel, (0.0, 0.0), np.array([target]))[0])
    rel = wrap_angle(math.atan2(target[1], target[0]) - panel.orientation_az)
    width = math.pi / n_sectors
    # skip points within rounding distance of a slice edge
    edge_dist = min(abs(rel + math.pi / 2 - k * width) for k in range(n_sectors + 1))
    if edge_dist < 1e-9 or abs(abs(rel) - math.pi) < 1e-9:
        return
    expect = int((rel + math.pi / 2) // width) if -math.pi / 2 <= rel < math.pi / 2 else -1
    assert got == expect
    hits = [s for s in range(n_sectors) if nw.sector_covers(panel, s, (0.0, 0.0), target)]
    assert hits == ([] if expect < 0 else [expect])


def test_associate_due_east():
    donor = _node(0, nw.DONOR, 0, 0, 25)
    child = _node(1, nw.IAB, 100, 0)
    assert nw.associate_backhaul_sector(donor, child) == (0, 2)


def test_associate_tie_goes_to_lower_index():
    p = nw.make_panels(1, 2, PAT)
    donor = nw.Node(0, nw.DONOR, (0, 0, 25), p)
    # sector directions -45 and +45 degrees; a child due east is equidistant
    child = nw.Node(1, nw.IAB, (100, 0, 6), p)
    assert nw.associate_backhaul_sector(donor, child) == (0, 0)


@given(st.floats(-200, 200), st.floats(-200, 200), st.integers(1, 4), st.integers(1, 5))
def test_associate_is_exhaustive_argmin(x, y, n_panels, n_sectors):
    if math.hypot(x, y) < 1e-3:
        return
    a = _node(0, nw.DONOR, 0, 0, 25, n_panels, n_sectors)
    b = _node(1, nw.IAB, x, y, 6, n_panels, n_sectors)
    target = math.atan2(y, x)
    diffs = [(abs(wrap_angle(target - d)), p, s) for p, pan in enumerate(a.panels)
             for s, d in enumerate(pan.sector_directions)]
    best = min(d for d, _, _ in diffs)
    p, s = nw.associate_backhaul_sector(a, b)
    assert abs(wrap_angle(target - a.panels[p].sector_directions[s])) <= best + 1e-12


def _nodes(n):
    return [_node(0, nw.DONOR, 0, 0, 25)] + [_node(i, nw.IAB, 50 * i, 10 * i) for i in range(1, n + 1)]


def test_star_topology():
    topo = nw.build_topology(_nodes(4), {1: 0, 2: 0, 3: 0, 4: 0})
    assert all(topo.hop_count[i] == 1 for i in range(1, 5))
    assert topo.children(0) == [1, 2, 3, 4]


def test_chain_topology():
    topo = nw.build_topology(_nodes(2), {1: 0, 2: 1})
    assert topo.hop_count == {0: 0, 1: 1, 2: 2}
    assert topo.order() == [0, 1, 2]
    for child, (par, _, _) in topo.parent.items():
        assert topo.hop_count[child] == topo.hop_count[par] + 1


@pytest.mark.parametrize("tree", [{1: 2, 2: 1}, {1: 0}, {1: 0, 2: 0, 7: 0}, {1: 1, 2: 0}, {1: 9, 2: 0}])
def test_invalid_trees(tree):
    with pytest.raises(nw.TopologyError):
        nw.build_topology(_nodes(2), tree)


def test_requires_single_donor():
    nodes = _nodes(1) + [_node(5, nw.DONOR, 10, 10, 25)]
    with pytest.raises(nw.TopologyError):
        nw.build_topology(nodes, {1: 0})


def test_children_via_panel():
    topo = nw.build_topology(_nodes(2), {1: 0, 2: 0})
    by_panel = [topo.children_via(0, p) for p in range(4)]
    assert sorted(c for cs in by_panel for c in cs) == [1, 2]


def test_auto_parents_forms_tree():
    rng = np.random.default_rng(0)
    nodes = [_node(0, nw.DONOR, 0, 150, 25)] + [_node(i, nw.IAB, *rng.uniform(0, 300, 2)) for i in range(1, 6)]
    parents = nw.auto_parents(nodes)
    topo = nw.build_topology(nodes, parents)
    assert set(topo.hop_count) == {0, 1, 2, 3, 4, 5}
    # the relay nearest to the donor always hangs off the donor itself
    nearest = min(nodes[1:], key=lambda n: math.dist(n.pos[:2], nodes[0].pos[:2]))
    assert parents[nearest.id] == 0
