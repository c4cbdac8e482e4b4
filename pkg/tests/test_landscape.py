import math

import numpy as np
import pytest

from metastable.errors import ResolutionError
from metastable.landscape import analyze_landscape, build_filtration, separating_saddles
from metastable.library import builtin
from metastable.potential import find_critical_points, parse_potential

ALL = ["symmetric_double_well", "quartic_double_well", "asymmetric_double_well",
       "tilted_triple_well", "double_well_2d", "cross_2d"]


@pytest.fixture(scope="module")
def landscapes():
    return {name: analyze_landscape(builtin(name)) for name in ALL}


def test_filtration_sizes():
    F = build_filtration(builtin("quartic_double_well"), 513)
    assert F.size == 513 and np.all(np.diff(F.values[F.order]) >= 0)
    F2 = build_filtration(builtin("double_well_2d"), 257)
    assert F2.size == 66049


def test_plateau_ties_are_lexicographic():
    P = parse_potential("0*x + 1", 1, [(-1, 1)])
    F = build_filtration(P, 100)
    assert F.order.tolist() == list(range(100))


def test_memory_cap():
    with pytest.raises(ResolutionError, match="memory"):
        build_filtration(builtin("double_well_2d"), 257, max_bytes=1 << 16)


def test_quartic_separating_saddle():
    P = builtin("quartic_double_well")
    pts = find_critical_points(P)
    A = separating_saddles(build_filtration(P, 2049), pts)
    assert len(A.separating) == 1
    s = A.saddles[A.separating[0]]
    assert s.location == (0.0,) and A.sigma_values == [1.0]
    assert len(A.merge_events) == 1
    assert A.merge_events[0].value == pytest.approx(1.0, abs=1e-5)


def test_triple_well_has_two_distinct_saddle_values(landscapes):
    L = landscapes["tilted_triple_well"]
    assert len(L.separating) == 2
    assert L.sigma_levels[0] == math.inf and len(L.sigma_levels) == 3
    assert L.sigma_levels[1] > L.sigma_levels[2]


def test_2d_single_saddle_at_origin(landscapes):
    L = landscapes["double_well_2d"]
    assert len(L.separating) == 1
    assert np.allclose(L.saddles[L.separating[0]].location, (0.0, 0.0), atol=1e-12)


def test_triple_well_labels(landscapes):
    L = landscapes["tilted_triple_well"]
    assert sorted(L.labels.values()) == [(1, 1), (2, 1), (3, 1)]
    S = [L.S_map[m] for m in L.labels if L.labels[m] != (1, 1)]
    assert len(set(S)) == 2
    # labels in order of location: left is global, right (2,1), middle (3,1)
    by_loc = sorted(L.labels, key=lambda m: L.minima[m].location)
    assert [L.labels[m] for m in by_loc] == [(1, 1), (3, 1), (2, 1)]


def test_symmetric_hat_and_type(landscapes):
    L = landscapes["symmetric_double_well"]
    plus = next(m for m in L.labels if L.minima[m].location[0] > 0)
    minus = next(m for m in L.labels if L.minima[m].location[0] < 0)
    assert L.labels[minus] == (1, 1)    # lexicographically smallest location wins
    assert L.hat_map[plus] == minus and L.type_map[plus] == "II"
    assert L.S_map[plus] == pytest.approx(0.1, rel=1e-12)


def test_asymmetric_shallow_minimum_is_type_one(landscapes):
    L = landscapes["asymmetric_double_well"]
    shallow = next(m for m in L.labels if L.labels[m] != (1, 1))
    assert L.minima[shallow].location[0] > 0 and L.type_map[shallow] == "I"
    assert len(L.classes) == 1 and L.classes[0].members == (shallow,)


def test_triple_well_hat_chain(landscapes):
    L = landscapes["tilted_triple_well"]
    for m, hat in L.hat_map.items():
        k = L.labels[m][0]
        assert hat in L.component_at(m, k - 1)
        assert L.minima[hat].value <= L.minima[m].value


def test_symmetric_class(landscapes):
    L = landscapes["symmetric_double_well"]
    (c,) = L.classes
    saddle = L.separating[0]
    assert len(c.members) == 1
    assert set(c.hat_members) == {0, 1}
    assert c.j[c.members[0]] == c.j[c.hat] == frozenset({saddle})


def test_cross_class_structure(landscapes):
    L = landscapes["cross_2d"]
    assert L.n0 == 4 and len(L.separating) == 4
    (c,) = L.classes
    assert len(c.members) == 3 and all(L.type_map[m] == "II" for m in c.members)
    for m in c.hat_members:
        assert len(c.j[m]) == 2


@pytest.mark.parametrize("name", ALL)
def test_partition_and_saddle_sets(landscapes, name):
    L = landscapes[name]
    assert sum(len(c.members) for c in L.classes) == L.n0 - 1
    for c in L.classes:
        assert {L.hat_map[m] for m in c.members} == {c.hat}
        assert {L.sigma_map[m] for m in c.members} == {c.sigma}
        for m in c.hat_members:
            assert c.j[m]
            for s in c.j[m]:
                assert abs(L.saddles[s].value - c.sigma) <= L.tol_value


def _discrete(L):
    classes = sorted((c.members, c.hat, tuple(sorted(c.j.items()))) for c in L.classes)
    return L.labels, L.hat_map, L.type_map, classes, L.j_map


@pytest.mark.parametrize("name, coarse, fine", [
    ("symmetric_double_well", 1025, 2049),
    ("asymmetric_double_well", 1025, 2049),
    ("tilted_triple_well", 2049, 4097),
    ("double_well_2d", 129, 257),
    ("cross_2d", 129, 257),
])
def test_grid_refinement_stability(name, coarse, fine):
    P = builtin(name)
    pts = find_critical_points(P)
    a = analyze_landscape(P, nodes_per_axis=coarse, pts=pts)
    b = analyze_landscape(P, nodes_per_axis=fine, pts=pts)
    assert _discrete(a) == _discrete(b)
    # σ-values come from the analytic saddles, so they do not move at all
    assert a.sigma_levels == b.sigma_levels


def test_reverse_ties_swap_the_global_label():
    P = builtin("symmetric_double_well")
    L = analyze_landscape(P, reverse_ties=True)
    g = L.global_minimum
    assert L.minima[g].location[0] > 0
