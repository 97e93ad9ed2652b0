import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from tsp12.f2m import canonicalize, is_canonical, is_two_connected
from tsp12.instance import Instance, check_tour, complete, held_karp_opt, two_triangles, w9
from tsp12.subtour import FracSolution, solve_f2m_lp, solve_min_2m
from tsp12.tourbuild import (PartialTour, PreconditionError, augment, build_tour_109_check,
                             build_tour_76, complete_partial_tour, is_normalized, make_cover,
                             normalize_2m, pure_cycle_matching, run_tour_76, stitch_cycles,
                             tour_from_f2m)
from f2m_gen import random_case
from test_f2m import _two_triangle_example
from test_instance import instances


# -- augmentation ------------------------------------------------------------

def random_augment_case(rng: random.Random):
    """A partial tour T of disjoint paths and a path or odd cycle A on T's ends."""
    while True:
        n = rng.randint(6, 22)
        perm = list(range(n))
        rng.shuffle(perm)
        paths, i = [], 0
        while i < n:
            size = rng.randint(2, 4)
            if n - i < size:
                size = n - i
            paths.append(perm[i:i + size])
            i += size
        if len(paths[-1]) < 2:
            continue
        T = PartialTour(n, [(p[k], p[k + 1]) for p in paths for k in range(len(p) - 1)])
        ends = T.degree_one()
        rng.shuffle(ends)
        cycle = rng.random() < 0.5
        if cycle:
            choices = [m for m in (3, 5, 7, 9) if m <= len(ends)]
            if not choices:
                continue
            nodes = ends[:rng.choice(choices)]
            pairs = [(nodes[k], nodes[(k + 1) % len(nodes)]) for k in range(len(nodes))]
        else:
            top = min(len(ends), 10)
            if top < 2:
                continue
            nodes = ends[:rng.randint(2, top)]
            pairs = list(zip(nodes, nodes[1:]))
        if any(tuple(sorted(e)) in T.edges for e in pairs):
            continue
        return T, nodes, cycle, pairs


def best_subset(T: PartialTour, pairs) -> int:
    """Largest subset of ``pairs`` that keeps T a partial tour, by enumeration."""
    for size in range(len(pairs), -1, -1):
        for sub in itertools.combinations(pairs, size):
            t = T.copy()
            if all(t.can_add(*e) and (t.add(*e) or True) for e in sub):
                return size
    return 0


def check_augment(T, nodes, cycle, pairs):
    """Return (|A'|, bound, oracle) and assert the output is a valid partial tour."""
    got = augment(T, nodes, cycle)
    assert set(got) <= set(pairs)
    t = T.copy()
    for e in got:
        assert t.can_add(*e)
        t.add(*e)
    assert max(t.deg) <= 2
    m = len(pairs)
    bound = -(-m // 3) if cycle else -(-(m - 1) // 3)
    return len(got), bound, best_subset(T, pairs)


def test_augment_matching_and_five_cycle():
    T = PartialTour(10, [(i, i + 5) for i in range(5)])
    got = augment(T, [0, 1, 2, 3, 4], cycle=True)
    assert len(got) >= 2
    t = T.copy()
    for e in got:
        t.add(*e)
    t.paths()


def test_augment_four_edge_path():
    T = PartialTour(10, [(i, i + 5) for i in range(5)])
    assert len(augment(T, [0, 1, 2, 3, 4])) >= 1


def test_augment_refuses_bad_input():
    T = PartialTour(6, [(0, 1), (1, 2)])
    with pytest.raises(PreconditionError):
        augment(T, [1, 3])
    T = PartialTour(8, [(i, i + 4) for i in range(4)])
    with pytest.raises(PreconditionError):
        augment(T, [0, 1, 2, 3], cycle=True)


def test_augment_against_subset_oracle():
    rng = random.Random(2024)
    for _ in range(200):
        size, bound, oracle = check_augment(*random_augment_case(rng))
        assert size >= bound
        assert oracle >= size


# -- completion --------------------------------------------------------------

def test_complete_hamiltonian_path():
    inst = Instance.from_edges(6, [(i, i + 1) for i in range(5)])
    tour = complete_partial_tour(inst, PartialTour(6, [(i, i + 1) for i in range(5)]))
    assert tour.cost == 7


def test_complete_two_paths():
    path_edges = [(0, 1), (1, 2), (2, 3), (3, 4), (5, 6), (6, 7), (7, 8)]
    inst = Instance.from_edges(9, path_edges)
    T = PartialTour(9, path_edges)
    assert T.cost(inst) == 7 and len(T.degree_one()) == 4
    assert complete_partial_tour(inst, T).cost == 11


def test_complete_refuses_cycle_and_uncovered():
    with pytest.raises(PreconditionError):
        complete_partial_tour(complete(3), PartialTour(3, [(0, 1)]))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 9))
def test_complete_random_partial_tours(seed):
    rng = random.Random(seed)
    T, _, _, _ = random_augment_case(rng)
    inst = Instance.from_edges(T.n, [e for e in T.edges if rng.random() < 0.8])
    tour = complete_partial_tour(inst, T)
    check_tour(inst, tour)
    assert tour.cost <= T.cost(inst) + len(T.degree_one())
    assert all(e in {tuple(sorted(p)) for p in zip(tour.order, tour.order[1:] + tour.order[:1])}
               for e in T.edges)


# -- the F2M builders --------------------------------------------------------

def test_w9_builders_hit_ten():
    x = solve_f2m_lp(w9())
    trace = []
    assert build_tour_76(w9(), x, trace).cost == 10
    assert trace
    assert build_tour_109_check(w9(), x).cost == 10 == Fraction(10, 9) * x.objective


def test_builders_refuse_wrong_input():
    inst, x = _two_triangle_example()
    with pytest.raises(PreconditionError, match="canonical"):
        build_tour_109_check(inst, x)
    tri = two_triangles()
    y = FracSolution.from_values(tri, {e: 1 for e in tri.ones})
    with pytest.raises(PreconditionError):
        build_tour_76(tri, y)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10 ** 9))
def test_seven_sixths_on_random_components(seed):
    inst, x = random_case(random.Random(seed))
    res = run_tour_76(inst, x)
    check_tour(inst, res.tour)
    assert res.tour.cost <= Fraction(7, 6) * x.objective
    st_ = res.stats
    assert 3 * res.degree_one <= st_.k + 2 * st_.p + 2 * st_.z_eared
    assert 3 * res.added_from_R >= res.R - st_.z_eared


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10 ** 9))
def test_ten_ninths_on_canonical_two_connected(seed):
    inst, x = random_case(random.Random(seed))
    y = canonicalize(inst, x)
    if y.is_integral() or not is_canonical(inst, y) or not is_two_connected(y):
        return
    try:
        tour = build_tour_109_check(inst, y)
    except PreconditionError:
        return  # rewiring split the component
    assert tour.cost <= Fraction(10, 9) * y.objective


@settings(max_examples=40, deadline=None)
@given(instances(3, 9))
def test_tour_from_any_f2m(inst):
    x = solve_f2m_lp(inst)
    tour = tour_from_f2m(inst, x)
    check_tour(inst, tour)
    assert tour.cost <= Fraction(4, 3) * Fraction(7, 6) * x.objective


# -- cycle covers ------------------------------------------------------------

W9_FORCED = [[0, 1, 4, 7, 6, 3], [2, 5, 8]]


def test_stitch_examples():
    cover = make_cover(complete(5), [[0, 2, 4, 1, 3]])
    assert stitch_cycles(complete(5), cover).order == (0, 2, 4, 1, 3)
    tri = two_triangles()
    cover = make_cover(tri, [[0, 1, 2], [3, 4, 5]])
    t = stitch_cycles(tri, cover)
    assert held_karp_opt(tri)[0] <= t.cost <= 8
    cover = make_cover(w9(), W9_FORCED)
    assert cover.cost == 10 and stitch_cycles(w9(), cover).cost <= 12


def test_normalize_w9_forced_cover():
    cover = make_cover(w9(), W9_FORCED)
    assert cover.pure == (True, False) and not is_normalized(w9(), cover)
    norm = normalize_2m(w9(), cover)
    assert len(norm.cycles) == 1 and norm.cost == 10


def test_normalize_two_impure_cycles():
    inst = Instance.from_edges(6, [(0, 1), (1, 2), (3, 4), (4, 5)])
    cover = make_cover(inst, [[0, 1, 2], [3, 4, 5]])
    assert cover.cost == 8 and cover.pure == (False, False)
    norm = normalize_2m(inst, cover)
    assert len(norm.cycles) == 1 and norm.cost <= 8


def test_normalize_fixpoint():
    cover = make_cover(complete(6), [[0, 1, 2, 3, 4, 5]])
    assert normalize_2m(complete(6), cover) == cover


def test_matching_examples():
    forced = pure_cycle_matching(w9(), make_cover(w9(), W9_FORCED))
    assert forced.r == 0 and forced.matching == {0: 2}
    norm = pure_cycle_matching(w9(), normalize_2m(w9(), make_cover(w9(), W9_FORCED)))
    assert norm.pure_cycles == () and norm.r == 0
    tri = pure_cycle_matching(two_triangles(), make_cover(two_triangles(), [[0, 1, 2], [3, 4, 5]]))
    assert tri.r == 2 and tri.matching == {}
    k6 = pure_cycle_matching(complete(6), make_cover(complete(6), [list(range(6))]))
    assert k6.r == 0


@settings(max_examples=50, deadline=None)
@given(instances(3, 9))
def test_cover_pipeline_properties(inst):
    cost, cycles = solve_min_2m(inst)
    cover = make_cover(inst, cycles)
    assert cover.cost == cost
    assert 3 * stitch_cycles(inst, cover).cost <= 4 * cost
    norm = normalize_2m(inst, cover)
    assert norm.cost <= cover.cost and is_normalized(inst, norm)
    assert sum(not p for p in norm.pure) <= 1
    m = pure_cycle_matching(inst, norm)
    assert m.r + len(m.matching) == len(m.pure_cycles)
    assert len(m.cover_cycles) + len(m.cover_nodes) == len(m.matching)
    assert len(set(m.matching.values())) == len(m.matching)
