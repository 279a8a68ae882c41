import math

import numpy as np
import pytest

from lipfree import (
    BadParameter,
    DuplicatePoint,
    EmptySubspace,
    IntervalSpec,
    build_space,
    doubling_constant_upper,
    line_space,
    maximal_separated_net,
    restrict,
    snowflake,
    space_from_matrix,
    validate_p_metric,
)
from lipfree.metric import _exact_cover, _greedy_cover

from conftest import random_metric_space


def test_two_point_line():
    sp = line_space([0.0, 1.0])
    assert sp.d(0, 1) == 1.0


def test_snowflake_exponent_applied():
    sp = line_space([0.0, 4.0], alpha=0.5)
    assert sp.d(0, 1) == pytest.approx(2.0, abs=1e-12)


def test_grid_sup_norm_distance():
    pts = [(i, j) for i in range(3) for j in range(3)]
    sp = build_space(pts, "sup")
    i = pts.index((0, 0))
    j = pts.index((2, 1))
    assert sp.d(i, j) == 2.0


def test_duplicate_points_rejected():
    with pytest.raises(DuplicatePoint):
        build_space([(0.0, 0.0), (0.0, 0.0)], "euclidean")


def test_bad_alpha_rejected():
    with pytest.raises(BadParameter):
        build_space([(0.0,), (1.0,)], "euclidean", alpha=1.5)
    with pytest.raises(BadParameter):
        build_space([(0.0,), (1.0,)], "euclidean", alpha=0.0)


def test_metric_valid_for_all_p(rng):
    sp = random_metric_space(rng, 6)
    for p in (1.0, 0.75, 0.5, 0.25, 0.05):
        assert validate_p_metric(sp, p).valid


def test_p_metric_violation_and_boundary():
    mat = np.array([[0, 1, 3], [1, 0, 1], [3, 1, 0]], dtype=float)
    sp = space_from_matrix(mat)
    rep = validate_p_metric(sp, 1.0)
    assert not rep.valid
    assert rep.worst_triple == (0, 1, 2)
    # 3^p = 2 at the boundary exponent
    p_star = math.log(2) / math.log(3)
    rep = validate_p_metric(sp, p_star)
    assert rep.valid
    assert abs(rep.slack) <= 1e-12


def test_snowflaked_space_still_metric(rng):
    sp = random_metric_space(rng, 6, alpha=0.5)
    assert validate_p_metric(sp, 1.0).valid


def test_restrict_interval():
    sp = line_space([0.0, 1.0, 2.0, 5.0])
    sub = restrict(sp, IntervalSpec(1.0, 3.0), keep_base=True)
    assert sub.points == (0.0, 2.0)
    assert sub.base == 0


def test_restrict_whole_space():
    sp = line_space([0.0, 1.0, 2.0, 5.0])
    sub = restrict(sp, IntervalSpec(0.0, math.inf), keep_base=True)
    assert sub.n == sp.n


def test_restrict_single_point_no_base():
    sp = line_space([0.0, 1.0, 2.0, 5.0])
    sub = restrict(sp, IntervalSpec(5.0, 5.0, True, True), keep_base=False)
    assert sub.points == (5.0,)
    assert sub.base == 0


def test_restrict_empty_raises():
    sp = line_space([0.0, 1.0])
    with pytest.raises(EmptySubspace):
        restrict(sp, IntervalSpec(10.0, 20.0), keep_base=False)


def test_restrict_nested_equals_intersection():
    sp = line_space([0.0, 0.5, 1.0, 2.0, 3.5, 5.0])
    a = IntervalSpec(0.4, 4.0)
    b = IntervalSpec(0.9, 3.6)
    once = restrict(restrict(sp, a), b)
    both = restrict(sp, a.intersect(b))
    assert once.points == both.points


def test_snowflake_monotone():
    sp = line_space([0.0, 0.5, 3.0])
    flaked = snowflake(sp, 0.5)
    # above 1 the snowflake shrinks distances; below 1 it inflates them
    assert flaked.d(0, 2) < sp.d(0, 2)
    assert flaked.d(0, 1) > sp.d(0, 1)


def test_interval_semantics():
    iv = IntervalSpec(1.0, 2.0)  # left-open right-closed default
    assert not iv.contains(1.0)
    assert iv.contains(2.0)
    assert iv.exp_base(2.0).lo == 2.0
    assert iv.exp_base(2.0).hi == 4.0
    with pytest.raises(BadParameter):
        IntervalSpec(2.0, 1.0)
    with pytest.raises(BadParameter):
        IntervalSpec(1.0, 1.0, True, False)


def test_greedy_net_line():
    sp = line_space([0.0, 1.0, 2.0, 3.0])
    assert maximal_separated_net(sp, [0, 1, 2, 3], 2.0) == [0, 2]


def test_net_small_radius_keeps_everything():
    sp = line_space([0.0, 1.0, 2.0, 3.0])
    assert maximal_separated_net(sp, [0, 1, 2, 3], 0.5) == [0, 1, 2, 3]


def test_net_singleton():
    sp = line_space([0.0, 1.0])
    assert maximal_separated_net(sp, [1], 2.0) == [1]


def test_net_separated_and_dense(rng):
    sp = random_metric_space(rng, 20)
    r = 0.8
    net = maximal_separated_net(sp, list(range(sp.n)), r)
    for a in net:
        for b in net:
            if a != b:
                assert sp.dist[a, b] >= r
    for x in range(sp.n):
        assert min(sp.dist[x, y] for y in net) < r


def test_doubling_single_point():
    sp = line_space([0.0])
    assert doubling_constant_upper(sp).value == 1


def test_doubling_equilateral_exact():
    n = 5
    mat = np.ones((n, n)) - np.eye(n)
    sp = space_from_matrix(mat)
    assert doubling_constant_upper(sp, exact_threshold=n).value == n


def test_doubling_integer_segment():
    sp = line_space(list(range(11)))
    rep = doubling_constant_upper(sp, exact_threshold=16)
    assert rep.value == 3  # frozen from the exact set cover


def test_doubling_exact_never_above_greedy(rng):
    sp = random_metric_space(rng, 12)
    candidates = list(range(sp.n))
    for x in range(sp.n):
        r = float(np.median(sp.dist[x][sp.dist[x] > 0]))
        ball = [b for b in range(sp.n) if sp.dist[x, b] <= r]
        exact = _exact_cover(sp, ball, r / 2, candidates)
        greedy = _greedy_cover(sp, ball, r / 2, candidates)
        assert len(exact) <= len(greedy)


def test_coords_consistency_invariant(rng):
    sp = random_metric_space(rng, 8, alpha=0.7)
    raw = np.sqrt(((sp.coords[:, None, :] - sp.coords[None, :, :]) ** 2).sum(2))
    assert np.abs(raw ** 0.7 - sp.dist).max() <= 1e-12 * max(1.0, raw.max())
