import numpy as np
import pytest

from lipfree import (
    BadParameter,
    BadSubset,
    Molecule,
    TooSmall,
    amenability_defect,
    doubling_extension_map,
    extension_constant,
    free_norm_exact_small,
    line_space,
    linearization_residual,
    point_removal_map,
    weight_variation_check,
    whitney_cover,
)
from lipfree.generators import grid_zd

from conftest import random_metric_space


def test_whitney_subset_equals_space():
    sp = line_space([0.0, 1.0, 2.0])
    system = whitney_cover(sp, [0, 1, 2])
    assert system.indices == ()
    assert system.all_passed


def test_whitney_base_only_subset():
    sp = line_space([0.0, 1.0, 2.0, 4.0, 8.0])
    system = whitney_cover(sp, [0])
    assert system.all_passed
    # every anchor is the base and the weights sum to one off the subset
    assert all(y == 0 for _, y in system.indices)
    assert np.abs(system.psi.sum(axis=0) - 1.0).max() <= 1e-12


def test_whitney_grid_halfplane():
    sp = grid_zd(d=2, lo=0, hi=5)
    net = [i for i in range(sp.n) if sp.coords[i][0] <= 1]
    net.append(sp.base)
    system = whitney_cover(sp, sorted(set(net)))
    assert system.all_passed
    hist = system.overlap_histogram()
    assert max(hist) <= system.overlap_bound
    # phi functions are 1-Lipschitz with support inside their patch
    comp = list(system.complement)
    dcomp = sp.dist[np.ix_(comp, comp)]
    for i in range(len(system.indices)):
        diff = np.abs(system.phi[i][:, None] - system.phi[i][None, :])
        assert (diff - dcomp).max() <= 1e-9
        assert np.all(system.phi[i][~system.v_masks[i]] == 0.0)
    # Phi lower bound from the construction
    assert np.all(system.phi_total >= system.dist_to_net / 4.0 - 1e-12)


def test_whitney_requires_base_in_subset():
    sp = line_space([0.0, 1.0, 2.0])
    with pytest.raises(BadSubset):
        whitney_cover(sp, [1, 2])


def test_extension_restricts_to_delta():
    sp = line_space([0.0, 1.0, 2.0, 4.0, 8.0])
    net = [0, 1, 4]
    ext = doubling_extension_map(sp, net, 1.0)
    order = [0] + [g for g in ext.net if g != 0]
    for g in net:
        row = ext.coeffs[g]
        assert row[order.index(g)] == 1.0
        assert row.sum() == 1.0
    # off the subset: nonnegative weights summing to one
    for x in range(sp.n):
        if x in net:
            continue
        row = ext.coeffs[x]
        assert row.min() >= 0.0
        assert row.sum() == pytest.approx(1.0, abs=1e-12)


def test_extension_measured_below_bound():
    sp = grid_zd(d=2, lo=0, hi=4)
    net = sorted({i for i in range(sp.n) if sp.coords[i][0] <= 1} | {sp.base})
    for p in (1.0, 0.5):
        ext = doubling_extension_map(sp, net, p)
        assert ext.measured_lip <= ext.lip_bound * (1 + 1e-9)
        assert ext.lip_bound == extension_constant(p, whitney_cover(sp, net).doubling_value)
        assert linearization_residual(ext) <= 1e-10


def test_weight_variation_inequality():
    sp = grid_zd(d=2, lo=0, hi=4)
    net = sorted({i for i in range(sp.n) if sp.coords[i][0] <= 1} | {sp.base})
    system = whitney_cover(sp, net)
    for p in (1.0, 0.5):
        rep = weight_variation_check(system, p)
        assert rep.passed


def test_extension_molecule_accessor():
    sp = line_space([0.0, 1.0, 2.0, 4.0])
    ext = doubling_extension_map(sp, [0, 1], 1.0)
    mol = ext.molecule(1)  # point 1 is in the subset
    assert mol == Molecule.delta(1, 0)


def test_point_removal_two_point_space():
    sp = line_space([0.0, 1.0])
    rep = point_removal_map(sp, 1, 0.5)
    assert rep.measured_lip == 0.0
    assert rep.measured_lip <= rep.bound


def test_point_removal_three_point_line():
    sp = line_space([0.0, 1.0, 2.0])
    rep = point_removal_map(sp, 2, 1.0)
    assert rep.new_base == 1  # nearest remaining point
    assert rep.measured_lip <= 2.0 * (1 + 1e-9)
    assert rep.chain_ok


def test_point_removal_random_spaces(rng):
    for _ in range(15):
        sp = random_metric_space(rng, int(rng.integers(3, 8)))
        x0 = int(rng.integers(1, sp.n))
        for p in (1.0, 0.5):
            rep = point_removal_map(sp, x0, p)
            assert rep.measured_lip <= rep.bound * (1 + 1e-9)
            assert rep.chain_ok


def test_point_removal_guards():
    sp = line_space([0.0])
    with pytest.raises(TooSmall):
        point_removal_map(sp, 0, 1.0)
    sp = line_space([0.0, 1.0])
    with pytest.raises(BadParameter):
        point_removal_map(sp, 0, 1.0)


def test_amenability_isometric_at_p1(rng):
    sp = random_metric_space(rng, 7)
    rep = amenability_defect(sp, [0, 2, 4, 6], 1.0, samples=40, seed=5)
    assert rep.max_ratio <= 1.0 + 1e-9
    assert rep.certified


def test_amenability_subset_equals_space(rng):
    sp = random_metric_space(rng, 6)
    rep = amenability_defect(sp, list(range(6)), 0.5, samples=20, seed=5)
    assert rep.max_ratio == pytest.approx(1.0, rel=1e-12)


def test_amenability_lower_bound_certified_small(rng):
    sp = random_metric_space(rng, 7)
    rep = amenability_defect(sp, [0, 1, 3, 5], 0.5, samples=40, seed=5)
    assert rep.certified
    assert rep.max_ratio >= 1.0 - 1e-9  # fewer representations on the subset


def test_amenability_ratio_agrees_with_direct_oracle(rng):
    sp = random_metric_space(rng, 6)
    net = [0, 1, 2, 3]
    sub = sp.take(net, 0)
    m_sub = Molecule.balanced({1: 1.0, 3: -0.7}, 0)
    num = free_norm_exact_small(sub, m_sub, 0.5).value
    m_amb = Molecule.balanced({1: 1.0, 3: -0.7}, 0)
    den = free_norm_exact_small(sp, m_amb, 0.5).value
    assert num >= den * (1 - 1e-9)
