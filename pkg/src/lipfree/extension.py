"""Whitney covers of a subset and the doubling extension operator.

The cover is the deterministic construction over dyadic scales: maximal
2^n-separated nets of the subset, annular shells of the complement by their
distance to the subset, nearest-net-point cells, and half-scale
neighborhoods.  The derived weights give a Lipschitz map from the ambient
space into the free space over the subset that restricts to delta on the
subset, with constant controlled by a power of the subset's doubling bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadParameter, BadSubset, InternalInvariantBroken, TooSmall
from .freenorm import Molecule, norm_value
from .metric import REL_TOL, doubling_constant_upper, maximal_separated_net


@dataclass(frozen=True)
class HCheck:
    name: str
    passed: bool
    witness: tuple | None
    margin: float


@dataclass(frozen=True)
class WhitneySystem:
    """Indexed family (V_i, phi_i, x_i) over a subset of a finite space.

    Arrays are laid out over ``complement`` positions (points off the
    subset); ``indices`` pairs (scale n, net point) in construction order.
    """

    space: object
    net: tuple                 # global indices of the subset, base included
    complement: tuple          # global indices off the subset
    indices: tuple             # (scale n, net point global index)
    v_masks: np.ndarray        # (n_idx, n_comp) bool
    w_masks: np.ndarray        # (n_idx, n_comp) bool
    phi: np.ndarray            # (n_idx, n_comp)
    phi_total: np.ndarray      # (n_comp,)
    psi: np.ndarray            # (n_idx, n_comp)
    dist_to_net: np.ndarray    # (n_comp,)
    doubling_value: int
    overlap_bound: float       # K = 3 * doubling_value**4
    checks: tuple              # HCheck records

    @property
    def all_passed(self):
        return all(c.passed for c in self.checks)

    def overlap_histogram(self):
        counts = self.v_masks.sum(axis=0)
        hist = {}
        for c in counts:
            hist[int(c)] = hist.get(int(c), 0) + 1
        return hist


def _h_checks(space, net, comp, indices, v_masks, phi, phi_total, d_net, K):
    dist = space.dist
    checks = []
    # H.1: anchors in the subset, at most 7 * d(x, N) away on their patch
    worst = (math.inf, None)
    for ii, (_, y) in enumerate(indices):
        cols = np.nonzero(v_masks[ii])[0]
        if cols.size == 0:
            continue
        gap = 7.0 * d_net[cols] - dist[y, [comp[c] for c in cols]]
        j = int(np.argmin(gap))
        if gap[j] < worst[0]:
            worst = (float(gap[j]), (y, comp[cols[j]]))
    checks.append(HCheck("H1_anchor_distance", worst[0] >= -REL_TOL * 7,
                         worst[1], worst[0]))
    # H.2: K-overlapping cover of the complement
    counts = v_masks.sum(axis=0) if len(indices) else np.zeros(len(comp))
    covered = counts.min(initial=1) >= 1
    max_overlap = int(counts.max(initial=0))
    wc = None
    if len(comp):
        if not covered:
            wc = (comp[int(np.argmin(counts))],)
        elif max_overlap > K:
            wc = (comp[int(np.argmax(counts))],)
    checks.append(HCheck("H2_overlap_cover", covered and max_overlap <= K, wc,
                         float(K - max_overlap)))
    # H.3: each phi_i is 1-Lipschitz with positivity set inside V_i
    ok3, w3, m3 = True, None, math.inf
    if len(comp):
        dcomp = dist[np.ix_(comp, comp)]
        for ii in range(len(indices)):
            diff = np.abs(phi[ii][:, None] - phi[ii][None, :]) - dcomp
            j = int(np.argmax(diff))
            a, b = divmod(j, len(comp))
            m3 = min(m3, float(-diff[a, b]))
            if diff[a, b] > REL_TOL * max(1.0, dcomp[a, b]):
                ok3, w3 = False, (comp[a], comp[b])
                break
            if np.any((phi[ii] > 0) & ~v_masks[ii]):
                ok3 = False
                w3 = (comp[int(np.argmax((phi[ii] > 0) & ~v_masks[ii]))],)
                break
    checks.append(HCheck("H3_lipschitz_support", ok3, w3,
                         m3 if m3 != math.inf else 0.0))
    # H.4: some phi_i exceeds d(x, N)/4 at every point off the subset
    ok4, w4, m4 = True, None, math.inf
    if len(comp):
        best = phi.max(axis=0) if len(indices) else np.zeros(len(comp))
        margin = best - d_net / 4.0
        j = int(np.argmin(margin))
        m4 = float(margin[j])
        if margin[j] <= -REL_TOL * d_net[j]:
            ok4, w4 = False, (comp[j],)
    checks.append(HCheck("H4_lower_bound", ok4, w4,
                         m4 if m4 != math.inf else 0.0))
    # Phi is (2K)-Lipschitz and at least d(x, N)/4
    okp, wp, mp = True, None, math.inf
    if len(comp):
        dcomp = dist[np.ix_(comp, comp)]
        diff = np.abs(phi_total[:, None] - phi_total[None, :]) - 2 * K * dcomp
        np.fill_diagonal(diff, -math.inf)
        j = int(np.argmax(diff))
        a, b = divmod(j, len(comp))
        mp = float(-diff[a, b])
        if diff[a, b] > REL_TOL * max(1.0, 2 * K * dcomp[a, b]):
            okp, wp = False, (comp[a], comp[b])
        low = phi_total - d_net / 4.0
        j = int(np.argmin(low))
        mp = min(mp, float(low[j]))
        if low[j] < -REL_TOL * d_net[j]:
            okp, wp = False, (comp[j],)
    checks.append(HCheck("Phi_lipschitz_lower", okp, wp,
                         mp if mp != math.inf else 0.0))
    return tuple(checks)


def whitney_cover(space, net, exact_threshold=10):
    """Whitney system for a subset ``net`` (global indices, base included).

    Scales range over the dyadic exponents realized by distances to the
    subset; nets are greedy in stored point order, nearest-net cells break
    ties by point order, and patches are half-scale neighborhoods of the
    cells.  All structural properties are checked exhaustively.
    """
    net = sorted(set(int(i) for i in net))
    if not net:
        raise BadSubset("subset must be nonempty")
    if space.base not in net:
        raise BadSubset("subset must contain the base point")
    comp = [i for i in range(space.n) if i not in set(net)]
    net_sub = space.take(net, net.index(space.base))
    doubling = doubling_constant_upper(net_sub, exact_threshold=exact_threshold)
    K = 3 * doubling.value ** 4

    if not comp:
        system = WhitneySystem(
            space=space, net=tuple(net), complement=(), indices=(),
            v_masks=np.zeros((0, 0), dtype=bool),
            w_masks=np.zeros((0, 0), dtype=bool),
            phi=np.zeros((0, 0)), phi_total=np.zeros(0),
            psi=np.zeros((0, 0)), dist_to_net=np.zeros(0),
            doubling_value=doubling.value, overlap_bound=float(K), checks=())
        return system

    d_net = space.dist[np.ix_(comp, net)].min(axis=1)
    n_lo = int(math.floor(math.log2(d_net.min())))
    n_hi = int(math.floor(math.log2(d_net.max())))

    indices = []
    w_rows = []
    v_rows = []
    for scale in range(n_lo, n_hi + 1):
        radius = 2.0 ** scale
        shell = np.nonzero((d_net >= radius) & (d_net < 2 * radius))[0]
        if shell.size == 0:
            continue
        net_pts = maximal_separated_net(space, net, radius)
        dmat = space.dist[np.ix_([comp[c] for c in shell], net_pts)]
        nearest = np.argmin(dmat, axis=1)  # ties -> first (stored order)
        for yi, y in enumerate(net_pts):
            members = shell[nearest == yi]
            if members.size == 0:
                continue
            w = np.zeros(len(comp), dtype=bool)
            w[members] = True
            dcell = space.dist[np.ix_(comp, [comp[c] for c in members])].min(axis=1)
            v = dcell < radius / 2.0
            indices.append((scale, int(y)))
            w_rows.append(w)
            v_rows.append(v)

    v_masks = np.array(v_rows, dtype=bool) if v_rows else np.zeros((0, len(comp)), bool)
    w_masks = np.array(w_rows, dtype=bool) if w_rows else np.zeros((0, len(comp)), bool)
    phi = np.zeros((len(indices), len(comp)))
    for ii in range(len(indices)):
        outside = np.ones(space.n, dtype=bool)
        for c in np.nonzero(v_masks[ii])[0]:
            outside[comp[c]] = False
        phi[ii] = space.dist[np.ix_(comp, np.nonzero(outside)[0])].min(axis=1)
        phi[ii][~v_masks[ii]] = 0.0
    phi_total = phi.sum(axis=0)
    if np.any(phi_total <= 0):
        raise InternalInvariantBroken("weight total vanishes off the subset")
    psi = phi / phi_total[None, :]

    checks = _h_checks(space, net, comp, indices, v_masks, phi, phi_total,
                       d_net, K)
    system = WhitneySystem(
        space=space, net=tuple(net), complement=tuple(comp),
        indices=tuple(indices), v_masks=v_masks, w_masks=w_masks, phi=phi,
        phi_total=phi_total, psi=psi, dist_to_net=d_net,
        doubling_value=doubling.value, overlap_bound=float(K), checks=checks)
    if not system.all_passed:
        failed = [c for c in system.checks if not c.passed]
        raise InternalInvariantBroken(
            "whitney properties failed: "
            + "; ".join(f"{c.name} at {c.witness}" for c in failed))
    return system


@dataclass(frozen=True)
class ExtensionMap:
    """Point-to-molecule assignment restricting to delta on the subset.

    coeffs[x] holds the delta-coordinates of the image of point x over the
    subset subspace (rows sum to one); the subset subspace has the base
    first, preserving stored order otherwise.
    """

    space: object
    net: tuple
    net_subspace: object
    coeffs: np.ndarray      # (n_points, n_net)
    p: float
    measured_lip: float
    lip_bound: float
    witness_pair: tuple | None
    measured_exact: bool

    def molecule(self, x):
        row = self.coeffs[x]
        return Molecule.balanced(
            {i: float(c) for i, c in enumerate(row) if c != 0.0 and i != 0}, 0)


def _net_layout(space, net):
    net = list(net)
    order = [space.base] + [g for g in net if g != space.base]
    sub = space.take(order, 0)
    pos = {g: i for i, g in enumerate(order)}
    return sub, order, pos


def _measure_assignment(space, sub, coeffs, p, exact_limit, pairs=None):
    best, best_pair, all_exact = 0.0, None, True
    n = space.n
    if pairs is None:
        pairs = ((x, y) for x in range(n) for y in range(x + 1, n))
    for x, y in pairs:
        vec = coeffs[x] - coeffs[y]
        vec[0] -= vec.sum()  # rows need not share a total; balance at base
        if np.abs(vec).max(initial=0.0) == 0.0:
            continue
        v, exact = norm_value(sub, vec, p, exact_limit=exact_limit)
        all_exact = all_exact and exact
        ratio = v / space.dist[x, y]
        if ratio > best * (1 + 1e-15):
            best, best_pair = ratio, (x, y)
    return best, best_pair, all_exact


def extension_constant(p, doubling_value):
    """The closed-form target 112 * 15^{1/p} * D^{4/p}."""
    return 112.0 * 15.0 ** (1.0 / p) * float(doubling_value) ** (4.0 / p)


@dataclass(frozen=True)
class CrucialReport:
    passed: bool
    worst_pair: tuple | None
    max_ratio: float  # lhs / rhs, should stay <= 1


def weight_variation_check(system, p):
    """Per-pair weight-variation inequality off the subset:

    sum_i |psi_i(x) - psi_i(y)|^p <= (2 * 8^p * K / A^p) * d^p(x, y)
    with A the larger of the two distances to the subset.
    """
    comp = system.complement
    if len(comp) < 2:
        return CrucialReport(True, None, 0.0)
    psi = system.psi
    d_net = system.dist_to_net
    K = system.overlap_bound
    dist = system.space.dist
    worst, wpair = 0.0, None
    m = len(comp)
    for a in range(m - 1):
        diff = np.abs(psi[:, a][:, None] - psi[:, a + 1:]) ** p
        lhs = diff.sum(axis=0)
        A = np.maximum(d_net[a], d_net[a + 1:])
        d = np.array([dist[comp[a], comp[b]] for b in range(a + 1, m)])
        rhs = 2.0 * 8.0 ** p * K * (d / A) ** p
        ratio = lhs / rhs
        j = int(np.argmax(ratio))
        if ratio[j] > worst:
            worst, wpair = float(ratio[j]), (comp[a], comp[a + 1 + j])
    return CrucialReport(worst <= 1 + 1e-9, wpair, worst)


def doubling_extension_map(space, net, p, system=None, exact_limit=8,
                           measure=True):
    """The doubling extension: delta on the subset, Whitney-weighted
    averages of net anchors off it.

    The measured Lipschitz constant (free-norm target over the subset) is
    compared against 112 * 15^{1/p} * D^{4/p} with D the subset's doubling
    bound.  At p < 1 part norms fall back to certified upper bounds, which
    keeps the comparison sound.
    """
    if not 0 < p <= 1:
        raise BadParameter(f"p={p} outside (0, 1]")
    if system is None:
        system = whitney_cover(space, net)
    sub, order, pos = _net_layout(space, system.net)
    coeffs = np.zeros((space.n, sub.n))
    for g in system.net:
        coeffs[g, pos[g]] = 1.0
    for ci, x in enumerate(system.complement):
        for ii, (_, y) in enumerate(system.indices):
            w = system.psi[ii, ci]
            if w != 0.0:
                coeffs[x, pos[y]] += w
    bound = extension_constant(p, system.doubling_value)
    if measure:
        lip, pair, exact = _measure_assignment(space, sub, coeffs, p, exact_limit)
    else:
        lip, pair, exact = float("nan"), None, False
    return ExtensionMap(space=space, net=tuple(system.net), net_subspace=sub,
                        coeffs=coeffs, p=p, measured_lip=float(lip),
                        lip_bound=float(bound), witness_pair=pair,
                        measured_exact=exact)


def linearization_residual(ext):
    """Residual of L_f o L_iota = Id on the subset delta-basis."""
    sub = ext.net_subspace
    order = [ext.space.base] + [g for g in ext.net if g != ext.space.base]
    resid = 0.0
    for li in range(1, sub.n):
        g = order[li]
        col = ext.coeffs[g].copy()
        col[li] -= 1.0
        col[0] = 0.0  # base coefficient is quotiented out
        resid = max(resid, float(np.abs(col).max()))
    return resid


@dataclass(frozen=True)
class PointRemovalReport:
    removed: int
    new_base: int
    measured_lip: float
    bound: float
    witness_pair: tuple | None
    chain_ok: bool
    chain_margin: float
    map: ExtensionMap


def point_removal_map(space, x0, p, exact_limit=8):
    """Collapse one point to zero, re-basing at its nearest neighbor.

    The map sends every other point to its own delta and x0 to zero; with
    the nearest-neighbor base choice it is 2^{1/p}-Lipschitz.  The summed
    power-distance chain inequality is checked for every remaining point.
    """
    if space.n < 2:
        raise TooSmall("need at least two points to remove one")
    x0 = int(x0)
    if x0 == space.base:
        raise BadParameter("removal of the base point is not supported")
    keep = [i for i in range(space.n) if i != x0]
    d0 = space.dist[x0]
    new_base = min(keep, key=lambda i: (d0[i], i))
    order = [new_base] + [i for i in keep if i != new_base]
    sub = space.take(order, 0)
    pos = {g: i for i, g in enumerate(order)}
    coeffs = np.zeros((space.n, sub.n))
    for g in keep:
        coeffs[g, pos[g]] = 1.0
    # x0 row stays zero
    lip, pair, exact = _measure_assignment(space, sub, coeffs, p, exact_limit)
    bound = 2.0 ** (1.0 / p)
    # chain: d^p(x0, b) + d^p(x, b) <= d^p(x0, x) + 2 d^p(x0, b)
    #        <= (1 + 2 (1 + eps)^p) d^p(x0, x) for every x != x0
    eps = 1e-9
    chain_ok, margin = True, math.inf
    for x in keep:
        if x == new_base:
            continue
        lhs = d0[new_base] ** p + space.dist[x, new_base] ** p
        mid = space.dist[x0, x] ** p + 2 * d0[new_base] ** p
        rhs = (1 + 2 * (1 + eps) ** p) * space.dist[x0, x] ** p
        margin = min(margin, mid - lhs, rhs - mid)
        if lhs > mid * (1 + REL_TOL) or mid > rhs * (1 + REL_TOL):
            chain_ok = False
    ext = ExtensionMap(space=space, net=tuple(sorted(keep)), net_subspace=sub,
                       coeffs=coeffs, p=p, measured_lip=float(lip),
                       lip_bound=float(bound), witness_pair=pair,
                       measured_exact=exact)
    return PointRemovalReport(removed=x0, new_base=new_base,
                              measured_lip=float(lip), bound=float(bound),
                              witness_pair=pair, chain_ok=chain_ok,
                              chain_margin=float(margin) if keep else 0.0,
                              map=ext)


@dataclass(frozen=True)
class AmenabilityReport:
    max_ratio: float
    mean_ratio: float
    samples: int
    certified: bool
    p: float


def amenability_defect(space, net, p, samples=100, seed=0, exact_limit=8):
    """Sampled lower bound for the inverse norm of the canonical inclusion.

    Random molecules supported on the subset are normed both in the free
    space over the subset and in the ambient free space; the max ratio is a
    lower bound for the amenability constant when both solves are exact
    (oracle regime), and a logged estimate otherwise (numerator upper bound,
    denominator exact-or-upper).  At p = 1 the canonical embedding is
    isometric, so every ratio is 1 up to solver tolerance.
    """
    net = sorted(set(int(i) for i in net))
    if space.base not in net:
        raise BadSubset("subset must contain the base point")
    sub, order, pos = _net_layout(space, net)
    rng = np.random.default_rng(seed)
    ratios = []
    certified = True
    nonbase = list(range(1, sub.n))
    if not nonbase:
        return AmenabilityReport(1.0, 1.0, 0, True, p)
    for _ in range(samples):
        size = int(rng.integers(1, len(nonbase) + 1))
        chosen = rng.choice(nonbase, size=size, replace=False)
        coef = rng.standard_normal(size)
        vec_sub = np.zeros(sub.n)
        vec_sub[chosen] = coef
        vec_sub[0] = -coef.sum()
        num, exact_n = norm_value(sub, vec_sub, p, exact_limit=exact_limit,
                                  certify=True)
        vec_amb = np.zeros(space.n)
        for li, c in zip(chosen, coef):
            vec_amb[order[li]] = c
        vec_amb[space.base] -= vec_amb.sum()
        den, exact_d = norm_value(space, vec_amb, p, exact_limit=exact_limit,
                                  certify=True)
        certified = certified and exact_n and exact_d
        if den > 0:
            ratios.append(num / den)
    if not ratios:
        return AmenabilityReport(1.0, 1.0, 0, certified, p)
    return AmenabilityReport(float(max(ratios)), float(np.mean(ratios)),
                             len(ratios), certified, p)
