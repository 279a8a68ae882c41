"""Annulus decompositions of a pointed space and the operators between the
free space and the ell_p-sum of free spaces over starred annuli.

All operators are realized as matrices on delta-bases (column = image of a
basis molecule), so identity compositions are checked in plain matrix
arithmetic.  Operator norms of linearized point maps are reported as the
measured Lipschitz constant of the generating map; for inverse-type maps
only sampled lower bounds are reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadFamily,
    BadParameter,
    CoverageGap,
    MissingAmenability,
    SupportMismatch,
)
from .freenorm import norm_value
from .metric import ABS_TOL, IntervalSpec

GRID_SAMPLES_PER_SEGMENT = 64


# ---------------------------------------------------------------------------
# piecewise-linear weights


@dataclass(frozen=True)
class PiecewiseLinear:
    """Piecewise-linear function with constant extension beyond breakpoints."""

    xs: np.ndarray
    ys: np.ndarray

    def __call__(self, u):
        return np.interp(u, self.xs, self.ys)


def trapezoid(lo, hi, r, height=None):
    """1-Lipschitz bump supported on (lo, hi), flat at ``height`` (default r)
    on [lo + r, hi - r]; infinite endpoints drop the corresponding ramp.

    With ``height`` set, slopes become height/r instead of 1.
    """
    h = r if height is None else height
    lo_inf = lo == -math.inf
    hi_inf = hi == math.inf
    if lo_inf and hi_inf:
        return PiecewiseLinear(np.array([0.0]), np.array([h]))
    if lo_inf:
        return PiecewiseLinear(np.array([hi - r, hi]), np.array([h, 0.0]))
    if hi_inf:
        return PiecewiseLinear(np.array([lo, lo + r]), np.array([0.0, h]))
    if hi - lo >= 2 * r:
        return PiecewiseLinear(np.array([lo, lo + r, hi - r, hi]),
                               np.array([0.0, h, h, 0.0]))
    mid = 0.5 * (lo + hi)
    peak = h * (hi - lo) / (2 * r)
    return PiecewiseLinear(np.array([lo, mid, hi]), np.array([0.0, peak, 0.0]))


def _max_open_overlap(supports):
    """Maximum number of open intervals covering any single real point."""
    events = []
    for lo, hi in supports:
        events.append((lo, +1))
        events.append((hi, -1))
    finite = sorted(set(x for x, _ in events if math.isfinite(x)))
    probes = []
    if finite:
        span = max(finite[-1] - finite[0], 1.0)
        probes.append(finite[0] - span)
        probes.append(finite[-1] + span)
        probes.extend(0.5 * (a + b) for a, b in zip(finite, finite[1:]))
        probes.extend(finite)  # open intervals: endpoints count for others
    else:
        probes.append(0.0)
    best = 0
    for u in probes:
        cnt = sum(1 for lo, hi in supports if lo < u < hi)
        best = max(best, cnt)
    return best


def _coverage_gap(plateaus, window):
    """First point of ``window`` not covered by the closed plateaus, or None."""
    lo_w, hi_w = window
    segs = sorted((lo, hi) for lo, hi in plateaus if hi >= lo)
    reach = lo_w
    for lo, hi in segs:
        if lo > reach + ABS_TOL:
            return 0.5 * (reach + min(lo, hi_w))
        reach = max(reach, hi)
        if reach >= hi_w:
            return None
    return 0.5 * (reach + hi_w) if reach < hi_w - ABS_TOL else None


@dataclass(frozen=True)
class WeightSystem:
    """Partition of unity built from 1-Lipschitz trapezoids.

    psi_n = phi_n / Phi sums to one on the working window; each psi_n is
    positive exactly on its declared open support.
    """

    phis: tuple          # PiecewiseLinear bumps
    supports: tuple      # (a_n, b_n) open support intervals
    phi_total: PiecewiseLinear
    k: int
    r: float
    window: tuple
    normalized: bool = True

    def psi_values(self, us):
        """Matrix of psi_n(u) values, shape (n_pieces, len(us))."""
        us = np.atleast_1d(np.asarray(us, dtype=float))
        raw = np.vstack([phi(us) for phi in self.phis])
        if not self.normalized:
            return raw
        total = self.phi_total(us)
        if np.any(total <= 0):
            u = float(us[int(np.argmin(total))])
            raise CoverageGap(f"weight total vanishes at u={u}", witness=u)
        return raw / total

    def refined_grid(self, samples_per_segment=GRID_SAMPLES_PER_SEGMENT):
        """Breakpoint union refined with intermediate samples, within window."""
        lo, hi = self.window
        xs = {lo, hi}
        for phi in self.phis:
            xs.update(float(x) for x in phi.xs if lo <= x <= hi)
        xs = sorted(xs)
        grid = []
        for a, b in zip(xs, xs[1:]):
            grid.extend(np.linspace(a, b, samples_per_segment + 2)[:-1])
        grid.append(xs[-1])
        return np.unique(np.array(grid))  # near-coincident breakpoints

    def lipschitz_bound(self):
        """The closed-form bound 3k/r for each normalized weight."""
        return 3.0 * self.k / self.r

    def measured_lipschitz(self, samples_per_segment=GRID_SAMPLES_PER_SEGMENT):
        """Largest difference quotient of any psi_n on the refined grid."""
        grid = self.refined_grid(samples_per_segment)
        vals = self.psi_values(grid)
        dq = np.abs(np.diff(vals, axis=1)) / np.diff(grid)[None, :]
        return float(dq.max())


def build_hat_partition(intervals, r, k, window=None):
    """Partition of unity subordinate to a k-overlapping open interval family.

    ``intervals`` are the open supports (a_n, b_n); the plateaus
    [a_n + r, b_n - r] must cover the working window.  Each psi_n is
    (3k/r)-Lipschitz and positive exactly on (a_n, b_n).
    """
    if r <= 0:
        raise BadParameter(f"margin r={r} must be positive")
    if k < 1:
        raise BadParameter(f"overlap bound k={k} must be >= 1")
    supports = [(float(lo), float(hi)) for lo, hi in intervals]
    if not supports:
        raise BadParameter("need at least one interval")
    for lo, hi in supports:
        if not lo < hi:
            raise BadParameter(f"empty support interval ({lo}, {hi})")
    overlap = _max_open_overlap(supports)
    if overlap > k:
        raise BadFamily(f"family is {overlap}-overlapping, declared k={k}")
    if window is None:
        finite = [x for s in supports for x in s if math.isfinite(x)]
        if not finite:
            window = (-1.0, 1.0)
        else:
            window = (min(finite), max(finite))
    plateaus = [(lo + r, hi - r) for lo, hi in supports]
    gap = _coverage_gap(plateaus, window)
    if gap is not None:
        raise CoverageGap(f"window point u={gap} not covered by any plateau",
                          witness=gap)
    phis = tuple(trapezoid(lo, hi, r) for lo, hi in supports)
    xs = sorted({float(x) for phi in phis for x in phi.xs})
    if not xs:
        xs = [0.0]
    xs = np.array(xs)
    total = np.sum([phi(xs) for phi in phis], axis=0)
    phi_total = PiecewiseLinear(xs, total)
    return WeightSystem(phis=phis, supports=tuple(supports), phi_total=phi_total,
                        k=k, r=r, window=tuple(window))


def unit_bump_family(intervals, r, window=None):
    """Disjoint unit-height bumps: value 1 on [a_n + r, b_n - r], support
    (a_n, b_n).  Used where no normalization is wanted."""
    supports = [(float(lo), float(hi)) for lo, hi in intervals]
    for (lo, hi), (lo2, hi2) in zip(sorted(supports), sorted(supports)[1:]):
        if hi > lo2 + ABS_TOL:
            raise BadFamily("unit bump supports must be pairwise disjoint")
    if window is None:
        finite = [x for s in supports for x in s if math.isfinite(x)]
        window = (min(finite), max(finite)) if finite else (-1.0, 1.0)
    phis = tuple(trapezoid(lo, hi, r, height=1.0) for lo, hi in supports)
    return WeightSystem(phis=phis, supports=tuple(supports), phi_total=None,
                        k=1, r=r, window=tuple(window), normalized=False)


# ---------------------------------------------------------------------------
# annulus families and operator matrices


@dataclass(frozen=True)
class AnnulusPart:
    key: int
    interval: IntervalSpec        # in log_R scale
    radius_interval: IntervalSpec
    members: tuple                # global indices of nonbase points
    subspace: object              # PointedMetricSpace, base first


@dataclass(frozen=True)
class AnnulusFamily:
    """Starred annuli M*_{R^{I_n}} of a pointed space."""

    space: object
    R: float
    parts: tuple

    def is_covering(self):
        seen = set()
        for part in self.parts:
            seen.update(part.members)
        nonbase = set(range(self.space.n)) - {self.space.base}
        return nonbase <= seen

    def membership_counts(self):
        counts = {i: 0 for i in range(self.space.n) if i != self.space.base}
        for part in self.parts:
            for g in part.members:
                counts[g] += 1
        return counts


def annulus_family(space, R, intervals, keys=None):
    """Build the family of starred annuli for log-scale intervals."""
    if R <= 1:
        raise BadParameter(f"R={R} must exceed 1")
    if keys is None:
        keys = list(range(len(intervals)))
    radii = space.radii()
    parts = []
    for key, iv in zip(keys, intervals):
        riv = iv.exp_base(R)
        mask = riv.contains(radii)
        members = tuple(i for i in range(space.n) if mask[i] and i != space.base)
        subspace = space.take([space.base] + list(members), 0)
        parts.append(AnnulusPart(int(key), iv, riv, members, subspace))
    return AnnulusFamily(space=space, R=R, parts=tuple(parts))


@dataclass(frozen=True)
class LinearMapMatrix:
    """Matrix of a linear map between free spaces on their delta-bases."""

    row_labels: tuple
    col_labels: tuple
    matrix: np.ndarray

    def compose(self, other):
        if self.col_labels != other.row_labels:
            raise BadParameter("label mismatch in composition")
        return LinearMapMatrix(self.row_labels, other.col_labels,
                               self.matrix @ other.matrix)

    def residual_vs_identity(self):
        if self.row_labels != self.col_labels:
            raise BadParameter("identity residual needs matching bases")
        eye = np.eye(len(self.row_labels))
        if len(self.row_labels) == 0:
            return 0.0
        return float(np.abs(self.matrix - eye).max())


def _sum_basis(family):
    labels = []
    for part in family.parts:
        labels.extend((part.key, g) for g in part.members)
    return tuple(labels)


def _space_basis(space):
    return tuple(i for i in range(space.n) if i != space.base)


def operator_P(family):
    """Sum of canonical inclusions: (mu_n)_n -> sum_n L_n(mu_n)."""
    rows = _space_basis(family.space)
    cols = _sum_basis(family)
    row_pos = {g: i for i, g in enumerate(rows)}
    m = np.zeros((len(rows), len(cols)))
    for c, (_, g) in enumerate(cols):
        m[row_pos[g], c] = 1.0
    return LinearMapMatrix(rows, cols, m)


def log_radii(space, R):
    """log_R of base distances; -inf at the base itself."""
    radii = space.radii()
    out = np.full(space.n, -math.inf)
    nz = radii > 0
    out[nz] = np.log(radii[nz]) / math.log(R)
    return out


def operator_T(family, weights, p=None, support_tol=1e-12, exact_limit=8):
    """Weighted diagonal-to-sum operator delta(x) -> (psi_n(u_x) delta_n(x))_n.

    Requires each weight's support to stay inside its annulus interval on
    the realized radii, so the extension choice delta_n(x) = 0 off the
    annulus is never exercised with a nonzero weight.  With ``p`` given,
    returns (matrix, measured Lipschitz constant of the generating map);
    otherwise just the matrix.
    """
    space = family.space
    us = log_radii(space, family.R)
    cols = _space_basis(space)
    rows = _sum_basis(family)
    row_pos = {lab: i for i, lab in enumerate(rows)}
    finite_us = np.where(np.isfinite(us), us, 0.0)
    w = weights.psi_values(finite_us)
    m = np.zeros((len(rows), len(cols)))
    member_sets = [set(part.members) for part in family.parts]
    for ci, g in enumerate(cols):
        for ni, part in enumerate(family.parts):
            val = float(w[ni, g])
            if val == 0.0 or not math.isfinite(us[g]):
                continue
            if g not in member_sets[ni]:
                if abs(val) <= support_tol:
                    continue
                raise SupportMismatch(
                    f"weight {ni} is {val} at point {g} outside its annulus")
            m[row_pos[(part.key, g)], ci] = val
    mat = LinearMapMatrix(rows, cols, m)
    if p is None:
        return mat
    measured, pair, _ = measure_map_into_sum(family, w, p,
                                             exact_limit=exact_limit)
    return mat, float(measured)


def operator_block_inclusion(fine, coarse):
    """Canonical embedding of the sum over subsets (per-part inclusion)."""
    rows = _sum_basis(coarse)
    cols = _sum_basis(fine)
    row_pos = {lab: i for i, lab in enumerate(rows)}
    m = np.zeros((len(rows), len(cols)))
    for c, lab in enumerate(cols):
        if lab not in row_pos:
            raise BadFamily(f"fine part member {lab} missing from coarse family")
        m[row_pos[lab], c] = 1.0
    return LinearMapMatrix(rows, cols, m)


def operator_block_diagonal(blocks, fine, coarse):
    """Block-diagonal operator from per-part matrices (J-basis to I-basis)."""
    rows = _sum_basis(coarse)
    cols = _sum_basis(fine)
    row_pos = {lab: i for i, lab in enumerate(rows)}
    col_pos = {lab: i for i, lab in enumerate(cols)}
    m = np.zeros((len(rows), len(cols)))
    for part_f, part_c, block in zip(fine.parts, coarse.parts, blocks):
        for cj, gj in enumerate(part_f.members):
            col = col_pos[(part_f.key, gj)]
            for ri, gi in enumerate(part_c.members):
                v = block[ri, cj]
                if v != 0.0:
                    m[row_pos[(part_c.key, gi)], col] = v
    return LinearMapMatrix(rows, cols, m)


# ---------------------------------------------------------------------------
# closed-form bounds


def norm_bound_T(p, k, R, K1, K2):
    """Norm bound for the weighted annulus operator, exactly as printed:

    (2k)^{1/p} * (K1^p / log^p R + max(K1^p R^p / log^p R,
                                       K2^p R^p / (R-1)^p))^{1/p}
    """
    if not 0 < p <= 1:
        raise BadParameter(f"p={p} outside (0, 1]")
    if R <= 1:
        raise BadParameter(f"R={R} must exceed 1")
    if k < 1:
        raise BadParameter(f"k={k} must be >= 1")
    if K1 <= 0 or K2 <= 0:
        raise BadParameter("K1 and K2 must be positive")
    lr = math.log(R)
    inner = (K1 ** p / lr ** p
             + max(K1 ** p * R ** p / lr ** p, K2 ** p * R ** p / (R - 1) ** p))
    return (2 * k) ** (1 / p) * inner ** (1 / p)


def separated_family_bound(K, p):
    """Inverse bound (K^p + 1)^{1/p} (K^p - 1)^{-1/p} for gap K > 1."""
    if K <= 1:
        raise BadParameter(f"gap K={K} must exceed 1")
    if not 0 < p <= 1:
        raise BadParameter(f"p={p} outside (0, 1]")
    return (K ** p + 1) ** (1 / p) * (K ** p - 1) ** (-1 / p)


# ---------------------------------------------------------------------------
# measured constants


def measure_map_into_sum(family, weight_matrix, p, exact_limit=8):
    """Measured Lipschitz constant of x -> (w_n(x) delta_n(x))_n.

    weight_matrix has shape (n_parts, n_points) over global indices.  Part
    norms use the exact transport solver at p = 1 and support-restricted
    oracles below (restriction can only overestimate, which keeps the
    comparison against closed-form bounds sound).  Returns
    (value, pair, all_exact).
    """
    space = family.space
    n = space.n
    local = []
    for part in family.parts:
        lookup = {g: li + 1 for li, g in enumerate(part.members)}
        local.append(lookup)
    best, best_pair, all_exact = 0.0, None, True
    for x in range(n):
        for y in range(x + 1, n):
            d = space.dist[x, y]
            acc = 0.0
            for ni, part in enumerate(family.parts):
                wx = float(weight_matrix[ni, x]) if x != space.base else 0.0
                wy = float(weight_matrix[ni, y]) if y != space.base else 0.0
                lx = local[ni].get(x)
                ly = local[ni].get(y)
                vec = np.zeros(part.subspace.n)
                if wx != 0.0 and lx is not None:
                    vec[lx] += wx
                    vec[0] -= wx
                if wy != 0.0 and ly is not None:
                    vec[ly] -= wy
                    vec[0] += wy
                if np.abs(vec).max(initial=0.0) == 0.0:
                    continue
                v, exact = norm_value(part.subspace, vec, p, exact_limit=exact_limit)
                all_exact = all_exact and exact
                acc += v ** p
            ratio = acc ** (1 / p) / d if acc > 0 else 0.0
            if ratio > best * (1 + 1e-15):
                best, best_pair = ratio, (x, y)
    return best, best_pair, all_exact


def measure_diagonal_map(space, diag_weights, p, exact_limit=8):
    """Measured Lipschitz constant of x -> w(x) delta(x) into F_p(space)."""
    n = space.n
    best, best_pair, all_exact = 0.0, None, True
    for x in range(n):
        wx = float(diag_weights[x]) if x != space.base else 0.0
        for y in range(x + 1, n):
            wy = float(diag_weights[y]) if y != space.base else 0.0
            if wx == 0.0 and wy == 0.0:
                continue
            vec = np.zeros(n)
            vec[x] += wx
            vec[y] -= wy
            vec[space.base] -= wx - wy
            v, exact = norm_value(space, vec, p, exact_limit=exact_limit)
            all_exact = all_exact and exact
            ratio = v / space.dist[x, y]
            if ratio > best * (1 + 1e-15):
                best, best_pair = ratio, (x, y)
    return best, best_pair, all_exact


# ---------------------------------------------------------------------------
# verification drivers


# ---------------------------------------------------------------------------
# preset families


def unit_interval_cores(umin, umax):
    """Cores [n + 1/2, n + 3/2] with margin 1/2 whose bumps fill the outer
    intervals [n, n + 2]; covers log-radii in [umin, umax]."""
    lo = int(math.floor(umin)) - 2
    hi = int(math.ceil(umax)) + 1
    cores = [(n + 0.5, n + 1.5) for n in range(lo, hi)]
    outer = [IntervalSpec(float(n), float(n + 2), True, True)
             for n in range(lo, hi)]
    return cores, 0.5, outer


def two_band_cores(c3=0.5):
    """The two-set split {(-inf, c3], [0, inf)} of the log-radius line:
    cores (-inf, c3/2] and [c3/2, inf) with margin c3/2, so the bumps are
    exactly (-inf, c3) and (0, inf)."""
    if c3 <= 0:
        raise BadParameter(f"split point c3={c3} must be positive")
    r = c3 / 2.0
    cores = [(-math.inf, r), (r, math.inf)]
    outer = [IntervalSpec(-math.inf, c3, False, True),
             IntervalSpec(0.0, math.inf, True, False)]
    return cores, r, outer


@dataclass(frozen=True)
class SeparatedInverseReport:
    gap: float
    bound: float
    max_ratio: float
    samples: int
    certified: bool

    @property
    def passed(self):
        return self.max_ratio <= self.bound * (1 + 1e-9)


def verify_separated_inverse(family, p, samples=200, seed=0, exact_limit=8):
    """Sampled lower bound for the inverse norm of P on a separated partition.

    The family must partition the nonbase points and have multiplicative gap
    K > 1 between consecutive annuli; the sampled max of |e| / |P(e)| is
    compared against the closed-form bound.
    """
    counts = family.membership_counts()
    if any(c != 1 for c in counts.values()):
        raise BadFamily("annuli must partition the nonbase points")
    ivs = sorted((part.radius_interval for part in family.parts),
                 key=lambda iv: iv.lo)
    gap = math.inf
    for m_iv, n_iv in zip(ivs, ivs[1:]):
        if m_iv.hi <= 0 or not math.isfinite(m_iv.hi):
            raise BadFamily("separated family needs finite positive annulus tops")
        gap = min(gap, n_iv.lo / m_iv.hi)
    if not gap > 1:
        raise BadFamily(f"gap K={gap} is not > 1")
    # a single annulus has no gap constraint; the bound degenerates to 1
    bound = 1.0 if math.isinf(gap) else separated_family_bound(gap, p)
    rng = np.random.default_rng(seed)
    space = family.space
    best = 0.0
    certified = True
    for _ in range(samples):
        vec_total = np.zeros(space.n)
        acc = 0.0
        for part in family.parts:
            sub = part.subspace
            coef = rng.standard_normal(len(part.members))
            vec = np.zeros(sub.n)
            vec[1:] = coef
            vec[0] = -coef.sum()
            v, exact = norm_value(sub, vec, p, exact_limit=exact_limit,
                                  certify=True)
            certified = certified and exact
            acc += v ** p
            for li, g in enumerate(part.members):
                vec_total[g] += coef[li]
        vec_total[space.base] = -vec_total.sum() + vec_total[space.base]
        num = acc ** (1 / p)
        den, exact = norm_value(space, vec_total, p, exact_limit=exact_limit,
                                certify=True)
        certified = certified and exact
        if den > 0:
            best = max(best, num / den)
    return SeparatedInverseReport(gap=float(gap), bound=float(bound),
                                  max_ratio=float(best), samples=samples,
                                  certified=certified)


@dataclass(frozen=True)
class IdentityReport:
    residual: float
    measured_T: float
    bound_T: float
    witness_pair: tuple | None
    weight_sum_error: float
    complementation_bound: float
    measured_exact: bool

    @property
    def passed(self):
        return self.residual <= 1e-10 and self.measured_T <= self.bound_T * (1 + 1e-9)


def verify_pst_identity(space, cores, r, R, p, outer_intervals=None, k=None,
                        exact_limit=8):
    """The complementation identity P o S o T = Id on the delta-basis.

    ``cores`` are the closed plateau intervals [a_n, b_n]; the weights live
    on J_n = (a_n - r, b_n + r) and the outer annuli default to the closure
    of J_n.  Returns the matrix residual together with the measured norm of
    T against its closed-form bound.
    """
    cores = [(float(a), float(b)) for a, b in cores]
    js = [(a - r, b + r) for a, b in cores]
    if outer_intervals is None:
        outer_intervals = [IntervalSpec(lo, hi, True, True) if math.isfinite(lo)
                           and math.isfinite(hi)
                           else IntervalSpec(lo, hi, math.isfinite(lo),
                                             math.isfinite(hi))
                           for lo, hi in js]
    for (lo, hi), iv in zip(js, outer_intervals):
        inner = IntervalSpec(lo, hi, False, False)
        if iv.intersect(inner) != inner:
            raise BadFamily(f"margin interval ({lo}, {hi}) escapes outer {iv}")
    if k is None:
        k = max(1, _max_open_overlap(js))
    us = log_radii(space, R)
    finite = us[np.isfinite(us)]
    if finite.size == 0:
        raise BadFamily("space has no nonbase points")
    window = (float(finite.min()), float(finite.max()))
    weights = build_hat_partition(js, r, k, window=window)

    j_ivs = [IntervalSpec(lo, hi, False, False) for lo, hi in js]
    fam_j = annulus_family(space, R, j_ivs)
    fam_i = annulus_family(space, R, list(outer_intervals))
    T = operator_T(fam_j, weights)
    S = operator_block_inclusion(fam_j, fam_i)
    P = operator_P(fam_i)
    residual = P.compose(S).compose(T).residual_vs_identity()

    wmat = weights.psi_values(np.where(np.isfinite(us), us, window[0]))
    nonbase = [i for i in range(space.n) if i != space.base]
    sums = wmat[:, nonbase].sum(axis=0)
    weight_sum_error = float(np.abs(sums - 1.0).max()) if nonbase else 0.0

    bound = norm_bound_T(p, k, R, weights.lipschitz_bound(), 1.0)
    measured, pair, exact = measure_map_into_sum(fam_j, wmat, p,
                                                 exact_limit=exact_limit)
    return IdentityReport(residual=residual, measured_T=float(measured),
                          bound_T=float(bound), witness_pair=pair,
                          weight_sum_error=weight_sum_error,
                          complementation_bound=float(bound),
                          measured_exact=exact)


@dataclass(frozen=True)
class ReverseIdentityReport:
    residual: float
    measured_T: float
    bound_T: float
    measured_E: float
    declared_K: float
    bump_error: float
    measured_exact: bool

    @property
    def passed(self):
        return self.residual <= 1e-10


def verify_etp_identity(space, bump_intervals, inner_intervals, r, R, p,
                        e_blocks=None, e_builder=None, declared_K=None,
                        exact_limit=8):
    """The reverse identity E o T o P = Id on the ell_p-sum basis.

    ``bump_intervals`` are the pairwise disjoint open J_n = (a_n, b_n);
    ``inner_intervals`` the I_n with I_n inside [a_n + r, b_n - r].  The
    per-part extension operators E_n come either as matrices (J-basis to
    I-basis) or from ``e_builder(sub_j, sub_i)``.
    """
    js = [(float(a), float(b)) for a, b in bump_intervals]
    for (a, b), iv in zip(js, inner_intervals):
        inner = IntervalSpec(a + r, b - r, True, True)
        if iv.intersect(inner) != iv:
            raise BadFamily(f"inner interval {iv} escapes plateau [{a + r}, {b - r}]")
    weights = unit_bump_family(js, r)
    j_ivs = [IntervalSpec(a, b, False, False) for a, b in js]
    fam_j = annulus_family(space, R, j_ivs)
    fam_i = annulus_family(space, R, list(inner_intervals))
    for pj, pi in zip(fam_j.parts, fam_i.parts):
        missing = set(pi.members) - set(pj.members)
        if missing:
            raise BadFamily(f"inner annulus points {missing} missing from bump annulus")

    if e_blocks is None:
        if e_builder is None:
            raise MissingAmenability("no extension operators supplied")
        e_blocks = []
        measured_E = 0.0
        for pj, pi in zip(fam_j.parts, fam_i.parts):
            block, lip = e_builder(pj, pi, p)
            e_blocks.append(block)
            measured_E = max(measured_E, lip)
    else:
        measured_E = float("nan")

    T = operator_T(fam_j, weights)
    P_i = operator_P(fam_i)
    E = operator_block_diagonal(e_blocks, fam_j, fam_i)
    residual = E.compose(T).compose(P_i).residual_vs_identity()

    # pointwise bump check: 1 on the plateau, 0 outside the support
    grid = weights.refined_grid()
    vals = weights.psi_values(grid)
    err = 0.0
    for ni, (a, b) in enumerate(js):
        on = (grid >= a + r) & (grid <= b - r)
        off = (grid <= a) | (grid >= b)
        if on.any():
            err = max(err, float(np.abs(vals[ni, on] - 1.0).max()))
        if off.any():
            err = max(err, float(np.abs(vals[ni, off]).max()))

    us = log_radii(space, R)
    wmat = weights.psi_values(np.where(np.isfinite(us), us, js[0][0] - 10 * r))
    bound = norm_bound_T(p, 1, R, 1.0 / r, 1.0)
    measured, _, exact = measure_map_into_sum(fam_j, wmat, p, exact_limit=exact_limit)
    return ReverseIdentityReport(residual=residual, measured_T=float(measured),
                                 bound_T=float(bound),
                                 measured_E=float(measured_E),
                                 declared_K=float(declared_K or 0.0),
                                 bump_error=err, measured_exact=exact)


@dataclass(frozen=True)
class CommutingReport:
    max_semigroup_residual: float
    identity_from: int | None
    measured_norms: tuple
    bound: float

    @property
    def passed(self):
        return (self.max_semigroup_residual <= 1e-12
                and all(v <= self.bound * (1 + 1e-9) for v in self.measured_norms))


def commuting_approximants(space, R, m_max, p, exact_limit=8):
    """Truncated hat-weight approximants S_m with the min-semigroup law.

    S_m(delta(x)) = (sum of the 2m+1 central hat weights at log_R d(0,x))
    times delta(x); the hats have width 2R around centers R*n, slope 1/R,
    and m runs over 1..m_max.  Returns the matrices (indexed by m-1), the
    max residual of S_m S_m' = S_min(m, m'), the first m with S_m = Id, and
    measured norms against the closed-form bound with k = 2, K1 = 1/R,
    K2 = 1.

    The min-semigroup relation with m = m' forces the truncated weight sum
    to take only the values 0 and 1 on realized radii; fixtures should
    place points at hat centers R^(R n), inside the central plateau, or
    beyond the last hat.
    """
    if R <= 1:
        raise BadParameter(f"R={R} must exceed 1")
    us = log_radii(space, R)
    finite = us[np.isfinite(us)]
    if finite.size == 0:
        raise BadFamily("space has no nonbase points")

    def hat(u, n):
        return np.maximum(1.0 - np.abs(u - R * n) / R, 0.0)

    nonbase = [i for i in range(space.n) if i != space.base]
    mats = []
    diags = []
    for m in range(1, m_max + 1):
        w = np.zeros(space.n)
        for n in range(-m, m + 1):
            w += hat(np.where(np.isfinite(us), us, np.inf), n)
        w[space.base] = 0.0
        diags.append(w)
        mats.append(LinearMapMatrix(tuple(nonbase), tuple(nonbase),
                                    np.diag(w[nonbase])))
    resid = 0.0
    for a in range(len(mats)):
        for b in range(len(mats)):
            prod = mats[a].compose(mats[b]).matrix
            resid = max(resid, float(np.abs(prod - mats[min(a, b)].matrix).max()))
    identity_from = None
    for m, mat in enumerate(mats, start=1):
        if np.abs(np.diag(mat.matrix) - 1.0).max(initial=0.0) <= 1e-12:
            identity_from = m
            break
    bound = norm_bound_T(p, 2, R, 1.0 / R, 1.0)
    norms = []
    for w in diags:
        v, _, _ = measure_diagonal_map(space, w, p, exact_limit=exact_limit)
        norms.append(float(v))
    return mats, CommutingReport(max_semigroup_residual=resid,
                                 identity_from=identity_from,
                                 measured_norms=tuple(norms), bound=float(bound))
