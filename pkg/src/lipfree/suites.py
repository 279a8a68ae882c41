"""Verification suites: named bundles of checks with JSON reports.

Every check record carries the closed-form bound it tests against (with the
inputs that produced it) next to the measured value, so reports are
self-contained.  Reports are deterministic for a fixed seed; wall-clock
timing goes to stderr, never into the report body.
"""

from __future__ import annotations

import math
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .decomposition import (
    commuting_approximants,
    unit_interval_cores,
    verify_pst_identity,
    verify_separated_inverse,
)
from .errors import BadSuite, Mismatch
from .extension import (
    amenability_defect,
    doubling_extension_map,
    linearization_residual,
    point_removal_map,
    weight_variation_check,
    whitney_cover,
)
from .freenorm import (
    Molecule,
    free_norm_exact_small,
    free_norm_p1,
    free_norm_upper,
    norm_value,
)
from .generators import generate
from .geometry import (
    SphereSample,
    mirror_band_residual,
    radial_retraction,
    stereographic,
)
from .metric import IntervalSpec, maximal_separated_net
from .serialization import dump_report, load_space


@dataclass(frozen=True)
class SuiteConfig:
    suite: str
    space_source: dict | None = None
    p_list: tuple = (1.0, 0.5)
    seed: int = 0
    tol_overrides: dict = field(default_factory=dict)
    exact_limit: int = 8
    out: str | None = None

    def tol(self, key, default):
        return float(self.tol_overrides.get(key, default))


def _record(check, measured, bound, passed, witness=None, bound_inputs=None,
            tol=None):
    return {
        "check": check,
        "measured": None if measured is None else float(measured),
        "bound": None if bound is None else float(bound),
        "bound_inputs": bound_inputs or {},
        "passed": bool(passed),
        "witness": witness,
        "tol": tol,
    }


def _resolve_space(config, default_source):
    src = config.space_source or default_source
    if "file" in src:
        return load_space(src["file"]), src
    params = dict(src.get("params", {}))
    return generate(src["kind"], seed=config.seed, **params), src


def _random_molecule(rng, space, max_support=4):
    n = space.n
    k = int(rng.integers(1, min(max_support, n) + 1))
    pts = rng.choice(n, size=k, replace=False)
    coeffs = {int(i): float(c) for i, c in zip(pts, rng.standard_normal(k))}
    return Molecule.balanced(coeffs, space.base)


# ---------------------------------------------------------------------------
# individual suites


def suite_norm_oracle(config):
    space, _ = _resolve_space(config, {"kind": "random-ball",
                                       "params": {"d": 2, "n": 6}})
    rng = np.random.default_rng(config.seed)
    records = []
    tol = config.tol("norm_oracle_rel", 1e-9)

    gap_worst = 0.0
    agree_worst = 0.0
    for _ in range(40):
        mol = _random_molecule(rng, space)
        res = free_norm_p1(space, mol)
        if res.certificate is not None:
            vec = mol.vector(space.n)
            pairing = float(np.dot(vec, res.certificate))
            gap_worst = max(gap_worst, abs(pairing - res.value)
                            / max(res.value, 1e-30))
        if space.n <= config.exact_limit:
            oracle = free_norm_exact_small(space, mol, 1.0,
                                           forest_limit=config.exact_limit)
            agree_worst = max(agree_worst, abs(oracle.value - res.value)
                              / max(res.value, 1e-30))
    records.append(_record("duality_gap_p1", gap_worst, None,
                           gap_worst <= tol, tol=tol))
    records.append(_record("oracle_vs_flow_p1", agree_worst, None,
                           agree_worst <= tol, tol=tol))

    for p in config.p_list:
        iso_worst = 0.0
        for x in range(space.n):
            for y in range(x + 1, space.n):
                vec = np.zeros(space.n)
                vec[x], vec[y] = 1.0, -1.0
                v, _ = norm_value(space, vec, p, exact_limit=config.exact_limit)
                iso_worst = max(iso_worst,
                                abs(v - space.dist[x, y]) / space.dist[x, y])
        records.append(_record(f"delta_isometry_p{p}", iso_worst, None,
                               iso_worst <= tol, tol=tol))

    mono_worst = 0.0
    upper_worst = 0.0
    for _ in range(10):
        mol = _random_molecule(rng, space)
        vals = []
        for p in sorted(set(config.p_list) | {1.0}):
            r = free_norm_exact_small(space, mol, p,
                                      forest_limit=config.exact_limit)
            vals.append((p, r.value))
            up = free_norm_upper(space, mol, p, seed=config.seed)
            upper_worst = max(upper_worst,
                              (r.value - up.value) / max(r.value, 1e-30))
        for (p1, v1), (p2, v2) in zip(vals, vals[1:]):
            mono_worst = max(mono_worst, (v2 - v1) / max(v1, 1e-30))
    records.append(_record("norm_monotone_in_p", mono_worst, None,
                           mono_worst <= tol, tol=tol))
    records.append(_record("upper_never_below_oracle", upper_worst, None,
                           upper_worst <= tol, tol=tol))
    return records


def _unit_cores(space, R):
    """Width-1 plateau cores covering the realized log-radii (margin 1/2)."""
    radii = space.radii()
    pos = radii[radii > 0]
    umin = math.log(pos.min()) / math.log(R)
    umax = math.log(pos.max()) / math.log(R)
    cores, margin, _ = unit_interval_cores(umin, umax)
    return cores, margin


def suite_decomposition(config):
    space, _ = _resolve_space(
        config, {"kind": "annulus-rays",
                 "params": {"rays": 2, "radii": (0.5, 1.0, 2.0, 4.0),
                            "include_origin": True}})
    records = []
    R = 2.0
    cores, margin = _unit_cores(space, R)
    for p in config.p_list:
        rep = verify_pst_identity(space, cores, margin, R, p,
                                  exact_limit=config.exact_limit)
        tol = config.tol("pst_residual", 1e-10)
        records.append(_record(f"pst_identity_residual_p{p}", rep.residual,
                               None, rep.residual <= tol, tol=tol))
        records.append(_record(
            f"T_norm_p{p}", rep.measured_T, rep.bound_T,
            rep.measured_T <= rep.bound_T * (1 + 1e-9),
            witness=rep.witness_pair,
            bound_inputs={"p": p, "R": R, "k": 2, "K1": 3 * 2 / margin,
                          "K2": 1.0}))
        records.append(_record(f"weight_sums_p{p}", rep.weight_sum_error, None,
                               rep.weight_sum_error <= 1e-12, tol=1e-12))

    # separated partition into singleton-radius annuli
    radii = sorted(set(float(r) for r in space.radii() if r > 0))
    intervals = [IntervalSpec(r, r, True, True) for r in radii]
    fam = annulus_family_exact(space, intervals)
    for p in config.p_list:
        rep = verify_separated_inverse(fam, p, samples=60, seed=config.seed,
                                       exact_limit=config.exact_limit)
        records.append(_record(
            f"P_inverse_ratio_p{p}", rep.max_ratio, rep.bound, rep.passed,
            bound_inputs={"K": rep.gap, "p": p, "certified": rep.certified}))

    # P never increases norms on sampled sum elements
    rng = np.random.default_rng(config.seed)
    worst = 0.0
    for _ in range(40):
        acc = 0.0
        total = np.zeros(space.n)
        p = 1.0
        for part in fam.parts:
            c = rng.standard_normal(len(part.members))
            vec = np.zeros(part.subspace.n)
            vec[1:] = c
            vec[0] = -c.sum()
            v, _ = norm_value(part.subspace, vec, p,
                              exact_limit=config.exact_limit)
            acc += v ** p
            for li, g in enumerate(part.members):
                total[g] += c[li]
        total[space.base] -= total.sum()
        vp, _ = norm_value(space, total, p, exact_limit=config.exact_limit)
        if acc > 0:
            worst = max(worst, vp / acc ** (1 / p))
    records.append(_record("P_norm_one_sampled", worst, 1.0,
                           worst <= 1 + 1e-9))
    return records


def annulus_family_exact(space, radius_intervals, keys=None):
    """Annulus family straight from radius intervals (no log roundtrip)."""
    from .decomposition import AnnulusFamily, AnnulusPart

    if keys is None:
        keys = list(range(len(radius_intervals)))
    radii = space.radii()
    parts = []
    for key, riv in zip(keys, radius_intervals):
        mask = riv.contains(radii)
        members = tuple(i for i in range(space.n)
                        if mask[i] and i != space.base)
        sub = space.take([space.base] + list(members), 0)
        log_iv = IntervalSpec(
            math.log(riv.lo, 2) if riv.lo > 0 else -math.inf,
            math.log(riv.hi, 2) if math.isfinite(riv.hi) else math.inf,
            riv.lo_closed, riv.hi_closed)
        parts.append(AnnulusPart(int(key), log_iv, riv, members, sub))
    return AnnulusFamily(space=space, R=2.0, parts=tuple(parts))


def suite_whitney(config):
    space, src = _resolve_space(config, {"kind": "grid-zd",
                                         "params": {"d": 2, "lo": 0, "hi": 5}})
    subset_spec = (config.space_source or {}).get("subset") or src.get("subset")
    if subset_spec is None:
        r = space.diameter() / 4
        net = set(maximal_separated_net(space, list(range(space.n)), r))
        net.add(space.base)
    elif subset_spec.get("kind") == "halfplane":
        axis = int(subset_spec.get("axis", 0))
        cut = float(subset_spec.get("cut", 0.0))
        net = {i for i in range(space.n) if space.coords[i][axis] <= cut}
        net.add(space.base)
    else:
        net = set(int(i) for i in subset_spec["indices"])
        net.add(space.base)
    system = whitney_cover(space, sorted(net))
    records = []
    for c in system.checks:
        records.append(_record(f"whitney_{c.name}", c.margin, None, c.passed,
                               witness=c.witness))
    hist = system.overlap_histogram()
    max_overlap = max(hist) if hist else 0
    records.append(_record("whitney_overlap_vs_3D4", max_overlap,
                           system.overlap_bound,
                           max_overlap <= system.overlap_bound,
                           bound_inputs={"doubling_upper": system.doubling_value}))
    for p in config.p_list:
        crucial = weight_variation_check(system, p)
        records.append(_record(f"weight_variation_p{p}", crucial.max_ratio, 1.0,
                               crucial.passed, witness=crucial.worst_pair))
        ext = doubling_extension_map(space, sorted(net), p, system=system,
                                     exact_limit=config.exact_limit)
        records.append(_record(
            f"extension_lip_p{p}", ext.measured_lip, ext.lip_bound,
            ext.measured_lip <= ext.lip_bound * (1 + 1e-9),
            witness=ext.witness_pair,
            bound_inputs={"p": p, "doubling_upper": system.doubling_value}))
        resid = linearization_residual(ext)
        records.append(_record(f"linearization_residual_p{p}", resid, None,
                               resid <= 1e-10, tol=1e-10))
    return records


def suite_retraction(config):
    space, _ = _resolve_space(
        config, {"kind": "annulus-rays",
                 "params": {"rays": 6, "radii": (0.5, 1.0, 2.0, 4.0),
                            "include_origin": True}})
    radii = sorted(set(float(r) for r in space.radii() if r > 0))
    S = radii[len(radii) // 2]
    rep = radial_retraction(space, S)
    slack_tol = config.tol("retraction_slack", 0.1)
    records = [
        _record("retraction_lip", rep.measured_lip, 2.0 + slack_tol,
                rep.measured_lip <= 2.0 + slack_tol,
                witness=rep.witness_pair, bound_inputs={"S": S}),
        _record("retraction_slack", rep.slack, slack_tol,
                rep.slack <= slack_tol),
        _record("retraction_fixes_ball", None, None, rep.fixes_ball),
        _record("retraction_idempotent", None, None, rep.idempotent),
    ]
    # scale invariance of the measured ratio
    from .metric import build_space
    scaled = build_space(space.coords * 3.0, space.norm, alpha=space.alpha,
                         base=space.base)
    rep2 = radial_retraction(scaled, 3.0 * S)
    drift = abs(rep2.measured_lip - rep.measured_lip)
    records.append(_record("retraction_scale_invariance", drift, None,
                           drift <= 1e-9, tol=1e-9))
    return records


def suite_sphere(config):
    space, _ = _resolve_space(config, {"kind": "sphere-fibonacci",
                                       "params": {"d": 2, "n": 200}})
    sample = SphereSample(space.coords)
    rep = stereographic(sample)
    records = [
        _record("stereo_radius_error", rep.max_abs_error, None,
                rep.max_abs_error <= 1e-9, tol=1e-9),
        _record("stereo_band_correspondence", rep.band_error, None,
                rep.band_error <= 1e-9, tol=1e-9),
        _record("stereo_injective", None, None, rep.injective),
    ]
    # the half-height level maps onto radius sqrt(3)
    d = space.coords.shape[1] - 1
    probe = np.zeros((3, d + 1))
    probe[0, 0], probe[0, -1] = math.sqrt(3.0) / 2.0, 0.5
    probe[1, 0], probe[1, -1] = 1.0, 0.0
    probe[2, -1] = -1.0
    prep = stereographic(SphereSample(probe))
    err_half = abs(prep.radii[0] - math.sqrt(3.0))
    records.append(_record("stereo_half_level_radius", prep.radii[0],
                           math.sqrt(3.0), err_half <= 1e-9, tol=1e-9))
    records.append(_record("stereo_equator_radius", prep.radii[1], 1.0,
                           abs(prep.radii[1] - 1.0) <= 1e-9, tol=1e-9))
    records.append(_record("stereo_south_pole_radius", prep.radii[2], 0.0,
                           abs(prep.radii[2]) <= 1e-9, tol=1e-9))
    # monotone radius in height
    order = np.argsort(rep.heights)
    mono = bool(np.all(np.diff(rep.radii[order]) > -1e-12))
    records.append(_record("stereo_radius_monotone", None, None, mono))
    resid = mirror_band_residual(sample)
    records.append(_record("mirror_band_residual", resid, None,
                           resid <= 1e-12, tol=1e-12))
    return records


def suite_commuting_bap(config):
    records = []
    for R in (2.0, 8.0):
        # points at hat centers R^(R j) plus one core point: the truncated
        # weight sums take only the values 0 and 1 there, making the
        # min-semigroup relation exact; tiny radii are avoided so no two
        # points collide within the duplicate tolerance
        jmin = max(-5, int(math.ceil(math.log(1e-9) / (R * math.log(R)))))
        us = [R * j for j in range(jmin, 6)] + [R / 3.0]
        src = {"kind": "annulus-rays",
               "params": {"rays": 1, "include_origin": True,
                          "radii": tuple(R ** u for u in us)}}
        space, _ = _resolve_space(config, src)
        for p in config.p_list:
            mats, rep = commuting_approximants(space, R, m_max=5, p=p,
                                               exact_limit=config.exact_limit)
            records.append(_record(
                f"semigroup_residual_R{R}_p{p}", rep.max_semigroup_residual,
                None, rep.max_semigroup_residual <= 1e-12, tol=1e-12))
            records.append(_record(
                f"approximant_norms_R{R}_p{p}", max(rep.measured_norms),
                rep.bound,
                max(rep.measured_norms) <= rep.bound * (1 + 1e-9),
                bound_inputs={"p": p, "k": 2, "R": R, "K1": 1.0 / R,
                              "K2": 1.0}))
            records.append(_record(
                f"approximant_identity_R{R}_p{p}",
                None if rep.identity_from is None else float(rep.identity_from),
                None, rep.identity_from is not None))
    return records


def suite_point_removal(config):
    rng = np.random.default_rng(config.seed)
    records = []
    worst = {p: 0.0 for p in config.p_list}
    chain_ok = True
    count = 20
    for t in range(count):
        n = int(rng.integers(3, 7))
        coords = rng.standard_normal((n, 2))
        from .metric import build_space
        space = build_space(coords, "euclidean")
        x0 = int(rng.integers(1, n))
        for p in config.p_list:
            rep = point_removal_map(space, x0, p,
                                    exact_limit=config.exact_limit)
            worst[p] = max(worst[p], rep.measured_lip / rep.bound)
            chain_ok = chain_ok and rep.chain_ok
    for p in config.p_list:
        records.append(_record(f"point_removal_ratio_p{p}", worst[p], 1.0,
                               worst[p] <= 1 + 1e-9,
                               bound_inputs={"bound": 2 ** (1 / p)}))
    records.append(_record("point_removal_chain", None, None, chain_ok))
    return records


def suite_amenability(config):
    space, src = _resolve_space(config, {"kind": "random-ball",
                                         "params": {"d": 2, "n": 7}})
    subset_spec = (config.space_source or {}).get("subset") or src.get("subset")
    if subset_spec is None:
        net = sorted({space.base} | set(range(0, space.n, 2)))
    else:
        net = sorted({space.base} | set(int(i) for i in subset_spec["indices"]))
    records = []
    for p in config.p_list:
        rep = amenability_defect(space, net, p, samples=60, seed=config.seed,
                                 exact_limit=config.exact_limit)
        if p == 1.0:
            records.append(_record("amenability_isometry_p1", rep.max_ratio,
                                   1.0, rep.max_ratio <= 1 + 1e-9,
                                   bound_inputs={"certified": rep.certified}))
        else:
            records.append(_record(
                f"amenability_lower_bound_p{p}", rep.max_ratio, None, True,
                bound_inputs={"certified": rep.certified,
                              "mean": rep.mean_ratio}))
    return records


SUITES = {
    "norm-oracle": suite_norm_oracle,
    "decomposition": suite_decomposition,
    "whitney": suite_whitney,
    "retraction": suite_retraction,
    "sphere": suite_sphere,
    "commuting-bap": suite_commuting_bap,
    "point-removal": suite_point_removal,
    "amenability": suite_amenability,
}


def run_suite(config):
    """Run one suite; returns (report document, all passed)."""
    if config.suite not in SUITES:
        raise BadSuite(f"unknown suite {config.suite!r}; "
                       f"choose from {sorted(SUITES)}")
    if not config.p_list:
        raise BadSuite("empty p list")
    for p in config.p_list:
        if not 0 < p <= 1:
            raise BadSuite(f"p={p} outside (0, 1]")
    t0 = time.monotonic()
    records = SUITES[config.suite](config)
    elapsed = time.monotonic() - t0
    records.sort(key=lambda r: r["check"])
    doc = {
        "suite": config.suite,
        "config": {
            "p": list(config.p_list),
            "seed": config.seed,
            "space": config.space_source,
            "exact_limit": config.exact_limit,
            "tol_overrides": dict(config.tol_overrides),
        },
        "environment": {"version": __version__, "seed": config.seed,
                        "timing": None},
        "checks": records,
        "passed": all(r["passed"] for r in records),
    }
    print(f"[lipfree] suite {config.suite}: {len(records)} checks, "
          f"{elapsed:.2f}s", file=sys.stderr)
    if config.out:
        dump_report(doc, config.out)
    return doc, doc["passed"]


def report_diff(old, new):
    """Textual diff of measured constants between two reports of one suite."""
    if old.get("suite") != new.get("suite"):
        raise Mismatch(f"suite mismatch: {old.get('suite')} vs {new.get('suite')}")
    old_checks = {r["check"]: r for r in old["checks"]}
    new_checks = {r["check"]: r for r in new["checks"]}
    lines = []
    for name in sorted(set(old_checks) | set(new_checks)):
        o, n = old_checks.get(name), new_checks.get(name)
        if o is None or n is None:
            lines.append(f"{name}: only in {'new' if o is None else 'old'}")
            continue
        mo, mn = o["measured"], n["measured"]
        if mo is None or mn is None:
            if o["passed"] != n["passed"]:
                lines.append(f"{name}: passed {o['passed']} -> {n['passed']}")
            continue
        if mo == mn:
            continue
        delta = mn - mo
        tag = ""
        if n["passed"] and mo != 0 and (mn - mo) / abs(mo) > 0.01:
            tag = "  [regression: measured constant grew > 1%]"
        if o["passed"] != n["passed"]:
            tag += f"  [passed {o['passed']} -> {n['passed']}]"
        lines.append(f"{name}: {mo!r} -> {mn!r} (delta {delta:+.3e}){tag}")
    return "\n".join(lines)
