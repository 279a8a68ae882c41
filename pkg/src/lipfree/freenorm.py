"""Free-space norms of molecules over finite pointed spaces.

Three solvers cover the (0, 1] exponent range:

* ``free_norm_p1`` -- exact transportation cost at p = 1 via successive
  shortest paths with node potentials, emitting a dual Lipschitz witness.
* ``free_norm_exact_small`` -- exact for any p in (0, 1] by enumerating all
  spanning trees of the complete graph (vertex solutions of the flow
  polyhedron have acyclic support, and zero-weight edges extend any feasible
  forest to a spanning tree), capped at ``forest_limit`` points.
* ``free_norm_upper`` -- feasible representation found by local search over
  tree supports; never below the true norm.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import minimum_spanning_tree

from .errors import BadParameter, InternalInvariantBroken, SizeLimit
from .metric import ABS_TOL

FOREST_LIMIT_DEFAULT = 8


@dataclass(frozen=True)
class Molecule:
    """Finitely supported zero-sum coefficient function on point indices.

    Entered as coefficients on arbitrary points and completed with the
    balancing coefficient at the base point, so the total always vanishes.
    """

    coeffs: tuple  # sorted tuple of (index, coefficient)

    @staticmethod
    def balanced(coeffs, base):
        """Build from a {index: coefficient} map, balancing at ``base``."""
        acc = {}
        for i, c in dict(coeffs).items():
            acc[int(i)] = acc.get(int(i), 0.0) + float(c)
        total = sum(acc.values())
        acc[base] = acc.get(base, 0.0) - total
        items = tuple(sorted((i, c) for i, c in acc.items() if c != 0.0))
        return Molecule(items)

    @staticmethod
    def delta(i, base):
        """The point evaluation molecule of point ``i``."""
        return Molecule.balanced({int(i): 1.0}, base)

    @staticmethod
    def from_vector(vec, base):
        vec = np.asarray(vec, dtype=float)
        return Molecule.balanced({i: v for i, v in enumerate(vec) if v != 0.0 and i != base},
                                 base)

    def as_dict(self):
        return dict(self.coeffs)

    def vector(self, n):
        v = np.zeros(n)
        for i, c in self.coeffs:
            v[i] = c
        return v

    def support(self):
        return tuple(i for i, _ in self.coeffs)

    def total(self):
        return sum(c for _, c in self.coeffs)

    def __add__(self, other):
        acc = dict(self.coeffs)
        for i, c in other.coeffs:
            acc[i] = acc.get(i, 0.0) + c
        return Molecule(tuple(sorted((i, c) for i, c in acc.items() if c != 0.0)))

    def __sub__(self, other):
        return self + (other * -1.0)

    def __mul__(self, scalar):
        s = float(scalar)
        if s == 0.0:
            return Molecule(())
        return Molecule(tuple((i, c * s) for i, c in self.coeffs))

    __rmul__ = __mul__


@dataclass(frozen=True)
class FreeNormResult:
    """Norm value with the representation that realizes it.

    representation lists (tail, head, weight) edges so the molecule equals
    the sum of weight * (delta(tail) - delta(head)).  The certificate, when
    present (p = 1), is a 1-Lipschitz function vanishing at the base whose
    pairing with the molecule equals the value.
    """

    value: float
    representation: tuple
    exactness: str  # "exact" or "upper-bound"
    p: float
    certificate: np.ndarray | None = None

    def cost_of_representation(self, space):
        acc = 0.0
        for t, h, w in self.representation:
            acc += abs(w) ** self.p * space.dist[t, h] ** self.p
        return acc ** (1.0 / self.p) if acc > 0 else 0.0


@dataclass(frozen=True)
class SumPart:
    key: int
    space: object  # PointedMetricSpace
    molecule: Molecule


@dataclass(frozen=True)
class SumElement:
    """Element of a finite ell_p-sum of free spaces."""

    parts: tuple  # tuple of SumPart
    p: float

    def __sub__(self, other):
        if other.p != self.p:
            raise BadParameter("cannot combine sum elements with different p")
        by_key = {part.key: part for part in self.parts}
        out = dict(by_key)
        for part in other.parts:
            if part.key in by_key:
                mine = by_key[part.key]
                out[part.key] = SumPart(part.key, mine.space, mine.molecule - part.molecule)
            else:
                out[part.key] = SumPart(part.key, part.space, part.molecule * -1.0)
        return SumElement(tuple(out[k] for k in sorted(out)), self.p)


# ---------------------------------------------------------------------------
# spanning-tree enumeration (oracle backbone)

_TREE_CACHE = {}


def _tree_rows(n):
    """Rows for all labeled spanning trees of K_n, via Pruefer sequences.

    Each tree contributes n-1 rows: ``masks[r]`` is the bitmask of the
    child-side subtree across edge r and ``uv[r] = child * n + parent``.
    """
    if n in _TREE_CACHE:
        return _TREE_CACHE[n]
    if n < 2:
        rows = (np.zeros(0, dtype=np.uint8), np.zeros(0, dtype=np.uint8))
        _TREE_CACHE[n] = rows
        return rows
    if n == 2:
        rows = (np.array([2], dtype=np.uint8), np.array([1 * n + 0], dtype=np.uint8))
        _TREE_CACHE[n] = rows
        return rows
    ntrees = n ** (n - 2)
    masks = np.empty(ntrees * (n - 1), dtype=np.uint8)
    uv = np.empty(ntrees * (n - 1), dtype=np.uint8)
    row = 0
    for seq in product(range(n), repeat=n - 2):
        deg = [1] * n
        for a in seq:
            deg[a] += 1
        edges = []
        ptr = 0
        while deg[ptr] != 1:
            ptr += 1
        leaf = ptr
        for a in seq:
            edges.append((leaf, a))
            deg[a] -= 1
            if deg[a] == 1 and a < ptr:
                leaf = a
            else:
                ptr += 1
                while deg[ptr] != 1:
                    ptr += 1
                leaf = ptr
        edges.append((leaf, n - 1))
        adj = [[] for _ in range(n)]
        for u, v in edges:
            adj[u].append(v)
            adj[v].append(u)
        parent = [-1] * n
        parent[0] = 0
        order = [0]
        for x in order:
            for y in adj[x]:
                if parent[y] < 0:
                    parent[y] = x
                    order.append(y)
        sub = [1 << i for i in range(n)]
        for x in reversed(order[1:]):
            sub[parent[x]] |= sub[x]
        for x in order[1:]:
            masks[row] = sub[x]
            uv[row] = x * n + parent[x]
            row += 1
    _TREE_CACHE[n] = (masks, uv)
    return _TREE_CACHE[n]


def _mask_sums(vec):
    """Lookup table: subset bitmask -> sum of vec over the subset (n <= 8)."""
    table = np.zeros(256)
    idx = np.arange(256)
    for b in range(len(vec)):
        table[(idx >> b) & 1 == 1] += vec[b]
    return table


def _scale(vec):
    s = float(np.abs(vec).sum())
    return s if s > 0 else 1.0


def free_norm_exact_small(space, molecule, p, forest_limit=FOREST_LIMIT_DEFAULT):
    """Exact free norm for p in (0, 1] by spanning-tree enumeration."""
    if not 0 < p <= 1:
        raise BadParameter(f"p={p} outside (0, 1]")
    n = space.n
    if n > forest_limit:
        raise SizeLimit(f"{n} points exceeds forest_limit={forest_limit}")
    vec = molecule.vector(n)
    if abs(vec.sum()) > ABS_TOL * _scale(vec):
        raise BadParameter("molecule does not sum to zero")
    if np.abs(vec).max(initial=0.0) <= ABS_TOL:
        return FreeNormResult(0.0, (), "exact", p)
    masks, uv = _tree_rows(n)
    dpow = (space.dist ** p).reshape(-1)
    sums = _mask_sums(vec)[masks]
    costs = (np.abs(sums) ** p * dpow[uv]).reshape(-1, n - 1).sum(axis=1)
    best = int(np.argmin(costs))
    lo, hi = best * (n - 1), (best + 1) * (n - 1)
    rep = []
    eps = 1e-15 * _scale(vec)
    for r in range(lo, hi):
        child, parent = divmod(int(uv[r]), n)
        s = float(sums[r])
        if abs(s) <= eps:
            continue
        rep.append((child, parent, s) if s > 0 else (parent, child, -s))
    value = float(costs[best]) ** (1.0 / p)
    return FreeNormResult(value, tuple(rep), "exact", p)


# ---------------------------------------------------------------------------
# p = 1: successive shortest paths on the bipartite transportation instance


def _transport_ssp(dist, vec):
    """Min-cost transportation between positive and negative parts of vec.

    Returns (value, flows) with flows a dict (source, sink) -> weight.
    Successive shortest paths with node potentials; distances are used
    directly, with no integer scaling.
    """
    scale = _scale(vec)
    eps = 1e-14 * scale
    srcs = [i for i in range(len(vec)) if vec[i] > eps]
    snks = [i for i in range(len(vec)) if vec[i] < -eps]
    supply = {i: float(vec[i]) for i in srcs}
    demand = {j: float(-vec[j]) for j in snks}
    flows = {}
    if not srcs or not snks:
        return 0.0, flows
    nodes = srcs + snks
    pos = {v: k for k, v in enumerate(nodes)}
    ns = len(srcs)
    pot = [0.0] * len(nodes)
    guard = 1000 + 40 * len(nodes) ** 2

    for _ in range(guard):
        s = next((i for i in srcs if supply[i] > eps), None)
        if s is None:
            break
        # Dijkstra over the residual graph with reduced costs
        dist_to = [math.inf] * len(nodes)
        prev = [None] * len(nodes)
        start = pos[s]
        dist_to[start] = 0.0
        heap = [(0.0, start)]
        seen = [False] * len(nodes)
        while heap:
            du, u = heapq.heappop(heap)
            if seen[u]:
                continue
            seen[u] = True
            if u < ns:  # source side: forward arcs to every sink
                i = nodes[u]
                for j in snks:
                    v = pos[j]
                    if seen[v]:
                        continue
                    rc = dist[i, j] + pot[u] - pot[v]
                    rc = max(rc, 0.0)
                    nd = du + rc
                    if nd < dist_to[v] - 1e-15 * scale:
                        dist_to[v] = nd
                        prev[v] = u
                        heapq.heappush(heap, (nd, v))
            else:  # sink side: backward arcs along existing flow
                j = nodes[u]
                for (i2, j2), w in flows.items():
                    if j2 != j or w <= eps:
                        continue
                    v = pos[i2]
                    if seen[v]:
                        continue
                    rc = -dist[i2, j2] + pot[u] - pot[v]
                    rc = max(rc, 0.0)
                    nd = du + rc
                    if nd < dist_to[v] - 1e-15 * scale:
                        dist_to[v] = nd
                        prev[v] = u
                        heapq.heappush(heap, (nd, v))
        # nearest sink with remaining demand
        t = None
        best = math.inf
        for j in snks:
            if demand[j] > eps and dist_to[pos[j]] < best:
                best = dist_to[pos[j]]
                t = j
        if t is None:
            raise InternalInvariantBroken("supply left but no reachable demand")
        dt = dist_to[pos[t]]
        # unreached nodes advance by dt as well: no residual arc can leave
        # the reached set, so the reduced-cost invariant is preserved
        for k in range(len(nodes)):
            pot[k] += min(dist_to[k], dt)
        # bottleneck along the path
        path = []
        v = pos[t]
        while v != start:
            u = prev[v]
            path.append((u, v))
            v = u
        path.reverse()
        amt = min(supply[s], demand[t])
        for u, v in path:
            if u >= ns:  # backward arc (sink -> source): limited by flow
                amt = min(amt, flows[(nodes[v], nodes[u])])
        for u, v in path:
            if u < ns:
                key = (nodes[u], nodes[v])
                flows[key] = flows.get(key, 0.0) + amt
            else:
                key = (nodes[v], nodes[u])
                flows[key] -= amt
        supply[s] -= amt
        demand[t] -= amt
    else:
        raise InternalInvariantBroken("transport iteration guard exceeded")

    flows = {k: w for k, w in flows.items() if w > eps}
    value = sum(w * dist[i, j] for (i, j), w in flows.items())
    return value, flows


def _kr_certificate(space, vec, flows):
    """Dual Lipschitz witness for an optimal transport plan.

    Solves the difference-constraint system (1-Lipschitz everywhere, tight
    on the support of the plan) by Bellman-Ford from the base point, then
    extends to the whole space by inf-convolution with the distance.
    """
    base = space.base
    nodes = sorted({base} | {i for i, _ in flows} | {j for _, j in flows}
                   | {i for i in range(len(vec)) if vec[i] != 0.0})
    pos = {v: k for k, v in enumerate(nodes)}
    k = len(nodes)
    arcs = []
    for a in nodes:
        for b in nodes:
            if a != b:
                arcs.append((pos[a], pos[b], space.dist[a, b]))
    for (i, j), w in flows.items():
        if w > 0:
            arcs.append((pos[i], pos[j], -space.dist[i, j]))
    f = np.full(k, np.inf)
    f[pos[base]] = 0.0
    for _ in range(k):
        changed = False
        for a, b, w in arcs:
            if f[a] + w < f[b] - 1e-15:
                f[b] = f[a] + w
                changed = True
        if not changed:
            break
    else:
        return None  # negative cycle: plan not optimal to float precision
    full = np.min(f[None, :] + space.dist[:, nodes], axis=1)
    full[base] = 0.0
    return full


def free_norm_p1(space, molecule):
    """Exact transportation-cost norm at p = 1 with dual certificate.

    Exact whenever the distance satisfies the triangle inequality (any
    genuine metric, snowflaked or not); the emitted certificate makes the
    optimality independently checkable.
    """
    n = space.n
    vec = molecule.vector(n)
    if abs(vec.sum()) > ABS_TOL * _scale(vec):
        raise BadParameter("molecule does not sum to zero")
    if np.abs(vec).max(initial=0.0) <= ABS_TOL:
        return FreeNormResult(0.0, (), "exact", 1.0, certificate=np.zeros(n))
    value, flows = _transport_ssp(space.dist, vec)
    rep = tuple((i, j, w) for (i, j), w in sorted(flows.items()))
    cert = _kr_certificate(space, vec, flows)
    return FreeNormResult(float(value), rep, "exact", 1.0, certificate=cert)


# ---------------------------------------------------------------------------
# upper bound by local search over tree supports


def _tree_flows(vec, parents, order):
    """Subtree sums: flow carried by the edge (v, parents[v])."""
    s = vec.copy()
    for v in reversed(order[1:]):
        s[parents[v]] += s[v]
    return s


def _bfs_order(parents, k):
    children = [[] for _ in range(k)]
    for v in range(1, k):
        children[parents[v]].append(v)
    order = [0]
    for x in order:
        order.extend(children[x])
    return order


def _cost_of(parents, vec, dpow, p):
    k = len(parents)
    order = _bfs_order(parents, k)
    s = _tree_flows(vec, parents, order)
    acc = 0.0
    for v in range(1, k):
        acc += abs(s[v]) ** p * dpow[v, parents[v]]
    return acc, s


def _mst_parents(dsub):
    k = dsub.shape[0]
    mst = minimum_spanning_tree(csr_matrix(dsub)).toarray()
    adj = [[] for _ in range(k)]
    for a in range(k):
        for b in range(k):
            if mst[a, b] > 0 or mst[b, a] > 0:
                adj[a].append(b)
                adj[b].append(a)
    parents = [-1] * k
    parents[0] = 0
    order = [0]
    for x in order:
        for y in adj[x]:
            if parents[y] < 0:
                parents[y] = x
                order.append(y)
    parents[0] = 0
    return parents


def _descendants(parents, v):
    k = len(parents)
    out = {v}
    grown = True
    while grown:
        grown = False
        for w in range(1, k):
            if w not in out and parents[w] in out:
                out.add(w)
                grown = True
    return out


def free_norm_upper(space, molecule, p, budget=60, seed=0, restarts=2):
    """Feasible-representation upper bound for the free norm at p in (0, 1].

    Starts from the all-mass-to-base star, a minimum-spanning-tree routing,
    and seeded random trees; improves by re-hanging subtrees (edge swaps;
    re-hanging under a third point implements one-intermediate reroutes, and
    tree supports merge parallel mass by construction).  Moves are accepted
    on strict improvement; deterministic for a fixed seed.
    """
    if not 0 < p <= 1:
        raise BadParameter(f"p={p} outside (0, 1]")
    n = space.n
    vec_full = molecule.vector(n)
    if abs(vec_full.sum()) > ABS_TOL * _scale(vec_full):
        raise BadParameter("molecule does not sum to zero")
    if np.abs(vec_full).max(initial=0.0) <= ABS_TOL:
        return FreeNormResult(0.0, (), "upper-bound", p)
    sub = sorted({space.base} | {i for i in range(n) if vec_full[i] != 0.0})
    sub = [space.base] + [i for i in sub if i != space.base]
    k = len(sub)
    dsub = space.dist[np.ix_(sub, sub)]
    dpow = dsub ** p
    vec = vec_full[sub]

    starts = [[0] * k]
    if k > 2:
        starts.append(_mst_parents(dsub))
    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        parents = [0] * k
        for v in range(2, k):
            parents[v] = int(rng.integers(0, v))
        starts.append(parents)

    best_cost = math.inf
    best_parents = None
    for parents in starts:
        parents = list(parents)
        cost, _ = _cost_of(parents, vec, dpow, p)
        for _ in range(max(1, budget)):
            gain_move = None
            gain_cost = cost
            for v in range(1, k):
                blocked = _descendants(parents, v)
                old = parents[v]
                for w in range(k):
                    if w == old or w in blocked:
                        continue
                    parents[v] = w
                    c, _ = _cost_of(parents, vec, dpow, p)
                    if c < gain_cost - 1e-12 * max(1.0, gain_cost):
                        gain_cost = c
                        gain_move = (v, w)
                parents[v] = old
            if gain_move is None:
                break
            parents[gain_move[0]] = gain_move[1]
            cost = gain_cost
        if cost < best_cost:
            best_cost = cost
            best_parents = list(parents)

    _, flows = _cost_of(best_parents, vec, dpow, p)
    eps = 1e-15 * _scale(vec)
    rep = []
    for v in range(1, k):
        s = float(flows[v])
        if abs(s) <= eps:
            continue
        a, b = sub[v], sub[best_parents[v]]
        rep.append((a, b, s) if s > 0 else (b, a, -s))
    value = best_cost ** (1.0 / p)
    return FreeNormResult(float(value), tuple(rep), "upper-bound", p)


# ---------------------------------------------------------------------------
# dense fast paths shared by the measurement loops


def _dense_restrict(space, vec):
    sub = sorted({space.base} | {int(i) for i in np.nonzero(vec)[0]})
    base_pos = sub.index(space.base)
    if base_pos != 0:
        sub = [space.base] + [i for i in sub if i != space.base]
    return sub, space.dist[np.ix_(sub, sub)], vec[sub]


def _ssp_value(dsub, vsub):
    value, _ = _transport_ssp(dsub, vsub)
    return value


def _upper_value(dsub, vsub, p):
    """min(star routing, MST routing) -- a cheap certified upper bound."""
    k = len(vsub)
    if k <= 1:
        return 0.0
    dpow = dsub ** p
    star = float((np.abs(vsub[1:]) ** p * dpow[0, 1:]).sum())
    best = star
    if k > 2:
        parents = _mst_parents(dsub)
        c, _ = _cost_of(parents, vsub, dpow, p)
        best = min(best, c)
    return best ** (1.0 / p)


def _oracle_value(dsub, vsub, p):
    k = len(vsub)
    if k <= 1:
        return 0.0
    masks, uv = _tree_rows(k)
    dpow = (dsub ** p).reshape(-1)
    sums = _mask_sums(vsub)[masks]
    costs = (np.abs(sums) ** p * dpow[uv]).reshape(-1, k - 1).sum(axis=1)
    return float(costs.min()) ** (1.0 / p)


def norm_value(space, vec, p, exact_limit=FOREST_LIMIT_DEFAULT, prefer="auto",
               certify=False):
    """Fast dense-vector norm used by measurement loops.

    Returns (value, exact_flag).  At p = 1 the value is exact (transport on
    the support, valid for metric distances).  For p < 1 the oracle runs on
    the support-restricted space when small enough, which upper-bounds the
    full-space norm; otherwise the star/MST upper bound is used.  With
    ``certify`` the oracle runs on the whole space whenever it fits under
    ``exact_limit``, trading speed for a certified exact value.
    """
    vec = np.asarray(vec, dtype=float)
    if np.abs(vec).max(initial=0.0) <= ABS_TOL:
        return 0.0, True
    sub, dsub, vsub = _dense_restrict(space, vec)
    if prefer == "p1" or (prefer == "auto" and p == 1.0):
        return _ssp_value(dsub, vsub), True
    if prefer == "upper":
        return _upper_value(dsub, vsub, p), False
    if certify and space.n <= exact_limit:
        return _oracle_value(space.dist, vec, p), True
    if len(sub) <= exact_limit:
        exact = len(sub) == space.n  # restriction can only overestimate
        return _oracle_value(dsub, vsub, p), exact
    return _upper_value(dsub, vsub, p), False


def lp_sum_norm(element, norm_backend="auto", exact_limit=FOREST_LIMIT_DEFAULT):
    """Norm of an element of a finite ell_p-sum of free spaces."""
    p = element.p
    if not 0 < p <= 1:
        raise BadParameter(f"p={p} outside (0, 1]")
    acc = 0.0
    for part in element.parts:
        if callable(norm_backend):
            v = norm_backend(part.space, part.molecule, p)
            v = v.value if isinstance(v, FreeNormResult) else float(v)
        else:
            vec = part.molecule.vector(part.space.n)
            v, _ = norm_value(part.space, vec, p, exact_limit=exact_limit,
                              prefer=norm_backend)
        acc += v ** p
    return acc ** (1.0 / p) if acc > 0 else 0.0


def _diff(a, b):
    if isinstance(a, Molecule):
        return a - b
    if isinstance(a, SumElement):
        return a - b
    return np.asarray(a, dtype=float) - np.asarray(b, dtype=float)


def lipschitz_constant(source, image, target_norm, pairs=None):
    """Measured Lipschitz constant of a point map into a normed target.

    image: sequence indexed like the source points, values are molecules,
    sum elements, or coordinate tuples.  target_norm evaluates the norm of
    a difference of two image values.  Exhaustive over all unordered pairs
    unless ``pairs`` is given; returns (value, (i, j)) with the first
    maximizing pair in lexicographic order.
    """
    n = source.n
    if pairs is None:
        pairs = ((i, j) for i in range(n) for j in range(i + 1, n))
    best = 0.0
    best_pair = None
    for i, j in pairs:
        d = source.dist[i, j]
        if d <= 0:
            continue
        ratio = target_norm(_diff(image[i], image[j])) / d
        if ratio > best * (1 + 1e-15):
            best = ratio
            best_pair = (i, j)
    return best, best_pair
