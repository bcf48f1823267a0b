"""Stochastic hierarchical partitioning into a sample tree of district maps.

Each node holds a region, a seat total, and a district count split into
small (j-seat) and large (j+1-seat) districts.  A node carries several
sampled subdivisions of its region; leaves are single districts that are
contiguous and population balanced against the statewide per-seat target.
The tree therefore encodes a product-sum number of distinct plans.
"""
from __future__ import annotations

import heapq
import random
from collections import deque
from dataclasses import dataclass, field

from .model import BalanceTolerance, District, Plan, is_connected


class TreeBuildError(RuntimeError):
    """Raised when no feasible map can be sampled."""


@dataclass(frozen=True)
class SizeAllocation:
    """District size multiset for N seats in K districts."""
    small_size: int   # j = floor(N / K)
    large_count: int  # L = N mod K
    small_count: int  # K - L

    @classmethod
    def for_seats(cls, n_seats: int, k: int) -> "SizeAllocation":
        if not 1 <= k <= n_seats:
            raise ValueError(f"k must be in 1..{n_seats}, got {k}")
        j, l = divmod(n_seats, k)
        return cls(small_size=j, large_count=l, small_count=k - l)


@dataclass
class TreeNode:
    node_id: int
    region: frozenset
    seats: int
    n_districts: int
    n_small: int
    n_large: int
    samples: list = field(default_factory=list)

    @property
    def is_leaf(self):
        return self.n_districts == 1


@dataclass
class SampleTree:
    root: TreeNode
    allocation: SizeAllocation
    tol: BalanceTolerance
    seed: int
    diagnostics: dict


def sample_counts(k: int):
    """(root, internal) sampling counts: (1000/k)^1.2 and (300/k)^0.5, floored at 1."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return (max(1, round((1000 / k) ** 1.2)), max(1, round((300 / k) ** 0.5)))


def _bfs_distances(adjacency, region, sources):
    dist = {s: 0 for s in sources}
    queue = deque(sources)
    while queue:
        u = queue.popleft()
        d = dist[u] + 1
        for v in adjacency[u]:
            if v in region and v not in dist:
                dist[v] = d
                queue.append(v)
    return dist


def _weighted_choice(items, weights, rng):
    total = sum(weights)
    r = rng.random() * total
    acc = 0.0
    for item, w in zip(items, weights):
        acc += w
        if acc >= r:
            return item
    return items[-1]


def select_centers(region, adjacency, pops, n_children: int, rng):
    """Spread centers: first population-weighted, then pop * hop-distance^2."""
    blocks = sorted(region)
    if n_children > len(blocks):
        raise ValueError(f"region of {len(blocks)} blocks cannot host {n_children} centers")
    if n_children == len(blocks):
        return blocks
    centers = [_weighted_choice(blocks, [pops[b] for b in blocks], rng)]
    region_set = set(region)
    while len(centers) < n_children:
        dist = _bfs_distances(adjacency, region_set, centers)
        rest = [b for b in blocks if b not in centers]
        weights = [pops[b] * dist.get(b, 0) ** 2 for b in rest]
        if sum(weights) == 0:
            centers.append(_weighted_choice(rest, [1.0] * len(rest), rng))
        else:
            centers.append(_weighted_choice(rest, weights, rng))
    return centers


def assign_child_sizes(n_districts, n_small, n_large, cell_pops):
    """Per-child (n_small, n_large) proportional to Voronoi cell population.

    District counts use largest-remainder rounding with at least one district
    per child; the parent's large districts are spread across children in
    proportion to their district counts.
    """
    f = len(cell_pops)
    if f > n_districts:
        raise ValueError(f"{f} children need at least {f} districts, have {n_districts}")
    total_pop = sum(cell_pops) or 1.0
    ideal = [n_districts * p / total_pop for p in cell_pops]
    counts = [1] * f
    for _ in range(n_districts - f):
        i = max(range(f), key=lambda i: (ideal[i] - counts[i], -i))
        counts[i] += 1
    ideal_large = [n_large * counts[i] / n_districts for i in range(f)]
    larges = [0] * f
    for _ in range(n_large):
        eligible = [i for i in range(f) if larges[i] < counts[i]]
        i = max(eligible, key=lambda i: (ideal_large[i] - larges[i], -i))
        larges[i] += 1
    return [(counts[i] - larges[i], larges[i]) for i in range(f)]


def split_region(region, adjacency, pops, centers, child_seats,
                 state_pop, total_seats, epsilon):
    """Grow child regions from centers, then boundary-swap toward balance.

    Each child targets state_pop * seats / total_seats people.  Growth is
    capacity-weighted nearest-frontier accretion; repair moves boundary
    blocks between adjacent children when that lowers total balance error
    and keeps the donor contiguous.  Returns child block sets, or None if
    any child misses its tolerance.
    """
    f = len(centers)
    region_set = set(region)
    targets = [state_pop * s / total_seats for s in child_seats]
    dist_maps = [_bfs_distances(adjacency, region_set, [c]) for c in centers]

    owner = {}
    child_blocks = [set() for _ in range(f)]
    child_pop = [0.0] * f
    heaps = [[] for _ in range(f)]

    def assign(b, c):
        owner[b] = c
        child_blocks[c].add(b)
        child_pop[c] += pops[b]
        for v in adjacency[b]:
            if v in region_set and v not in owner:
                heapq.heappush(heaps[c], (dist_maps[c].get(v, len(region_set)), v))

    for c, center in enumerate(centers):
        if center in owner:
            return None  # duplicate centers cannot seed distinct children
        assign(center, c)

    n_assigned = f
    while n_assigned < len(region_set):
        order = sorted(range(f), key=lambda c: (child_pop[c] / targets[c], c))
        progressed = False
        for c in order:
            h = heaps[c]
            while h and h[0][1] in owner:
                heapq.heappop(h)
            if h:
                _, b = heapq.heappop(h)
                assign(b, c)
                n_assigned += 1
                progressed = True
                break
        if not progressed:
            return None

    err = [child_pop[i] - targets[i] for i in range(f)]

    def balanced():
        return all(abs(err[i]) <= epsilon * targets[i] + 1e-9 for i in range(f))

    max_swaps = 10 * len(region_set)
    swaps = 0
    while not balanced() and swaps < max_swaps:
        improved = False
        for b in sorted(region_set):
            a = owner[b]
            if len(child_blocks[a]) <= 1:
                continue
            nbr_children = {owner[v] for v in adjacency[b] if v in region_set} - {a}
            if not nbr_children:
                continue
            p = pops[b]
            best_delta, best_t = -1e-12, None
            for t in sorted(nbr_children):
                delta = (abs(err[a] - p) + abs(err[t] + p)) - (abs(err[a]) + abs(err[t]))
                if delta < best_delta:
                    best_delta, best_t = delta, t
            if best_t is None:
                continue
            if not is_connected(child_blocks[a] - {b}, adjacency):
                continue
            child_blocks[a].discard(b)
            child_blocks[best_t].add(b)
            owner[b] = best_t
            err[a] -= p
            err[best_t] += p
            swaps += 1
            improved = True
            if swaps >= max_swaps:
                break
        if not improved:
            break

    return child_blocks if balanced() else None


#: Center-resampling attempts per node sample before giving up on it.
SPLIT_RETRIES = 20
#: Largest number of children a node subdivision may have.
MAX_FANOUT = 4


def build_tree(state, k: int, tol: BalanceTolerance = BalanceTolerance(),
               seed: int = 0, root_samples: int = None,
               internal_samples: int = None) -> SampleTree:
    """Sample a hierarchy of region subdivisions encoding K-district plans.

    Sampling counts default to the (1000/k)^1.2 and (300/k)^0.5 schedule;
    pass explicit counts for quicker, smaller trees.  Samples whose
    geometry fails, or whose internal children end up empty, are pruned
    and tallied in the diagnostics.
    """
    n_seats = state.total_seats
    alloc = SizeAllocation.for_seats(n_seats, k)
    default_root, default_internal = sample_counts(k)
    n_root = default_root if root_samples is None else root_samples
    n_internal = default_internal if internal_samples is None else internal_samples

    rng = random.Random(seed)
    adjacency = state.adjacency
    pops = {b.id: b.population for b in state.blocks}
    state_pop = state.total_population
    j = alloc.small_size

    counter = [0]
    attempts, failures = {}, {}

    def make_node(region, n_small, n_large):
        counter[0] += 1
        return TreeNode(node_id=counter[0], region=frozenset(region),
                        seats=n_small * j + n_large * (j + 1),
                        n_districts=n_small + n_large, n_small=n_small, n_large=n_large)

    def try_sample(node, depth):
        fanout = rng.randint(2, min(MAX_FANOUT, node.n_districts))
        if fanout > len(node.region):
            return None
        parts = sizes = None
        for _ in range(SPLIT_RETRIES):
            centers = select_centers(node.region, adjacency, pops, fanout, rng)
            cell_pops = _voronoi_cell_pops(node.region, adjacency, pops, centers)
            sizes = assign_child_sizes(node.n_districts, node.n_small, node.n_large, cell_pops)
            child_seats = [s * j + l * (j + 1) for s, l in sizes]
            parts = split_region(node.region, adjacency, pops, centers, child_seats,
                                 state_pop, n_seats, tol.epsilon)
            if parts is not None:
                break
        if parts is None:
            return None
        children = [make_node(part, s, l) for part, (s, l) in zip(parts, sizes)]
        for child in children:
            if not child.is_leaf:
                fill(child, depth + 1)
                if not child.samples:
                    return None
        return children

    def fill(node, depth):
        n_samples = n_root if depth == 0 else n_internal
        for _ in range(n_samples):
            attempts[depth] = attempts.get(depth, 0) + 1
            children = try_sample(node, depth)
            if children is None:
                failures[depth] = failures.get(depth, 0) + 1
            else:
                node.samples.append(children)

    root = make_node(set(pops), alloc.small_count, alloc.large_count)
    if k > 1:
        fill(root, 0)
        if not root.samples:
            raise TreeBuildError(f"no feasible {k}-district map found for seed {seed}")

    tree = SampleTree(root, alloc, tol, seed, {})
    tree.diagnostics = {
        "k": k,
        "node_count": counter[0],
        "leaf_count": sum(1 for n in walk_nodes(tree) if n.is_leaf),
        "sample_attempts_per_depth": attempts,
        "sample_failures_per_depth": failures,
        "implicit_plan_count": count_plans(root),
    }
    return tree


def _voronoi_cell_pops(region, adjacency, pops, centers):
    region_set = set(region)
    dist_maps = [_bfs_distances(adjacency, region_set, [c]) for c in centers]
    cell_pops = [0.0] * len(centers)
    big = len(region_set) + 1
    for b in region_set:
        i = min(range(len(centers)), key=lambda i: (dist_maps[i].get(b, big), i))
        cell_pops[i] += pops[b]
    return cell_pops


def walk_nodes(tree: SampleTree):
    """Every node in the tree, parents before children."""
    stack = [tree.root]
    while stack:
        node = stack.pop()
        yield node
        for sample in node.samples:
            stack.extend(sample)


def count_plans(node: TreeNode) -> int:
    if node.is_leaf:
        return 1
    total = 0
    for sample in node.samples:
        prod = 1
        for child in sample:
            prod *= count_plans(child)
        total += prod
    return total


def _leaves_to_plan(leaves) -> Plan:
    return Plan(tuple(District(block_ids=n.region, seats=n.seats) for n in leaves))


def sample_plans(tree: SampleTree, count: int, seed: int = 0):
    """Draw plans by independent top-down descent, one uniform sample per node."""
    rng = random.Random(seed)

    def descend(node):
        if node.is_leaf:
            return [node]
        sample = rng.choice(node.samples)
        leaves = []
        for child in sample:
            leaves.extend(descend(child))
        return leaves

    return [_leaves_to_plan(descend(tree.root)) for _ in range(count)]


def enumerate_plans(tree: SampleTree, limit: int = 100000):
    """All encoded plans as leaf-node tuples; errors out past ``limit``."""
    if count_plans(tree.root) > limit:
        raise ValueError(f"tree encodes more than {limit} plans")

    def expand(node):
        if node.is_leaf:
            return [(node,)]
        result = []
        for sample in node.samples:
            combos = [()]
            for child in sample:
                combos = [c + sub for c in combos for sub in expand(child)]
            result.extend(combos)
        return result

    return expand(tree.root)


def plan_from_leaves(leaves) -> Plan:
    return _leaves_to_plan(leaves)
