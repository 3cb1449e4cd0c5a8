"""Random trees with a bounded number of per-level types.

Each level of a tree is governed by an environment: an assignment, for every
type v in {0..V-1}, of a catalog system index and of the types handed to that
system's children. A level whose environment gives every child slot the same
type is a neck; below a neck all subtrees rooted at that generation are
identical, which is what makes cut sets and block factorizations cheap.

Trees separate two depths. The environment sequence can be long (it costs a
few integers per level), while node generations are materialized only to the
requested depth, with an explicit node cap; several operations (block sums,
Monte Carlo estimates) only need the environments.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .catalog import Catalog, scale_extrema
from .errors import DepthExhaustedError, TreeTooLargeError
from .rng import Xoshiro256StarStar

DEFAULT_NODE_CAP = 10_000_000


@dataclass(frozen=True)
class Environment:
    """Per-type system indices and child-type rows for one level.

    ``indices[v]`` is the catalog system assigned to type v and
    ``child_types[v][i]`` the type handed to the i-th child of a type-v node.
    """

    indices: tuple[int, ...]
    child_types: tuple[tuple[int, ...], ...]

    @property
    def n_types(self) -> int:
        return len(self.indices)

    @property
    def is_neck(self) -> bool:
        first = self.child_types[0][0]
        return all(t == first for row in self.child_types for t in row)


def sample_environment(catalog: Catalog, v_types: int, rng: Xoshiro256StarStar) -> Environment:
    """Draw an environment.

    Draw order (reproducibility contract): system indices for types 0..V-1
    from the catalog's index distribution, then child-type rows type by type,
    each entry uniform on {0..V-1}.
    """
    if v_types < 1:
        raise ValueError("v_types must be >= 1")
    indices = tuple(rng.categorical(catalog.index_probs) for _ in range(v_types))
    rows = tuple(
        tuple(rng.randint(v_types) for _ in range(catalog.systems[j].size))
        for j in indices
    )
    return Environment(indices, rows)


@dataclass
class Generation:
    """Node arrays for one generation (parent-major, left to right)."""

    parent: np.ndarray  # index into previous generation, -1 for the root
    pos: np.ndarray     # map position within the parent's system
    types: np.ndarray
    system: np.ndarray  # system splitting this node, -1 when unknown
    rprod: np.ndarray   # cumulative ratio product
    mprod: np.ndarray   # cumulative weight product
    shift: np.ndarray   # cumulative affine offset

    @property
    def size(self) -> int:
        return self.types.shape[0]


class VTree:
    """A realized tree: environment sequence plus materialized generations."""

    def __init__(self, catalog: Catalog, v_types: int, root_type: int,
                 environments: tuple[Environment, ...], generations: list[Generation]):
        self.catalog = catalog
        self.v_types = v_types
        self.root_type = root_type
        self.environments = tuple(environments)
        self.generations = generations
        self.neck_levels = tuple(
            g for g in range(1, len(self.environments) + 1)
            if self.environments[g - 1].is_neck
        )

    @property
    def depth(self) -> int:
        """Deepest materialized generation."""
        return len(self.generations) - 1

    @property
    def env_levels(self) -> int:
        return len(self.environments)

    @property
    def node_count(self) -> int:
        return sum(g.size for g in self.generations)

    def node_path(self, level: int, index: int) -> tuple[int, ...]:
        """Child positions from the root down to the given node."""
        path = []
        for g in range(level, 0, -1):
            gen = self.generations[g]
            path.append(int(gen.pos[index]))
            index = int(gen.parent[index])
        return tuple(reversed(path))


def _require_positive_types(env: Environment, v_types: int, catalog: Catalog) -> None:
    if env.n_types != v_types:
        raise ValueError("environment type count does not match the tree")
    for v, j in enumerate(env.indices):
        if not 0 <= j < catalog.n_systems:
            raise ValueError(f"environment assigns unknown system {j} to type {v}")
        if len(env.child_types[v]) != catalog.systems[j].size:
            raise ValueError(f"environment row {v} does not match system {j} map count")
        if any(not 0 <= t < v_types for t in env.child_types[v]):
            raise ValueError(f"environment row {v} contains an invalid type")


def build_tree(catalog: Catalog, v_types: int, depth: int, *,
               root_type: int | None = None,
               rng: Xoshiro256StarStar | None = None,
               environments=None,
               env_levels: int | None = None,
               node_cap: int = DEFAULT_NODE_CAP) -> VTree:
    """Materialize a tree of the given depth.

    When ``environments`` is None they are sampled from ``rng``; the draw
    order is the root type first (only if ``root_type`` is None), then one
    environment per level. ``env_levels`` may exceed ``depth`` so that
    operations needing only environments can look past the materialized part.
    Raises ``TreeTooLargeError`` before allocating anything past ``node_cap``.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if env_levels is None:
        env_levels = depth
    if env_levels < depth:
        raise ValueError("env_levels must cover the materialized depth")

    if (environments is None or root_type is None) and rng is None:
        raise ValueError("rng is required when root type or environments are sampled")
    if root_type is None:
        root_type = rng.randint(v_types)
    if not 0 <= root_type < v_types:
        raise ValueError("root_type outside {0..V-1}")
    if environments is None:
        environments = tuple(sample_environment(catalog, v_types, rng) for _ in range(env_levels))
    else:
        environments = tuple(environments)
        if len(environments) < depth:
            raise ValueError("not enough environments for the requested depth")
    for env in environments:
        _require_positive_types(env, v_types, catalog)

    # Size precheck from per-type counts (Python ints, no overflow).
    counts = [0] * v_types
    counts[root_type] = 1
    total_nodes = 1
    for g in range(depth):
        env = environments[g]
        nxt = [0] * v_types
        for v in range(v_types):
            if counts[v]:
                for t in env.child_types[v]:
                    nxt[t] += counts[v]
        counts = nxt
        total_nodes += sum(counts)
        if total_nodes > node_cap:
            raise TreeTooLargeError(
                f"tree needs more than {node_cap} nodes by generation {g + 1}")

    root = Generation(
        parent=np.array([-1], np.int64),
        pos=np.array([-1], np.int64),
        types=np.array([root_type], np.int64),
        system=np.array([-1], np.int64),
        rprod=np.array([1.0]),
        mprod=np.array([1.0]),
        shift=np.array([0.0]),
    )
    generations = [root]
    for g in range(depth):
        env = environments[g]
        gen = generations[-1]
        sizes = np.array([catalog.systems[j].size for j in env.indices], np.int64)
        type_rows = np.concatenate([np.array(row, np.int64) for row in env.child_types])
        row_off = np.concatenate(([0], np.cumsum(sizes)[:-1]))
        fr = np.concatenate([[m.ratio for m in catalog.systems[j].maps] for j in env.indices])
        fm = np.concatenate([list(catalog.systems[j].weights) for j in env.indices])
        fc = np.concatenate([[m.offset for m in catalog.systems[j].maps] for j in env.indices])
        sysv = np.array(env.indices, np.int64)

        gen.system = sysv[gen.types]  # the system that splits this generation
        n_children = sizes[gen.types]
        total = int(n_children.sum())
        parent = np.repeat(np.arange(gen.size, dtype=np.int64), n_children)
        starts = np.concatenate(([0], np.cumsum(n_children)[:-1]))
        pos = np.arange(total, dtype=np.int64) - np.repeat(starts, n_children)
        slot = np.repeat(row_off[gen.types], n_children) + pos
        generations.append(Generation(
            parent=parent,
            pos=pos,
            types=type_rows[slot],
            system=np.full(total, -1, np.int64),
            rprod=gen.rprod[parent] * fr[slot],
            mprod=gen.mprod[parent] * fm[slot],
            shift=gen.rprod[parent] * fc[slot] + gen.shift[parent],
        ))
    return VTree(catalog, v_types, root_type, environments, generations)


# ---------------------------------------------------------------------------
# Cut sets

@dataclass
class CutSet:
    """Antichain of nodes where the ratio*weight product first drops
    below exp(-k) at a neck level, with its summary statistics."""

    k: int
    levels: np.ndarray      # neck level of each member
    node_index: np.ndarray  # index within its generation
    prev_neck: np.ndarray   # previous neck level (0 for the first)
    products: np.ndarray    # ratio*weight cumulative product
    size: int
    harmonic_scale: float   # M_k / sum of member products
    max_gap: int            # largest n(l) - n(l-1) over members

    def __iter__(self):
        for i in range(self.size):
            yield (int(self.levels[i]), int(self.node_index[i]),
                   int(self.prev_neck[i]), float(self.products[i]))


def cut_set(tree: VTree, k: int) -> CutSet:
    """Members, one per deep path, selected at neck levels by exp(-k)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return CutSet(0, np.zeros(1, np.int64), np.zeros(1, np.int64),
                      np.zeros(1, np.int64), np.ones(1), 1, 1.0, 0)
    thr = math.exp(-float(k))
    neck_set = set(l for l in tree.neck_levels if l <= tree.depth)

    levels, nodes, prevs, prods = [], [], [], []
    anchor = np.ones(1)  # product at the nearest neck at or above each node
    prev_neck = 0
    member_count = np.zeros(1, np.int64)
    for g in range(1, tree.depth + 1):
        gen = tree.generations[g]
        anchor = anchor[gen.parent]
        member_count = member_count[gen.parent]
        if g in neck_set:
            prod = gen.rprod * gen.mprod
            sel = (prod <= thr) & (anchor > thr)
            idx = np.nonzero(sel)[0]
            if idx.size:
                levels.append(np.full(idx.size, g, np.int64))
                nodes.append(idx.astype(np.int64))
                prevs.append(np.full(idx.size, prev_neck, np.int64))
                prods.append(prod[idx])
                member_count[idx] += 1
            anchor = prod
            prev_neck = g

    uncovered = anchor > thr
    if uncovered.any():
        extrema = scale_extrema(tree.catalog)
        worst = float(anchor[uncovered].max())
        shrink = -math.log(extrema.r_sup * extrema.m_sup)
        hint = max(1, math.ceil((k + math.log(worst)) / shrink))
        raise DepthExhaustedError(
            f"cut set {k} incomplete at depth {tree.depth}; "
            f"needs at least {hint} more levels", extra_depth_hint=hint)
    if not (member_count == 1).all():
        raise AssertionError("cut-set property violated: some path not covered exactly once")

    levels = np.concatenate(levels)
    nodes = np.concatenate(nodes)
    prevs = np.concatenate(prevs)
    prods = np.concatenate(prods)
    order = np.lexsort((nodes, levels))
    levels, nodes, prevs, prods = levels[order], nodes[order], prevs[order], prods[order]
    size = int(levels.shape[0])
    return CutSet(
        k=k, levels=levels, node_index=nodes, prev_neck=prevs, products=prods,
        size=size,
        harmonic_scale=size / float(prods.sum()),
        max_gap=int((levels - prevs).max()),
    )


# ---------------------------------------------------------------------------
# Block sums of (ratio*weight)**x at neck levels

def _env_weight_matrix(catalog: Catalog, env: Environment, x: float) -> np.ndarray:
    v_types = env.n_types
    w = np.zeros((v_types, v_types))
    for v, j in enumerate(env.indices):
        sys_ = catalog.systems[j]
        row = env.child_types[v]
        for i, m in enumerate(sys_.maps):
            w[v, row[i]] += (m.ratio * sys_.weights[i]) ** x
    return w


def _dp_log_sum(catalog: Catalog, v_types: int, start_type: int,
                environments, x: float) -> float:
    """log sum over paths of the (ratio*weight)**x products, renormalized
    per level so deep runs neither overflow nor underflow."""
    a = np.zeros(v_types)
    a[start_type] = 1.0
    acc = 0.0
    for env in environments:
        a = a @ _env_weight_matrix(catalog, env, x)
        s = float(a.sum())
        acc += math.log(s)
        a /= s
    return acc


@dataclass
class NeckSums:
    """Direct and block-factorized evaluations of the neck-level sums."""

    x: float
    k: int
    neck_levels: tuple[int, ...]
    block_log_sums: list[float]
    log_direct: float

    @property
    def log_block_product(self) -> float:
        return float(sum(self.block_log_sums))

    @property
    def direct_sum(self) -> float:
        return math.exp(self.log_direct)

    @property
    def block_product(self) -> float:
        return math.exp(self.log_block_product)

    @property
    def rel_gap(self) -> float:
        """Relative disagreement between the two evaluations."""
        return abs(self.log_direct - self.log_block_product) / max(1.0, abs(self.log_direct))


def scale_sum_at_neck(tree: VTree, x: float, k: int) -> NeckSums:
    """Sum of (ratio*weight)**x over the k-th neck generation, computed both
    straight through and as a product over neck-to-neck blocks.

    Only the environment sequence is consulted, so the generation itself
    need not be materialized.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    necks = tree.neck_levels
    if len(necks) < k:
        raise DepthExhaustedError(
            f"tree has {len(necks)} neck levels within {tree.env_levels} "
            f"environments, need {k}", extra_depth_hint=0)
    bounds = (0,) + tuple(necks[:k])
    blocks = []
    for j in range(1, k + 1):
        lo, hi = bounds[j - 1], bounds[j]
        if lo == 0:
            start = tree.root_type
        else:
            start = tree.environments[lo - 1].child_types[0][0]  # common neck type
        blocks.append(_dp_log_sum(tree.catalog, tree.v_types, start,
                                  tree.environments[lo:hi], x))
    direct = _dp_log_sum(tree.catalog, tree.v_types, tree.root_type,
                         tree.environments[:bounds[-1]], x)
    return NeckSums(x=x, k=k, neck_levels=tuple(necks[:k]),
                    block_log_sums=blocks, log_direct=direct)


def neck_subtree(tree: VTree, level: int, depth: int,
                 node_cap: int = DEFAULT_NODE_CAP) -> VTree:
    """The common subtree rooted at any node of a neck generation.

    All generation-``level`` nodes of a neck level share one type and all
    deeper environments, so their subtrees coincide; this builds that shared
    subtree once, materialized to ``depth``.
    """
    if level == 0:
        start = tree.root_type
    else:
        if level not in tree.neck_levels:
            raise ValueError(f"level {level} is not a neck level")
        start = tree.environments[level - 1].child_types[0][0]
    if level + depth > tree.env_levels:
        raise DepthExhaustedError(
            f"subtree at level {level} needs {depth} more environment levels",
            extra_depth_hint=level + depth - tree.env_levels)
    return build_tree(tree.catalog, tree.v_types, depth, root_type=start,
                      environments=tree.environments[level:level + depth],
                      node_cap=node_cap)


# ---------------------------------------------------------------------------
# Exports

def tree_to_jsonl(tree: VTree, fp) -> None:
    """One node per line: path, type, system index, ratio and weight products."""
    for level in range(tree.depth + 1):
        gen = tree.generations[level]
        for i in range(gen.size):
            sys_idx = int(gen.system[i])
            fp.write(json.dumps({
                "path": list(tree.node_path(level, i)),
                "type": int(gen.types[i]),
                "system": None if sys_idx < 0 else sys_idx,
                "r_product": float(gen.rprod[i]),
                "m_product": float(gen.mprod[i]),
            }, sort_keys=True))
            fp.write("\n")


def environments_to_obj(tree: VTree) -> list:
    return [
        {"indices": list(env.indices), "child_types": [list(r) for r in env.child_types]}
        for env in tree.environments
    ]
