"""Structural entropy and height-bounded coding tree construction.

The entropy of a graph under a partitioning tree is
    H = -sum over non-root tree nodes a of (g_a / 2m) * log2(V_a / V_parent)
where g_a counts edges leaving the vertex subset of a and V_a sums its
vertex degrees. Trees of a fixed height h are built greedily: pairwise
merging of edge-connected top-level subtrees by best entropy delta down to
a binary tree, then compression of internal nodes back to height h, then
insertion of entropy-neutral unary chains so every leaf sits at level 0.

Everything is deterministic: candidate deltas are rounded to 12 decimals
and ties break on node ids.
"""
from __future__ import annotations

import heapq
import itertools
import math
import random
import warnings
from dataclasses import dataclass, field

from .graphio import ConfigError, DocumentGraph

DELTA_DECIMALS = 12


class TreeStructureError(ValueError):
    """A coding tree violates a structural invariant."""


class OracleSizeError(ValueError):
    """Exhaustive search refused: too many vertices."""


@dataclass
class TreeNode:
    id: int
    parent: int | None
    children: list[int] = field(default_factory=list)
    level: int = 0
    leaf_token: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.leaf_token is not None


@dataclass
class CodingTree:
    doc_id: str
    height: int
    nodes: dict[int, TreeNode]
    root: int
    entropy_bits: float | None = None

    def leaves(self) -> list[TreeNode]:
        return [n for n in self.nodes.values() if n.is_leaf]

    def level_nodes(self, level: int) -> list[TreeNode]:
        return sorted((n for n in self.nodes.values() if n.level == level),
                      key=lambda n: n.id)

    def depth_of(self, node_id: int) -> int:
        d = 0
        cur = self.nodes[node_id]
        while cur.parent is not None:
            cur = self.nodes[cur.parent]
            d += 1
        return d

    def validate(self, graph: DocumentGraph | None = None, aligned: bool = True) -> None:
        roots = [n for n in self.nodes.values() if n.parent is None]
        if len(roots) != 1 or roots[0].id != self.root:
            raise TreeStructureError("tree must have exactly one parentless node, the root")
        for n in self.nodes.values():
            if n.parent is not None:
                p = self.nodes.get(n.parent)
                if p is None or n.id not in p.children:
                    raise TreeStructureError(f"node {n.id}: inconsistent parent link")
            for c in n.children:
                if c not in self.nodes or self.nodes[c].parent != n.id:
                    raise TreeStructureError(f"node {n.id}: inconsistent child link {c}")
            if not n.is_leaf and not n.children:
                raise TreeStructureError(f"internal node {n.id} has no children")
            if n.is_leaf and n.children:
                raise TreeStructureError(f"leaf node {n.id} has children")
        # the leaf sets of an internal node's children partition its own
        seen: set[int] = set()
        for leaf in self.leaves():
            if leaf.leaf_token in seen:
                raise TreeStructureError(f"duplicate leaf for token {leaf.leaf_token}")
            seen.add(leaf.leaf_token)
        if graph is not None:
            want = {t.id for t in graph.tokens}
            if seen != want:
                raise TreeStructureError(
                    f"leaves {sorted(seen)} do not match graph vertices {sorted(want)}")
        if aligned:
            if self.nodes[self.root].level != self.height:
                raise TreeStructureError("root level must equal tree height")
            for n in self.nodes.values():
                for c in n.children:
                    if self.nodes[c].level != n.level - 1:
                        raise TreeStructureError(
                            f"child {c} of node {n.id} not one level below")
            for leaf in self.leaves():
                if leaf.level != 0:
                    raise TreeStructureError(f"leaf {leaf.id} not at level 0")


def flat_tree(graph: DocumentGraph, height: int = 1) -> CodingTree:
    """All leaves directly under the root."""
    n = graph.num_tokens
    nodes = {i: TreeNode(id=i, parent=n, level=0, leaf_token=i) for i in range(n)}
    nodes[n] = TreeNode(id=n, parent=None, children=list(range(n)), level=1)
    return CodingTree(doc_id=graph.doc_id, height=1, nodes=nodes, root=n)


# -- entropy ----------------------------------------------------------------

class EntropyContext:
    """Per-tree-node cut and volume caches for one (graph, tree) pair."""

    def __init__(self, graph: DocumentGraph, tree: CodingTree):
        tree.validate(graph=graph, aligned=False)
        self.degrees = graph.degrees()
        self.m = len(graph.edges)
        self.vol: dict[int, int] = {}
        self.cut: dict[int, int] = {nid: 0 for nid in tree.nodes}

        order = _topo_leaves_up(tree)
        for nid in order:
            node = tree.nodes[nid]
            if node.is_leaf:
                self.vol[nid] = self.degrees[node.leaf_token]
                self.cut[nid] = self.degrees[node.leaf_token]
            else:
                self.vol[nid] = sum(self.vol[c] for c in node.children)
        if self.vol[tree.root] != 2 * self.m:
            raise TreeStructureError("root volume must equal 2m")
        for nid in order:
            node = tree.nodes[nid]
            if not node.is_leaf:
                assert self.vol[nid] == sum(self.vol[c] for c in node.children)

        # an edge crosses every tree node strictly below the LCA of its leaves
        leaf_of = {n.leaf_token: n.id for n in tree.leaves()}
        depth = {nid: tree.depth_of(nid) for nid in tree.nodes}
        parent = {nid: tree.nodes[nid].parent for nid in tree.nodes}
        for (u, v) in graph.edges:
            a, b = leaf_of[u], leaf_of[v]
            while a != b:
                if depth[a] >= depth[b]:
                    self.cut[a] += 0 if tree.nodes[a].is_leaf else 1
                    a = parent[a]
                else:
                    self.cut[b] += 0 if tree.nodes[b].is_leaf else 1
                    b = parent[b]


def _topo_leaves_up(tree: CodingTree) -> list[int]:
    order: list[int] = []
    stack = [tree.root]
    while stack:
        nid = stack.pop()
        order.append(nid)
        stack.extend(tree.nodes[nid].children)
    order.reverse()
    return order


def structural_entropy(graph: DocumentGraph, tree: CodingTree,
                       ctx: EntropyContext | None = None) -> float:
    """Entropy in bits of the graph under the given partitioning tree."""
    if ctx is None:
        ctx = EntropyContext(graph, tree)
    if ctx.m == 0:
        warnings.warn(f"doc {graph.doc_id!r}: graph has no edges; entropy defined as 0",
                      RuntimeWarning, stacklevel=2)
        return 0.0
    two_m = 2.0 * ctx.m
    h = 0.0
    for nid, node in tree.nodes.items():
        if node.parent is None:
            continue
        g = ctx.cut[nid]
        if g == 0:
            continue
        h -= (g / two_m) * math.log2(ctx.vol[nid] / ctx.vol[node.parent])
    return h


def _term(g: float, v: float, v_parent: float, two_m: float) -> float:
    if g == 0:
        return 0.0
    return -(g / two_m) * math.log2(v / v_parent)


# -- greedy construction ----------------------------------------------------

class _Work:
    """Mutable tree used during merge/compress; ids stable, leaves 0..n-1."""

    __slots__ = ("parent", "children", "vol", "cut", "leaf_token", "next_id")

    def __init__(self, n: int):
        self.parent: dict[int, int | None] = {}
        self.children: dict[int, list[int]] = {}
        self.vol: dict[int, int] = {}
        self.cut: dict[int, int] = {}
        self.leaf_token: dict[int, int | None] = {}
        self.next_id = n

    def new_node(self) -> int:
        nid = self.next_id
        self.next_id += 1
        return nid


def sema(graph: DocumentGraph, height: int,
         merge_trace: list | None = None) -> CodingTree:
    """Greedy entropy-minimizing coding tree of exactly the given height.

    With merge_trace a list, appends (delta, running_entropy,
    recomputed_entropy) after every applied merge; slow, test use only.
    """
    if height < 2:
        raise ConfigError(f"coding tree height must be >= 2, got {height}")
    graph.validate()
    n = graph.num_tokens
    degrees = graph.degrees()
    m = len(graph.edges)

    if m == 0:
        # no randomness to encode; flat tree padded to height
        t = flat_tree(graph)
        t = level_align(t, height)
        t.entropy_bits = 0.0
        return t

    two_m = 2.0 * m
    work = _Work(n)
    active: set[int] = set()
    isolated: list[int] = []
    for i in range(n):
        work.parent[i] = None
        work.children[i] = []
        work.vol[i] = degrees[i]
        work.cut[i] = degrees[i]
        work.leaf_token[i] = i
        if degrees[i] == 0:
            isolated.append(i)
        else:
            active.add(i)

    # edge multiplicity between current top-level subtrees
    between: dict[int, dict[int, int]] = {i: {} for i in active}
    for (u, v) in graph.edges:
        between[u][v] = between[u].get(v, 0) + 1
        between[v][u] = between[v].get(u, 0) + 1

    def merge_delta(a: int, b: int) -> float:
        v1, v2 = work.vol[a], work.vol[b]
        g1, g2 = work.cut[a], work.cut[b]
        c = between[a].get(b, 0)
        v12 = v1 + v2
        g12 = g1 + g2 - 2 * c
        new = (_term(g1, v1, v12, two_m) + _term(g2, v2, v12, two_m)
               + _term(g12, v12, two_m, two_m))
        old = _term(g1, v1, two_m, two_m) + _term(g2, v2, two_m, two_m)
        return new - old

    def key(delta: float, a: int, b: int):
        return (round(delta, DELTA_DECIMALS), min(a, b), max(a, b))

    heap: list[tuple] = []
    for a in sorted(active):
        for b in between[a]:
            if a < b:
                heapq.heappush(heap, key(merge_delta(a, b), a, b))

    merged: set[int] = set()
    entropy_now = sum(_term(degrees[i], degrees[i], two_m, two_m) for i in range(n))

    def apply_merge(a: int, b: int, delta: float) -> int:
        nonlocal entropy_now
        nid = work.new_node()
        work.parent[a] = nid
        work.parent[b] = nid
        work.parent[nid] = None
        work.children[nid] = [a, b]
        work.children.setdefault(a, [])
        work.children.setdefault(b, [])
        c = between[a].get(b, 0)
        work.vol[nid] = work.vol[a] + work.vol[b]
        work.cut[nid] = work.cut[a] + work.cut[b] - 2 * c
        work.leaf_token[nid] = None
        row: dict[int, int] = {}
        for src in (a, b):
            for t, cnt in between[src].items():
                if t in (a, b):
                    continue
                row[t] = row.get(t, 0) + cnt
        between[nid] = row
        for t in row:
            between[t].pop(a, None)
            between[t].pop(b, None)
            between[t][nid] = row[t]
        del between[a], between[b]
        active.discard(a)
        active.discard(b)
        active.add(nid)
        merged.add(a)
        merged.add(b)
        entropy_now += delta
        if merge_trace is not None:
            snapshot = _work_snapshot(graph, work, active, isolated)
            merge_trace.append((delta, entropy_now,
                                structural_entropy(graph, snapshot)))
        return nid

    while len(active) > 1:
        if heap:
            delta, a, b = heapq.heappop(heap)
            if a in merged or b in merged:
                continue
            nid = apply_merge(a, b, delta)
            for t in sorted(between[nid]):
                heapq.heappush(heap, key(merge_delta(nid, t), nid, t))
        else:
            # disconnected remainder: merge smallest combined volume first
            pair = min(((work.vol[a] + work.vol[b], min(a, b), max(a, b))
                        for a, b in itertools.combinations(sorted(active), 2)))
            _, a, b = pair
            apply_merge(a, b, merge_delta(a, b))

    top = next(iter(active))
    if work.leaf_token[top] is not None:
        root = work.new_node()
        work.parent[root] = None
        work.children[root] = [top]
        work.parent[top] = root
        work.vol[root] = work.vol[top]
        work.cut[root] = 0
        work.leaf_token[root] = None
    else:
        root = top
    for i in isolated:
        work.parent[i] = root
        work.children[root].append(i)

    _compress_to_height(work, root, height, two_m)
    tree = _work_to_tree(graph.doc_id, work, root, height)
    tree = level_align(tree, height)
    tree.entropy_bits = structural_entropy(graph, tree)
    tree.validate(graph=graph, aligned=True)
    return tree


def _work_snapshot(graph: DocumentGraph, work: _Work, active: set[int],
                   isolated: list[int]) -> CodingTree:
    """Explicit tree for the current merge-phase state: tops under a root."""
    nodes: dict[int, TreeNode] = {}
    for nid, par in work.parent.items():
        nodes[nid] = TreeNode(id=nid, parent=par, children=list(work.children.get(nid, [])),
                              leaf_token=work.leaf_token[nid])
    root_id = work.next_id
    tops = sorted(active) + [i for i in isolated if nodes[i].parent is None]
    nodes[root_id] = TreeNode(id=root_id, parent=None, children=tops)
    for t in tops:
        nodes[t].parent = root_id
    t = CodingTree(doc_id=graph.doc_id, height=0, nodes=nodes, root=root_id)
    return t


def _height_of(work: _Work, root: int) -> int:
    def depth(nid: int) -> int:
        kids = work.children.get(nid, [])
        if not kids:
            return 0
        return 1 + max(depth(c) for c in kids)
    return depth(root)


def _compress_to_height(work: _Work, root: int, height: int, two_m: float) -> None:
    while _height_of(work, root) > height:
        best = None
        for nid, par in work.parent.items():
            if par is None or work.leaf_token[nid] is not None:
                continue
            vc, vp = work.vol[nid], work.vol[par]
            if vc == 0:
                delta = 0.0
            else:
                g_kids = sum(work.cut[c] for c in work.children[nid])
                delta = ((work.cut[nid] - g_kids) / two_m) * math.log2(vc / vp)
            cand = (round(delta, DELTA_DECIMALS), min(par, nid), max(par, nid), nid, par)
            if best is None or cand < best:
                best = cand
        _, _, _, child, parent = best
        kids = work.children.pop(child)
        slot = work.children[parent].index(child)
        work.children[parent][slot:slot + 1] = kids
        for c in kids:
            work.parent[c] = parent
        del work.parent[child], work.vol[child], work.cut[child], work.leaf_token[child]


def _work_to_tree(doc_id: str, work: _Work, root: int, height: int) -> CodingTree:
    nodes = {nid: TreeNode(id=nid, parent=work.parent[nid],
                           children=list(work.children.get(nid, [])),
                           leaf_token=work.leaf_token[nid])
             for nid in work.parent}
    t = CodingTree(doc_id=doc_id, height=height, nodes=nodes, root=root)
    _assign_levels(t)
    return t


def _assign_levels(tree: CodingTree) -> None:
    """Level = height - depth; only consistent once the tree is aligned."""
    depth = {tree.root: 0}
    stack = [tree.root]
    maxd = 0
    while stack:
        nid = stack.pop()
        for c in tree.nodes[nid].children:
            depth[c] = depth[nid] + 1
            maxd = max(maxd, depth[c])
            stack.append(c)
    tree.height = maxd
    for nid, d in depth.items():
        tree.nodes[nid].level = maxd - d


def level_align(tree: CodingTree, height: int) -> CodingTree:
    """Pad every leaf with a unary chain so all root-to-leaf paths have
    length exactly `height`; structural entropy is unchanged."""
    nodes = {nid: TreeNode(id=n.id, parent=n.parent, children=list(n.children),
                           level=n.level, leaf_token=n.leaf_token)
             for nid, n in tree.nodes.items()}
    out = CodingTree(doc_id=tree.doc_id, height=tree.height, nodes=nodes, root=tree.root)
    cur_height = max((out.depth_of(l.id) for l in out.leaves()), default=0)
    if cur_height > height:
        raise TreeStructureError(
            f"tree height {cur_height} exceeds target {height}; compress first")
    next_id = max(nodes) + 1
    for leaf in sorted(out.leaves(), key=lambda n: n.id):
        need = height - out.depth_of(leaf.id)
        above = leaf.id
        parent = nodes[above].parent
        for _ in range(need):
            nid = next_id
            next_id += 1
            nodes[nid] = TreeNode(id=nid, parent=parent, children=[above])
            nodes[above].parent = nid
            above = nid
        if need:
            slot = nodes[parent].children.index(leaf.id)
            nodes[parent].children[slot] = above
    out.height = height
    _assign_levels(out)
    if out.height != height:
        raise TreeStructureError("alignment failed to reach target height")
    return out


def random_tree(graph: DocumentGraph, height: int, seed: int) -> CodingTree:
    """Baseline tree: random pairwise grouping per layer, all top nodes under
    the root; same height as sema output, no entropy guidance."""
    if height < 2:
        raise ConfigError(f"coding tree height must be >= 2, got {height}")
    graph.validate()
    rng = random.Random(seed)
    n = graph.num_tokens
    nodes = {i: TreeNode(id=i, parent=None, level=0, leaf_token=i) for i in range(n)}
    next_id = n
    layer = sorted(nodes)
    for lvl in range(1, height):
        order = list(layer)
        rng.shuffle(order)
        new_layer = []
        while order:
            group = [order.pop()] if len(order) == 1 else [order.pop(), order.pop()]
            nid = next_id
            next_id += 1
            nodes[nid] = TreeNode(id=nid, parent=None, children=sorted(group), level=lvl)
            for c in group:
                nodes[c].parent = nid
            new_layer.append(nid)
        layer = new_layer
    root = next_id
    nodes[root] = TreeNode(id=root, parent=None, children=sorted(layer), level=height)
    for c in layer:
        nodes[c].parent = root
    t = CodingTree(doc_id=graph.doc_id, height=height, nodes=nodes, root=root)
    t.entropy_bits = structural_entropy(graph, t) if graph.edges else 0.0
    t.validate(graph=graph, aligned=True)
    return t


# -- exhaustive oracle -------------------------------------------------------

def _set_partitions(items: list[int]):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def partition_tree(graph: DocumentGraph, blocks: list[list[int]]) -> CodingTree:
    """Two-level tree with one internal node per block."""
    n = graph.num_tokens
    nodes = {i: TreeNode(id=i, parent=None, level=0, leaf_token=i) for i in range(n)}
    root = n + len(blocks)
    for k, block in enumerate(blocks):
        nid = n + k
        nodes[nid] = TreeNode(id=nid, parent=root, children=sorted(block), level=1)
        for v in block:
            nodes[v].parent = nid
    nodes[root] = TreeNode(id=root, parent=None,
                           children=list(range(n, n + len(blocks))), level=2)
    return CodingTree(doc_id=graph.doc_id, height=2, nodes=nodes, root=root)


def oracle_min_entropy(graph: DocumentGraph, height: int = 2) -> tuple[CodingTree, float]:
    """Exhaustive minimum over all two-level partition trees; small graphs only."""
    if height != 2:
        raise ConfigError("exhaustive search supports height 2 only")
    n = graph.num_tokens
    if n > 8:
        raise OracleSizeError(f"refusing exhaustive search over {n} > 8 vertices")
    best_tree = None
    best_val = math.inf
    for part in _set_partitions(list(range(n))):
        blocks = sorted([sorted(b) for b in part])
        t = partition_tree(graph, blocks)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            val = structural_entropy(graph, t)
        if val < best_val - 1e-15:
            best_val = val
            best_tree = t
    best_tree.entropy_bits = best_val
    return best_tree, best_val


# -- interchange -------------------------------------------------------------

def tree_to_dict(tree: CodingTree) -> dict:
    return {
        "doc_id": tree.doc_id,
        "height": tree.height,
        "nodes": [{"id": n.id, "parent": n.parent, "level": n.level,
                   "leaf_token": n.leaf_token}
                  for n in sorted(tree.nodes.values(), key=lambda x: x.id)],
        "entropy_bits": tree.entropy_bits,
    }


def tree_from_dict(obj: dict) -> CodingTree:
    for fld in ("doc_id", "height", "nodes"):
        if fld not in obj:
            raise TreeStructureError(f"missing field {fld!r}")
    nodes: dict[int, TreeNode] = {}
    for rec in obj["nodes"]:
        nodes[rec["id"]] = TreeNode(id=rec["id"], parent=rec["parent"],
                                    level=rec["level"], leaf_token=rec["leaf_token"])
    root = None
    for n in nodes.values():
        if n.parent is not None:
            nodes[n.parent].children.append(n.id)
        else:
            root = n.id
    for n in nodes.values():
        n.children.sort()
    t = CodingTree(doc_id=obj["doc_id"], height=obj["height"], nodes=nodes,
                   root=root, entropy_bits=obj.get("entropy_bits"))
    t.validate(aligned=True)
    return t
