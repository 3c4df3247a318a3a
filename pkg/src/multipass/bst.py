"""Path-balanced binary search trees.

An access walks the search path from the root to ``x`` and rebuilds the
nodes of that path into a complete balanced tree, re-attaching every
off-path subtree at the unique position that keeps key order.

Three routes to the same result are provided:

``access_pathbalance``
    direct array rebuild, linear in the path length.
``analysis_access``
    the decomposition used for the amortized bound: repeatedly rotate the
    key median of the remaining path to its top, turn the monotone side that
    does not contain ``x`` into a balanced tree by a multipass transformation,
    and continue on the side that does.  Paths of at most ``tau`` nodes are
    finished in two phases (all median rotations first, then all multipass
    transformations).
``access_simplified``
    rotate ``x`` to the root, then multipass both monotone paths below it.
    Its result is at most one level deeper than the other two.

Medians are lower medians: of ``k`` sorted keys the one at 0-based index
``(k - 1) // 2``.  The balanced shape produced by all routes is fixed by that
rule together with the fill order of multipass transformations: a chain of
right-child links ends as a complete tree whose last level fills from the
left, a chain of left-child links as its mirror image.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .potential import PotentialConfig, delta_phi_batch, f_val, path_potential, path_potential_bound

__all__ = ["KeyNotFound", "NotMonotone", "BstNode", "RotationEvent", "AccessStats", "PathBalancedBst",
           "multipass_round_sizes", "balanced_shape"]


class KeyNotFound(KeyError):
    pass


class NotMonotone(ValueError):
    pass


@dataclass(frozen=True)
class BstNode:
    handle: int
    key: int
    left: int
    right: int
    subtree_size: int


@dataclass(frozen=True)
class RotationEvent:
    """One single rotation, with a, b, c in the roles of a heap link.

    ``upper`` was the parent before the rotation, ``lower`` the child that
    moved up.  ``stage`` is one of ``rotate``, ``median`` or ``multipass``;
    ``round`` is the 0-based multipass round (-1 otherwise).
    """

    a: int
    b: int
    c: int
    upper_key: int
    lower_key: int
    stage: str
    round: int
    phase: str


@dataclass
class AccessStats:
    path_length: int
    events: list = field(default_factory=list)
    delta_phi: float = 0.0
    delta_psi_prime: float = 0.0
    # (phi(P), bound) for every monotone path handed to a multipass transformation
    path_bounds: list = field(default_factory=list)
    # change of the sum-of-logs potential caused by each median rotation
    median_psi: list = field(default_factory=list)
    long_steps: int = 0

    @property
    def rotations(self) -> int:
        return len(self.events)

    def abc(self):
        if not self.events:
            z = np.zeros(0, np.int64)
            return z, z, z
        arr = np.array([(e.a, e.b, e.c) for e in self.events], dtype=np.int64)
        return arr[:, 0], arr[:, 1], arr[:, 2]


def multipass_round_sizes(length: int) -> list[int]:
    """Rotations per round when a monotone path of ``length`` nodes is balanced.

    Round 0 trims the path to ``2**j - 1`` nodes and may be empty; the
    remaining rounds rotate ``2**(j-1) - 1``, ``2**(j-2) - 1``, ... edges.
    """
    if length < 1:
        raise ValueError("path length must be positive")
    j = (length + 1).bit_length() - 1
    alpha = length - (2**j - 1)
    return [alpha] + [2 ** (j - i + 1) - 1 for i in range(2, j + 1)]


def _packed(lo: int, hi: int, fill_left: bool, left_of: dict, right_of: dict) -> int:
    """Complete tree on ranks lo..hi whose last level fills from the given side."""
    m = hi - lo + 1
    if m <= 0:
        return -1
    h = (m + 1).bit_length() - 1
    extra = m - (2**h - 1)
    core = 2 ** (h - 1) - 1
    half = 2 ** (h - 1)
    left_extra = min(extra, half) if fill_left else max(0, extra - half)
    r = lo + core + left_extra
    left_of[r] = _packed(lo, r - 1, fill_left, left_of, right_of)
    right_of[r] = _packed(r + 1, hi, fill_left, left_of, right_of)
    return r


def balanced_shape(count: int, target: int):
    """Shape over ranks ``0..count-1`` produced by path-balancing toward rank ``target``.

    Returns ``(root, left_of, right_of)`` with -1 for missing children.
    """
    left_of: dict = {}
    right_of: dict = {}

    def spine(lo, hi):
        m = lo + (hi - lo) // 2
        if target == m:
            left_of[m] = _packed(lo, m - 1, True, left_of, right_of)
            right_of[m] = _packed(m + 1, hi, False, left_of, right_of)
        elif target < m:
            left_of[m] = spine(lo, m - 1)
            right_of[m] = _packed(m + 1, hi, False, left_of, right_of)
        else:
            left_of[m] = _packed(lo, m - 1, True, left_of, right_of)
            right_of[m] = spine(m + 1, hi)
        return m

    root = spine(0, count - 1)
    return root, left_of, right_of


class PathBalancedBst:
    """Binary search tree over unique integer keys, stored in parallel lists."""

    def __init__(self):
        self.key: list[int] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.parent: list[int] = []
        self.size: list[int] = []
        self.root = -1

    # construction

    @classmethod
    def from_keys(cls, keys) -> PathBalancedBst:
        """Plain (unbalanced) BST insertion in the given order."""
        t = cls()
        for k in keys:
            t._insert(int(k))
        return t

    @classmethod
    def from_sorted(cls, keys) -> PathBalancedBst:
        """Perfectly balanced tree over ``keys`` (sorted on entry)."""
        keys = sorted(int(k) for k in keys)
        t = cls()
        n = len(keys)
        t.key = keys
        t.left = [-1] * n
        t.right = [-1] * n
        t.parent = [-1] * n
        t.size = [1] * n
        if n == 0:
            return t

        def build(lo, hi, par):
            if lo > hi:
                return -1
            m = lo + (hi - lo) // 2
            t.parent[m] = par
            t.left[m] = build(lo, m - 1, m)
            t.right[m] = build(m + 1, hi, m)
            t.size[m] = hi - lo + 1
            return m

        t.root = build(0, n - 1, -1)
        return t

    @classmethod
    def monotone_path(cls, n: int, side: str = "left") -> PathBalancedBst:
        """Keys 0..n-1 on a single path; ``side="left"`` puts key 0 deepest."""
        t = cls()
        t.key = list(range(n))
        t.left = [-1] * n
        t.right = [-1] * n
        t.parent = [-1] * n
        t.size = [0] * n
        order = range(n - 1, -1, -1) if side == "left" else range(n)
        prev = -1
        for depth, v in enumerate(order):
            t.size[v] = n - depth
            t.parent[v] = prev
            if prev >= 0:
                if side == "left":
                    t.left[prev] = v
                else:
                    t.right[prev] = v
            prev = v
        t.root = n - 1 if side == "left" else 0
        if n == 0:
            t.root = -1
        return t

    def _insert(self, k: int):
        u = self.root
        p = -1
        while u >= 0:
            if k == self.key[u]:
                raise ValueError(f"duplicate key {k}")
            p = u
            u = self.left[u] if k < self.key[u] else self.right[u]
        v = len(self.key)
        self.key.append(k)
        self.left.append(-1)
        self.right.append(-1)
        self.parent.append(p)
        self.size.append(1)
        if p < 0:
            self.root = v
            return
        if k < self.key[p]:
            self.left[p] = v
        else:
            self.right[p] = v
        while p >= 0:
            self.size[p] += 1
            p = self.parent[p]

    def copy(self) -> PathBalancedBst:
        t = PathBalancedBst()
        t.key = self.key[:]
        t.left = self.left[:]
        t.right = self.right[:]
        t.parent = self.parent[:]
        t.size = self.size[:]
        t.root = self.root
        return t

    # queries

    def __len__(self):
        return self.size[self.root] if self.root >= 0 else 0

    def node(self, v: int) -> BstNode:
        return BstNode(v, self.key[v], self.left[v], self.right[v], self.size[v])

    def find(self, k: int) -> int:
        u = self.root
        while u >= 0:
            ku = self.key[u]
            if k == ku:
                return u
            u = self.left[u] if k < ku else self.right[u]
        raise KeyNotFound(k)

    def search_path(self, k: int, top: int | None = None) -> list[int]:
        """Nodes from ``top`` (default the root) down to the node holding ``k``."""
        u = self.root if top is None else top
        path = []
        while u >= 0:
            path.append(u)
            ku = self.key[u]
            if k == ku:
                return path
            u = self.left[u] if k < ku else self.right[u]
        raise KeyNotFound(k)

    def depth(self, v: int) -> int:
        d = 0
        while self.parent[v] >= 0:
            v = self.parent[v]
            d += 1
        return d

    def inorder(self) -> list[int]:
        out = []
        stack = []
        u = self.root
        while stack or u >= 0:
            while u >= 0:
                stack.append(u)
                u = self.left[u]
            u = stack.pop()
            out.append(self.key[u])
            u = self.right[u]
        return out

    def structure(self):
        return self.root, tuple(self.left), tuple(self.right)

    def median_of_path(self, path) -> int:
        ordered = sorted(path, key=self.key.__getitem__)
        return ordered[(len(ordered) - 1) // 2]

    def _sz(self, v):
        return self.size[v] if v >= 0 else 0

    # potential helpers

    def potential(self, cfg: PotentialConfig) -> float:
        total = 0.0
        for v in range(len(self.key)):
            p = self.parent[v]
            if p >= 0:
                total += f_val(self.size[p] / self.size[v], cfg)
        return total

    def _local_phi(self, nodes, cfg):
        total = 0.0
        for v in nodes:
            p = self.parent[v]
            if p >= 0:
                total += f_val(self.size[p] / self.size[v], cfg)
        return total

    def _psi_prime(self, nodes):
        return math.fsum(math.log2(self.size[v]) for v in nodes)

    # rotations

    def _rotate_up(self, v: int, stats: AccessStats | None, stage: str, rnd: int, phase: str):
        u = self.parent[v]
        g = self.parent[u]
        left, right, parent = self.left, self.right, self.parent
        if left[u] == v:
            mid = right[v]
            a, b, c = self._sz(right[u]), self._sz(mid), self._sz(left[v])
            left[u] = mid
            right[v] = u
        else:
            mid = left[v]
            a, b, c = self._sz(left[u]), self._sz(mid), self._sz(right[v])
            right[u] = mid
            left[v] = u
        if mid >= 0:
            parent[mid] = u
        parent[u] = v
        parent[v] = g
        if g < 0:
            self.root = v
        elif left[g] == u:
            left[g] = v
        else:
            right[g] = v
        self.size[v] = self.size[u]
        self.size[u] = 1 + a + b
        if stats is not None:
            stats.events.append(RotationEvent(a, b, c, self.key[u], self.key[v], stage, rnd, phase))

    def _raise_to(self, v: int, top: int, stats, stage, phase):
        above = self.parent[top]
        while self.parent[v] != above:
            self._rotate_up(v, stats, stage, -1, phase)

    def rotate_to_root(self, v: int, stats: AccessStats | None = None) -> None:
        while self.parent[v] >= 0:
            self._rotate_up(v, stats, "rotate", -1, "simplified")

    # multipass transformation

    def chain(self, top: int, orientation: str, length: int | None = None) -> list[int]:
        step = self.right if orientation == "right" else self.left
        out = [top]
        while (length is None or len(out) < length) and step[out[-1]] >= 0:
            out.append(step[out[-1]])
        if length is not None and len(out) < length:
            raise NotMonotone(f"no monotone {orientation} path of {length} nodes below key {self.key[top]}")
        return out

    def multipass_transform(self, top: int, orientation: str | None = None, length: int | None = None,
                            stats: AccessStats | None = None, phase: str = "multipass",
                            cfg: PotentialConfig | None = None) -> int:
        """Balance the monotone path starting at ``top``; returns the new top node.

        ``orientation`` is ``"right"`` (each node is the right child of the
        previous one) or ``"left"``; if omitted it is inferred from ``top``'s
        only child.  ``length`` defaults to the whole monotone chain.
        """
        if orientation is None:
            if self.left[top] >= 0 and self.right[top] >= 0:
                if length is None or length > 1:
                    raise NotMonotone("cannot infer orientation: node has two children")
            orientation = "left" if self.left[top] >= 0 else "right"
        if orientation not in ("left", "right"):
            raise ValueError("orientation must be 'left' or 'right'")
        nodes = self.chain(top, orientation, length)
        if stats is not None and cfg is not None and len(nodes) > 1:
            sizes = [self.size[v] for v in nodes]
            stats.path_bounds.append(
                (path_potential(sizes, cfg), path_potential_bound(len(nodes), sizes[0], cfg))
            )
        for rnd, count in enumerate(multipass_round_sizes(len(nodes))):
            moved = []
            for i in range(count):
                self._rotate_up(nodes[2 * i + 1], stats, "multipass", rnd, phase)
                moved.append(nodes[2 * i + 1])
            nodes = moved + nodes[2 * count:]
        return nodes[0]

    # accesses

    def _finish(self, stats: AccessStats, path, psi_before, cfg):
        stats.delta_psi_prime = self._psi_prime(path) - psi_before
        if cfg is not None and stats.events:
            a, b, c = stats.abc()
            stats.delta_phi = float(np.sum(delta_phi_batch(a, b, c, cfg)))
        return stats

    def access_simplified(self, k: int, cfg: PotentialConfig | None = None) -> AccessStats:
        path = self.search_path(k)
        x = path[-1]
        stats = AccessStats(len(path))
        psi_before = self._psi_prime(path)
        smaller = sum(1 for v in path if self.key[v] < k)
        larger = len(path) - 1 - smaller
        self.rotate_to_root(x, stats)
        if smaller:
            self.multipass_transform(self.left[x], "right", smaller, stats, "simplified", cfg)
        if larger:
            self.multipass_transform(self.right[x], "left", larger, stats, "simplified", cfg)
        return self._finish(stats, path, psi_before, cfg)

    def analysis_access(self, k: int, tau: int | None = None, cfg: PotentialConfig | None = None) -> AccessStats:
        """Path-balance by the median decomposition; the final tree equals :meth:`access_pathbalance`."""
        if tau is None:
            tau = self.default_tau()
        path = self.search_path(k)
        stats = AccessStats(len(path))
        psi_before = self._psi_prime(path)
        self._decompose(path, tau, stats, cfg)
        return self._finish(stats, path, psi_before, cfg)

    def short_path_transform(self, k: int, cfg: PotentialConfig | None = None) -> AccessStats:
        """Two-phase rebuild of the whole search path, regardless of its length."""
        path = self.search_path(k)
        stats = AccessStats(len(path))
        psi_before = self._psi_prime(path)
        self._decompose(path, len(path), stats, cfg)
        return self._finish(stats, path, psi_before, cfg)

    def default_tau(self) -> int:
        return max(1, int(math.floor(math.log2(max(len(self), 1)))))

    def _decompose(self, path, tau, stats, cfg):
        x = path[-1]
        k = self.key[x]
        n = len(self)
        log_n = math.log2(n) if n > 1 else 0.0
        deferred = []
        while True:
            short = len(path) <= tau
            phase = "short" if short else "long"
            if not short:
                stats.long_steps += 1
            m = self.median_of_path(path)
            top = path[0]
            changed = path[: path.index(m) + 1]
            psi0 = self._psi_prime(changed)
            self._raise_to(m, top, stats, "median", phase)
            stats.median_psi.append((self._psi_prime(changed) - psi0, log_n))
            km = self.key[m]
            smaller = sum(1 for v in path if self.key[v] < km)
            larger = len(path) - 1 - smaller
            sides = []
            if k <= km and larger:
                sides.append((self.right[m], "left", larger))
            if k >= km and smaller:
                sides.append((self.left[m], "right", smaller))
            if short:
                deferred.extend(sides)
            else:
                for side in sides:
                    self.multipass_transform(*side, stats=stats, phase=phase, cfg=cfg)
            if m == x:
                break
            path = self.search_path(k, self.left[m] if k < km else self.right[m])
        for side in deferred:
            self.multipass_transform(*side, stats=stats, phase="short", cfg=cfg)

    def access_pathbalance(self, k: int, cfg: PotentialConfig | None = None) -> AccessStats:
        """Direct rebuild of the search path into the balanced shape."""
        path = self.search_path(k)
        stats = AccessStats(len(path))
        if len(path) == 1:
            return stats
        left, right, parent, key = self.left, self.right, self.parent, self.key
        psi_before = self._psi_prime(path)
        on_path = set(path)
        touched = set(path)
        for v in path:
            touched.update(c for c in (left[v], right[v]) if c >= 0)
        phi_before = self._local_phi(touched, cfg) if cfg is not None else 0.0

        above = parent[path[0]]
        ordered = sorted(path, key=key.__getitem__)
        rank = {v: r for r, v in enumerate(ordered)}
        gaps = [-1] * (len(path) + 1)
        for v in path:
            r = rank[v]
            if left[v] >= 0 and left[v] not in on_path:
                gaps[r] = left[v]
            if right[v] >= 0 and right[v] not in on_path:
                gaps[r + 1] = right[v]

        root_rank, left_of, right_of = balanced_shape(len(path), rank[path[-1]])

        def attach(r, lo, hi):
            # ranks lo..hi form the subtree at rank r; returns its size
            v = ordered[r]
            lr, rr = left_of[r], right_of[r]
            if lr >= 0:
                lc = ordered[lr]
                s_left = attach(lr, lo, r - 1)
            else:
                lc = gaps[r]
                s_left = self._sz(lc)
            if rr >= 0:
                rc = ordered[rr]
                s_right = attach(rr, r + 1, hi)
            else:
                rc = gaps[r + 1]
                s_right = self._sz(rc)
            left[v] = lc
            right[v] = rc
            if lc >= 0:
                parent[lc] = v
            if rc >= 0:
                parent[rc] = v
            self.size[v] = 1 + s_left + s_right
            return self.size[v]

        attach(root_rank, 0, len(path) - 1)
        new_top = ordered[root_rank]
        parent[new_top] = above
        if above < 0:
            self.root = new_top
        elif left[above] == path[0]:
            left[above] = new_top
        else:
            right[above] = new_top

        stats.delta_psi_prime = self._psi_prime(path) - psi_before
        if cfg is not None:
            stats.delta_phi = self._local_phi(touched, cfg) - phi_before
        return stats

    # validation

    def check(self) -> None:
        if self.root < 0:
            return
        assert self.parent[self.root] == -1
        order = []
        stack = [(self.root, None, None)]
        while stack:
            v, lo, hi = stack.pop()
            k = self.key[v]
            assert (lo is None or k > lo) and (hi is None or k < hi), f"order violated at key {k}"
            order.append(v)
            for c, clo, chi in ((self.left[v], lo, k), (self.right[v], k, hi)):
                if c >= 0:
                    assert self.parent[c] == v, f"parent pointer wrong below key {k}"
                    stack.append((c, clo, chi))
        assert len(order) == len(self.key), "unreachable nodes"
        for v in reversed(order):
            assert self.size[v] == 1 + self._sz(self.left[v]) + self._sz(self.right[v]), "size mismatch"
