"""Multipass pairing heap stored in leftmost-child / next-sibling form.

Nodes live in parallel numpy arrays.  ``left[v]`` is the leftmost child of
``v`` and ``right[v]`` its next sibling, so the arrays describe the binary
view directly; ``size[v]`` is the binary-view subtree size.  Handles returned
by :meth:`PairingHeap.insert` are array indices and stay valid until the node
is deleted.

delete-min removes the root and combines its children by repeated pairing
rounds: each round links the 1st with the 2nd root, the 3rd with the 4th and
so on, leaving an odd last root alone, until one root remains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._accel import njit
from .potential import PotentialConfig, delta_phi_batch, f_val

__all__ = ["EmptyHeap", "DuplicateKey", "HeapNode", "LinkEvent", "LinkEvents", "PairingHeap"]

# columns of the raw event matrix
EV_A, EV_B, EV_C, EV_WINNER, EV_LOSER, EV_ROUND, EV_PX, EV_PY, EV_LEFT_WON = range(9)


class EmptyHeap(LookupError):
    pass


class DuplicateKey(ValueError):
    pass


@dataclass(frozen=True)
class HeapNode:
    handle: int
    key: int
    left: int
    right: int
    subtree_size: int


@dataclass(frozen=True)
class LinkEvent:
    a: int
    b: int
    c: int
    winner_key: int
    loser_key: int
    round: int
    link_type: object
    delta_phi: float


class LinkEvents:
    """Columnar record of the links done by one delete-min.

    ``px[i]``/``py[i]`` index the link that produced the left/right
    participant of link ``i`` in the previous round, or -1 for an original
    child of the deleted root.  Rounds count from 0.
    """

    __slots__ = ("raw", "n")

    def __init__(self, raw: np.ndarray, n: int):
        self.raw = raw
        self.n = n  # heap size before the delete-min

    def __len__(self):
        return self.raw.shape[0]

    a = property(lambda self: self.raw[:, EV_A])
    b = property(lambda self: self.raw[:, EV_B])
    c = property(lambda self: self.raw[:, EV_C])
    winner = property(lambda self: self.raw[:, EV_WINNER])
    loser = property(lambda self: self.raw[:, EV_LOSER])
    round = property(lambda self: self.raw[:, EV_ROUND])
    px = property(lambda self: self.raw[:, EV_PX])
    py = property(lambda self: self.raw[:, EV_PY])

    @property
    def rounds(self) -> int:
        return int(self.raw[-1, EV_ROUND]) + 1 if len(self) else 0

    def pairs(self):
        """(left key, right key) of every link in execution order."""
        out = []
        for i in range(len(self)):
            x, y = int(self.raw[i, EV_WINNER]), int(self.raw[i, EV_LOSER])
            # recover the left/right order from which side the winner came from
            out.append((x, y) if self.raw[i, EV_LEFT_WON] else (y, x))
        return out

    def per_round_counts(self):
        return np.bincount(self.round, minlength=self.rounds) if len(self) else np.zeros(0, np.int64)

    def delta_phi(self, cfg: PotentialConfig) -> np.ndarray:
        return delta_phi_batch(self.a, self.b, self.c, cfg)

    def classify(self, cfg: PotentialConfig) -> np.ndarray:
        from .analysis import classify_links

        return classify_links(self.a, self.b, self.c, cfg)

    def events(self, cfg: PotentialConfig) -> list[LinkEvent]:
        from .analysis import LinkType

        types = self.classify(cfg)
        dphi = self.delta_phi(cfg)
        return [
            LinkEvent(
                int(r[EV_A]), int(r[EV_B]), int(r[EV_C]), int(r[EV_WINNER]), int(r[EV_LOSER]),
                int(r[EV_ROUND]), LinkType(int(t)), float(d),
            )
            for r, t, d in zip(self.raw, types, dphi)
        ]


# -- kernels ------------------------------------------------------------------


@njit
def _sz(size, v):
    return size[v] if v >= 0 else 0


@njit
def _link_adjacent(key, left, right, parent, size, x, y):
    """Link roots ``x`` and ``y`` where ``right[x] == y``; returns the winner.

    The winner takes over x's binary-view slot but the caller fixes the
    pointer into that slot.
    """
    cnode = right[y]
    if key[x] < key[y]:
        na = left[x]
        right[y] = na
        if na >= 0:
            parent[na] = y
        left[x] = y
        parent[y] = x
        right[x] = cnode
        if cnode >= 0:
            parent[cnode] = x
        size[y] = 1 + _sz(size, left[y]) + _sz(size, na)
        return x
    nb = left[y]
    right[x] = nb
    if nb >= 0:
        parent[nb] = x
    left[y] = x
    parent[x] = y
    size[x] = 1 + _sz(size, left[x]) + _sz(size, nb)
    size[y] = 1 + size[x] + _sz(size, cnode)
    return y


@njit
def _link_roots(key, left, right, parent, size, r1, r2):
    """Link two separate tree roots; returns the winner."""
    if key[r1] < key[r2]:
        w, lo = r1, r2
    else:
        w, lo = r2, r1
    old = left[w]
    right[lo] = old
    if old >= 0:
        parent[old] = lo
    left[w] = lo
    parent[lo] = w
    parent[w] = -1
    size[lo] = 1 + _sz(size, left[lo]) + _sz(size, old)
    size[w] = 1 + size[lo]
    return w


@njit
def _delete_min(key, left, right, parent, size, root, record):
    first = left[root]
    left[root] = -1
    size[root] = 1
    k = 0
    v = first
    while v >= 0:
        k += 1
        v = right[v]
    ncol = 9
    cap = k - 1 if (record and k > 1) else 0
    ev = np.empty((cap, ncol), np.int64)
    if k == 0:
        return -1, ev, 0, 0
    parent[first] = -1
    roots = np.empty(k, np.int64)
    prod = np.full(k, -1, np.int64)
    v = first
    for i in range(k):
        roots[i] = v
        v = right[v]
    m = k
    rnd = 0
    e = 0
    a = b = c = 0
    while m > 1:
        half = m // 2
        for i in range(half):
            x = roots[2 * i]
            y = roots[2 * i + 1]
            if record:
                a = _sz(size, left[x])
                b = _sz(size, left[y])
                c = size[y] - 1 - b
            w = _link_adjacent(key, left, right, parent, size, x, y)
            if i > 0:
                right[roots[i - 1]] = w
                parent[w] = roots[i - 1]
            else:
                parent[w] = -1
            if record:
                ev[e, 0] = a
                ev[e, 1] = b
                ev[e, 2] = c
                ev[e, 3] = key[w]
                ev[e, 4] = key[y] if w == x else key[x]
                ev[e, 5] = rnd
                ev[e, 6] = prod[2 * i]
                ev[e, 7] = prod[2 * i + 1]
                ev[e, 8] = 1 if w == x else 0
                prod[i] = e
                e += 1
            roots[i] = w
        if m % 2 == 1:
            # the odd last root is already the winner's right sibling
            roots[half] = roots[m - 1]
            prod[half] = prod[m - 1]
            m = half + 1
        else:
            m = half
        rnd += 1
    return roots[0], ev, rnd, k - 1


@njit
def _subtract_on_ancestors(parent, size, v, amount):
    while v >= 0:
        size[v] -= amount
        v = parent[v]


# -- heap ---------------------------------------------------------------------


class PairingHeap:
    """Min-heap with unique integer keys and multipass delete-min."""

    def __init__(self, capacity: int = 16):
        capacity = max(int(capacity), 1)
        self.key = np.zeros(capacity, np.int64)
        self.left = np.full(capacity, -1, np.int64)
        self.right = np.full(capacity, -1, np.int64)
        self.parent = np.full(capacity, -1, np.int64)
        self.size = np.zeros(capacity, np.int64)
        self.alive = np.zeros(capacity, bool)
        self.root = -1
        self.count = 0
        self._used = 0
        self._keys: set[int] = set()
        self.links = 0  # total links performed, all operations

    # construction helpers

    @classmethod
    def from_keys(cls, keys) -> PairingHeap:
        keys = list(keys)
        h = cls(len(keys) or 1)
        for k in keys:
            h.insert(k)
        return h

    @classmethod
    def from_children(cls, root_key: int, child_keys) -> PairingHeap:
        """A heap whose root holds ``root_key`` and whose top-level children are
        singletons with ``child_keys`` in left-to-right order."""
        child_keys = [int(k) for k in child_keys]
        if any(k <= root_key for k in child_keys):
            raise ValueError("children must have keys larger than the root")
        h = cls(len(child_keys) + 1)
        r = h._new_node(root_key)
        prev = -1
        for k in child_keys:
            v = h._new_node(k)
            if prev < 0:
                h.left[r] = v
                h.parent[v] = r
            else:
                h.right[prev] = v
                h.parent[v] = prev
            prev = v
        # sizes along the sibling chain, right to left
        v = prev
        total = 0
        while v >= 0 and v != r:
            total += 1
            h.size[v] = total
            v = h.parent[v]
        h.size[r] = total + 1
        h.root = r
        return h

    def _grow(self, need: int):
        cap = self.key.shape[0]
        if need <= cap:
            return
        new = max(need, 2 * cap)
        for name, fill in (("key", 0), ("left", -1), ("right", -1), ("parent", -1), ("size", 0)):
            arr = getattr(self, name)
            grown = np.full(new, fill, np.int64)
            grown[:cap] = arr
            setattr(self, name, grown)
        alive = np.zeros(new, bool)
        alive[:cap] = self.alive
        self.alive = alive

    def _new_node(self, key: int) -> int:
        key = int(key)
        if key in self._keys:
            raise DuplicateKey(f"key {key} already present")
        self._grow(self._used + 1)
        v = self._used
        self._used += 1
        self.key[v] = key
        self.left[v] = self.right[v] = self.parent[v] = -1
        self.size[v] = 1
        self.alive[v] = True
        self._keys.add(key)
        self.count += 1
        return v

    # queries

    def __len__(self):
        return self.count

    def __bool__(self):
        return self.count > 0

    def __contains__(self, key):
        return int(key) in self._keys

    def find_min(self) -> int:
        if self.root < 0:
            raise EmptyHeap("find_min on empty heap")
        return int(self.key[self.root])

    def node(self, handle: int) -> HeapNode:
        self._check_handle(handle)
        return HeapNode(handle, int(self.key[handle]), int(self.left[handle]),
                        int(self.right[handle]), int(self.size[handle]))

    def _check_handle(self, handle):
        if not (0 <= handle < self._used and self.alive[handle]):
            raise KeyError(f"invalid or deleted handle {handle}")

    # operations

    def insert(self, key: int) -> int:
        v = self._new_node(key)
        if self.root < 0:
            self.root = v
        else:
            self.root = int(_link_roots(self.key, self.left, self.right, self.parent, self.size, self.root, v))
            self.links += 1
        return v

    def link(self, x: int, y: int) -> int:
        """Link two adjacent top-level roots (``y`` is the next sibling of ``x``)."""
        if x == y:
            raise ValueError("cannot link a node with itself")
        self._check_handle(x)
        self._check_handle(y)
        if self.right[x] != y:
            raise ValueError("link requires y to be the right sibling of x")
        p = int(self.parent[x])
        w = int(_link_adjacent(self.key, self.left, self.right, self.parent, self.size, x, y))
        self.parent[w] = p
        if p >= 0:
            if self.left[p] == x:
                self.left[p] = w
            else:
                self.right[p] = w
        elif self.root == x:
            self.root = w
        self.links += 1
        return w

    def delete_min(self, record: bool = False):
        """Remove the minimum.  Returns the key, or ``(key, LinkEvents)`` if ``record``."""
        if self.root < 0:
            raise EmptyHeap("delete_min on empty heap")
        n = self.count
        r = self.root
        min_key = int(self.key[r])
        new_root, ev, _, nlinks = _delete_min(self.key, self.left, self.right, self.parent, self.size, r, record)
        self.root = int(new_root)
        self.alive[r] = False
        self._keys.discard(min_key)
        self.count -= 1
        self.links += int(nlinks)
        if record:
            return min_key, LinkEvents(ev, n)
        return min_key

    def meld(self, other: PairingHeap, check_keys: bool = False) -> int:
        """Absorb ``other`` (which is emptied).  Returns the offset added to its handles.

        Key collisions are only detected when ``check_keys`` is set.
        """
        if other is self:
            raise ValueError("cannot meld a heap with itself")
        if check_keys and not self._keys.isdisjoint(other._keys):
            raise DuplicateKey("melded heaps share keys")
        off = self._used
        if other.root >= 0:
            m = other._used
            self._grow(off + m)
            sl = slice(off, off + m)
            self.key[sl] = other.key[:m]
            self.size[sl] = other.size[:m]
            self.alive[sl] = other.alive[:m]
            for name in ("left", "right", "parent"):
                src = getattr(other, name)[:m]
                getattr(self, name)[sl] = np.where(src >= 0, src + off, -1)
            self._used += m
            self.count += other.count
            self._keys |= other._keys
            oroot = other.root + off
            if self.root < 0:
                self.root = oroot
            else:
                self.root = int(_link_roots(self.key, self.left, self.right, self.parent, self.size, self.root, oroot))
                self.links += 1
        other.__init__(1)
        return off

    def decrease_key(self, handle: int, new_key: int) -> None:
        self._check_handle(handle)
        new_key = int(new_key)
        old_key = int(self.key[handle])
        if new_key >= old_key:
            raise ValueError(f"new key {new_key} is not smaller than {old_key}")
        if new_key in self._keys:
            raise DuplicateKey(f"key {new_key} already present")
        self._keys.discard(old_key)
        self._keys.add(new_key)
        self.key[handle] = new_key
        if handle == self.root:
            return
        self._cut(handle)
        self.root = int(_link_roots(self.key, self.left, self.right, self.parent, self.size, self.root, handle))
        self.links += 1

    def _cut(self, z: int):
        """Detach z with its children; its next sibling takes its place."""
        p = int(self.parent[z])
        nxt = int(self.right[z])
        if self.left[p] == z:
            self.left[p] = nxt
        else:
            self.right[p] = nxt
        if nxt >= 0:
            self.parent[nxt] = p
        removed = 1 + (int(self.size[self.left[z]]) if self.left[z] >= 0 else 0)
        _subtract_on_ancestors(self.parent, self.size, p, removed)
        self.right[z] = -1
        self.parent[z] = -1
        self.size[z] = removed

    def drain(self) -> list[int]:
        out = []
        while self.root >= 0:
            out.append(self.delete_min())
        return out

    def handle_of(self, key: int) -> int:
        """Linear scan for the live node holding ``key``."""
        idx = np.flatnonzero(self.alive[: self._used] & (self.key[: self._used] == int(key)))
        if idx.size == 0:
            raise KeyError(key)
        return int(idx[0])

    # instrumentation

    def potential(self, cfg: PotentialConfig) -> float:
        """Binary-view potential recomputed from the maintained sizes."""
        if self.root < 0:
            return 0.0
        idx = np.flatnonzero(self.alive[: self._used])
        par = self.parent[idx]
        nonroot = par >= 0
        ratios = self.size[par[nonroot]] / self.size[idx[nonroot]]
        lx = np.log2(ratios)
        return float(np.sum(lx / np.log2(cfg.shift + lx) ** cfg.exponent))

    def local_phi(self, nodes, cfg: PotentialConfig) -> float:
        """Sum of phi over ``nodes`` in the current state."""
        total = 0.0
        for v in nodes:
            if v < 0 or not self.alive[v]:
                continue
            p = self.parent[v]
            if p >= 0:
                total += f_val(self.size[p] / self.size[v], cfg)
        return total

    def affected_by_decrease(self, handle: int) -> set[int]:
        """Nodes whose phi can change when ``handle`` is cut and relinked."""
        nodes = {handle, int(self.left[handle]), int(self.right[handle]), self.root, int(self.left[self.root])}
        v = int(self.parent[handle])
        while v >= 0:
            nodes.add(v)
            nodes.add(int(self.left[v]))
            nodes.add(int(self.right[v]))
            v = int(self.parent[v])
        nodes.discard(-1)
        return nodes

    @staticmethod
    def insert_delta_phi(size_before: int, cfg: PotentialConfig) -> float:
        """Potential change of inserting into a heap of ``size_before`` nodes."""
        return f_val((size_before + 1) / size_before, cfg) if size_before >= 1 else 0.0

    @staticmethod
    def root_removal_delta_phi(n: int, cfg: PotentialConfig) -> float:
        """Potential change of deleting a root of an n-node heap, before any link."""
        return -f_val(n / (n - 1), cfg) if n >= 2 else 0.0

    def binary_view(self):
        """(root, left, right) lists describing the binary view."""
        return self.root, self.left[: self._used].tolist(), self.right[: self._used].tolist()

    def check(self) -> None:
        """Raise AssertionError unless heap order, sizes and parents are consistent."""
        if self.root < 0:
            assert self.count == 0
            return
        assert self.right[self.root] == -1, "root has a sibling"
        assert self.parent[self.root] == -1
        seen = 0
        # (node, key of its multi-ary parent or None)
        stack = [(self.root, None)]
        order = []
        while stack:
            v, pk = stack.pop()
            assert self.alive[v]
            order.append(v)
            seen += 1
            k = self.key[v]
            if pk is not None:
                assert pk < k, f"heap order violated at key {k}"
            lv, rv = self.left[v], self.right[v]
            if lv >= 0:
                assert self.parent[lv] == v
                stack.append((lv, k))
            if rv >= 0:
                assert self.parent[rv] == v
                stack.append((rv, pk))
        assert seen == self.count, "unreachable live nodes"
        for v in reversed(order):
            expect = 1 + (self.size[self.left[v]] if self.left[v] >= 0 else 0) + (
                self.size[self.right[v]] if self.right[v] >= 0 else 0
            )
            assert self.size[v] == expect, f"size mismatch at key {self.key[v]}"


def expected_rounds(k: int) -> int:
    return math.ceil(math.log2(k)) if k >= 2 else 0
