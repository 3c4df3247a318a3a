"""Potential functions for self-adjusting trees.

All logarithms are base 2.  The family is parameterized by the power of the
logarithm in the denominator (2 or 3) and the additive shift inside it (2 or
4 respectively)::

    g(x) = x / log(shift + x) ** exponent        x >= 0
    f(x) = g(log x)                               x >= 1
    phi(v) = f(s(parent(v)) / s(v))               v not the root

and the total potential of a tree is the sum of phi over its non-root nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._accel import HAVE_NUMBA, njit

__all__ = [
    "DomainError",
    "PotentialConfig",
    "NodeStat",
    "ArrayTree",
    "f_val",
    "g_val",
    "h_val",
    "h_iter",
    "log_star",
    "f_array",
    "g_array",
    "delta_phi_closed_form",
    "delta_phi_batch",
    "subtree_sizes",
    "total_potential",
    "sum_of_logs_potential",
    "path_potential",
    "path_potential_bound",
]

DEFAULT_GAMMA = {2: 3000.0, 3: 3000.0**2}
PAIRED_SHIFT = {2: 2.0, 3: 4.0}


class DomainError(ValueError):
    """Argument outside the domain of a potential function."""


@dataclass(frozen=True)
class PotentialConfig:
    """Parameters of the potential family and of the link classification.

    ``shift`` and ``gamma`` default to the values paired with ``exponent``.
    ``scale`` of None means the amortized scale is derived from the structure
    size (see :meth:`amortized_scale`).
    """

    exponent: int = 2
    shift: float | None = None
    gamma: float | None = None
    d: float = 1.0
    scale: float | None = None
    allow_unpaired: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.exponent not in (2, 3):
            raise ValueError(f"exponent must be 2 or 3, got {self.exponent}")
        if self.shift is None:
            object.__setattr__(self, "shift", PAIRED_SHIFT[self.exponent])
        if self.gamma is None:
            object.__setattr__(self, "gamma", DEFAULT_GAMMA[self.exponent])
        object.__setattr__(self, "shift", float(self.shift))
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "d", float(self.d))
        if self.shift <= 0:
            raise ValueError("shift must be positive")
        if not self.allow_unpaired and self.shift != PAIRED_SHIFT[self.exponent]:
            raise ValueError(
                f"exponent {self.exponent} pairs with shift {PAIRED_SHIFT[self.exponent]}; "
                "pass allow_unpaired=True to override"
            )
        if self.gamma < 1:
            raise ValueError("gamma must be >= 1")
        if self.d <= 0:
            raise ValueError("d must be positive")
        if self.scale is not None and self.scale <= 0:
            raise ValueError("scale must be positive")

    @classmethod
    def exp2(cls, **kw) -> PotentialConfig:
        return cls(exponent=2, **kw)

    @classmethod
    def exp3(cls, **kw) -> PotentialConfig:
        return cls(exponent=3, **kw)

    @classmethod
    def from_name(cls, name: str, **kw) -> PotentialConfig:
        try:
            exponent = {"exp2": 2, "exp3": 3}[name]
        except KeyError:
            raise ValueError(f"unknown potential {name!r}; expected exp2 or exp3") from None
        return cls(exponent=exponent, **kw)

    @property
    def name(self) -> str:
        return f"exp{self.exponent}"

    def amortized_scale(self, n: int, structure: str = "heap") -> float:
        """2**log*(n) for heaps, twice that for search trees, unless ``scale`` is set."""
        if self.scale is not None:
            return self.scale
        base = 2.0 ** log_star(max(int(n), 1))
        return 2.0 * base if structure.startswith("bst") else base


@dataclass(frozen=True)
class NodeStat:
    subtree_size: int
    parent_subtree_size: int
    H: float
    phi: float

    @classmethod
    def from_sizes(cls, size: int, parent_size: int, cfg: PotentialConfig) -> NodeStat:
        if not parent_size > size >= 1:
            raise DomainError(f"need parent size > size >= 1, got {parent_size}, {size}")
        H = math.log2(parent_size / size)
        return cls(size, parent_size, H, g_val(H, cfg))


# -- scalar functions ---------------------------------------------------------


def g_val(x: float, cfg: PotentialConfig) -> float:
    if x < 0:
        raise DomainError(f"g is defined for x >= 0, got {x}")
    return x / math.log2(cfg.shift + x) ** cfg.exponent


def f_val(x: float, cfg: PotentialConfig) -> float:
    if x < 1:
        raise DomainError(f"f is defined for x >= 1, got {x}")
    return g_val(math.log2(x), cfg)


def h_val(x: float, cfg: PotentialConfig) -> float:
    """Category map d * log^2(2 + x)."""
    if x < 0:
        raise DomainError(f"h is defined for x >= 0, got {x}")
    return cfg.d * math.log2(2.0 + x) ** 2


def h_iter(i: int, x: float, cfg: PotentialConfig) -> float:
    if i < 0:
        raise DomainError("iteration count must be nonnegative")
    for _ in range(i):
        x = h_val(x, cfg)
    return x


def log_star(n: float) -> int:
    """Number of base-2 logarithms needed to bring ``n`` down to at most 1."""
    if n < 1:
        raise DomainError(f"log* is defined for n >= 1, got {n}")
    count = 0
    v = n
    while v > 1:
        v = math.log2(v)
        count += 1
    return count


# -- vector kernels -----------------------------------------------------------


def g_array(x, exponent, shift):
    x = np.asarray(x, dtype=np.float64)
    return x / np.log2(shift + x) ** exponent


def f_array(x, exponent, shift):
    return g_array(np.log2(np.asarray(x, dtype=np.float64)), exponent, shift)


@njit
def _f_scalar(x, exponent, shift):
    lx = math.log2(x)
    d = math.log2(shift + lx)
    # exponent is 2 or 3; explicit products avoid a generic pow call
    den = d * d * d if exponent == 3 else d * d
    return lx / den


@njit
def _term(p, q, exponent, shift):
    # a missing subtree has no node and so no phi term
    if q <= 0.0:
        return 0.0
    return _f_scalar(p / q, exponent, shift)


@njit
def _delta_phi_one(a, b, c, exponent, shift):
    s = a + b + c + 2.0
    low = a + b + 1.0
    high = b + c + 1.0
    after = (
        _term(low, a, exponent, shift)
        + _term(low, b, exponent, shift)
        + _term(s, low, exponent, shift)
        + _term(s, c, exponent, shift)
    )
    before = (
        _term(s, a, exponent, shift)
        + _term(s, high, exponent, shift)
        + _term(high, b, exponent, shift)
        + _term(high, c, exponent, shift)
    )
    return after - before


@njit
def _delta_phi_loop(a, b, c, exponent, shift, out):
    for i in range(a.shape[0]):
        out[i] = _delta_phi_one(a[i], b[i], c[i], exponent, shift)


def _delta_phi_numpy(a, b, c, exponent, shift):
    def term(p, q):
        safe = np.where(q > 0, q, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(q > 0, f_array(p / safe, exponent, shift), 0.0)

    s = a + b + c + 2.0
    low = a + b + 1.0
    high = b + c + 1.0
    after = term(low, a) + term(low, b) + term(s, low) + term(s, c)
    before = term(s, a) + term(s, high) + term(high, b) + term(high, c)
    return after - before


def delta_phi_closed_form(a: int, b: int, c: int, cfg: PotentialConfig) -> float:
    """Potential change of one link whose subtrees A, B, C have sizes a, b, c."""
    if min(a, b, c) < 0:
        raise DomainError("subtree sizes must be nonnegative")
    return float(_delta_phi_one.py_func(float(a), float(b), float(c), float(cfg.exponent), cfg.shift))


def delta_phi_batch(a, b, c, cfg: PotentialConfig, use_numba: bool | None = None) -> np.ndarray:
    """Vectorized :func:`delta_phi_closed_form`.

    The numpy path is the default: its SIMD logarithms beat the compiled
    scalar loop (see ``benchmarks/bench_kernels.py``).  ``use_numba=True``
    selects the loop.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    c = np.ascontiguousarray(c, dtype=np.float64)
    if use_numba and HAVE_NUMBA:
        out = np.empty(a.shape[0], dtype=np.float64)
        _delta_phi_loop(a, b, c, float(cfg.exponent), cfg.shift, out)
        return out
    return _delta_phi_numpy(a, b, c, float(cfg.exponent), cfg.shift)


# -- whole trees --------------------------------------------------------------


@dataclass
class ArrayTree:
    """Plain binary tree over integer node ids; -1 marks a missing child.

    ``weight[v]`` (default 1) is the number of elements node ``v`` stands for,
    which lets a single node represent a collapsed subtree.
    """

    root: int
    left: list
    right: list
    weight: list | None = None


def subtree_sizes(root, left, right, weight=None):
    """Sizes and parents of every node reachable from ``root``, recomputed from structure."""
    sizes = {}
    parent = {}
    if root is None or root < 0:
        return sizes, parent
    root = int(root)
    parent[root] = -1
    order = []
    stack = [root]
    while stack:
        v = stack.pop()
        order.append(v)
        for ch in (int(left[v]), int(right[v])):
            if ch >= 0:
                if ch in parent:
                    raise ValueError(f"node {ch} reached twice: not a tree")
                parent[ch] = v
                stack.append(ch)
    for v in reversed(order):
        s = 1 if weight is None else weight[v]
        lv, rv = int(left[v]), int(right[v])
        if lv >= 0:
            s += sizes[lv]
        if rv >= 0:
            s += sizes[rv]
        sizes[v] = s
    return sizes, parent


def total_potential(tree, cfg: PotentialConfig) -> float:
    """Sum of phi over all non-root nodes; sizes are recomputed from the links."""
    sizes, parent = subtree_sizes(tree.root, tree.left, tree.right, getattr(tree, "weight", None))
    total = 0.0
    for v, p in parent.items():
        if p >= 0:
            total += f_val(sizes[p] / sizes[v], cfg)
    return total


def sum_of_logs_potential(tree, n=None):
    """Return ``(psi_prime, psi)``.

    ``psi`` is ``psi_prime / log log log n`` and is None when that scaling is
    not positive (n <= 4).
    """
    sizes, _ = subtree_sizes(tree.root, tree.left, tree.right, getattr(tree, "weight", None))
    if not sizes:
        raise ValueError("empty tree")
    psi_prime = math.fsum(math.log2(s) for s in sizes.values())
    if n is None:
        n = sizes[int(tree.root)]
    if n <= 4:
        return psi_prime, None
    return psi_prime, psi_prime / math.log2(math.log2(math.log2(n)))


def path_potential(sizes_top_down, cfg: PotentialConfig) -> float:
    """Potential of the non-top nodes of a path, each measured against its path parent."""
    return math.fsum(
        f_val(sizes_top_down[k] / sizes_top_down[k + 1], cfg) for k in range(len(sizes_top_down) - 1)
    )


def path_potential_bound(length: int, top_size: int, cfg: PotentialConfig) -> float:
    """Concavity bound ``length * g(log s(top) / length)`` on :func:`path_potential`."""
    return length * g_val(math.log2(top_size) / length, cfg)
