import math
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from multipass import PotentialConfig
from multipass.potential import (
    ArrayTree,
    DomainError,
    delta_phi_batch,
    delta_phi_closed_form,
    f_array,
    f_val,
    g_array,
    g_val,
    h_iter,
    h_val,
    log_star,
    path_potential,
    path_potential_bound,
    sum_of_logs_potential,
    total_potential,
)

CONFIGS = [PotentialConfig.exp2(), PotentialConfig.exp3()]
reals_ge1 = st.floats(min_value=1.0, max_value=1e12, allow_nan=False)


def random_tree(n, seed):
    """Random binary tree via random insertion order."""
    rng = random.Random(seed)
    keys = list(range(n))
    rng.shuffle(keys)
    left = [-1] * n
    right = [-1] * n
    root = keys[0]
    for k in keys[1:]:
        v = root
        while True:
            side = left if k < v else right
            if side[v] < 0:
                side[v] = k
                break
            v = side[v]
    return ArrayTree(root, left, right)


def independent_phi(tree, cfg):
    def size(v):
        if v < 0:
            return 0
        w = 1 if tree.weight is None else tree.weight[v]
        return w + size(tree.left[v]) + size(tree.right[v])

    total = 0.0
    stack = [tree.root]
    while stack:
        v = stack.pop()
        for ch in (tree.left[v], tree.right[v]):
            if ch >= 0:
                total += g_val(math.log2(size(v) / size(ch)), cfg)
                stack.append(ch)
    return total


class TestConfig:
    def test_paired_defaults(self):
        c2, c3 = CONFIGS
        assert (c2.exponent, c2.shift, c2.gamma) == (2, 2.0, 3000.0)
        assert (c3.exponent, c3.shift, c3.gamma) == (3, 4.0, 9e6)
        assert c2.name == "exp2" and c3.name == "exp3"

    def test_unpaired_shift_rejected(self):
        with pytest.raises(ValueError):
            PotentialConfig(exponent=2, shift=4)
        assert PotentialConfig(exponent=2, shift=4, allow_unpaired=True).shift == 4.0

    def test_bad_exponent(self):
        with pytest.raises(ValueError):
            PotentialConfig(exponent=4)
        with pytest.raises(ValueError):
            PotentialConfig.from_name("exp5")

    def test_amortized_scale(self):
        c = CONFIGS[0]
        assert c.amortized_scale(16, "heap") == 2**3
        assert c.amortized_scale(16, "bst") == 2 * 2**3
        assert PotentialConfig(scale=5.0).amortized_scale(16, "heap") == 5.0


class TestScalars:
    def test_f_examples(self):
        c = CONFIGS[0]
        assert f_val(1, c) == 0
        assert f_val(2, c) == pytest.approx(1 / math.log2(3) ** 2, rel=1e-15)

    def test_g_examples(self):
        c = CONFIGS[0]
        assert g_val(0, c) == 0
        assert g_val(2, c) == pytest.approx(0.5)

    def test_domain(self):
        c = CONFIGS[0]
        with pytest.raises(DomainError):
            f_val(0.5, c)
        with pytest.raises(DomainError):
            g_val(-1, c)
        with pytest.raises(DomainError):
            h_iter(-1, 1.0, c)

    def test_h_examples(self):
        c1 = PotentialConfig(d=1)
        assert h_val(0, c1) == 1
        assert h_val(2, c1) == 4
        assert h_val(6, PotentialConfig(d=2)) == 18

    def test_h_iter(self):
        c = CONFIGS[0]
        assert h_iter(0, 17, c) == 17
        n = 2.0**64
        assert h_iter(1, math.log2(n), c) == pytest.approx(math.log2(2 + 64) ** 2)
        assert h_iter(3, 5.0, c) == h_val(h_val(h_val(5.0, c), c), c)

    @pytest.mark.parametrize("n,expected", [(1, 0), (2, 1), (3, 2), (4, 2), (16, 3), (17, 4), (65536, 4), (65537, 5)])
    def test_log_star(self, n, expected):
        assert log_star(n) == expected

    def test_log_star_domain(self):
        with pytest.raises(DomainError):
            log_star(0)

    def test_exp3_slope_at_one(self):
        c = CONFIGS[1]
        eps = 1e-6
        est = (-3 * f_val(1, c) + 4 * f_val(1 + eps, c) - f_val(1 + 2 * eps, c)) / (2 * eps)
        assert est == pytest.approx(1 / (8 * math.log(2)), rel=1e-4)

    @pytest.mark.parametrize("cfg", CONFIGS, ids=["exp2", "exp3"])
    def test_arrays_match_scalars(self, cfg):
        x = np.geomspace(1, 1e15, 500)
        assert np.allclose(f_array(x, cfg.exponent, cfg.shift), [f_val(v, cfg) for v in x], rtol=1e-13, atol=0)
        assert np.allclose(g_array(np.log2(x), cfg.exponent, cfg.shift), [g_val(math.log2(v), cfg) for v in x],
                           rtol=1e-13, atol=0)


class TestFamilyProperties:
    @pytest.mark.parametrize("cfg", CONFIGS, ids=["exp2", "exp3"])
    @given(x=st.floats(0, 1e9), y=st.floats(0, 1e9), t=st.floats(0, 1))
    def test_g_concave(self, cfg, x, y, t):
        mid = t * x + (1 - t) * y
        assert g_val(mid, cfg) >= t * g_val(x, cfg) + (1 - t) * g_val(y, cfg) - 1e-9 * (1 + g_val(mid, cfg))

    @pytest.mark.parametrize("cfg", CONFIGS, ids=["exp2", "exp3"])
    @given(x=reals_ge1, y=reals_ge1)
    def test_f_monotone(self, cfg, x, y):
        lo, hi = sorted((x, y))
        assert f_val(lo, cfg) <= f_val(hi, cfg) + 1e-15

    @pytest.mark.parametrize("cfg", CONFIGS, ids=["exp2", "exp3"])
    @given(x=reals_ge1, y=reals_ge1)
    def test_f_subadditive_in_product(self, cfg, x, y):
        assert f_val(x * y, cfg) <= f_val(x, cfg) + f_val(y, cfg) + 1e-12

    @pytest.mark.parametrize("cfg", CONFIGS, ids=["exp2", "exp3"])
    @given(x=reals_ge1, y=reals_ge1, c=st.floats(1e-3, 1e9))
    def test_difference_monotone(self, cfg, x, y, c):
        hi, lo = max(x, y), min(x, y)
        assert f_val(hi + c, cfg) - f_val(lo + c, cfg) <= f_val(hi, cfg) - f_val(lo, cfg) + 1e-12

    @pytest.mark.parametrize("cfg", CONFIGS, ids=["exp2", "exp3"])
    @given(x=reals_ge1)
    def test_f_is_g_of_log(self, cfg, x):
        assert f_val(x, cfg) == pytest.approx(g_val(math.log2(x), cfg), rel=1e-14, abs=1e-300)


class TestTreePotential:
    def test_single_node(self, cfg):
        t = ArrayTree(0, [-1], [-1])
        assert total_potential(t, cfg) == 0
        assert sum_of_logs_potential(t)[0] == 0

    @pytest.mark.parametrize("seed", range(5))
    def test_random_tree_matches_independent_traversal(self, cfg, seed):
        t = random_tree(100, seed)
        assert total_potential(t, cfg) == pytest.approx(independent_phi(t, cfg), rel=1e-12)

    def test_weighted_nodes(self, cfg):
        t = ArrayTree(0, [1, -1, -1], [2, -1, -1], weight=[1, 5, 7])
        expected = f_val(13 / 5, cfg) + f_val(13 / 7, cfg)
        assert total_potential(t, cfg) == pytest.approx(expected, rel=1e-14)

    def test_cycle_detected(self, cfg):
        with pytest.raises(ValueError):
            total_potential(ArrayTree(0, [1, 0], [-1, -1]), cfg)

    @pytest.mark.parametrize("length", [1, 2, 5, 40, 300])
    def test_monotone_path_bound(self, cfg, length):
        n = 10_000
        rng = random.Random(length)
        sizes = sorted(rng.sample(range(1, n + 1), length), reverse=True)
        sizes[0] = n
        assert path_potential(sizes, cfg) <= path_potential_bound(length, n, cfg) + 1e-9

    @pytest.mark.parametrize("k", [1, 2, 5, 30])
    def test_left_path_psi_prime(self, k):
        left = list(range(-1, k - 1))
        t = ArrayTree(k - 1, left, [-1] * k)
        psi_prime, psi = sum_of_logs_potential(t)
        assert psi_prime == pytest.approx(math.log2(math.factorial(k)), rel=1e-13)
        assert (psi is None) == (k <= 4)

    def test_random_tree_psi_prime_exact(self):
        t = random_tree(200, 3)

        def sizes(v, out):
            if v < 0:
                return 0
            s = 1 + sizes(t.left[v], out) + sizes(t.right[v], out)
            out.append(s)
            return s

        acc = []
        sizes(t.root, acc)
        psi_prime, psi = sum_of_logs_potential(t)
        assert psi_prime == math.fsum(math.log2(s) for s in acc)
        assert psi == pytest.approx(psi_prime / math.log2(math.log2(math.log2(200))))


def collapsed_gadget(a, b, c, after):
    """x has left subtree A and right sibling y; y has B (children) and C (siblings).

    Node ids: 0=x, 1=y, 2=A, 3=B, 4=C; empty subtrees are omitted.
    """
    left, right = [-1] * 5, [-1] * 5
    weight = [1, 1, a, b, c]
    if after:
        left[0], right[0] = 1, (4 if c else -1)
        left[1], right[1] = (3 if b else -1), (2 if a else -1)
    else:
        left[0], right[0] = (2 if a else -1), 1
        left[1], right[1] = (3 if b else -1), (4 if c else -1)
    return ArrayTree(0, left, right, weight)


def expand(tree, rng):
    """Replace each weighted leaf by a random binary tree with that many nodes."""
    left, right = list(tree.left), list(tree.right)
    for v, w in enumerate(tree.weight):
        if w <= 1 or left[v] >= 0 or right[v] >= 0:
            continue
        sub = random_tree(w, rng.random())
        base = len(left)
        left.extend(-1 if u < 0 else u + base for u in sub.left)
        right.extend(-1 if u < 0 else u + base for u in sub.right)
        hook = base + sub.root
        # v becomes the parent slot of the subtree's root: swap roles
        for arr in (left, right):
            for i, u in enumerate(arr):
                if u == v:
                    arr[i] = hook
    return ArrayTree(tree.root, left, right)


class TestClosedForm:
    def test_unit_triple_is_zero(self, cfg):
        assert delta_phi_closed_form(1, 1, 1, cfg) == pytest.approx(0, abs=1e-15)

    def test_type3_example_nonpositive(self, cfg):
        assert delta_phi_closed_form(1, 1, 10**7, cfg) <= 0

    def test_negative_rejected(self, cfg):
        with pytest.raises(DomainError):
            delta_phi_closed_form(-1, 1, 1, cfg)

    @given(a=st.integers(0, 10**4), b=st.integers(0, 10**4), c=st.integers(0, 10**4))
    def test_matches_collapsed_gadget(self, cfg, a, b, c):
        before = total_potential(collapsed_gadget(a, b, c, after=False), cfg)
        after = total_potential(collapsed_gadget(a, b, c, after=True), cfg)
        assert delta_phi_closed_form(a, b, c, cfg) == pytest.approx(after - before, abs=1e-9)

    @given(a=st.integers(1, 25), b=st.integers(1, 25), c=st.integers(1, 25), seed=st.integers(0, 10**6))
    def test_collapse_matches_expanded_subtrees(self, cfg, a, b, c, seed):
        rng = random.Random(seed)
        before = expand(collapsed_gadget(a, b, c, after=False), rng)
        after = expand(collapsed_gadget(a, b, c, after=True), random.Random(seed))
        got = total_potential(after, cfg) - total_potential(before, cfg)
        assert delta_phi_closed_form(a, b, c, cfg) == pytest.approx(got, abs=1e-9)

    def test_batch_backends_agree(self, cfg):
        rng = np.random.default_rng(5)
        a, b, c = (rng.integers(0, 10**9, 20_000) for _ in range(3))
        jit = delta_phi_batch(a, b, c, cfg, use_numba=True)
        ref = delta_phi_batch(a, b, c, cfg, use_numba=False)
        assert np.allclose(jit, ref, rtol=0, atol=1e-10)
        scalar = [delta_phi_closed_form(int(x), int(y), int(z), cfg) for x, y, z in zip(a[:200], b[:200], c[:200])]
        assert np.allclose(jit[:200], scalar, rtol=0, atol=1e-12)
