import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from multipass import PotentialConfig
from multipass.analysis import verify_median_rotations, verify_path_bounds, verify_raman_inequality
from multipass.bst import KeyNotFound, NotMonotone, PathBalancedBst, multipass_round_sizes

EXP2 = PotentialConfig.exp2()


def subtree_keys(t, v):
    out, stack = set(), [v]
    while stack:
        u = stack.pop()
        if u >= 0:
            out.add(t.key[u])
            stack += [t.left[u], t.right[u]]
    return out


def hanging_subtrees(t, path):
    on = set(path)
    return {frozenset(subtree_keys(t, c)) for v in path for c in (t.left[v], t.right[v]) if c >= 0 and c not in on}


def height(t, v):
    if v < 0:
        return -1
    return 1 + max(height(t, t.left[v]), height(t, t.right[v]))


def zigzag_path_tree():
    # path f, a, e, d, b, c with one off-path leaf in every gap
    f, a, e, d, b, c = 60, 10, 50, 40, 20, 30
    return PathBalancedBst.from_keys([f, a, e, d, b, c, 65, 5, 55, 45, 15, 25, 35])


class TestPathBalance:
    def test_zigzag_path_of_six(self):
        t = zigzag_path_tree()
        path = t.search_path(30)
        assert [t.key[v] for v in path] == [60, 10, 50, 40, 20, 30]
        before = t.inorder()
        hanging = hanging_subtrees(t, path)
        t.access_pathbalance(30)
        t.check()
        assert t.inorder() == before
        assert subtree_keys(t, t.root) == set(before)
        assert max(t.depth(v) for v in path) == 2 == math.ceil(math.log2(7)) - 1
        assert hanging_subtrees(t, path) == hanging
        assert sorted(t.key[v] for v in path if t.depth(v) <= 2) == [10, 20, 30, 40, 50, 60]

    def test_root_access_is_identity(self):
        t = PathBalancedBst.from_keys([5, 2, 8, 1])
        shape = t.structure()
        st_ = t.access_pathbalance(5, EXP2)
        assert st_.path_length == 1 and st_.delta_phi == 0 and t.structure() == shape

    def test_missing_key(self):
        t = PathBalancedBst.from_keys([5, 2, 8])
        for access in (t.access_pathbalance, t.access_simplified, t.analysis_access):
            with pytest.raises(KeyNotFound):
                access(3)

    def test_duplicate_insert_rejected(self):
        with pytest.raises(ValueError):
            PathBalancedBst.from_keys([3, 1, 3])

    @pytest.mark.parametrize("seed", range(4))
    def test_random_accesses_depth_and_order(self, seed):
        rng = np.random.default_rng(seed)
        t = PathBalancedBst.from_keys(rng.permutation(500))
        before = t.inorder()
        for k in rng.integers(0, 500, 300):
            path = t.search_path(int(k))
            t.access_pathbalance(int(k))
            bound = math.ceil(math.log2(len(path) + 1)) - 1
            assert max(t.depth(v) for v in path) <= bound
        t.check()
        assert t.inorder() == before


class TestSimplified:
    def test_root_unchanged(self):
        t = PathBalancedBst.from_keys([4, 2, 6])
        shape = t.structure()
        t.access_simplified(4)
        assert t.structure() == shape

    def test_decreasing_path_of_eight(self):
        t = PathBalancedBst.monotone_path(8, "left")
        t.access_simplified(0)
        t.check()
        assert t.key[t.root] == 0
        assert t.left[t.root] < 0
        rest = t.right[t.root]
        assert subtree_keys(t, rest) == set(range(1, 8))
        assert height(t, rest) == 2

    @pytest.mark.parametrize("seed", range(3))
    def test_random_workload(self, seed):
        rng = np.random.default_rng(seed)
        t = PathBalancedBst.from_keys(rng.permutation(400))
        before = t.inorder()
        for k in rng.integers(0, 400, 300):
            path = t.search_path(int(k))
            t.access_simplified(int(k))
            assert t.key[t.root] == k
            assert max(t.depth(v) for v in path) <= math.ceil(math.log2(len(path) + 1))
        t.check()
        assert t.inorder() == before


class TestRotations:
    def test_rotate_root_identity(self):
        t = PathBalancedBst.from_keys([2, 1, 3])
        shape = t.structure()
        t.rotate_to_root(t.root)
        assert t.structure() == shape

    def test_left_path_of_three(self):
        t = PathBalancedBst.monotone_path(3, "left")
        x = t.find(0)
        t.rotate_to_root(x)
        assert t.root == x
        assert t.left[x] < 0 and subtree_keys(t, t.right[x]) == {1, 2}
        # single rotations: 0 over 1, then 0 over 2, which keeps 1 as 2's left child
        assert t.key[t.right[x]] == 2 and t.key[t.left[t.right[x]]] == 1

    @pytest.mark.parametrize("seed", range(5))
    def test_only_ancestors_change(self, seed):
        rng = np.random.default_rng(seed)
        t = PathBalancedBst.from_keys(rng.permutation(200))
        k = int(rng.integers(0, 200))
        x = t.find(k)
        movers = set(t.search_path(k))
        _, left0, right0 = t.structure()
        before = t.inorder()
        t.rotate_to_root(x)
        _, left1, right1 = t.structure()
        for v in range(len(t)):
            if v not in movers:
                assert (left0[v], right0[v]) == (left1[v], right1[v])
        assert t.inorder() == before


class TestMultipass:
    def test_round_sizes(self):
        assert multipass_round_sizes(1) == [0]
        assert multipass_round_sizes(11) == [4, 3, 1]
        assert multipass_round_sizes(7) == [0, 3, 1]
        with pytest.raises(ValueError):
            multipass_round_sizes(0)

    def rounds_of(self, length, orientation):
        from multipass.bst import AccessStats

        t = PathBalancedBst.monotone_path(length, "right" if orientation == "right" else "left")
        stats = AccessStats(length)
        top = t.multipass_transform(t.root, orientation, stats=stats)
        counts = [0] * len(multipass_round_sizes(length))
        for e in stats.events:
            counts[e.round] += 1
        return t, top, counts

    def test_single_node(self):
        t, top, counts = self.rounds_of(1, "right")
        assert counts == [0] and top == t.root

    def test_eleven(self):
        t, top, counts = self.rounds_of(11, "right")
        assert counts == [4, 3, 1]
        assert top == t.root and height(t, top) == 3
        assert t.inorder() == list(range(11))

    def test_exact_power_round_zero_empty(self):
        _, _, counts = self.rounds_of(7, "left")
        assert counts == [0, 3, 1]

    @pytest.mark.parametrize("length", range(1, 70))
    @pytest.mark.parametrize("orientation", ["left", "right"])
    def test_result_is_complete(self, length, orientation):
        t, top, _ = self.rounds_of(length, orientation)
        t.check()
        assert height(t, top) == math.ceil(math.log2(length + 1)) - 1
        assert t.inorder() == list(range(length))

    def test_not_monotone(self):
        t = PathBalancedBst.from_keys([5, 2, 8])
        with pytest.raises(NotMonotone):
            t.multipass_transform(t.root)
        with pytest.raises(NotMonotone):
            t.multipass_transform(t.root, "right", length=3)


class TestDecomposition:
    def test_median(self):
        t = PathBalancedBst.from_keys([1, 2, 3, 4, 5, 6])
        assert t.key[t.median_of_path(t.search_path(1))] == 1
        assert t.key[t.median_of_path(t.search_path(6))] == 3
        u = PathBalancedBst.from_keys([3, 1, 2])
        assert u.key[u.median_of_path(u.search_path(2))] == 2

    def test_short_path_identity(self):
        t = PathBalancedBst.from_keys([4, 2, 6])
        shape = t.structure()
        t.short_path_transform(4)
        assert t.structure() == shape

    def test_short_path_of_seven(self):
        t = PathBalancedBst.monotone_path(7, "right")
        ref = t.copy()
        t.short_path_transform(6)
        ref.access_pathbalance(6)
        assert height(t, t.root) == 2
        assert t.structure() == ref.structure()

    def test_below_tau_delegates_to_short_path(self):
        t = PathBalancedBst.monotone_path(6, "left")
        ref = t.copy()
        stats = t.analysis_access(0, tau=10)
        ref.short_path_transform(0)
        assert stats.long_steps == 0 and t.structure() == ref.structure()

    def test_path_of_two_tau(self):
        t = PathBalancedBst.monotone_path(10, "left")
        ref = t.copy()
        stats = t.analysis_access(0, tau=5)
        ref.access_pathbalance(0)
        assert stats.long_steps == 1
        assert t.structure() == ref.structure()


accesses = st.tuples(st.integers(2, 300), st.integers(0, 2**32 - 1), st.integers(1, 40), st.integers(1, 12))


@given(accesses)
def test_three_rebuilds_agree(params):
    n, seed, count, tau = params
    rng = np.random.default_rng(seed)
    t1 = PathBalancedBst.from_keys(rng.permutation(n))
    t2, t3 = t1.copy(), t1.copy()
    order = t1.inorder()
    for k in rng.integers(0, n, count):
        k = int(k)
        path = t1.search_path(k)
        hanging = hanging_subtrees(t1, path)
        phi0 = t1.potential(EXP2)
        s1 = t1.analysis_access(k, tau=tau, cfg=EXP2)
        t2.short_path_transform(k)
        s3 = t3.access_pathbalance(k, cfg=EXP2)
        assert t1.structure() == t2.structure() == t3.structure()
        assert hanging_subtrees(t1, path) == hanging
        assert t1.potential(EXP2) - phi0 == pytest.approx(s1.delta_phi, abs=1e-9)
        assert s3.delta_phi == pytest.approx(s1.delta_phi, abs=1e-9)
        assert verify_path_bounds([s1]).passed
        assert verify_median_rotations([s1]).passed
        assert verify_raman_inequality([s1], n).passed
    t1.check()
    assert t1.inorder() == order


@given(accesses)
def test_simplified_potential_matches_recompute(params):
    n, seed, count, _ = params
    rng = np.random.default_rng(seed)
    t = PathBalancedBst.from_keys(rng.permutation(n))
    for k in rng.integers(0, n, count):
        phi0 = t.potential(EXP2)
        s = t.access_simplified(int(k), cfg=EXP2)
        assert t.potential(EXP2) - phi0 == pytest.approx(s.delta_phi, abs=1e-9)
        assert s.rotations >= s.path_length - 1
    t.check()
