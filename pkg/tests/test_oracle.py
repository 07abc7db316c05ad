import numpy as np
import pytest

from rkranks import (
    ExactRankList,
    ExactRankOracle,
    exact_rank,
    exact_reverse_k_ranks,
    load_rank_list,
    rank_for_all_users,
    save_rank_list,
    validate_c_approx,
)

from conftest import make_set

ITEMS = make_set([(2, 0), (0, 1), (1, 1), (3, 3)])


class TestExactRank:
    def test_strictly_greater_counting(self):
        # u.q = 0, item scores are {2, 0, 1, 3}: three exceed it
        assert exact_rank([0, 2], [1, 0], ITEMS) == 4

    def test_ties_do_not_count(self):
        # u.q = 6 and the best item also scores 6: rank stays 1
        assert exact_rank([3, 3], [1, 1], ITEMS) == 1

    def test_empty_item_set(self):
        assert exact_rank([1.0], [2.0], np.zeros((0, 1), np.float32)) == 1

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            exact_rank([0, 2, 1], [1, 0, 0], ITEMS)

    def test_complement_identity(self, rng):
        items = make_set(rng.standard_normal((60, 6)))
        for _ in range(25):
            u = rng.standard_normal(6)
            q = rng.standard_normal(6)
            rank = exact_rank(q, u, items)
            from rkranks import inner_product, row_inner_products

            uq = inner_product(u, q)
            at_most = int((row_inner_products(items.data, u) <= uq).sum())
            assert rank == 1 + items.count - at_most

    def test_positive_scaling_invariance(self, rng):
        items = make_set(rng.integers(-5, 6, size=(40, 4)).astype(np.float32))
        for scale in (0.5, 2.0, 4.0, 3.0):
            u = rng.integers(-5, 6, size=4).astype(np.float32)
            q = rng.integers(-5, 6, size=4).astype(np.float32)
            assert exact_rank(q, u, items) == exact_rank(q, scale * u, items)

    def test_range(self, rng):
        items = make_set(rng.standard_normal((30, 3)))
        for _ in range(20):
            r = exact_rank(rng.standard_normal(3), rng.standard_normal(3), items)
            assert 1 <= r <= items.count + 1


class TestExactReverseKRanks:
    def test_two_user_tie_takes_smaller_id(self):
        users = make_set([(1, 0), (0, 1)], role="users")
        items = make_set([(2, 0), (0, 2)])
        result = exact_reverse_k_ranks([1, 1], 1, users, items)
        assert result.entries() == [(0, 2)]

    def test_k_equals_n_is_sorted_permutation(self, rng):
        users = make_set(rng.standard_normal((20, 5)), role="users")
        items = make_set(rng.standard_normal((50, 5)))
        q = rng.standard_normal(5)
        result = exact_reverse_k_ranks(q, 20, users, items)
        assert sorted(result.user_ids.tolist()) == list(range(20))
        assert (np.diff(result.ranks) >= 0).all()

    def test_k_one_is_minimum(self, rng):
        users = make_set(rng.standard_normal((15, 4)), role="users")
        items = make_set(rng.standard_normal((40, 4)))
        q = rng.standard_normal(4)
        best = exact_reverse_k_ranks(q, 1, users, items)
        all_ranks = rank_for_all_users(q, users, items)
        assert best.ranks[0] == all_ranks.min()

    def test_prefix_consistency(self, rng):
        users = make_set(rng.standard_normal((25, 4)), role="users")
        items = make_set(rng.standard_normal((60, 4)))
        q = rng.standard_normal(4)
        small = exact_reverse_k_ranks(q, 5, users, items)
        large = exact_reverse_k_ranks(q, 15, users, items)
        assert small.entries() == large.entries()[:5]

    def test_k_out_of_range(self):
        users = make_set([(1, 0)], role="users")
        with pytest.raises(ValueError, match="k="):
            exact_reverse_k_ranks([1, 0], 2, users, ITEMS)


class TestValidateCApprox:
    def test_identity_always_valid(self):
        truth = ExactRankList(None, np.array([3, 9], np.uint64), np.array([2, 4]))
        for c in (1.0, 1.5, 10.0):
            assert validate_c_approx(truth, truth, c).all()

    def test_positional_formula(self):
        cand = ExactRankList(None, np.array([0, 1], np.uint64), np.array([4, 2]))
        truth = ExactRankList(None, np.array([2, 3], np.uint64), np.array([2, 4]))
        assert validate_c_approx(cand, truth, 1.0).tolist() == [False, True]
        assert validate_c_approx(cand, truth, 2.0).tolist() == [True, True]

    def test_length_mismatch(self):
        a = ExactRankList(None, np.array([0], np.uint64), np.array([1]))
        b = ExactRankList(None, np.array([0, 1], np.uint64), np.array([1, 2]))
        with pytest.raises(ValueError, match="length"):
            validate_c_approx(a, b, 2.0)

    def test_c_below_one_rejected(self):
        a = ExactRankList(None, np.array([0], np.uint64), np.array([1]))
        with pytest.raises(ValueError, match="c must be"):
            validate_c_approx(a, a, 0.5)


class TestExactRankOracle:
    def test_matches_direct_scan(self, rng):
        users = make_set(rng.standard_normal((18, 6)), role="users")
        items = make_set(rng.standard_normal((45, 6)))
        oracle = ExactRankOracle(users, items)
        for item_row in (0, 7, 44):
            ranks = oracle.ranks_for_item(item_row)
            direct = rank_for_all_users(items.data[item_row], users, items)
            assert np.array_equal(ranks, direct)

    def test_vector_queries_match_item_queries(self, rng):
        users = make_set(rng.standard_normal((12, 5)), role="users")
        items = make_set(rng.standard_normal((30, 5)))
        oracle = ExactRankOracle(users, items)
        assert np.array_equal(oracle.ranks_for_vector(items.data[3]), oracle.ranks_for_item(3))

    def test_reverse_k_matches_function(self, rng):
        users = make_set(rng.standard_normal((16, 4)), role="users")
        items = make_set(rng.standard_normal((35, 4)))
        oracle = ExactRankOracle(users, items)
        ranks = oracle.ranks_for_item(9)
        via_oracle = oracle.reverse_k_ranks(ranks, 6, query_id=9)
        via_scan = exact_reverse_k_ranks(items.data[9], 6, users, items)
        assert via_oracle.entries() == via_scan.entries()


class TestRankListCsv:
    def test_roundtrip(self, tmp_path):
        rl = ExactRankList(
            query_id=42,
            user_ids=np.array([7, 3, 11], np.uint64),
            ranks=np.array([1, 4, 4], np.int64),
        )
        path = tmp_path / "ranks.csv"
        save_rank_list(rl, path)
        back = load_rank_list(path)
        assert back.query_id == 42
        assert back.entries() == rl.entries()

    def test_none_query_id(self, tmp_path):
        rl = ExactRankList(None, np.array([1], np.uint64), np.array([2], np.int64))
        path = tmp_path / "ranks.csv"
        save_rank_list(rl, path)
        assert load_rank_list(path).query_id is None

    def test_bad_header(self, tmp_path):
        path = tmp_path / "ranks.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ValueError, match="header"):
            load_rank_list(path)
