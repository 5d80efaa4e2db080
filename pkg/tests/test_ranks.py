import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rankindep.ranks import (
    MultiSample,
    PairedSample,
    RankProfile,
    concomitant_profile,
    dominance_matrix,
    inverse_permutation,
    multivariate_ranks,
    rank_vector,
    ranks_along_last_axis,
)

distinct_floats = st.lists(
    st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False), min_size=2, max_size=40, unique=True
)


class TestPairedSample:
    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            PairedSample([1, 2, 3], [1, 2])

    def test_too_short(self):
        with pytest.raises(ValueError):
            PairedSample([1.0], [2.0])

    @pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
    def test_non_finite(self, bad):
        with pytest.raises(ValueError):
            PairedSample([1.0, bad, 3.0], [1.0, 2.0, 3.0])

    def test_swapped(self):
        s = PairedSample([1, 2, 3], [4, 5, 6]).swapped()
        assert s.x.tolist() == [4, 5, 6] and s.y.tolist() == [1, 2, 3]


class TestConcomitantRanks:
    def test_hand_example(self):
        prof = concomitant_profile(PairedSample([3, 1, 2], [20, 10, 30]))
        # sorted by x: (1,10), (2,30), (3,20) -> y ranks 1, 3, 2
        assert prof.concomitant_ranks.tolist() == [1, 3, 2]
        assert prof.x_ranks.tolist() == [3, 1, 2]
        assert prof.y_ranks.tolist() == [2, 1, 3]

    @given(distinct_floats, st.randoms())
    def test_is_permutation(self, xs, rnd):
        ys = list(xs)
        rnd.shuffle(ys)
        R = concomitant_profile(PairedSample(xs, ys)).concomitant_ranks
        assert sorted(R.tolist()) == list(range(1, len(xs) + 1))

    @given(distinct_floats, st.randoms())
    def test_swapped_matches_recomputation(self, xs, rnd):
        ys = list(xs)
        rnd.shuffle(ys)
        sample = PairedSample(xs, ys)
        a = concomitant_profile(sample).swapped()
        b = concomitant_profile(sample.swapped())
        assert a.concomitant_ranks.tolist() == b.concomitant_ranks.tolist()
        assert a.x_ranks.tolist() == b.x_ranks.tolist()

    def test_from_concomitant_roundtrip(self):
        prof = RankProfile.from_concomitant([2, 4, 1, 3])
        assert prof.concomitant_ranks.tolist() == [2, 4, 1, 3]
        assert prof.swapped().swapped().concomitant_ranks.tolist() == [2, 4, 1, 3]


class TestTies:
    def test_seeded_tie_breaking_is_reproducible(self):
        v = [1.0, 1.0, 1.0, 2.0, 0.0]
        a = rank_vector(v, tie_seed=7)
        b = rank_vector(v, tie_seed=7)
        assert a.tolist() == b.tolist()
        assert a[4] == 1 and a[3] == 5
        assert sorted(a[:3].tolist()) == [2, 3, 4]

    def test_tie_breaking_is_uniform(self):
        counts = np.zeros(2)
        for seed in range(400):
            counts[rank_vector([0.0, 0.0], tie_seed=seed)[0] - 1] += 1
        assert 150 < counts[0] < 250

    def test_batch_ranks_match_single(self, rng):
        a = rng.normal(size=(5, 30))
        batch = ranks_along_last_axis(a)
        for row, r in zip(a, batch):
            assert r.tolist() == rank_vector(row).tolist()


class TestInversePermutation:
    @given(st.permutations(list(range(12))))
    def test_inverse(self, perm):
        perm = np.array(perm)
        inv = inverse_permutation(perm)
        assert (perm[inv] == np.arange(12)).all()
        assert (inv[perm] == np.arange(12)).all()


class TestDominance:
    def naive(self, M, self_inclusion):
        n = len(M)
        return np.array([[(i != j or self_inclusion) and all(M[j] <= M[i]) for j in range(n)]
                         for i in range(n)])

    @settings(max_examples=50)
    @given(st.integers(2, 12), st.integers(1, 4), st.booleans(), st.integers(0, 2**32 - 1))
    def test_matches_naive(self, n, d, inc, seed):
        M = np.random.default_rng(seed).integers(0, 4, size=(n, d)).astype(float)
        assert (dominance_matrix(M, inc) == self.naive(M, inc)).all()

    def test_self_inclusion_adds_one(self, rng):
        sample = MultiSample(rng.normal(size=(15, 2)), rng.normal(size=(15, 3)))
        a = multivariate_ranks(sample, self_inclusion=False)
        b = multivariate_ranks(sample, self_inclusion=True)
        assert (b.rX == a.rX + 1).all() and (b.rY == a.rY + 1).all() and (b.rXY == a.rXY + 1).all()
        assert a.RX == a.rX.sum() and a.n == 15

    def test_multisample_shapes(self):
        s = MultiSample(np.arange(6.0), np.ones((6, 2)))
        assert (s.n, s.p, s.q) == (6, 1, 2)
        with pytest.raises(ValueError):
            MultiSample(np.ones((5, 2)), np.ones((4, 2)))
