import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lobm import core
from lobm.rng import substream


def random_complex(rng, n, scale=1.0):
    return scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)


class TestPermanent:
    def test_identity_2x2(self):
        assert core.permanent_ryser(np.eye(2)) == 1

    def test_all_ones_2x2(self):
        assert core.permanent_ryser(np.ones((2, 2))) == pytest.approx(2)

    def test_ryser_matches_naive_5x5(self):
        rng = substream(1, "perm5")
        for _ in range(10):
            a = random_complex(rng, 5)
            assert abs(core.permanent_ryser(a) - core.permanent_naive(a)) < 1e-9

    @pytest.mark.parametrize("n", range(1, 7))
    def test_ryser_matches_naive_all_small_sizes(self, n):
        rng = substream(2, "perm", n)
        a = random_complex(rng, n)
        assert core.permanent_ryser(a) == pytest.approx(core.permanent_naive(a), abs=1e-9)

    def test_dimension_cap(self):
        with pytest.raises(ValueError, match="cap"):
            core.permanent_ryser(np.eye(15))
        with pytest.raises(ValueError, match="cap"):
            core.permanent_naive(np.eye(15))

    def test_non_square_rejected(self):
        with pytest.raises(ValueError, match="square"):
            core.permanent_ryser(np.ones((2, 3)))


class TestGlynn:
    def test_identity_any_sign_vector(self):
        for x in ([1, 1], [1, -1], [-1, 1], [-1, -1]):
            assert core.glynn_sample(np.eye(2), x) == pytest.approx(1)

    def test_exhaustive_mean_is_permanent_2x2(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert core.glynn_exhaustive_mean(a) == pytest.approx(1 * 4 + 2 * 3)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(2, 4), st.integers(0, 10_000))
    def test_exhaustive_mean_matches_ryser(self, n, seed):
        a = random_complex(substream(seed, "glynn"), n)
        assert core.glynn_exhaustive_mean(a) == pytest.approx(
            core.permanent_ryser(a), abs=1e-12
        )

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            core.glynn_sample(np.eye(3), [1, -1])

    def test_bounded_on_conjugated_sign_diagonal(self):
        # Q = U^dag W U with W = diag(+-1) has unit norm; submatrices at
        # collision-free occupations keep every Glynn sample inside the disk.
        rng = substream(3, "bound")
        for trial in range(20):
            m = 6
            u = np.linalg.qr(random_complex(rng, m))[0]
            w = rng.integers(0, 2, m) * 2 - 1
            q = u.conj().T @ (w[:, None] * u)
            sub = q[np.ix_([0, 2, 4], [0, 2, 4])]
            x = rng.integers(0, 2, 3) * 2 - 1
            assert abs(core.glynn_sample(sub, x)) <= 1 + 1e-12


class TestGurvitsMC:
    def test_identity_is_exact(self):
        est, se = core.gurvits_permanent_mc(np.eye(3), 100, substream(4, "id"))
        assert est == pytest.approx(1)
        assert se == pytest.approx(0, abs=1e-15)

    def test_within_three_se_of_exact(self):
        rng = substream(5, "mc")
        a = random_complex(rng, 4, scale=0.5)
        exact = core.permanent_ryser(a)
        est, se = core.gurvits_permanent_mc(a, 100_000, rng)
        assert abs(est - exact) < 3 * se

    def test_seeded_determinism(self):
        a = random_complex(substream(6, "m"), 4)
        r1 = core.gurvits_permanent_mc(a, 500, substream(7, "s"))
        r2 = core.gurvits_permanent_mc(a, 500, substream(7, "s"))
        assert r1 == r2

    def test_too_few_samples(self):
        with pytest.raises(ValueError, match="samples"):
            core.gurvits_permanent_mc(np.eye(2), 1, substream(8, "x"))

    def test_grand_mean_unbiased(self):
        # 200 independent runs of 1000 samples: grand mean within 4 combined
        # standard errors of the exact permanent.
        a = random_complex(substream(9, "gm"), 4, scale=0.6)
        exact = core.permanent_ryser(a)
        ests = []
        for r in range(200):
            est, _ = core.gurvits_permanent_mc(a, 1000, substream(10, "run", r))
            ests.append(est)
        ests = np.array(ests)
        grand = ests.mean()
        combined_se = np.sqrt((np.abs(ests - grand) ** 2).sum() / (len(ests) - 1)) / np.sqrt(len(ests))
        assert abs(grand - exact) < 4 * combined_se


class TestSubmatrix:
    def test_no_repetition_is_top_left_block(self):
        q = np.arange(16.0).reshape(4, 4)
        s = [1, 1, 0, 0]
        np.testing.assert_array_equal(core.build_submatrix(q, s, s), q[:2, :2])

    def test_output_collision_duplicates_row(self):
        q = np.arange(16.0).reshape(4, 4)
        sub = core.build_submatrix(q, [1, 1, 0, 0], [2, 0, 0, 0])
        np.testing.assert_array_equal(sub, np.array([[0.0, 1.0], [0.0, 1.0]]))

    def test_all_ones_returns_matrix(self):
        q = np.arange(9.0).reshape(3, 3)
        np.testing.assert_array_equal(core.build_submatrix(q, [1] * 3, [1] * 3), q)

    def test_total_mismatch(self):
        with pytest.raises(ValueError, match="totals"):
            core.build_submatrix(np.eye(3), [1, 0, 0], [1, 1, 0])


class TestFockSpace:
    def test_two_mode_two_photon(self):
        assert core.enumerate_fock_space(2, 2) == [(2, 0), (1, 1), (0, 2)]

    def test_stars_and_bars_size(self):
        assert len(core.enumerate_fock_space(4, 2)) == 10

    def test_collision_free_size(self):
        states = core.enumerate_fock_space(4, 2, collision_free=True)
        assert len(states) == 6
        assert all(max(s) <= 1 for s in states)

    @given(st.integers(1, 6), st.integers(0, 4))
    @settings(max_examples=25, deadline=None)
    def test_sizes_and_weights(self, m, n):
        states = core.enumerate_fock_space(m, n)
        assert len(states) == core.fock_space_size(m, n)
        assert all(sum(s) == n for s in states)
        assert len(set(states)) == len(states)
