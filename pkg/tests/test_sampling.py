import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import qmc

from sensbench.errors import UnsupportedDimension
from sensbench.sampling import direction_numbers, lhs, parse_direction_numbers, sobol_design, sobol_sequence


def gray_code_dim1(n):
    """Reference van der Corput construction for the first Sobol' coordinate."""
    out, x = [], 0
    for i in range(1, n + 1):
        c = (i - 1 ^ ((i - 1) >> 1)) ^ (i ^ (i >> 1))
        x ^= (1 << 31) >> (c.bit_length() - 1)
        out.append(x / 2**32)
    return out


class TestSobolSequence:
    def test_first_points(self):
        np.testing.assert_array_equal(sobol_sequence(3, 1).points[:, 0], [0.5, 0.75, 0.25])
        np.testing.assert_array_equal(sobol_sequence(1, 2).points, [[0.5, 0.5]])

    def test_empty(self):
        s = sobol_sequence(0, 5)
        assert (s.n, s.k) == (0, 5)

    def test_reference_construction(self):
        np.testing.assert_array_equal(sobol_sequence(100, 1).points[:, 0], gray_code_dim1(100))

    @pytest.mark.parametrize("k", [1, 2, 7, 30, 60, 64])
    def test_matches_scipy_unscrambled(self, k):
        ref = qmc.Sobol(k, scramble=False).random_base2(11)[1:1025]
        np.testing.assert_array_equal(sobol_sequence(1024, k).points, ref)

    def test_skip(self):
        full = sobol_sequence(40, 3).points
        np.testing.assert_array_equal(sobol_sequence(10, 3, skip=30).points, full[30:])

    def test_unsupported_dimension(self):
        with pytest.raises(UnsupportedDimension):
            sobol_sequence(4, 65)

    @given(st.integers(4, 12), st.integers(1, 64))
    def test_coordinate_means(self, m, k):
        pts = sobol_sequence(2**m, k).points
        assert np.all(np.abs(pts.mean(axis=0) - 0.5) <= 2.0 ** (1 - m))
        assert np.all((pts >= 0) & (pts < 1))

    def test_direction_table(self):
        v = direction_numbers()
        assert v.shape == (64, 32)
        rows = parse_direction_numbers("d s a m_i\n2 1 0 1\n3 2 1 1 3\n")
        assert rows == [(1, 0, [1]), (2, 1, [1, 3])]
        with pytest.raises(ValueError):
            parse_direction_numbers("d s a m_i\n2 2 0 1\n")


class TestSobolDesign:
    def test_row_budget(self):
        design = sobol_design(128, 5)
        assert design.n_rows == 896
        assert design.stacked().shape == (896, 5)

    @given(st.integers(2, 64), st.integers(1, 30))
    def test_ab_structure(self, n, k):
        design = sobol_design(n, k)
        a, b = design.a_matrix.points, design.b_matrix.points
        assert design.n_rows == n * (k + 2)
        for i, ab in enumerate(design.ab_matrices):
            changed = np.any(ab.points != a, axis=0)
            np.testing.assert_array_equal(ab.points[:, i], b[:, i])
            assert not np.any(np.delete(changed, i))

    def test_a_and_b_come_from_one_joint_sequence(self):
        design = sobol_design(4, 1)
        joint = sobol_sequence(4, 2).points
        np.testing.assert_array_equal(design.a_matrix.points[:, 0], joint[:, 0])
        np.testing.assert_array_equal(design.a_matrix.points[:, 0], gray_code_dim1(4))
        np.testing.assert_array_equal(design.b_matrix.points[:, 0], joint[:, 1])

    def test_pair_matrix(self):
        design = sobol_design(8, 4)
        m = design.ab_pair(1, 3)
        np.testing.assert_array_equal(m[:, [1, 3]], design.b_matrix.points[:, [1, 3]])
        np.testing.assert_array_equal(m[:, [0, 2]], design.a_matrix.points[:, [0, 2]])


class TestLhs:
    def test_small_case(self):
        pts = lhs(4, 2, 0).points
        for col in pts.T:
            assert sorted(np.floor(col * 4).astype(int)) == [0, 1, 2, 3]

    def test_single_row(self):
        pts = lhs(1, 3, 5).points
        assert pts.shape == (1, 3) and np.all((pts >= 0) & (pts < 1))

    @given(st.integers(1, 300), st.integers(1, 12), st.integers(0, 2**63 - 1))
    def test_stratification(self, n, k, seed):
        pts = lhs(n, k, seed).points
        assert np.all((pts >= 0) & (pts < 1))
        strata = np.floor(pts * n).astype(int)
        for col in strata.T:
            np.testing.assert_array_equal(np.sort(col), np.arange(n))

    def test_determinism(self):
        np.testing.assert_array_equal(lhs(50, 4, 11).points, lhs(50, 4, 11).points)
        assert not np.array_equal(lhs(50, 4, 11).points, lhs(50, 4, 12).points)

    @pytest.mark.parametrize("n,k", [(0, 2), (3, 0)])
    def test_bad_shape(self, n, k):
        with pytest.raises(ValueError):
            lhs(n, k, 0)
