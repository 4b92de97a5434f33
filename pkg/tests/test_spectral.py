from math import ceil, log

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import eigvalsh

from dgwalk.exceptions import GroupTooLargeError, ParameterError
from dgwalk.schemas import GroupElement, SpectralProfile
from dgwalk.services import spectral
from dgwalk.services.combinatorics import count_nonzero_boxes_naive
from dgwalk.services.group_core import element_index, iter_group_elements


@pytest.fixture(scope="module")
def spec32():
    return spectral.enumerate_spectrum(3, 2)


@pytest.fixture(scope="module")
def spec33():
    return spectral.enumerate_spectrum(3, 3)


class TestProfiles:
    @pytest.mark.parametrize("coords,counts", [
        ([[0, 0], [0, 0]], [9, 0]),
        ([[1, 0], [0, 0]], [5, 4]),
        ([[1, 0], [0, 1]], [3, 6]),
    ])
    def test_profile_examples(self, coords, counts):
        profile = spectral.box_sum_profile(GroupElement(n=3, q=2, coords=coords))
        assert profile.counts == counts
        assert profile.total == 9

    @pytest.mark.parametrize("coords,value", [
        ([[0, 0], [0, 0]], 1.0),
        ([[1, 0], [0, 0]], 1 / 9),
        ([[1, 0], [0, 1]], -1 / 3),
    ])
    def test_eigenvalue_examples(self, coords, value):
        profile = spectral.box_sum_profile(GroupElement(n=3, q=2, coords=coords))
        assert spectral.eigenvalue(profile) == pytest.approx(value, abs=1e-14)

    def test_nonzero_boxes_match_naive_count_for_4_2(self):
        for y in iter_group_elements(4, 2):
            assert spectral.box_sum_profile(y).nonzero_boxes == count_nonzero_boxes_naive(y)

    def test_profile_model(self):
        assert SpectralProfile(n=3, q=2, counts=[5, 4]).nonzero_boxes == 4


class TestSpectrum:
    def test_n2_q2(self):
        spec = spectral.enumerate_spectrum(2, 2)
        assert spec.eigenvalues.tolist() == pytest.approx([1.0, -1.0])

    def test_trace_and_floor(self, spec32):
        assert spec32.size == 16
        assert spec32.eigenvalues[0] == pytest.approx(1.0)
        assert abs(spec32.eigenvalues.sum()) < 1e-12
        assert spec32.eigenvalues.min() >= spectral.NEGATIVE_EIGENVALUE_FLOOR

    def test_spectrum_matches_profiles(self, spec33):
        for y in iter_group_elements(3, 3):
            expected = spectral.eigenvalue(spectral.box_sum_profile(y))
            assert spec33.eigenvalues[element_index(y)] == pytest.approx(expected, abs=1e-14)

    def test_chunking_does_not_change_result(self, monkeypatch, spec33):
        monkeypatch.setattr(spectral.settings, "chunk_size", 7)
        chunked = spectral.enumerate_spectrum(3, 3)
        assert np.array_equal(chunked.eigenvalues, spec33.eigenvalues)
        assert np.array_equal(chunked.zero_box_counts, spec33.zero_box_counts)

    def test_cap_is_enforced(self):
        with pytest.raises(GroupTooLargeError) as excinfo:
            spectral.enumerate_spectrum(6, 2, cap=2**20)
        assert excinfo.value.required == 2**25
        assert excinfo.value.cap == 2**20

    @pytest.mark.parametrize("n,q", [(3, 2), (4, 2), (3, 3)])
    def test_matches_dense_oracle(self, n, q):
        spec = spectral.enumerate_spectrum(n, q)
        dense = spectral.transition_matrix_oracle(n, q).toarray()
        assert np.allclose(dense.sum(axis=1), 1.0)
        assert np.abs(spec.multiset() - np.sort(eigvalsh(dense))).max() < 1e-10

    def test_oracle_n2_q3(self):
        dense = spectral.transition_matrix_oracle(2, 3).toarray()
        assert np.allclose(np.diag(dense), 0.0)
        assert np.allclose(dense, (np.ones((3, 3)) - np.eye(3)) / 2)

    def test_multiplicities_sum_to_size(self, spec33):
        rows = spectral.spectrum_multiplicities(spec33)
        assert sum(count for _, count in rows) == spec33.size
        assert rows[-1] == (1.0, 1)


class TestDistributions:
    def test_point_mass_at_zero(self):
        distribution = spectral.exact_distribution(3, 2, 0)
        assert distribution[0] == pytest.approx(1.0)
        assert np.abs(distribution[1:]).max() < 1e-12

    def test_one_step_is_uniform_on_moves(self):
        distribution = spectral.exact_distribution(3, 2, 1)
        assert np.isclose(distribution, 1 / 9).sum() == 9
        assert np.isclose(distribution, 0.0).sum() == 7

    @pytest.mark.parametrize("t", [5, 50])
    def test_matrix_power_oracle(self, t):
        exact = spectral.exact_distribution(3, 2, t)
        oracle = spectral.matrix_power_distribution(spectral.transition_matrix_oracle(3, 2), t)
        assert np.abs(exact - oracle).max() < 1e-10

    def test_direct_and_fft_agree(self, spec33):
        for t in (0, 1, 7, 40):
            direct = spectral.exact_distribution(3, 3, t, method="direct", spectrum=spec33)
            fft = spectral.exact_distribution(3, 3, t, method="fft", spectrum=spec33)
            assert np.abs(direct - fft).max() < 1e-10

    @pytest.mark.parametrize("method", ["direct", "fft"])
    def test_distribution_postconditions(self, spec33, method):
        for t in (0, 1, 2, 5, 13, 60):
            distribution = spectral.exact_distribution(3, 3, t, method=method, spectrum=spec33)
            assert abs(distribution.sum() - 1.0) <= 1e-10
            assert distribution.min() >= -1e-12

    def test_tv_at_zero(self):
        assert spectral.exact_tv(3, 3, 0) == pytest.approx(1 - 1 / 81)

    def test_tv_non_increasing_and_below_l2(self, spec32):
        curve = spectral.tv_curve(spec32, range(101))
        assert all(b <= a + 1e-12 for a, b in zip(curve, curve[1:]))
        for t, d in enumerate(curve[:51]):
            assert d <= spectral.l2_bound(spec32, t) + 1e-12

    def test_l2_bound_at_zero(self, spec32):
        assert spectral.l2_bound(spec32, 0) == pytest.approx(0.5 * np.sqrt(15))

    def test_l2_bound_decreases_to_zero(self, spec32):
        values = [spectral.l2_bound(spec32, t) for t in range(0, 200, 10)]
        assert all(b < a for a, b in zip(values, values[1:]))
        assert values[-1] < 1e-10

    def test_log_space_survives_underflow(self, spec32):
        assert np.isfinite(spectral.log_l2_bound(spec32, 10**6))
        assert spectral.l2_bound(spec32, 10**6) == 0.0

    def test_lazy_chain(self, spec32):
        lazy = spectral.exact_distribution(3, 2, 1, lazy=True, spectrum=spec32)
        assert lazy[0] == pytest.approx(0.5)
        assert spectral.exact_tv(3, 2, 40, lazy=True, spectrum=spec32) > spectral.exact_tv(3, 2, 40, spectrum=spec32)

    def test_split_parts(self, spec33):
        for t in (0, 3, 25):
            split = spectral.split_l2_sum(spec33, t)
            total = np.logaddexp(split.log_negative, split.log_nonnegative)
            assert total == pytest.approx(spectral.log_l2_sum(spec33, t))
            assert split.log_nonnegative <= split.log_sigma + 1e-12
            assert split.log_negative <= split.log_negative_crude + 1e-12

    def test_mixing_time_crosses_quarter(self):
        spec = spectral.enumerate_spectrum(4, 2)
        t_mix = spectral.mixing_time(spec, 0.25)
        assert t_mix is not None and t_mix > 0
        assert spectral.exact_tv(4, 2, t_mix, spectrum=spec) <= 0.25
        assert spectral.exact_tv(4, 2, t_mix - 1, spectrum=spec) > 0.25

    def test_periodic_walk_never_mixes(self):
        assert spectral.mixing_time(spectral.enumerate_spectrum(2, 2), 0.25, t_limit=64) is None

    def test_negative_time_rejected(self, spec32):
        with pytest.raises(ParameterError):
            spectral.l2_bound(spec32, -1)


class TestTheoremTimes:
    def test_n4_q2(self):
        times = spectral.theorem_times(4, 2, 0.0)
        assert times.t_nq == pytest.approx(2 * log(4))

    @settings(max_examples=200, deadline=None)
    @given(st.integers(2, 10**4), st.integers(2, 10**3), st.floats(0, 50))
    def test_bracket(self, n, q, c):
        times = spectral.theorem_times(n, q, c)
        assert times.t_lower <= times.t_nq <= times.t_upper
        if q == 2:
            assert times.t_nq == pytest.approx(n * n / 8 * log(n))

    def test_window_ratio_shrinks(self):
        ratios = [spectral.theorem_times(n, 2, 1.0).window_ratio for n in (10, 100, 1000, 10**5)]
        assert all(b < a for a, b in zip(ratios, ratios[1:]))

    def test_negative_c_rejected(self):
        with pytest.raises(ParameterError):
            spectral.theorem_times(4, 2, -1.0)

    @pytest.mark.parametrize("n,q", [(3, 2), (4, 2), (3, 3)])
    def test_upper_endpoint(self, n, q):
        log_bound, target = spectral.upper_endpoint_log_bound(n, q)
        assert log_bound <= target
        assert ceil(spectral.theorem_times(n, q, spectral.minimum_upper_c(n)).t_upper) > 0
