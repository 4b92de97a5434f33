import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dgwalk.exceptions import ParameterError, PreconditionError
from dgwalk.schemas import GroupElement, LemmaReport
from dgwalk.services import combinatorics as cb
from dgwalk.services.group_core import iter_group_elements
from dgwalk.services.verification import SuiteScale, check_lemma_3_2


def residue_vectors(max_len=30, max_q=11):
    return st.integers(2, max_q).flatmap(
        lambda q: st.tuples(st.lists(st.integers(0, q - 1), min_size=1, max_size=max_len), st.just(q))
    )


def element(coords, q):
    coords = np.asarray(coords)
    return GroupElement(n=coords.shape[0] + 1, q=q, coords=coords)


class TestSkeleton:
    def test_example_positions(self):
        u = [0] * 10
        for position in (3, 4, 5, 8, 9):
            u[position - 1] = 1
        skel = cb.skeleton(u)
        assert skel.indices == [3, 5, 8]
        assert skel.size == 3

    def test_zero_vector(self):
        assert cb.skeleton([0, 0, 0]).size == 0

    def test_all_ones(self):
        assert cb.skeleton([1, 1, 1, 1, 1]).indices == [1, 3, 5]

    @settings(max_examples=200)
    @given(residue_vectors())
    def test_invariants(self, case):
        u, _ = case
        indices = cb.skeleton(u).indices
        assert all(b - a >= 2 for a, b in zip(indices, indices[1:]))
        covered = set(indices) | {s + 1 for s in indices}
        assert all(position in covered for position, value in enumerate(u, start=1) if value)
        assert len(indices) <= (len(u) + 1) / 2
        assert (len(indices) == 0) == (not any(u))


class TestIntervals:
    def test_examples(self):
        assert cb.count_nonzero_intervals([0, 0, 0], 2) == 0
        assert cb.count_nonzero_intervals([1, 0, 0, 0], 2) == 4
        assert cb.count_nonzero_intervals([1, 1], 2) == 2
        assert cb.nonzero_intervals([1, 1], 2) == [(1, 1), (2, 2)]

    @settings(max_examples=200)
    @given(residue_vectors())
    def test_prefix_count_matches_naive(self, case):
        u, q = case
        assert cb.count_nonzero_intervals(u, q) == cb.count_nonzero_intervals_naive(u, q)
        assert cb.count_nonzero_intervals(u, q) == len(cb.nonzero_intervals(u, q))

    @settings(max_examples=200)
    @given(residue_vectors(max_len=63, max_q=101))
    def test_interval_lower_bound(self, case):
        u, q = case
        s = cb.skeleton(u).size
        n = len(u) + 1
        assert cb.count_nonzero_intervals(u, q) >= s * (n - s)
        assert cb.refined_interval_count(u, q) >= s * (n - s)


class TestBoxes:
    def test_examples(self):
        assert cb.count_nonzero_boxes(GroupElement.zero(4, 3)) == 0
        assert cb.count_nonzero_boxes(element([[1, 0], [0, 0]], 2)) == 4

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 6), st.integers(2, 5), st.integers(0, 2**32))
    def test_prefix_count_matches_naive(self, n, q, seed):
        coords = cb.random_residues(np.random.default_rng(seed), (1, n - 1, n - 1), q)[0]
        y = element(coords, q)
        assert cb.count_nonzero_boxes(y) == cb.count_nonzero_boxes_naive(y)

    @pytest.mark.parametrize("n,q", [(3, 2), (4, 2), (3, 3)])
    def test_minimum_exhaustive(self, n, q):
        for y in iter_group_elements(n, q):
            if y.coords.any():
                assert cb.count_nonzero_boxes(y) >= (n - 1) ** 2


class TestLemma33:
    def test_zero_element_with_no_rows(self):
        assert cb.verify_lemma_3_3(GroupElement.zero(3, 2), [])

    def test_example(self):
        assert cb.verify_lemma_3_3(element([[1, 0], [0, 0]], 2), [1])

    def test_rows_too_close(self):
        y = element([[1, 0, 0], [1, 0, 0], [0, 0, 0]], 2)
        with pytest.raises(PreconditionError):
            cb.verify_lemma_3_3(y, [1, 2])

    def test_zero_row_rejected(self):
        with pytest.raises(PreconditionError):
            cb.verify_lemma_3_3(element([[1, 0, 0], [0, 0, 0], [0, 0, 0]], 2), [1, 3])

    def test_spaced_rows_are_valid(self):
        y = element([[1, 0, 0, 1], [1, 1, 0, 0], [0, 2, 0, 0], [0, 0, 0, 1]], 3)
        rows = cb.spaced_row_set(y)
        assert rows == [1, 3]
        assert cb.verify_lemma_3_3(y, rows)


class TestPsi:
    def test_zero(self):
        assert cb.build_psi(GroupElement.zero(5, 3)).total_size == 0

    def test_single_row(self):
        family = cb.build_psi(element([[1, 0, 0], [0, 0, 0], [0, 0, 0]], 2))
        assert family.rows == [[(1, 1), (1, 2), (1, 3)], [], []]

    @settings(max_examples=60, deadline=None)
    @given(st.integers(3, 10), st.integers(2, 5), st.integers(0, 2**32))
    def test_box_inequality(self, n, q, seed):
        coords = cb.random_residues(np.random.default_rng(seed), (1, n - 1, n - 1), q)[0]
        y = element(coords, q)
        family = cb.build_psi(y)
        assert family.consecutive_disjoint()
        for i, row in enumerate(family.rows):
            assert set(row) <= set(cb.nonzero_intervals(y.coords[i], q))
        assert cb.psi_box_inequality(y, family)

    def test_big_rows_are_emptied(self):
        y = element(np.ones((5, 5), dtype=int), 2)
        everything = cb.big_rows(y, 0.1)
        assert everything == {1, 2, 3, 4, 5}
        assert cb.build_psi(y, epsilon=0.1).total_size == 0


class TestSuites:
    def test_lemma_3_2_exhaustive_n6(self):
        report = cb.verify_lemma_3_2(6, 2)
        assert report.cases_checked == 32
        assert report.passed

    def test_lemma_3_2_exhaustive_n5_q3(self):
        report = cb.verify_lemma_3_2(5, 3)
        assert report.cases_checked == 81 and report.passed

    def test_lemma_3_2_random(self):
        report = cb.verify_lemma_3_2(40, 101, mode="random", trials=5000, seed=4)
        assert report.cases_checked == 5000 and report.passed

    def test_lemma_3_2_cap(self):
        with pytest.raises(ParameterError):
            cb.verify_lemma_3_2(22, 2)

    @pytest.mark.parametrize("suite", [cb.verify_lemma_3_3_suite, cb.verify_lemma_3_5_suite,
                                       cb.verify_min_boxes, cb.verify_box_oracle])
    @pytest.mark.parametrize("n,q", [(3, 2), (4, 2), (3, 3)])
    def test_exhaustive_tiny_cases(self, suite, n, q):
        report = suite(n, q)
        assert report.passed and report.cases_checked > 0

    def test_random_matrices(self):
        for suite in (cb.verify_lemma_3_3_suite, cb.verify_lemma_3_5_suite, cb.verify_min_boxes):
            assert suite(8, 5, mode="random", trials=300, seed=1).passed

    def test_interval_oracle(self):
        assert cb.verify_interval_oracle(9, 2).cases_checked == 256
        assert cb.verify_interval_oracle(30, 7, mode="random", trials=200).passed

    def test_counterexamples_are_recorded(self, monkeypatch):
        monkeypatch.setattr(cb, "_count_unequal_pairs", lambda prefix, q: np.zeros(prefix.shape[0], dtype=np.int64))
        report = cb.verify_lemma_3_2(4, 2)
        assert not report.passed
        witness = report.counterexamples[0]
        assert set(witness) == {"u", "q", "S", "s", "refined", "bound"}


class TestLemma32Scale:
    def _record_calls(self, monkeypatch):
        calls = []

        def recorder(n, q, mode="exhaustive", trials=0, seed=0):
            calls.append((n, q, mode, trials))
            return LemmaReport(lemma="lemma3_2", mode=mode, cases_checked=1)

        monkeypatch.setattr(cb, "verify_lemma_3_2", recorder)
        return calls

    def test_default_scale(self, monkeypatch):
        calls = self._record_calls(monkeypatch)
        check_lemma_3_2(SuiteScale(trials=10000))
        exhaustive = [q ** (n - 1) for n, q, mode, _ in calls if mode == "exhaustive"]
        assert max(exhaustive) == 2**14
        assert sum(trials for *_, mode, trials in calls if mode == "random") == 10000

    def test_acceptance_scale(self, monkeypatch):
        calls = self._record_calls(monkeypatch)
        check_lemma_3_2(SuiteScale(trials=10000, acceptance=True))
        exhaustive = [q ** (n - 1) for n, q, mode, _ in calls if mode == "exhaustive"]
        assert max(exhaustive) == cb.EXHAUSTIVE_VECTOR_CAP
        assert all(size <= cb.EXHAUSTIVE_VECTOR_CAP for size in exhaustive)
        assert (21, 2) in [(n, q) for n, q, mode, _ in calls if mode == "exhaustive"]
        assert sum(trials for *_, mode, trials in calls if mode == "random") >= 10**5
