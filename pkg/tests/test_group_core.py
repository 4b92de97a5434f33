import json
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dgwalk.exceptions import DimensionError, InvalidStateError
from dgwalk.schemas import GroupElement, Move, TableState, WalkConfig
from dgwalk.services import group_core as gc


def zero_table(n, q):
    return gc.initial_table(n, q)


@st.composite
def tables_and_moves(draw):
    n = draw(st.integers(min_value=2, max_value=12))
    q = draw(st.sampled_from([2, 3, 5, 7]))
    rows = draw(st.lists(st.integers(0, q - 1), min_size=n, max_size=n))
    cols = draw(st.lists(st.integers(0, q - 1), min_size=n - 1, max_size=n - 1))
    cols.append((sum(rows) - sum(cols)) % q)
    start = gc.initial_table(n, q, rows, cols)
    seed = draw(st.integers(0, 2**32))
    walk = WalkConfig(n=n, q=q, row_sums=rows, col_sums=cols, seed=seed, steps=draw(st.integers(0, 5)))
    state = gc.run_walk(walk, start)
    i, j = sorted(draw(st.lists(st.integers(1, n), min_size=2, max_size=2, unique=True)))
    k, l = sorted(draw(st.lists(st.integers(1, n), min_size=2, max_size=2, unique=True)))
    sign = draw(st.sampled_from([1, -1]))
    return state, Move(i=i, j=j, k=k, l=l, sign=sign)


class TestValidateTable:
    def test_zero_table_is_valid(self):
        assert gc.validate_table(np.zeros((3, 3)), [0, 0, 0], [0, 0, 0], 2)

    def test_sum_mismatch_returns_false(self):
        assert not gc.validate_table(np.zeros((3, 3)), [1, 0, 0], [0, 0, 0], 2)

    def test_sums_are_taken_mod_q(self):
        assert gc.validate_table([[1, 1], [1, 1]], [0, 0], [0, 0], 2)

    def test_structural_problems_raise(self):
        with pytest.raises(DimensionError):
            gc.validate_table(np.zeros((2, 3)), [0, 0], [0, 0, 0], 2)
        with pytest.raises(DimensionError):
            gc.validate_table(np.zeros((3, 3)), [0, 0], [0, 0, 0], 2)

    def test_table_state_rejects_bad_sums(self):
        with pytest.raises(ValueError):
            TableState(n=2, q=3, entries=[[1, 0], [0, 0]], row_sums=[0, 0], col_sums=[0, 0])


class TestMoves:
    def test_move_delta_examples(self):
        assert gc.move_delta(Move(i=1, j=2, k=1, l=2), 3).tolist() == [[1, -1, 0], [-1, 1, 0], [0, 0, 0]]
        assert gc.move_delta(Move(i=1, j=2, k=1, l=2, sign=-1), 3).tolist() == [[-1, 1, 0], [1, -1, 0], [0, 0, 0]]
        assert gc.move_delta(Move(i=1, j=3, k=2, l=3), 3).tolist() == [[0, 1, -1], [0, 0, 0], [0, -1, 1]]

    def test_move_delta_has_zero_margins(self):
        for m in gc.enumerate_moves(4, 3):
            delta = gc.move_delta(m, 4)
            assert not delta.sum(axis=0).any() and not delta.sum(axis=1).any()
            assert np.count_nonzero(delta) == 4

    def test_move_does_not_fit(self):
        with pytest.raises(DimensionError):
            gc.move_delta(Move(i=1, j=4, k=1, l=2), 3)

    def test_invalid_move_order(self):
        with pytest.raises(ValueError):
            Move(i=2, j=1, k=1, l=2)

    def test_q2_canonical_sign(self):
        assert Move(i=1, j=2, k=1, l=2, sign=-1).canonical(2).sign == 1
        assert Move(i=1, j=2, k=1, l=2, sign=-1).canonical(3).sign == -1

    def test_q2_moves_are_constructed_canonical(self):
        assert {m.sign for m in gc.enumerate_moves(3, 2)} == {1}
        assert all(gc.sample_move(gc.make_rng(seed), 4, 2).sign == 1 for seed in range(20))

    def test_q2_apply_move_ignores_sign(self):
        start = gc.initial_table(3, 2, [1, 0, 1], [0, 1, 1])
        plus, minus = Move(i=1, j=3, k=1, l=2, sign=1), Move(i=1, j=3, k=1, l=2, sign=-1)
        assert np.array_equal(gc.apply_move(start, plus).entries, gc.apply_move(start, minus).entries)
        zero = GroupElement.zero(3, 2)
        assert np.array_equal(gc.apply_move(zero, plus).coords, gc.apply_move(zero, minus).coords)

    @pytest.mark.parametrize("n,q,expected", [(3, 2, 9), (3, 3, 18), (4, 5, 72), (2, 5, 2)])
    def test_move_count(self, n, q, expected):
        assert gc.move_count(n, q) == expected
        moves = gc.enumerate_moves(n, q)
        assert len(moves) == expected
        assert len({(m.i, m.j, m.k, m.l, m.sign) for m in moves}) == expected
        assert len({(m.i, m.j, m.k, m.l) for m in moves}) == comb(n, 2) ** 2

    @pytest.mark.parametrize("n,q", [(3, 3), (3, 2), (2, 5)])
    def test_sample_move_is_uniform(self, n, q):
        rng = gc.make_rng(7)
        total = gc.move_count(n, q)
        draws = 200 * total
        i, j, k, l, sign = next(gc.draw_steps(rng, n, q, 1, draws))
        keys = list(zip(i.tolist(), j.tolist(), k.tolist(), l.tolist(), sign.tolist()))
        counts = np.array([keys.count((m.i, m.j, m.k, m.l, m.sign)) for m in gc.enumerate_moves(n, q)])
        assert counts.sum() == draws
        # each count is Binomial(draws, 1/total); 6 standard deviations
        assert np.all(np.abs(counts - 200) < 6 * np.sqrt(200))

    def test_sample_move_is_reproducible(self):
        a = [gc.sample_move(gc.make_rng(11), 5, 7) for _ in range(3)]
        b = [gc.sample_move(gc.make_rng(11), 5, 7) for _ in range(3)]
        assert a == b

    def test_apply_move_on_table(self):
        state = gc.apply_move(zero_table(3, 3), Move(i=1, j=2, k=1, l=2))
        assert state.entries.tolist() == [[1, 2, 0], [2, 1, 0], [0, 0, 0]]

    def test_apply_move_on_coordinates(self):
        moved = gc.apply_move(GroupElement.zero(3, 2), Move(i=1, j=2, k=1, l=2))
        assert moved.coords.tolist() == [[1, 0], [0, 0]]

    def test_inverse_move_restores_state(self):
        start = gc.initial_table(4, 5, [1, 2, 3, 4], [4, 3, 2, 1])
        m = Move(i=2, j=4, k=1, l=3, sign=1)
        assert np.array_equal(gc.apply_move(gc.apply_move(start, m), m.reversed()).entries, start.entries)

    @settings(max_examples=60, deadline=None)
    @given(tables_and_moves())
    def test_apply_move_preserves_sums(self, case):
        state, m = case
        moved = gc.apply_move(state, m)
        assert gc.validate_table(moved.entries, state.row_sums, state.col_sums, state.q)

    def test_move_coordinates_match_table_move(self):
        for m in gc.enumerate_moves(4, 3):
            table = gc.move_delta(m, 4) % 3
            assert np.array_equal(gc.to_coordinates(table, 3).coords, gc.move_coordinates(m, 4, 3).coords)


class TestCoordinates:
    def test_move_coordinates_example(self):
        g = gc.move_delta(Move(i=1, j=2, k=1, l=2), 3) % 5
        assert gc.to_coordinates(g, 5).coords.tolist() == [[1, 0], [0, 0]]

    def test_zero(self):
        assert not gc.to_coordinates(np.zeros((4, 4)), 3).coords.any()

    def test_rejects_nonzero_margins(self):
        with pytest.raises(InvalidStateError):
            gc.to_coordinates([[1, 0], [0, 0]], 3)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(2, 7), st.sampled_from([2, 3, 5, 7]), st.integers(0, 2**32))
    def test_round_trip_and_homomorphism(self, n, q, seed):
        rng = gc.make_rng(seed)
        a = GroupElement(n=n, q=q, coords=rng.integers(0, q, size=(n - 1, n - 1)))
        b = GroupElement(n=n, q=q, coords=rng.integers(0, q, size=(n - 1, n - 1)))
        ga, gb = gc.from_coordinates(a), gc.from_coordinates(b)
        assert not (ga.sum(axis=0) % q).any() and not (ga.sum(axis=1) % q).any()
        assert np.array_equal(gc.to_coordinates(ga, q).coords, a.coords)
        assert np.array_equal(gc.to_coordinates(ga + gb, q).coords, (a.coords + b.coords) % q)

    def test_single_one_example(self):
        table = gc.from_coordinates(GroupElement(n=3, q=3, coords=[[1, 0], [0, 0]]))
        assert table.tolist() == [[1, 2, 0], [2, 1, 0], [0, 0, 0]]

    def test_round_trip_exhaustive_3_3(self):
        seen = set()
        for c in gc.iter_group_elements(3, 3):
            table = gc.from_coordinates(c)
            assert np.array_equal(gc.to_coordinates(table, 3).coords, c.coords)
            seen.add(table.tobytes())
        assert len(seen) == 81

    def test_element_index_is_mixed_radix(self):
        g = GroupElement(n=3, q=3, coords=[[1, 0], [0, 2]])
        assert gc.element_index(g) == 1 * 27 + 2
        assert np.array_equal(gc.element_from_index(29, 3, 3).coords, g.coords)

    def test_enumerate_tables_counts_group(self):
        tables = gc.enumerate_tables(3, 2, [1, 0, 1], [0, 1, 1])
        assert len(tables) == gc.group_size(3, 2)


class TestWalk:
    def test_zero_steps_is_identity(self):
        start = gc.initial_table(3, 2)
        final = gc.run_walk(WalkConfig(n=3, q=2, steps=0), start)
        assert np.array_equal(final.entries, start.entries)

    def test_only_move_for_n2(self):
        final = gc.run_walk(WalkConfig(n=2, q=2, steps=1), gc.initial_table(2, 2))
        assert final.entries.tolist() == [[1, 1], [1, 1]]

    def test_same_seed_same_trajectory(self):
        config = WalkConfig(n=5, q=7, seed=99, steps=40, row_sums=[1, 2, 3, 4, 5], col_sums=[5, 4, 3, 2, 1])
        start = gc.initial_table(5, 7, config.row_sums, config.col_sums)
        first = [gc.state_digest(state) for _, state in gc.iter_walk(config, start)]
        second = [gc.state_digest(state) for _, state in gc.iter_walk(config, start)]
        assert first == second and len(first) == 40

    def test_on_step_sees_every_state(self):
        seen = []
        gc.run_walk(WalkConfig(n=3, q=3, steps=5), gc.initial_table(3, 3), on_step=lambda t, s: seen.append(t))
        assert seen == [0, 1, 2, 3, 4, 5]

    def test_invalid_start_rejected(self):
        start = gc.initial_table(3, 3, [1, 0, 0], [1, 0, 0])
        with pytest.raises(InvalidStateError):
            gc.run_walk(WalkConfig(n=3, q=3, steps=1), start)

    def test_lazy_walk_holds(self):
        config = WalkConfig(n=4, q=3, seed=5, steps=400, lazy=True)
        start = gc.initial_table(4, 3)
        states = [state.entries for _, state in gc.iter_walk(config, start)]
        holds = sum(np.array_equal(a, b) for a, b in zip(states, states[1:]))
        assert 120 < holds < 280

    def test_coordinate_walks_agree_with_table_walk(self):
        # both consume draw_steps the same way, so one seed gives one move sequence
        config = WalkConfig(n=4, q=5, seed=3, steps=25)
        final = gc.run_walk(config, gc.initial_table(4, 5))
        coords = gc.sample_coordinate_walks(4, 5, 25, 1, gc.make_rng(3))[0]
        assert np.array_equal(gc.to_coordinates(final.entries, 5).coords, coords)

    def test_moves_are_drawn_in_blocks(self, monkeypatch):
        calls = []

        class CountingGenerator:
            def __init__(self, rng):
                self.rng = rng

            def integers(self, *args, **kwargs):
                calls.append(kwargs.get("size"))
                return self.rng.integers(*args, **kwargs)

        original = gc.make_rng
        monkeypatch.setattr(gc, "make_rng", lambda seed: CountingGenerator(original(seed)))
        final = gc.run_walk(WalkConfig(n=6, q=3, seed=1, steps=10000), gc.initial_table(6, 3))
        assert calls == [(10000, 1)]
        assert gc.validate_table(final.entries, final.row_sums, final.col_sums, 3)

    def test_run_walk_matches_last_iterated_state(self):
        config = WalkConfig(n=5, q=4, seed=12, steps=300, lazy=True)
        start = gc.initial_table(5, 4)
        *_, (t, last) = gc.iter_walk(config, start)
        final = gc.run_walk(config, start)
        assert t == 300
        assert np.array_equal(final.entries, last.entries)

    def test_iterated_states_are_independent_copies(self):
        config = WalkConfig(n=3, q=5, seed=4, steps=20)
        states = [state.entries for _, state in gc.iter_walk(config, gc.initial_table(3, 5))]
        assert any(not np.array_equal(a, b) for a, b in zip(states, states[1:]))

    def test_table_json_round_trip(self):
        state = gc.initial_table(3, 4, [1, 2, 3], [3, 2, 1])
        restored = TableState.from_json_dict(json.loads(json.dumps(state.to_json_dict())))
        assert np.array_equal(restored.entries, state.entries)
