from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from helpers import euclid_quotients, golden, irreducible, random_rational_iet
from ietrank.errors import BudgetError, DomainError, TieError
from ietrank.iet import IET, Permutation, first_return_map
from ietrank.matrices import column_sums, determinant, identity, matvec
from ietrank.rauzy import (
    action_a,
    action_b,
    balance_ratio,
    build_towers,
    matrix_A,
    rauzy_class,
    rauzy_iterate,
    rauzy_normalized,
    rauzy_step,
    rauzy_type,
    replay,
    return_times,
)

P21 = Permutation([2, 1])


def test_types():
    assert rauzy_type((3, 2), P21) == "a"
    assert rauzy_type((1, 2), P21) == "b"
    with pytest.raises(TieError):
        rauzy_type((1, 1), P21)


def test_actions():
    assert action_a(P21) == P21
    assert action_a((3, 2, 1)) == Permutation([3, 1, 2])
    assert action_b((3, 2, 1)) == Permutation([2, 3, 1])
    assert action_b((3, 1, 2)) == Permutation([3, 1, 2])
    with pytest.raises(DomainError):
        action_a((1, 2))


def test_actions_match_first_return_oracle():
    rng = random.Random(5)
    for m in (2, 3, 4, 5):
        for pi in irreducible(m):
            for c in "ab":
                while True:
                    lam = [Fraction(rng.randint(1, 10**6), 997) for _ in range(m)]
                    last, rival = lam[m - 1], lam[pi.inv(m) - 1]
                    if (last < rival) == (c == "a") and last != rival:
                        break
                T = IET(lam, pi)
                F = first_return_map(T, T.total - min(last, rival))
                expect = action_a(pi) if c == "a" else action_b(pi)
                assert F.induced.permutation == expect


def test_matrices():
    assert matrix_A(P21, "a") == ((1, 1), (0, 1))
    assert matrix_A(P21, "b") == ((1, 0), (1, 1))
    assert matvec(matrix_A(P21, "a"), (1, 2)) == (3, 2)
    assert matvec(matrix_A(P21, "b"), (1, 1)) == (1, 2)
    for m in (3, 4):
        for pi in irreducible(m):
            diff = [
                (i, j)
                for i, row in enumerate(matrix_A(pi, "b"))
                for j, x in enumerate(row)
                if x != identity(m)[i][j]
            ]
            assert diff == [(m - 1, pi.inv(m) - 1)]


def test_steps():
    s = rauzy_step((3, 2), P21)
    assert (s.lengths, s.permutation, s.letter) == ((1, 2), P21, "a")
    s = rauzy_step((1, 2), P21)
    assert (s.lengths, s.letter) == ((1, 1), "b")
    with pytest.raises(TieError):
        rauzy_step((1, 1), P21)


def test_iterate_examples():
    p = rauzy_iterate((3, 2), P21, 2)
    assert p.letters == "ab" and p.matrix == ((2, 1), (1, 1)) and p.lengths == (1, 1)
    g = rauzy_iterate(golden().lengths, P21, 3)
    assert g.letters == "aba"
    assert g.matrix == ((2, 3), (1, 2))  # consecutive Fibonacci entries
    z = rauzy_iterate((3, 2), P21, 0)
    assert z.matrix == identity(2) and z.lengths == (3, 2)
    with pytest.raises(BudgetError):
        rauzy_iterate((3, 2), P21, 5, budget=3)


def test_tie_carries_partial_path():
    with pytest.raises(TieError) as info:
        rauzy_iterate((3, 2), P21, 5)
    assert info.value.step == 2
    assert info.value.partial.letters == "ab"


def test_replay():
    path = rauzy_iterate(golden().lengths, P21, 8)
    assert replay(golden().lengths, P21, path.letters).matrix == path.matrix
    with pytest.raises(DomainError):
        replay(golden().lengths, P21, "bb")


def test_normalized():
    assert rauzy_normalized((Fraction(3, 5), Fraction(2, 5)), P21) == ((Fraction(1, 3), Fraction(2, 3)), P21)
    assert rauzy_normalized((Fraction(1, 3), Fraction(2, 3)), P21) == ((Fraction(1, 2), Fraction(1, 2)), P21)
    with pytest.raises(DomainError):
        rauzy_normalized((3, 2), P21)


def test_class():
    c = rauzy_class(P21)
    assert c.vertices == (P21,) and len(c.edges) == 2
    c = rauzy_class((3, 2, 1))
    assert set(c.vertices) == {Permutation(p) for p in [(3, 2, 1), (3, 1, 2), (2, 3, 1)]}
    assert len(c.edges) == 6
    for s, _, t in c.edges:
        assert t in c
    assert "digraph" in c.to_dot()


def test_return_times_and_towers():
    assert return_times(((1, 1), (0, 1))) == (1, 2)
    assert return_times(((2, 1), (1, 1))) == (3, 2)
    assert return_times(identity(3)) == (1, 1, 1)
    t1 = build_towers((3, 2), P21, 1)
    assert [t.height for t in t1] == [1, 2] and [t.width for t in t1] == [1, 2]
    t2 = build_towers((3, 2), P21, 2)
    assert [t.height for t in t2] == [3, 2] and [t.width for t in t2] == [1, 1]
    assert sum(t.height * t.width for t in t2) == 5
    t0 = build_towers((3, 2), P21, 0)
    assert [t.height for t in t0] == [1, 1] and [t.base for t in t0] == [(0, 3), (3, 5)]


def test_towers_tile_the_interval():
    T = golden()
    towers = build_towers(T.lengths, P21, 9)
    levels = sorted(l for t in towers for l in t.levels)
    assert levels[0][0] == 0 and levels[-1][1] == T.total
    assert all(a[1] == b[0] for a, b in zip(levels, levels[1:]))


def test_balance_ratio():
    assert balance_ratio(((2, 1), (1, 1))) == 2
    assert balance_ratio(((1, 1), (1, 1))) == 1
    assert balance_ratio(((3, 1), (1, 2))) == 3
    with pytest.raises(DomainError):
        balance_ratio(((1, 0), (1, 1)))


@given(st.lists(st.lists(st.integers(1, 50), min_size=3, max_size=3), min_size=3, max_size=3))
def test_balance_ratio_bounds_entries(rows):
    M = tuple(tuple(r) for r in rows)
    v = balance_ratio(M)
    assert all(x <= v * y for row in M for x in row for y in row)


@settings(max_examples=50)
@given(st.integers(0, 2**32), st.integers(2, 5), st.integers(1, 30))
def test_reconstruction_and_unimodularity(seed, m, n):
    T = random_rational_iet(random.Random(seed), m)
    try:
        path = rauzy_iterate(T.lengths, T.permutation, n)
    except TieError:
        return
    assert matvec(path.matrix, path.lengths) == T.lengths
    assert determinant(path.matrix) in (1, -1)
    assert all(a >= 1 for a in column_sums(path.matrix))


@settings(max_examples=50)
@given(st.integers(1, 10**6), st.integers(1, 10**6))
def test_m2_letters_encode_continued_fraction(p, q):
    if p == q:
        return
    quotients = euclid_quotients(p, q)
    # induction runs until the tie, i.e. through all but the final unit of the last quotient
    steps = sum(quotients) - 1
    with pytest.raises(TieError) as info:
        rauzy_iterate((p, q), P21, steps + 1)
    letters = info.value.partial.letters
    runs = []
    for c in letters:
        if runs and runs[-1][0] == c:
            runs[-1][1] += 1
        else:
            runs.append([c, 1])
    expect = quotients[:-1] + [quotients[-1] - 1]
    if expect[0] == 0:
        expect = expect[1:]
    assert [r for _, r in runs] == [e for e in expect if e]
