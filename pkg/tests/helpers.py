"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import permutations

from ietrank.iet import IET, Permutation
from ietrank.numeric import QuadraticField

K5 = QuadraticField(5)
PHI = (1 + K5.sqrt) / 2


def golden() -> IET:
    return IET([PHI, 1], [2, 1])


def irreducible(m: int) -> list[Permutation]:
    out = []
    for p in permutations(range(1, m + 1)):
        P = Permutation(p)
        if P.is_irreducible():
            out.append(P)
    return out


def random_rational_iet(rng: random.Random, m: int, denom: int = 10**6) -> IET:
    pi = rng.choice(irreducible(m))
    lam = [Fraction(rng.randint(1, 10**12), rng.randint(1, denom)) for _ in range(m)]
    return IET(lam, pi)


def random_golden_iet(rng: random.Random, m: int, bound: int = 50) -> IET:
    pi = rng.choice(irreducible(m))
    lam = []
    while len(lam) < m:
        x = K5(Fraction(rng.randint(1, bound), rng.randint(1, 9)), Fraction(rng.randint(-bound, bound), rng.randint(1, 9)))
        if x > 0 and x.b != 0:
            lam.append(x)
    return IET(lam, pi)


def euclid_quotients(p: int, q: int) -> list[int]:
    """Partial quotients of p/q by the division algorithm."""
    out = []
    while q:
        a, r = divmod(p, q)
        out.append(a)
        p, q = q, r
    return out


def brute_orbit_return(T: IET, x, L, limit: int = 10**6) -> tuple[int, object]:
    """First return time and point of ``x`` to ``[0, L)`` by pointwise iteration."""
    y = T.apply(x)
    for k in range(1, limit + 1):
        if y < L:
            return k, y
        y = T.apply(y)
    raise RuntimeError("no return")


ACCEPTANCE: dict = {}  # criterion number -> (passed, detail); printed by conftest


def record(n: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[n] = (passed, detail)
    print(f"CRITERION {n}: {'PASS' if passed else 'FAIL'} ({detail})")
