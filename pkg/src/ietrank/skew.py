"""Finite-group side of the induction: matrices mod q, cycle groups, connectors, cocycles.

Group-valued products along a path follow the cocycle order
``g^(r)(x) = g(P^{r-1} x) ... g(x)`` (latest step on the left), which is the
order in which the conjugation identity ``G(c pi) = g(pi, c) G(pi) g(pi, c)^-1``
holds.  Visitation matrices ``A^(n)`` keep the opposite (path) order.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import DomainError, TieError, VerificationError
from .iet import Permutation, as_permutation
from .matrices import Matrix, determinant, format_matrix, identity, is_positive, matmul
from .numeric import format_scalar
from .rauzy import LETTERS, act, matrix_A, rauzy_class, rauzy_normalized, rauzy_type


def _mul(a: tuple, b: tuple, m: int, q: int) -> tuple:
    return tuple(
        sum(a[i * m + k] * b[k * m + j] for k in range(m)) % q
        for i in range(m)
        for j in range(m)
    )


def _eye(m: int, q: int) -> tuple:
    return tuple(int(i == j) % q for i in range(m) for j in range(m))


@dataclass(frozen=True)
class MatModQ:
    """An ``m x m`` matrix over ``Z_q``, entries stored row-major in ``[0, q)``."""

    entries: tuple
    m: int
    q: int

    @classmethod
    def identity(cls, m: int, q: int) -> "MatModQ":
        return cls(_eye(m, q), m, q)

    def __matmul__(self, other: "MatModQ") -> "MatModQ":
        if (self.m, self.q) != (other.m, other.q):
            raise DomainError("matrices mod q of different shape or modulus")
        return MatModQ(_mul(self.entries, other.entries, self.m, self.q), self.m, self.q)

    @property
    def rows(self) -> Matrix:
        m = self.m
        return tuple(self.entries[i * m : (i + 1) * m] for i in range(m))

    def det(self) -> int:
        return determinant(self.rows) % self.q

    def is_invertible(self) -> bool:
        return np.gcd(self.det(), self.q) == 1

    def is_identity(self) -> bool:
        return self.entries == _eye(self.m, self.q)

    def inverse(self) -> "MatModQ":
        m, q = self.m, self.q
        d = determinant(self.rows) % q
        if np.gcd(d, q) != 1:
            raise DomainError(f"matrix is singular mod {q}")
        d_inv = pow(d, -1, q)
        rows = self.rows
        adj = []
        for i in range(m):
            for j in range(m):
                minor = tuple(
                    tuple(rows[r][c] for c in range(m) if c != i) for r in range(m) if r != j
                )
                cof = determinant(minor) if m > 1 else 1
                adj.append(((-1) ** (i + j) * cof * d_inv) % q)
        return MatModQ(tuple(adj), m, q)

    def digits(self) -> str:
        if self.q <= 10:
            return "".join(str(x) for x in self.entries)
        return ",".join(str(x) for x in self.entries)

    def __str__(self) -> str:
        return str([list(r) for r in self.rows])


def reduce_mod_q(A: Matrix, q: int) -> MatModQ:
    if q < 2:
        raise DomainError("reduction needs q >= 2")
    m = len(A)
    return MatModQ(tuple(x % q for row in A for x in row), m, q)


@lru_cache(maxsize=None)
def step_element(pi: Permutation, c: str, q: int) -> MatModQ:
    """``g(pi, c) = A(pi, c) mod q``."""
    return reduce_mod_q(matrix_A(pi, c), q)


@dataclass
class SubgroupTable:
    """A finite subgroup of ``GL(m, Z_q)`` with the shortest word that produced each element."""

    pi: Permutation
    q: int
    elements: frozenset
    provenance: dict = field(default_factory=dict)  # MatModQ -> letter word (first step first)

    @property
    def order(self) -> int:
        return len(self.elements)

    def __contains__(self, g: MatModQ) -> bool:
        return g in self.elements

    def sorted_elements(self) -> list:
        return sorted(self.elements, key=lambda g: g.entries)

    def to_json(self) -> dict:
        return {
            "q": self.q,
            "pi": list(self.pi.images),
            "order": self.order,
            "elements": [g.digits() for g in self.sorted_elements()],
        }


def _cycle_closure(start: Permutation, q: int, edge_value) -> tuple[dict, int]:
    """BFS over ``(permutation, product)``; collects products of closed walks at ``start``.

    ``edge_value(p, c)`` gives the group element attached to the edge
    ``p -> c p`` as a raw entry tuple; products are accumulated on the left.
    """
    m = start.m
    e = _eye(m, q)
    seen = {(start, e): ""}
    queue = deque([(start, e)])
    found: dict = {}
    while queue:
        p, x = queue.popleft()
        word = seen[(p, x)]
        for c in LETTERS:
            t = act(p, c)
            y = _mul(edge_value(p, c), x, m, q)
            if t == start and y not in found:
                found[y] = word + c
            if (t, y) in seen:
                continue
            seen[(t, y)] = word + c
            queue.append((t, y))
    return found, len(seen)


def semigroup_closure(pi, q: int) -> SubgroupTable:
    """``G(pi)``: all products ``g(pi_k, c_k) ... g(pi_1, c_1)`` over Rauzy cycles at ``pi``.

    The set of ``(permutation, product)`` states reachable from ``(pi, e)`` is
    closed under following edges, so the products of closed walks form a
    finite semigroup; it is a group, which ``check_group_axioms`` confirms.
    """
    pi = as_permutation(pi)
    if q < 2:
        raise DomainError("q must be >= 2")
    found, _ = _cycle_closure(pi, q, lambda p, c: step_element(p, c, q).entries)
    m = pi.m
    elems = {MatModQ(k, m, q): w for k, w in found.items()}
    return SubgroupTable(pi, q, frozenset(elems), elems)


def _encode(arr: np.ndarray, q: int) -> np.ndarray:
    flat = arr.reshape(arr.shape[:-2] + (-1,))
    weights = q ** np.arange(flat.shape[-1], dtype=np.int64)
    return flat @ weights


def check_group_axioms(table: SubgroupTable, spot_checks: int = 2000, seed: int = 0) -> dict:
    """Exhaustive closure and inverse checks plus random associativity triples (vectorized)."""
    elems = table.sorted_elements()
    if not elems:
        return {"identity": False, "closure": False, "inverses": False, "associativity": False}
    m, q = elems[0].m, table.q
    X = np.array([g.rows for g in elems], dtype=np.int64)
    codes = _encode(X, q)
    order = np.argsort(codes)
    sorted_codes = codes[order]

    def member(c: np.ndarray) -> np.ndarray:
        pos = np.clip(np.searchsorted(sorted_codes, c), 0, len(sorted_codes) - 1)
        return sorted_codes[pos] == c

    has_identity = MatModQ.identity(m, q) in table.elements
    closure = True
    inverse_ok = np.zeros(len(elems), dtype=bool)
    eye_code = _encode(np.eye(m, dtype=np.int64)[None], q)[0]
    chunk = max(1, 4_000_000 // (len(elems) * m * m))
    for s in range(0, len(elems), chunk):
        prod = (X[s : s + chunk, None] @ X[None]) % q
        pc = _encode(prod, q)
        if not member(pc.ravel()).all():
            closure = False
            break
        inverse_ok[s : s + chunk] = (pc == eye_code).any(axis=1)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(elems), size=(spot_checks, 3))
    a, b, c = X[idx[:, 0]], X[idx[:, 1]], X[idx[:, 2]]
    left = (((a @ b) % q) @ c) % q
    right = (a @ ((b @ c) % q)) % q
    assoc = bool((left == right).all())
    return {
        "identity": bool(has_identity),
        "closure": bool(closure),
        "inverses": bool(closure and inverse_ok.all()),
        "associativity": assoc,
    }


def conjugation_check(pi, q: int) -> list[dict]:
    """For each class edge ``(p, c)``: ``G(c p) == g(p, c) G(p) g(p, c)^-1`` as sets."""
    cls = rauzy_class(pi)
    tables = {p: semigroup_closure(p, q) for p in cls.vertices}
    out = []
    for p, c, t in cls.edges:
        g = step_element(p, c, q)
        gi = g.inverse()
        conj = {g @ h @ gi for h in tables[p].elements}
        out.append({"pi": p, "letter": c, "target": t, "holds": conj == set(tables[t].elements)})
    return out


@lru_cache(maxsize=None)
def _class_paths(start: Permutation) -> dict:
    """BFS-shortest, lexicographically least (a before b) letter paths from ``start``."""
    paths = {start: ""}
    queue = deque([start])
    while queue:
        p = queue.popleft()
        for c in LETTERS:
            t = act(p, c)
            if t not in paths:
                paths[t] = paths[p] + c
                queue.append(t)
    return paths


def word_element(pi: Permutation, word: str, q: int) -> MatModQ:
    """Cocycle product ``g(pi_k, c_k) ... g(pi_1, c_1)`` along ``word`` from ``pi``."""
    x = MatModQ.identity(pi.m, q)
    p = pi
    for c in word:
        x = step_element(p, c, q) @ x
        p = act(p, c)
    return x


@lru_cache(maxsize=None)
def connector(pi1, pi2, q: int) -> tuple[MatModQ, str]:
    """Canonical ``g(pi1, pi2)`` and the letter path realizing it."""
    pi1, pi2 = as_permutation(pi1), as_permutation(pi2)
    paths = _class_paths(pi1)
    if pi2 not in paths:
        raise DomainError(f"{pi2} is not in the Rauzy class of {pi1}")
    word = paths[pi2]
    return word_element(pi1, word, q), word


@dataclass(frozen=True)
class SkewState:
    lengths: tuple
    permutation: Permutation
    gamma: MatModQ


@lru_cache(maxsize=None)
def _h(pi: Permutation, c: str, pi0: Permutation, q: int) -> MatModQ:
    g_in, _ = connector(pi0, pi, q)
    g_out, _ = connector(pi0, act(pi, c), q)
    return g_out.inverse() @ step_element(pi, c, q) @ g_in


def cocycle_h(state: SkewState, pi0) -> MatModQ:
    """``h(x) = g(pi0, c(x) pi(x))^-1 g(x) g(pi0, pi(x))``."""
    pi0 = as_permutation(pi0)
    c = rauzy_type(state.lengths, state.permutation)
    return _h(state.permutation, c, pi0, state.gamma.q)


@dataclass
class SkewOrbit:
    states: list
    letters: str
    fiber_visits: list  # step indices r >= 1 with (pi^(r), gamma_r) == (pi0, e)
    tie_step: int | None = None

    def to_json(self) -> dict:
        return {
            "letters": self.letters,
            "steps": len(self.states) - 1,
            "fiber_visits": self.fiber_visits,
            "tie_step": self.tie_step,
            "final": {
                "lambda": [format_scalar(x) for x in self.states[-1].lengths],
                "pi": list(self.states[-1].permutation.images),
                "gamma": self.states[-1].gamma.digits(),
            },
        }


def skew_orbit(start: SkewState, pi0, steps: int, strict: bool = False) -> SkewOrbit:
    """Orbit of ``W_0(x, gamma) = (P x, h(x) gamma)`` on the normalized simplex.

    A tie stops the orbit; with ``strict`` it raises :class:`TieError`
    carrying the partial orbit, otherwise the orbit records ``tie_step``.
    """
    pi0 = as_permutation(pi0)
    states = [start]
    letters = ""
    visits = []
    x = start
    for r in range(1, steps + 1):
        try:
            c = rauzy_type(x.lengths, x.permutation)
        except TieError as exc:
            orbit = SkewOrbit(states, letters, visits, r - 1)
            if strict:
                raise TieError(str(exc), step=r - 1, partial=orbit) from None
            return orbit
        lam, p = rauzy_normalized(x.lengths, x.permutation)
        gamma = _h(x.permutation, c, pi0, x.gamma.q) @ x.gamma
        x = SkewState(lam, p, gamma)
        states.append(x)
        letters += c
        if p == pi0 and gamma.is_identity():
            visits.append(r)
    return SkewOrbit(states, letters, visits)


def h_product(pi_start: Permutation, letters: str, pi0, q: int) -> MatModQ:
    """``h^(r)`` along ``letters`` recomputed from scratch (independent of ``skew_orbit``)."""
    pi0 = as_permutation(pi0)
    x = MatModQ.identity(pi_start.m, q)
    p = pi_start
    for c in letters:
        x = _h(p, c, pi0, q) @ x
        p = act(p, c)
    return x


def subgroup_equality_check(pi, pi0, q: int) -> bool:
    """``H(pi) == G(pi0)`` where ``H(pi)`` collects ``h`` products over cycles at ``pi``."""
    pi, pi0 = as_permutation(pi), as_permutation(pi0)
    if pi not in _class_paths(pi0):
        raise DomainError(f"{pi} is not in the Rauzy class of {pi0}")
    found, _ = _cycle_closure(pi, q, lambda p, c: _h(p, c, pi0, q).entries)
    H = {MatModQ(k, pi.m, q) for k in found}
    return H == set(semigroup_closure(pi0, q).elements)


@dataclass(frozen=True)
class IdentityWord:
    pi: Permutation
    q: int
    word: str
    B: Matrix

    def to_json(self) -> dict:
        return {"word": self.word, "B": format_matrix(self.B)}


def _pattern(A: Sequence[Sequence[int]]) -> int:
    bits = 0
    for i, row in enumerate(A):
        for j, x in enumerate(row):
            if x:
                bits |= 1 << (i * len(row) + j)
    return bits


def _pattern_mul(a: int, b: int, m: int) -> int:
    out = 0
    for i in range(m):
        for j in range(m):
            if any((a >> (i * m + k)) & 1 and (b >> (k * m + j)) & 1 for k in range(m)):
                out |= 1 << (i * m + j)
    return out


def validate_identity_word(pi, q: int, word: str) -> Matrix:
    """Replay ``word`` from ``pi``; return ``B = A^(n)`` or raise if any predicate fails."""
    pi = as_permutation(pi)
    B = identity(pi.m)
    p = pi
    for c in word:
        B = matmul(B, matrix_A(p, c))
        p = act(p, c)
    if not word or p != pi:
        raise VerificationError(f"word {word!r} does not close up at {pi}")
    if not is_positive(B):
        raise VerificationError(f"word {word!r} gives a matrix with zero entries")
    if any((x - int(i == j)) % q for i, row in enumerate(B) for j, x in enumerate(row)):
        raise VerificationError(f"word {word!r} is not the identity mod {q}")
    return B


@lru_cache(maxsize=None)
def find_identity_word(pi, q: int) -> IdentityWord:
    """Shortest (then lexicographically least) Rauzy cycle with ``A^(n)`` positive and ``= I mod q``.

    The BFS runs over ``(permutation, A mod q, zero pattern of A)``; the
    pattern of a product of nonnegative matrices depends only on the
    patterns, so the state space is finite.  ``q = 1`` drops the congruence.
    """
    pi = as_permutation(pi)
    if pi.m < 2 or not pi.is_irreducible():
        raise DomainError(f"{pi} is not an irreducible permutation")
    if q < 1:
        raise DomainError("q must be >= 1")
    m = pi.m
    bits = m * m
    full = (1 << bits) - 1
    edges = {}
    for p in _class_paths(pi):
        for c in LETTERS:
            A = matrix_A(p, c)
            edges[p, c] = (tuple(x % q for row in A for x in row), _pattern(A), act(p, c))

    # (permutation, A mod q) states are numbered lazily; their transitions cached
    keys: list = []
    index: dict = {}
    trans: list = []

    def node(key) -> int:
        k = index.get(key)
        if k is None:
            k = index[key] = len(keys)
            keys.append(key)
            trans.append(None)
        return k

    def successors(k: int):
        if trans[k] is None:
            p, x = keys[k]
            out = []
            for c in LETTERS:
                g, _, t = edges[p, c]
                out.append(node((t, _mul(x, g, m, q))))
            trans[k] = out
        return trans[k]

    pattern_step: dict = {}
    e = _eye(m, q)
    root = node((pi, e))
    goal_node = root
    start = root << bits | _pattern(identity(m))
    parent = {start: None}
    queue = deque([start])
    goal = None
    while queue and goal is None:
        state = queue.popleft()
        k, pat = state >> bits, state & full
        p = keys[k][0]
        for c, nk in zip(LETTERS, successors(k)):
            pk = (pat, p, c)
            npat = pattern_step.get(pk)
            if npat is None:
                npat = pattern_step[pk] = _pattern_mul(pat, edges[p, c][1], m)
            nxt = nk << bits | npat
            if nxt in parent:
                continue
            parent[nxt] = (state, c)
            if nk == goal_node and npat == full:
                goal = nxt
                break
            queue.append(nxt)
    if goal is None:
        raise VerificationError(f"no identity word for {pi} mod {q}: search space exhausted")
    letters = []
    s = goal
    while parent[s] is not None:
        s, c = parent[s]
        letters.append(c)
    word = "".join(reversed(letters))
    return IdentityWord(pi, q, word, validate_identity_word(pi, q, word))
