"""Rauzy-Veech induction: types, a/b actions, matrices, paths, classes, towers."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, Sequence

from .errors import BudgetError, DomainError, TieError
from .iet import IET, Permutation, as_permutation
from .matrices import Matrix, column_sums, format_matrix, identity, matmul
from .numeric import Scalar, common_field, format_scalar

Letter = Literal["a", "b"]
LETTERS: tuple[Letter, Letter] = ("a", "b")


def _require_irreducible(pi: Permutation) -> None:
    if pi.m < 2 or not pi.is_irreducible():
        raise DomainError(f"{pi} is not an irreducible permutation")


def rauzy_type(lengths: Sequence[Scalar], pi) -> Letter:
    """``a`` when the last domain interval is the shorter one, ``b`` otherwise."""
    pi = as_permutation(pi)
    last = lengths[pi.m - 1]
    rival = lengths[pi.inv(pi.m) - 1]
    if last < rival:
        return "a"
    if rival < last:
        return "b"
    raise TieError(f"Rauzy type undefined: lambda_m == lambda_pi^-1(m) == {format_scalar(last)}")


def action_a(pi) -> Permutation:
    pi = as_permutation(pi)
    _require_irreducible(pi)
    m, j = pi.m, pi.inv(pi.m)
    img = list(pi.images[:j]) + [pi(m)] + list(pi.images[j : m - 1])
    return Permutation(img)


def action_b(pi) -> Permutation:
    pi = as_permutation(pi)
    _require_irreducible(pi)
    m, last = pi.m, pi(pi.m)
    img = []
    for p in pi.images:
        if p <= last:
            img.append(p)
        elif p < m:
            img.append(p + 1)
        else:
            img.append(last + 1)
    return Permutation(img)


def act(pi, c: Letter) -> Permutation:
    if c == "a":
        return action_a(pi)
    if c == "b":
        return action_b(pi)
    raise DomainError(f"unknown Rauzy letter {c!r}")


def matrix_A(pi, c: Letter) -> Matrix:
    """Unimodular ``A(pi, c)`` with ``lam = A(pi, c) lam'`` for one induction step.

    Type a splits interval ``j = pi^-1(m)`` into new intervals ``j`` and
    ``j+1`` (the latter of length ``lam_m``); type b adds ``lam'_j`` to the
    last coordinate.
    """
    pi = as_permutation(pi)
    _require_irreducible(pi)
    m, j = pi.m, pi.inv(pi.m)
    rows = [[0] * m for _ in range(m)]
    if c == "b":
        for i in range(m):
            rows[i][i] = 1
        rows[m - 1][j - 1] += 1
    elif c == "a":
        # new index k -> old index: k<=j -> k ; k=j+1 -> m (and j) ; k>j+1 -> k-1
        for k in range(1, m + 1):
            if k <= j:
                rows[k - 1][k - 1] = 1
            elif k == j + 1:
                rows[j - 1][k - 1] = 1
                rows[m - 1][k - 1] = 1
            else:
                rows[k - 2][k - 1] = 1
    else:
        raise DomainError(f"unknown Rauzy letter {c!r}")
    return tuple(tuple(r) for r in rows)


@dataclass(frozen=True)
class RauzyStep:
    lengths: tuple
    permutation: Permutation
    matrix: Matrix
    letter: Letter


def _induce_lengths(lengths: Sequence[Scalar], pi: Permutation, c: Letter) -> tuple:
    """``A(pi, c)^{-1} lam`` without forming the inverse."""
    m, j = pi.m, pi.inv(pi.m)
    lam = list(lengths)
    if c == "b":
        lam[m - 1] = lam[m - 1] - lam[j - 1]
        return tuple(lam)
    short = lam[m - 1]
    return tuple(lam[: j - 1]) + (lam[j - 1] - short, short) + tuple(lam[j : m - 1])


def rauzy_step(lengths: Sequence, pi) -> RauzyStep:
    pi = as_permutation(pi)
    _require_irreducible(pi)
    lam = tuple(lengths)
    c = rauzy_type(lam, pi)
    return RauzyStep(_induce_lengths(lam, pi, c), act(pi, c), matrix_A(pi, c), c)


def rauzy_normalized(lengths: Sequence, pi) -> tuple[tuple, Permutation]:
    """Projective step on the simplex: ``A^{-1} lam / |A^{-1} lam|``."""
    lam = tuple(lengths)
    total = sum(lam[1:], lam[0])
    if total != 1:
        raise DomainError("normalized Rauzy map needs |lambda| = 1")
    step = rauzy_step(lam, pi)
    new_total = sum(step.lengths[1:], step.lengths[0])
    return tuple(x / new_total for x in step.lengths), step.permutation


@dataclass
class RauzyPath:
    """A replayable induction path from ``start``.

    ``permutations[k]`` is ``pi^(k)`` (so ``permutations[0]`` is ``start``);
    ``matrix`` is ``A^(n) = A(pi, c_1) ... A(pi^(n-1), c_n)``.
    """

    start: Permutation
    start_lengths: tuple
    letters: str = ""
    permutations: list = field(default_factory=list)
    matrix: Matrix = ()
    lengths: tuple = ()

    @property
    def depth(self) -> int:
        return len(self.letters)

    @property
    def permutation(self) -> Permutation:
        return self.permutations[-1]

    def iet(self) -> IET:
        """The induced IET ``(lam^(n), pi^(n))`` on ``[0, |lam^(n)|)``."""
        return IET(self.lengths, self.permutation, common_field(self.lengths))

    def return_times(self) -> tuple[int, ...]:
        return column_sums(self.matrix)

    def extend(self) -> Letter:
        """Advance one step in place; raises :class:`TieError` on a tie."""
        pi = self.permutation
        try:
            c = rauzy_type(self.lengths, pi)
        except TieError as exc:
            raise TieError(str(exc), step=self.depth, partial=self) from None
        self.lengths = _induce_lengths(self.lengths, pi, c)
        self.matrix = matmul(self.matrix, matrix_A(pi, c))
        self.permutations.append(act(pi, c))
        self.letters += c
        return c

    def to_json(self) -> dict:
        return {
            "letters": self.letters,
            "pi_seq": [list(p.images) for p in self.permutations],
            "A": format_matrix(self.matrix),
            "lambda_n": [format_scalar(x) for x in self.lengths],
        }


def start_path(lengths: Sequence, pi) -> RauzyPath:
    pi = as_permutation(pi)
    _require_irreducible(pi)
    lam = tuple(lengths)
    if len(lam) != pi.m:
        raise DomainError("length vector and permutation sizes differ")
    return RauzyPath(pi, lam, "", [pi], identity(pi.m), lam)


def rauzy_iterate(lengths: Sequence, pi, n: int, budget: int | None = None) -> RauzyPath:
    """``n`` steps of unnormalized induction, accumulating ``A^(n)`` incrementally.

    A tie at step ``k`` raises :class:`TieError` with ``step=k`` and the path
    up to ``k`` as ``partial``.
    """
    if n < 0:
        raise DomainError("n must be >= 0")
    if budget is not None and n > budget:
        raise BudgetError(f"{n} steps requested, budget is {budget}")
    path = start_path(lengths, pi)
    for _ in range(n):
        path.extend()
    return path


def replay(lengths: Sequence, pi, letters: str) -> RauzyPath:
    """Rebuild a path and check it follows ``letters``."""
    path = start_path(lengths, pi)
    for k, want in enumerate(letters):
        got = path.extend()
        if got != want:
            raise DomainError(f"path diverges at step {k}: expected {want}, got {got}")
    return path


def return_times(A: Matrix) -> tuple[int, ...]:
    return column_sums(A)


@dataclass(frozen=True)
class RauzyClass:
    vertices: tuple  # BFS order from the seed
    edges: tuple  # (pi, letter, pi')

    def __contains__(self, pi) -> bool:
        return as_permutation(pi) in set(self.vertices)

    def to_json(self) -> dict:
        return {
            "vertices": [list(p.images) for p in self.vertices],
            "edges": [[list(s.images), c, list(t.images)] for s, c, t in self.edges],
        }

    def to_dot(self) -> str:
        lines = ["digraph rauzy_class {"]
        for p in self.vertices:
            lines.append(f'  "{p}";')
        for s, c, t in self.edges:
            lines.append(f'  "{s}" -> "{t}" [label="{c}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def rauzy_class(pi) -> RauzyClass:
    start = as_permutation(pi)
    _require_irreducible(start)
    order = [start]
    seen = {start}
    edges = []
    queue = deque([start])
    while queue:
        p = queue.popleft()
        for c in LETTERS:
            t = act(p, c)
            edges.append((p, c, t))
            if t not in seen:
                seen.add(t)
                order.append(t)
                queue.append(t)
    return RauzyClass(tuple(order), tuple(edges))


@dataclass(frozen=True)
class Tower:
    """Base ``[start, end)`` and its ``height`` levels under ``T`` (level 0 = base)."""

    index: int
    base: tuple
    height: int
    levels: tuple

    @property
    def width(self) -> Scalar:
        return self.base[1] - self.base[0]


def build_towers(lengths: Sequence, pi, n: int) -> list[Tower]:
    """The m stacks over the intervals of ``J_n`` after ``n`` induction steps."""
    path = rauzy_iterate(lengths, pi, n)
    T = IET(path.start_lengths, path.start, common_field(path.start_lengths))
    heights = path.return_times()
    towers = []
    left = T.zero()
    for j, (w, h) in enumerate(zip(path.lengths, heights), start=1):
        levels = []
        s, e = left, left + w
        for _ in range(h):
            levels.append((s, e))
            t = T.translations[T.interval_index(s) - 1]
            s, e = s + t, e + t
        towers.append(Tower(j, (left, left + w), h, tuple(levels)))
        left = left + w
    return towers


def balance_ratio(M: Matrix) -> Fraction:
    """``max_{i,j,k} M_ij / M_ik`` over a strictly positive matrix."""
    if not M or any(x <= 0 for row in M for x in row):
        raise DomainError("balance ratio needs a strictly positive matrix")
    return max(Fraction(max(row), min(row)) for row in M)
