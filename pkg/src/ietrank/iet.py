"""Interval exchange transformations with exact lengths.

Conventions: intervals are indexed 1..m and half-open, ``[beta_{i-1}, beta_i)``.
A permutation ``pi`` sends the i-th interval to position ``pi(i)`` in the
image, so ``T(x) = x - beta_{i-1}(lam) + beta_{pi(i)-1}(lam^pi)`` with
``lam^pi = (lam_{pi^-1(1)}, ..., lam_{pi^-1(m)})``.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from itertools import accumulate
from typing import Iterable, Sequence

from .errors import BudgetError, DomainError, ParseError
from .numeric import (
    QuadraticField,
    Scalar,
    as_scalar,
    common_field,
    field_name,
    format_scalar,
    lower,
    parse_field,
    parse_scalar,
)

DEFAULT_STEP_BUDGET = 10**6


class Permutation:
    """A bijection of ``{1..m}`` stored as its image tuple."""

    __slots__ = ("images", "_inverse")

    def __init__(self, images: Iterable[int]):
        images = tuple(int(i) for i in images)
        m = len(images)
        if m < 1 or sorted(images) != list(range(1, m + 1)):
            raise DomainError(f"not a permutation of 1..{m}: {images}")
        self.images = images
        inv = [0] * m
        for i, p in enumerate(images, start=1):
            inv[p - 1] = i
        self._inverse = tuple(inv)

    @classmethod
    def identity(cls, m: int) -> "Permutation":
        return cls(range(1, m + 1))

    @property
    def m(self) -> int:
        return len(self.images)

    def __len__(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    def inv(self, p: int) -> int:
        """``pi^{-1}(p)``."""
        return self._inverse[p - 1]

    def inverse(self) -> "Permutation":
        return Permutation(self._inverse)

    def is_irreducible(self) -> bool:
        running = 0
        for k in range(1, self.m):
            running = max(running, self.images[k - 1])
            if running == k:
                return False
        return True

    def __eq__(self, other):
        if not isinstance(other, Permutation):
            return NotImplemented
        return self.images == other.images

    def __lt__(self, other: "Permutation") -> bool:
        return self.images < other.images

    def __hash__(self):
        return hash(self.images)

    def __iter__(self):
        return iter(self.images)

    def __repr__(self):
        return f"Permutation({list(self.images)})"

    def __str__(self):
        return "(" + ",".join(map(str, self.images)) + ")"


def as_permutation(pi) -> Permutation:
    return pi if isinstance(pi, Permutation) else Permutation(pi)


class IET:
    """An interval exchange ``T_{lam,pi}`` on ``[0, |lam|)``.

    All lengths live in one scalar field: Q (``field=None``) or a single
    ``Q(sqrt d)``.  With ``field`` omitted it is inferred from the lengths.
    """

    __slots__ = (
        "lengths",
        "permutation",
        "field",
        "total",
        "breakpoints",
        "translations",
    )

    def __init__(self, lengths: Sequence, permutation, field: QuadraticField | None = None):
        pi = as_permutation(permutation)
        raw = list(lengths)
        if field is None:
            field = common_field(parse_scalar(x) if isinstance(x, str) else x for x in raw)
        lam = tuple(as_scalar(x, field) for x in raw)
        if len(lam) != pi.m:
            raise DomainError(f"{len(lam)} lengths given for a permutation of size {pi.m}")
        for x in lam:
            if not x > 0:
                raise DomainError(f"lengths must be positive, got {format_scalar(x)}")
        self.lengths = lam
        self.permutation = pi
        self.field = field
        beta = (lam[0] - lam[0],) + tuple(accumulate(lam))
        self.breakpoints = beta
        self.total = beta[-1]
        # image starts: position p starts at sum of lengths of intervals placed before p
        placed = [lam[pi.inv(p) - 1] for p in range(1, pi.m + 1)]
        image_beta = (beta[0],) + tuple(accumulate(placed))
        self.translations = tuple(
            image_beta[pi(i) - 1] - beta[i - 1] for i in range(1, pi.m + 1)
        )

    @property
    def m(self) -> int:
        return self.permutation.m

    def zero(self) -> Scalar:
        return self.breakpoints[0]

    def scalar(self, x) -> Scalar:
        return as_scalar(x, self.field)

    def interval_index(self, x: Scalar) -> int:
        """1-based index ``i`` with ``beta_{i-1} <= x < beta_i``."""
        if x < 0 or not x < self.total:
            raise DomainError(f"{format_scalar(x)} outside [0, {format_scalar(self.total)})")
        return bisect_right(self.breakpoints, x, 1, self.m) if self.m > 1 else 1

    def __call__(self, x) -> Scalar:
        return self.apply(x)

    def apply(self, x) -> Scalar:
        x = self.scalar(x)
        return x + self.translations[self.interval_index(x) - 1]

    def image_lengths(self) -> tuple:
        """``lam^pi``: lengths in image order."""
        pi = self.permutation
        return tuple(self.lengths[pi.inv(p) - 1] for p in range(1, pi.m + 1))

    def inverse(self) -> "IET":
        return IET(self.image_lengths(), self.permutation.inverse(), self.field)

    def discontinuities(self) -> list:
        return list(self.breakpoints[1:-1])

    def intervals(self) -> list[tuple]:
        b = self.breakpoints
        return [(b[i], b[i + 1]) for i in range(self.m)]

    def orbit(self, x, steps: int) -> list:
        x = self.scalar(x)
        out = [x]
        for _ in range(steps):
            x = self.apply(x)
            out.append(x)
        return out

    def iterate(self, x, k: int) -> Scalar:
        x = self.scalar(x)
        for _ in range(k):
            x = self.apply(x)
        return x

    def rescaled(self, factor) -> "IET":
        return IET([x * factor for x in self.lengths], self.permutation, self.field)

    def merged(self) -> "IET":
        """The same map with fake breakpoints removed.

        Neighbouring intervals ``i, i+1`` whose images are also neighbours in
        the same order carry one translation and are fused.
        """
        lengths = [self.lengths[0]]
        images = [self.permutation(1)]
        for i in range(2, self.m + 1):
            if self.permutation(i) == self.permutation(i - 1) + 1:
                lengths[-1] = lengths[-1] + self.lengths[i - 1]
            else:
                lengths.append(self.lengths[i - 1])
                images.append(self.permutation(i))
        ranks = {p: r for r, p in enumerate(sorted(images), start=1)}
        return IET(lengths, [ranks[p] for p in images], self.field)

    def __eq__(self, other):
        if not isinstance(other, IET):
            return NotImplemented
        return (
            self.permutation == other.permutation
            and self.lengths == other.lengths
        )

    def __hash__(self):
        return hash((self.permutation, self.lengths))

    def __repr__(self):
        lam = ", ".join(format_scalar(x) for x in self.lengths)
        return f"IET([{lam}], {self.permutation}, field={field_name(self.field)})"

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "pi": list(self.permutation.images),
            "lambda": [format_scalar(x) for x in self.lengths],
            "field": field_name(self.field),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "IET":
        try:
            field = parse_field(obj.get("field", "Q"))
            pi = Permutation(obj["pi"])
            lam = [parse_scalar(x, field) if isinstance(x, str) else x for x in obj["lambda"]]
        except KeyError as exc:
            raise ParseError(f"IET JSON lacks {exc}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(str(exc)) from None
        if "m" in obj and int(obj["m"]) != pi.m:
            raise ParseError(f"m={obj['m']} disagrees with pi of size {pi.m}")
        return cls(lam, pi, field)


def iet_from_pieces(pieces: Sequence[tuple], field) -> tuple[IET, list[int]]:
    """Build an IET from domain pieces ``(start, end, translation)`` tiling [0, L).

    Returns the IET and, for each piece, its index in image order.  Raises if
    the images do not tile the same interval.
    """
    pieces = sorted(pieces, key=lambda p: p[0])
    lengths = [e - s for s, e, _ in pieces]
    starts = [s + t for s, _, t in pieces]
    order = sorted(range(len(pieces)), key=lambda k: starts[k])
    pos = [0] * len(pieces)
    for rank, k in enumerate(order, start=1):
        pos[k] = rank
    cursor = pieces[0][0] - pieces[0][0]
    for k in order:
        if starts[k] != cursor:
            raise AssertionError("piece images do not tile the interval")
        cursor = cursor + lengths[k]
    return IET(lengths, pos, field), pos


@dataclass(frozen=True)
class SubIntervalMap:
    """First-return data of ``T`` to ``J = [0, L)``.

    ``pieces[k] = (start, end, return_time, translation)``; ``induced`` is the
    first-return map as an IET on ``J``; ``visits[k][i]`` counts how often the
    orbit of piece ``k`` lies in interval ``i+1`` of ``T`` before returning.
    """

    length: Scalar
    pieces: tuple
    visits: tuple
    induced: IET

    @property
    def return_times(self) -> tuple[int, ...]:
        return tuple(p[2] for p in self.pieces)

    def visit_matrix(self) -> tuple[tuple[int, ...], ...]:
        """Rows = intervals of ``T``, columns = pieces (a visitation matrix)."""
        return tuple(zip(*self.visits))


def _lowered(T: IET, extra: Sequence = ()):
    """Breakpoints, translations and ``extra`` values of ``T`` on an integer lattice."""
    low, lift = lower(list(T.lengths) + list(extra), T.field)
    lam, rest = low[: T.m], low[T.m :]
    zero = lam[0] - lam[0]
    beta = [zero]
    for x in lam:
        beta.append(beta[-1] + x)
    pi = T.permutation
    img = [zero]
    for p in range(1, pi.m + 1):
        img.append(img[-1] + lam[pi.inv(p) - 1])
    trans = [img[pi(i) - 1] - beta[i - 1] for i in range(1, pi.m + 1)]
    return beta, trans, rest, lift


def _return_pieces(T: IET, S, L, budget: int) -> list:
    """Pieces ``(start, end, translation, visit counts)`` of the first return to ``[S, L)``.

    Each tracked piece is a subinterval of ``J`` whose current image is a
    single translate; it is split whenever the image straddles a breakpoint
    of ``T`` or an end of ``J``.  Pieces therefore have constant return
    time and itinerary, and are maximal with that property.  ``budget``
    bounds the total number of piece-steps.
    """
    beta, trans, (Sl, Ll), lift = _lowered(T, [S, L])
    inner = beta[1:-1]
    m = T.m
    zero = beta[0]
    # (start, end, shift, route) in lowered coordinates; route is a cons list
    active = [(Sl, Ll, zero, None)]
    done = []
    steps = 0
    while active:
        s, e, shift, route = active.pop()
        cs, ce = s + shift, e + shift
        lo = bisect_right(inner, cs)
        hi = lo
        while hi < m - 1 and inner[hi] < ce:
            hi += 1
        bounds = [cs, *inner[lo:hi], ce]
        for k in range(hi - lo + 1):
            u, v = bounds[k], bounds[k + 1]
            steps += 1
            if steps > budget:
                raise BudgetError(
                    f"first return to [{format_scalar(S)}, {format_scalar(L)}) exceeded {budget} steps"
                )
            i = lo + k + 1
            t = trans[i - 1]
            nshift = shift + t
            nroute = (i, route)
            a, b = u + t, v + t
            cuts = [a, *(c for c in (Sl, Ll) if a < c < b), b]
            for x, y in zip(cuts, cuts[1:]):
                piece = (x - nshift, y - nshift, nshift, nroute)
                if Sl <= x and y <= Ll:
                    done.append(piece)
                else:
                    active.append(piece)
    done.sort(key=lambda p: p[0])
    out = []
    for s, e, t, route in done:
        counts = [0] * m
        while route is not None:
            counts[route[0] - 1] += 1
            route = route[1]
        out.append((lift(s), lift(e), lift(t), tuple(counts)))
    return out


def first_return_map(T: IET, L, budget: int = DEFAULT_STEP_BUDGET) -> SubIntervalMap:
    """Induced map of ``T`` on ``[0, L)`` by exact forward iteration of intervals."""
    L = T.scalar(L)
    if not (L > 0) or L > T.total:
        raise DomainError(f"L={format_scalar(L)} outside (0, {format_scalar(T.total)}]")
    done = _return_pieces(T, T.zero(), L, budget)
    induced, _ = iet_from_pieces([(s, e, t) for s, e, t, _ in done], T.field)
    pieces = tuple((s, e, sum(c), t) for s, e, t, c in done)
    return SubIntervalMap(L, pieces, tuple(c for *_, c in done), induced)


def return_pieces(T: IET, start, end, budget: int = DEFAULT_STEP_BUDGET) -> tuple:
    """First return of ``T`` to an arbitrary ``[start, end)``: ``(start, end, return_time, translation)`` pieces."""
    start, end = T.scalar(start), T.scalar(end)
    if not (T.zero() <= start < end <= T.total):
        raise DomainError("return interval must satisfy 0 <= start < end <= |lambda|")
    return tuple((s, e, sum(c), t) for s, e, t, c in _return_pieces(T, start, end, budget))


def compose(outer: IET, inner: IET) -> IET:
    """The IET ``outer o inner`` (apply ``inner`` first), on a common refinement."""
    if outer.total != inner.total:
        raise DomainError("composed IETs must share their interval")
    cuts = outer.breakpoints[1:-1]
    pieces = []
    for (s, e), t in zip(inner.intervals(), inner.translations):
        cs, ce = s + t, e + t
        lo = bisect_right(cuts, cs)
        bounds = [cs, *(c for c in cuts[lo:] if c < ce), ce]
        for u, v in zip(bounds, bounds[1:]):
            t2 = outer.translations[outer.interval_index(u) - 1]
            pieces.append((u - t, v - t, t + t2))
    return iet_from_pieces(pieces, inner.field)[0]


def iterate_map(T: IET, q: int) -> IET:
    """``T^q`` as an IET by repeated composition (cuts are not merged)."""
    if q < 1:
        raise DomainError("exponent must be >= 1")
    result = T
    for _ in range(q - 1):
        result = compose(T, result)
    return result


@dataclass(frozen=True)
class IdocResult:
    passed: bool
    depth: int
    witness: tuple | None = None  # (i1, j1, i2, j2), 1-based i

    def __bool__(self):
        return self.passed


def idoc_check(T: IET, depth: int) -> IdocResult:
    """Finite-depth distinct-orbit test on backward orbits of the breakpoints.

    Computes ``T^{-j}(beta_i)`` for ``1 <= i < m`` and ``0 <= j <= depth``.
    A pass only certifies distinctness up to ``depth``; it is a necessary
    condition for i.d.o.c., not a proof of it.
    """
    if depth < 1:
        raise DomainError("depth must be >= 1")
    inv = T.inverse()
    seen: dict = {}
    for i, b in enumerate(T.discontinuities(), start=1):
        x = b
        for j in range(depth + 1):
            if x in seen:
                i1, j1 = seen[x]
                return IdocResult(False, depth, (i1, j1, i, j))
            seen[x] = (i, j)
            if j < depth:
                x = inv.apply(x)
    return IdocResult(True, depth)
