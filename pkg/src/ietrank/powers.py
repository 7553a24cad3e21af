"""Powers ``T^q`` as explicit IETs, and induced maps of powers versus powers of induced maps."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DomainError, VerificationError
from .iet import IET, Permutation, compose, first_return_map, iet_from_pieces, iterate_map
from .matrices import Matrix, column_sums, matmul
from .numeric import Scalar, format_scalar
from .rauzy import LETTERS, matrix_A, rauzy_iterate


@dataclass(frozen=True)
class PowerIET:
    """``T^q`` cut at ``D_q = {T^{-i}(beta_j) : 1 <= j < m, 0 <= i < q}``.

    ``degenerate`` is set when ``D_q`` has fewer than ``q(m-1)`` interior
    points, i.e. two backward breakpoint orbits collide within depth ``q``.
    """

    base: IET
    q: int
    iet: IET
    cuts: tuple
    degenerate: bool

    @property
    def expected_size(self) -> int:
        return self.q * (self.base.m - 1) + 1


def power_iet(T: IET, q: int) -> PowerIET:
    if q < 1:
        raise DomainError("exponent q must be >= 1")
    inv = T.inverse()
    zero = T.zero()
    cuts = set()
    for b in T.discontinuities():
        x = b
        for i in range(q):
            if x > zero:
                cuts.add(x)
            if i < q - 1:
                x = inv.apply(x)
    ordered = sorted(cuts)
    bounds = [zero, *ordered, T.total]
    pieces = []
    for s, e in zip(bounds, bounds[1:]):
        mid = (s + e) / 2
        pieces.append((s, e, T.iterate(mid, q) - mid))
    iet, _ = iet_from_pieces(pieces, T.field)
    degenerate = len(ordered) < q * (T.m - 1)
    return PowerIET(T, q, iet, tuple(ordered), degenerate)


def commutation_condition(A: Matrix, q: int) -> bool:
    """True iff every column sum of ``A`` is 1 mod ``q``."""
    if q < 1:
        raise DomainError("q must be >= 1")
    return all(a % q == 1 % q for a in column_sums(A))


@dataclass(frozen=True)
class EvenReturnRecord:
    column_sums: tuple
    successors: dict  # letter -> (column sums of A_k A(pi_k, c), even column j0)


def even_return_exists(A_k: Matrix, pi_k) -> EvenReturnRecord:
    """Check that one more induction step from an all-odd state creates an even return time.

    Both successors are examined.  The witness column is the one the
    column-sum recursion singles out: ``j+1`` for type a and ``j`` for type b,
    where ``j = pi_k^{-1}(m)``.
    """
    pi_k = pi_k if isinstance(pi_k, Permutation) else Permutation(pi_k)
    sums = column_sums(A_k)
    even = [j for j, a in enumerate(sums, start=1) if a % 2 == 0]
    if even:
        raise DomainError(f"column sums {sums} are not all odd (even at columns {even})")
    j = pi_k.inv(pi_k.m)
    out = {}
    for c in LETTERS:
        nxt = column_sums(matmul(A_k, matrix_A(pi_k, c)))
        j0 = j + 1 if c == "a" else j
        if nxt[j0 - 1] % 2:
            raise VerificationError(f"column {j0} of the {c}-successor is odd: {nxt}")
        out[c] = (nxt, j0)
    return EvenReturnRecord(sums, out)


@dataclass
class CommutationResult:
    """Outcome of comparing ``T^q|J_n`` with ``T|J_n``.

    ``status`` is ``COMMUTE`` (condition holds and ``T^q|J = (T|J)^q`` was
    confirmed), ``WITNESS`` (a point where ``T^q|J o T|J`` and
    ``T|J o T^q|J`` differ), ``OPEN`` (condition fails but no witness), or
    ``VIOLATION`` (condition holds yet equality failed; never expected).
    """

    status: str
    n: int
    q: int
    column_sums: tuple
    condition: bool
    point: Scalar | None = None
    lhs: Scalar | None = None
    rhs: Scalar | None = None
    gamma: list = field(default_factory=list)
    gamma_star: list = field(default_factory=list)
    checked_points: int = 0

    def witness_json(self) -> dict:
        return {
            "point": format_scalar(self.point),
            "lhs": format_scalar(self.lhs),
            "rhs": format_scalar(self.rhs),
            "gamma": self.gamma,
            "gamma_star": self.gamma_star,
        }

    def to_json(self) -> dict:
        out = {
            "status": self.status,
            "n": self.n,
            "q": self.q,
            "column_sums": [str(a) for a in self.column_sums],
            "condition": self.condition,
            "checked_points": self.checked_points,
        }
        if self.point is not None:
            out["witness"] = self.witness_json()
        return out


def _probe_points(*maps: IET) -> list:
    cuts = sorted({b for S in maps for b in S.breakpoints[:-1]})
    end = maps[0].total
    pts = []
    for u, v in zip(cuts, [*cuts[1:], end]):
        pts.append(u)
        pts.append((u + v) / 2)
    return pts


def induced_pair(T: IET, L, q: int, budget: int | None = None):
    """``(T|J, T^q|J)`` as first-return maps to ``J = [0, L)``."""
    kw = {} if budget is None else {"budget": budget}
    base = first_return_map(T, L, **kw)
    powered = first_return_map(power_iet(T, q).iet, L, **kw)
    return base, powered


def verify_power_commutation(
    T: IET, n: int, q: int, budget: int | None = None
) -> CommutationResult:
    path = rauzy_iterate(T.lengths, T.permutation, n)
    L = sum(path.lengths[1:], path.lengths[0])
    sums = path.return_times()
    cond = commutation_condition(path.matrix, q)
    base, powered = induced_pair(T, L, q, budget)
    S, Sq = base.induced, powered.induced
    if cond:
        composed = iterate_map(S, q)
        pts = _probe_points(Sq, composed)
        for y in pts:
            lhs, rhs = Sq.apply(y), composed.apply(y)
            if lhs != rhs:
                return CommutationResult("VIOLATION", n, q, sums, cond, y, lhs, rhs, checked_points=len(pts))
        return CommutationResult("COMMUTE", n, q, sums, cond, checked_points=len(pts))

    # Gamma: induced intervals whose return time matches the first column mod q
    target = sums[0] % q
    gamma = [i for i, a in enumerate(sums, start=1) if a % q == target]
    gamma_star = [i for i, a in enumerate(sums, start=1) if a % q != target]
    beta = S.breakpoints

    def in_K(x, idx):
        return any(beta[i - 1] <= x < beta[i] for i in idx)

    forward = compose(Sq, S)  # T^q|J after T|J
    backward = compose(S, Sq)  # T|J after T^q|J
    pts = _probe_points(forward, backward)
    preferred = [y for y in pts if in_K(y, gamma) and in_K(Sq.apply(y), gamma_star)]
    rest = [y for y in pts if y not in set(preferred)]
    for y in preferred + rest:
        lhs, rhs = forward.apply(y), backward.apply(y)
        if lhs != rhs:
            return CommutationResult(
                "WITNESS", n, q, sums, cond, y, lhs, rhs, gamma, gamma_star, len(pts)
            )
    return CommutationResult("OPEN", n, q, sums, cond, gamma=gamma, gamma_star=gamma_star, checked_points=len(pts))
