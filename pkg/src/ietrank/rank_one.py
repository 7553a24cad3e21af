"""Rank-one tower certificates for ``T^q`` and their independent verification.

A certificate is a base interval ``J`` and a height ``n0`` such that the
levels ``T^{iq} J`` (``0 <= i < n0``) are disjoint intervals on which ``T^q``
is a single translation, cover more than ``1 - eps`` of ``[0, |lam|)``, and
``T^{n0 q} J`` returns onto most of ``J``.  Overlap is checked relative to
``|J|``; the value relative to ``|lam|`` is recorded as well.

Two search routes feed the same verifier:

``skew-visit``
    Wait for a depth with ``pi^(k) = pi`` and ``A^(k) = I mod q`` whose
    lengths ``alpha`` have ``alpha_1 > (1 - tau)|alpha|``; take the dominant
    interval of ``(T|J')^q`` on ``J' = [0, |alpha|)``.
``tower-scan``
    Run Rauzy induction on ``T^q`` itself (fake breakpoints merged) and
    try each tower of the first return to ``[0, |lam^(k)|)``.  Return times
    for the balance bound are those of ``T^q`` to the base ``J``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from .errors import BudgetError, DomainError, VerificationError
from .iet import DEFAULT_STEP_BUDGET, IET, Permutation, first_return_map, return_pieces
from .matrices import Matrix, format_matrix, parse_matrix
from .numeric import Scalar, format_scalar, parse_field, parse_scalar, field_name
from .powers import power_iet
from .rauzy import balance_ratio, start_path
from .skew import find_identity_word

TSV_COLUMNS = ("sample", "q", "epsilon", "depth", "n0", "coverage", "overlap", "vB", "route", "status")


def tau_budget(eps, q: int, vB) -> Fraction:
    """Largest ``tau = 2^-k`` with ``2^q tau < eps`` and ``vB h / (1 - h) < eps``, ``h = 2^{q-1} tau``."""
    if not (0 < eps < 1):
        raise DomainError("epsilon must lie in (0, 1)")
    if q < 1 or vB < 1:
        raise DomainError("need q >= 1 and v(B) >= 1")
    k = 0
    while True:
        tau = Fraction(1, 2**k)
        h = 2 ** (q - 1) * tau
        if 2**q * tau < eps and h < 1 and vB * h / (1 - h) < eps:
            return tau
        k += 1


def remainder_bound(vB, q: int, tau) -> Fraction:
    h = 2 ** (q - 1) * tau
    return vB * h / (1 - h)


@dataclass
class TowerCertificate:
    lengths: tuple
    permutation: Permutation
    q: int
    epsilon: Fraction
    x0: Scalar
    x1: Scalar
    n0: int
    coverage: Scalar  # n0 |J| / |lam|
    overlap: Scalar  # |J cap T^{n0 q} J| / |J|
    overlap_total: Scalar  # |J cap T^{n0 q} J| / |lam|
    route: str = ""
    depth: int = 0
    word: str = ""
    B: Matrix = ()
    vB: Fraction = Fraction(1)
    tau: Fraction = Fraction(1)
    inducing: tuple = ()  # J' whose return times enter the balance bound
    return_times: tuple = ()
    verified: bool = False

    @property
    def width(self) -> Scalar:
        return self.x1 - self.x0

    def iet(self) -> IET:
        return IET(self.lengths, self.permutation)

    def to_json(self) -> dict:
        field = self.iet().field
        return {
            "iet": {
                "m": len(self.lengths),
                "pi": list(self.permutation.images),
                "lambda": [format_scalar(x) for x in self.lengths],
                "field": field_name(field),
            },
            "q": self.q,
            "epsilon": str(self.epsilon),
            "J": [format_scalar(self.x0), format_scalar(self.x1)],
            "n0": self.n0,
            "coverage": format_scalar(self.coverage),
            "overlap_J": format_scalar(self.overlap),
            "overlap_lambda": format_scalar(self.overlap_total),
            "provenance": {
                "route": self.route,
                "depth": self.depth,
                "word": self.word,
                "B": format_matrix(self.B),
                "vB": str(self.vB),
                "tau": str(self.tau),
                "inducing": [format_scalar(x) for x in self.inducing],
                "return_times": [str(a) for a in self.return_times],
            },
            "verified": self.verified,
        }

    @classmethod
    def from_json(cls, data: dict) -> "TowerCertificate":
        from .errors import ParseError

        try:
            f = parse_field(data["iet"].get("field", "Q"))
            sc = lambda s: parse_scalar(s, f)  # noqa: E731
            prov = data.get("provenance", {})
            return cls(
                lengths=tuple(sc(x) for x in data["iet"]["lambda"]),
                permutation=Permutation(data["iet"]["pi"]),
                q=int(data["q"]),
                epsilon=Fraction(data["epsilon"]),
                x0=sc(data["J"][0]),
                x1=sc(data["J"][1]),
                n0=int(data["n0"]),
                coverage=sc(data["coverage"]),
                overlap=sc(data["overlap_J"]),
                overlap_total=sc(data["overlap_lambda"]),
                route=prov.get("route", ""),
                depth=int(prov.get("depth", 0)),
                word=prov.get("word", ""),
                B=parse_matrix(prov.get("B", [])),
                vB=Fraction(prov.get("vB", "1")),
                tau=Fraction(prov.get("tau", "1")),
                inducing=tuple(sc(x) for x in prov.get("inducing", [])),
                return_times=tuple(int(a) for a in prov.get("return_times", [])),
                verified=bool(data.get("verified", False)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed certificate: {exc}") from exc


@dataclass
class VerificationReport:
    ok: bool
    first_failure: str | None
    items: dict
    levels: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"ok": self.ok, "first_failure": self.first_failure, "items": self.items}


def _power_shifts(T: IET, s, e, q: int) -> set:
    """Total translations of ``T^q`` over ``[s, e)``, following every split of the image."""
    parts = [(s, e, T.zero())]
    cuts = T.breakpoints[1:-1]
    for _ in range(q):
        nxt = []
        for u, v, shift in parts:
            a, b = u + shift, v + shift
            bounds = [a, *(c for c in cuts if a < c < b), b]
            for x, y in zip(bounds, bounds[1:]):
                nxt.append((x - shift, y - shift, shift + T.translations[T.interval_index(x) - 1]))
        parts = nxt
    return {shift for *_, shift in parts}


def _intersection(a0, a1, b0, b1):
    lo, hi = max(a0, b0), min(a1, b1)
    return hi - lo if lo < hi else a1 - a1


def verify_certificate(T: IET, cert: TowerCertificate) -> VerificationReport:
    """Re-derive (a) disjointness, (b) linearity, (c) coverage, (d) return overlap from scratch."""
    q, n0, eps = cert.q, cert.n0, cert.epsilon
    x0, x1 = T.scalar(cert.x0), T.scalar(cert.x1)
    items: dict = {}
    if not (T.zero() <= x0 < x1 <= T.total) or n0 < 1 or q < 1:
        items["wellformed"] = {"passed": False}
        return VerificationReport(False, "wellformed", items)
    width = x1 - x0
    levels = [(x0, x1)]
    linear_ok, bad_level = True, None
    for i in range(n0):
        s, e = levels[-1]
        shifts = _power_shifts(T, s, e, q)
        if len(shifts) != 1:
            linear_ok, bad_level = False, i
            break
        (t,) = shifts
        levels.append((s + t, e + t))
    tower = levels[:n0]
    ordered = sorted(tower)
    clash = next(
        ((k, k + 1) for k in range(len(ordered) - 1) if ordered[k + 1][0] < ordered[k][1]), None
    )
    items["a"] = {"passed": clash is None, "levels_checked": len(tower)}
    items["b"] = {"passed": linear_ok, "bad_level": bad_level}
    coverage = n0 * width / T.total
    items["c"] = {"passed": coverage > 1 - eps, "coverage": format_scalar(coverage)}
    if linear_ok:
        top = levels[n0]
        inter = _intersection(x0, x1, top[0], top[1])
        items["d"] = {
            "passed": inter / width > 1 - eps,
            "overlap_J": format_scalar(inter / width),
            "overlap_lambda": format_scalar(inter / T.total),
        }
    else:
        items["d"] = {"passed": False, "overlap_J": None, "overlap_lambda": None}
    first = next((k for k in "abcd" if not items[k]["passed"]), None)
    return VerificationReport(first is None, first, items, tower)


def _make_certificate(T: IET, q, eps, x0, x1, n0, **prov) -> TowerCertificate:
    width = x1 - x0
    # the top level is only needed for the recorded overlap; verification redoes everything
    shift = T.zero()
    P = power_iet(T, q).iet
    for _ in range(n0):
        shift = shift + P.translations[P.interval_index(x0 + shift) - 1]
    top0 = x0 + shift
    inter = _intersection(x0, x1, top0, top0 + width)
    return TowerCertificate(
        lengths=T.lengths,
        permutation=T.permutation,
        q=q,
        epsilon=Fraction(eps),
        x0=x0,
        x1=x1,
        n0=n0,
        coverage=n0 * width / T.total,
        overlap=inter / width,
        overlap_total=inter / T.total,
        **prov,
    )


@dataclass
class SearchContext:
    T: IET
    q: int
    eps: Fraction
    word: str
    B: Matrix
    vB: Fraction
    tau: Fraction
    bound: Fraction
    step_budget: int
    best: dict | None = None

    def note(self, depth, route, coverage, overlap):
        score = min(coverage, overlap)
        if self.best is None or score > self.best["score"]:
            self.best = {
                "score": score,
                "depth": depth,
                "route": route,
                "coverage": format_scalar(coverage),
                "overlap_J": format_scalar(overlap),
            }


def _finish(ctx: SearchContext, cert: TowerCertificate) -> TowerCertificate:
    rts = cert.return_times
    if any(a > ctx.vB * b for a in rts for b in rts):
        raise VerificationError(f"return-time balance fails: {rts} vs v(B)={ctx.vB}")
    if 1 - cert.coverage > ctx.bound:
        raise VerificationError("remainder bound fails")
    report = verify_certificate(ctx.T, cert)
    if not report.ok:
        raise VerificationError(f"search produced a certificate failing ({report.first_failure})")
    cert.verified = True
    return cert


def _skew_visit(ctx: SearchContext, path) -> TowerCertificate | None:
    """Certificate along the identity-fiber route, or ``None`` if this depth does not qualify."""
    T, q, tau = ctx.T, ctx.q, ctx.tau
    if path.permutation != T.permutation:
        return None
    if any((x - int(i == j)) % q for i, row in enumerate(path.matrix) for j, x in enumerate(row)):
        return None
    alpha = path.lengths
    size = sum(alpha[1:], alpha[0])
    if not alpha[0] > (1 - tau) * size:
        return None
    base = first_return_map(T, size, ctx.step_budget).induced
    powered = first_return_map(power_iet(T, q).iet, size, ctx.step_budget)
    eta = power_iet(base, q).iet
    for x in eta.breakpoints[:-1]:
        if powered.induced.apply(x) != eta.apply(x):
            raise VerificationError(f"T^q|J' differs from (T|J')^q at {format_scalar(x)}")
    h = 2 ** (q - 1) * tau
    dom = next((i for i, w in enumerate(eta.lengths) if w > (1 - h) * size), None)
    if dom is None:
        return None
    x0, x1 = eta.breakpoints[dom], eta.breakpoints[dom + 1]
    piece = next(p for p in powered.pieces if p[0] <= x0 < p[1])
    if x1 > piece[1]:
        raise VerificationError("dominant interval of (T|J')^q straddles a return piece of T^q")
    word = ctx.word if path.letters.endswith(ctx.word) else ""
    cert = _make_certificate(
        T, q, ctx.eps, x0, x1, piece[2],
        route="skew-visit", depth=path.depth, word=word, B=ctx.B, vB=ctx.vB, tau=tau,
        inducing=(T.zero(), size), return_times=powered.return_times,
    )
    ctx.note(path.depth, "skew-visit", cert.coverage, cert.overlap)
    if not (cert.coverage > 1 - ctx.eps and cert.overlap > 1 - ctx.eps):
        return None
    return _finish(ctx, cert)


def _tower_scan(ctx: SearchContext, P: IET, ppath) -> TowerCertificate | None:
    T, eps = ctx.T, ctx.eps
    size = sum(ppath.lengths[1:], ppath.lengths[0])
    towers = first_return_map(P, size, ctx.step_budget)
    found = []
    for s, e, r, t in towers.pieces:
        w = e - s
        cov = r * w / T.total
        ov = _intersection(s, e, s + t, e + t) / w
        ctx.note(ppath.depth, "tower-scan", cov, ov)
        if cov > 1 - eps and ov > 1 - eps and 1 - cov <= ctx.bound:
            found.append((cov, s, e, r))
    for cov, s, e, r in sorted(found, key=lambda c: (-c[0], c[1])):
        rts = tuple(p[2] for p in return_pieces(P, s, e, ctx.step_budget))
        if any(a > ctx.vB * b for a in rts for b in rts):
            continue
        cert = _make_certificate(
            T, ctx.q, eps, s, e, r,
            route="tower-scan", depth=ppath.depth, word="", B=ctx.B, vB=ctx.vB, tau=ctx.tau,
            inducing=(s, e), return_times=rts,
        )
        return _finish(ctx, cert)
    return None


def iter_certificates(
    lengths: Sequence,
    pi,
    q: int,
    eps,
    depth_budget: int,
    step_budget: int = DEFAULT_STEP_BUDGET,
    context: list | None = None,
) -> Iterator[TowerCertificate]:
    """Verified certificates in order of induction depth (at most one per depth and route)."""
    eps = Fraction(eps)
    if q < 1:
        raise DomainError("q must be >= 1")
    T = IET(lengths, pi)
    ident = find_identity_word(T.permutation, q)
    vB = balance_ratio(ident.B)
    tau = tau_budget(eps, q, vB)
    ctx = SearchContext(T, q, eps, ident.word, ident.B, vB, tau, remainder_bound(vB, q, tau), step_budget)
    if context is not None:
        context.append(ctx)
    P = power_iet(T, q).iet.merged()
    path = start_path(T.lengths, T.permutation)
    ppath = start_path(P.lengths, P.permutation) if P.m > 1 and P.permutation.is_irreducible() else None
    for k in range(1, depth_budget + 1):
        path.extend()
        cert = _skew_visit(ctx, path)
        if cert is not None:
            yield cert
        if ppath is not None:
            ppath.extend()
            cert = _tower_scan(ctx, P, ppath)
            if cert is not None:
                yield cert


def tower_search(
    lengths: Sequence,
    pi,
    q: int,
    eps,
    depth_budget: int,
    step_budget: int = DEFAULT_STEP_BUDGET,
) -> TowerCertificate:
    """First verified certificate within ``depth_budget`` induction steps.

    Raises :class:`BudgetError` carrying the best (coverage, overlap) reached.
    """
    ctx: list = []
    message = f"no certificate for q={q}, eps={eps} within depth {depth_budget}"
    try:
        for cert in iter_certificates(lengths, pi, q, eps, depth_budget, step_budget, ctx):
            return cert
    except BudgetError as exc:
        message = f"{exc}; search stopped"
    best = ctx[0].best if ctx else None
    if best is not None:
        best = {k: v for k, v in best.items() if k != "score"}
    raise BudgetError(message, partial=best)


@dataclass
class RefinementResult:
    passed: bool
    defect: Scalar
    per_atom: list

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "defect": format_scalar(self.defect),
            "per_atom": [format_scalar(d) for d in self.per_atom],
        }


def refinement_check(T: IET, cert: TowerCertificate, n: int, eps=None) -> RefinementResult:
    """Approximate each rank-``n`` dyadic atom by a union of tower levels.

    Atoms are ``[k|lam|/2^n, (k+1)|lam|/2^n)``; the measure is normalized by
    ``|lam|``.  Only levels may enter the union, so the part of an atom
    outside the tower always counts against it.
    """
    report = verify_certificate(T, cert)
    if not report.ok:
        raise DomainError(f"certificate fails verification at ({report.first_failure})")
    eps = cert.epsilon if eps is None else Fraction(eps)
    total = T.total
    levels = report.levels
    per_atom = []
    for k in range(2**n):
        a0, a1 = total * Fraction(k, 2**n), total * Fraction(k + 1, 2**n)
        inside = total - total
        defect = total - total
        for s, e in levels:
            part = _intersection(a0, a1, s, e)
            inside = inside + part
            rest = (e - s) - part
            defect = defect + (part if part < rest else rest)
        defect = defect + ((a1 - a0) - inside)
        per_atom.append(defect / total)
    worst = max(per_atom)
    return RefinementResult(worst < eps, worst, per_atom)


def rigidity_defect(T: IET, cert: TowerCertificate) -> Scalar:
    """``1 - |J cap T^{n0 q} J| / |J|``, recomputed by the verifier."""
    report = verify_certificate(T, cert)
    if not report.ok:
        raise DomainError(f"certificate fails verification at ({report.first_failure})")
    s, e = report.levels[-1]
    P = power_iet(T, cert.q).iet
    x0, x1 = T.scalar(cert.x0), T.scalar(cert.x1)
    t = P.translations[P.interval_index(s) - 1]
    return 1 - _intersection(x0, x1, s + t, e + t) / (x1 - x0)


def certificate_row(sample: str, cert: TowerCertificate | None, q: int, eps, status: str) -> list[str]:
    if cert is None:
        return [sample, str(q), str(eps), "", "", "", "", "", "", status]
    return [
        sample, str(q), str(eps), str(cert.depth), str(cert.n0),
        format_scalar(cert.coverage), format_scalar(cert.overlap), str(cert.vB), cert.route, status,
    ]
