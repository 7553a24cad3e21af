"""Command-line front end.  Every report is JSON (or TSV/DOT) with exact scalars as strings."""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction
from typing import Callable

from . import __version__
from .errors import BudgetError, IETError, ParseError, TieError
from .iet import DEFAULT_STEP_BUDGET, IET, Permutation, first_return_map
from .matrices import format_matrix
from .numeric import QuadraticNumber, format_scalar, parse_field, parse_scalar
from .powers import power_iet, verify_power_commutation
from .rank_one import (
    TowerCertificate,
    refinement_check,
    rigidity_defect,
    tower_search,
    verify_certificate,
)
from .rauzy import RauzyPath, build_towers, rauzy_class, rauzy_iterate
from .skew import (
    MatModQ,
    SkewState,
    check_group_axioms,
    find_identity_word,
    semigroup_closure,
    skew_orbit,
)

SAMPLE_HEADER = "# ietrank sample v1"
SAMPLE_COLUMNS = (
    "sample", "lambda", "pi", "pipeline", "status", "depth", "letters",
    "return_times", "q", "fiber_visits", "n0", "coverage", "overlap",
)


def _parse_pi(text: str) -> Permutation:
    body = text.strip().strip("()[]")
    try:
        return Permutation(int(x) for x in body.split(",") if x.strip())
    except ValueError as exc:
        raise ParseError(f"bad permutation {text!r}: {exc}") from None


def _parse_lambda(text: str, field) -> list:
    return [parse_scalar(x.strip(), field) for x in text.split(",") if x.strip()]


def _load_iet(args) -> IET:
    if args.input:
        try:
            with open(args.input) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read {args.input}: {exc}") from None
        return IET.from_json(data)
    if args.pi is None or args.lam is None:
        raise ParseError("an IET needs --pi and --lambda, or --input FILE")
    field = parse_field(args.field)
    return IET(_parse_lambda(args.lam, field), _parse_pi(args.pi), field)


def _config(args) -> dict:
    skip = {"func"}
    out = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    out["version"] = __version__
    return out


def _require_positive(args, *names) -> None:
    for name in names:
        value = getattr(args, name, None)
        if value is not None and value < 1:
            raise ParseError(f"--{name} must be positive")


def _epsilon(args) -> Fraction:
    try:
        eps = Fraction(args.epsilon)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"--epsilon must be an exact rational, got {args.epsilon!r}") from None
    if not 0 < eps < 1:
        raise ParseError("--epsilon must lie in (0, 1)")
    return eps


def cmd_eval(args) -> dict:
    T = _load_iet(args)
    if args.x is None:
        raise ParseError("eval needs --x")
    x = parse_scalar(args.x, T.field)
    steps = args.depth if args.depth is not None else 1
    orbit = T.orbit(x, steps)
    return {"iet": T.to_json(), "orbit": [format_scalar(y) for y in orbit]}


def cmd_induce(args) -> dict:
    T = _load_iet(args)
    n = args.depth if args.depth is not None else 1
    path = rauzy_iterate(T.lengths, T.permutation, n, budget=args.budget)
    report = path.to_json()
    report["return_times"] = [str(a) for a in path.return_times()]
    report["towers"] = [
        {"index": t.index, "base": [format_scalar(v) for v in t.base], "height": t.height}
        for t in build_towers(T.lengths, T.permutation, n)
    ]
    if args.check:
        induced = first_return_map(T, sum(path.lengths[1:], path.lengths[0]), args.budget)
        report["first_return_agrees"] = induced.induced == path.iet()
    return report


def cmd_class(args) -> dict | str:
    cls = rauzy_class(_parse_pi(args.pi) if args.pi else _load_iet(args).permutation)
    if args.format == "dot":
        return cls.to_dot()
    return cls.to_json()


def cmd_power(args) -> dict:
    T = _load_iet(args)
    P = power_iet(T, args.q)
    return {
        "q": args.q,
        "eta": [format_scalar(x) for x in P.iet.lengths],
        "sigma": list(P.iet.permutation.images),
        "cuts": [format_scalar(x) for x in P.cuts],
        "degenerate": P.degenerate,
    }


def cmd_commute(args) -> dict:
    T = _load_iet(args)
    n = args.depth if args.depth is not None else 1
    return verify_power_commutation(T, n, args.q, args.budget).to_json()


def cmd_skew(args) -> dict:
    if args.q < 2:
        raise ParseError("skew needs --q >= 2")
    if args.lam is not None or args.input:
        T = _load_iet(args)
        pi = T.permutation
    else:
        T, pi = None, _parse_pi(args.pi or "")
    table = semigroup_closure(pi, args.q)
    report = {
        "group": table.to_json(),
        "axioms": check_group_axioms(table, seed=args.seed),
        "identity_word": find_identity_word(pi, args.q).to_json(),
    }
    if T is not None:
        steps = args.depth if args.depth is not None else 10
        total = T.total
        start = SkewState(tuple(x / total for x in T.lengths), pi, MatModQ.identity(pi.m, args.q))
        report["orbit"] = skew_orbit(start, pi, steps).to_json()
    return report


def _certificate(args, T: IET) -> TowerCertificate:
    depth = args.depth if args.depth is not None else 24
    return tower_search(T.lengths, T.permutation, args.q, _epsilon(args), depth, args.budget)


def cmd_rankone(args) -> dict:
    T = _load_iet(args)
    cert = _certificate(args, T)
    report = verify_certificate(T, cert)
    return {
        "certificate": cert.to_json(),
        "verification": report.to_json(),
        "rigidity_defect": format_scalar(rigidity_defect(T, cert)),
        "horizon": "finite-horizon" if T.field is None else "exact",
    }


def cmd_refine(args) -> dict:
    T = _load_iet(args)
    if args.certificate:
        try:
            with open(args.certificate) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read {args.certificate}: {exc}") from None
        cert = TowerCertificate.from_json(data.get("certificate", data))
    else:
        cert = _certificate(args, T)
    result = refinement_check(T, cert, args.dyadic, args.refine_epsilon)
    return {"certificate": cert.to_json(), "dyadic_depth": args.dyadic, "refinement": result.to_json()}


def _random_lengths(rng: random.Random, m: int, bound: int, field) -> list:
    out = []
    while len(out) < m:
        a = Fraction(rng.randint(1, bound), bound)
        if field is None:
            out.append(a)
            continue
        b = Fraction(rng.randint(-bound, bound), bound)
        x = QuadraticNumber(a, b, field)
        if x > 0 and b != 0:
            out.append(x)
    return out


def _sample_row(i: int, args, field) -> list[str]:
    rng = random.Random(f"{args.seed}:{i}")
    m = args.m
    # reversal permutation keeps every sampled IET irreducible
    pi = Permutation(range(m, 0, -1))
    lam = _random_lengths(rng, m, args.denominator, field)
    row = dict.fromkeys(SAMPLE_COLUMNS, "")
    row.update(
        sample=str(i),
        **{"lambda": ";".join(format_scalar(x) for x in lam)},
        pi=str(pi),
        pipeline=args.pipeline,
        q=str(args.q),
    )
    depth = args.depth if args.depth is not None else 5
    try:
        if args.pipeline == "induce":
            path = rauzy_iterate(lam, pi, depth)
            row.update(depth=str(depth), letters=path.letters,
                       return_times=",".join(map(str, path.return_times())))
            if args.q >= 2:
                total = sum(lam[1:], lam[0])
                start = SkewState(tuple(x / total for x in lam), pi, MatModQ.identity(m, args.q))
                row["fiber_visits"] = str(len(skew_orbit(start, pi, depth).fiber_visits))
        elif args.pipeline == "commute":
            res = verify_power_commutation(IET(lam, pi), depth, args.q, args.budget)
            row.update(depth=str(depth), return_times=",".join(map(str, res.column_sums)))
            row["status"] = res.status
            return [row[c] for c in SAMPLE_COLUMNS]
        else:
            cert = tower_search(lam, pi, args.q, _epsilon(args), depth, args.budget)
            row.update(depth=str(cert.depth), n0=str(cert.n0),
                       coverage=format_scalar(cert.coverage), overlap=format_scalar(cert.overlap))
        row["status"] = "ok"
    except TieError as exc:
        row.update(status="tie", depth=str(exc.step))
    except BudgetError:
        row["status"] = "budget"
    except IETError as exc:
        row["status"] = exc.code
    return [row[c] for c in SAMPLE_COLUMNS]


def cmd_sample(args) -> str:
    _require_positive(args, "samples", "m", "denominator")
    if args.m < 2:
        raise ParseError("--m must be >= 2")
    field = parse_field(args.field)
    rows = [_sample_row(i, args, field) for i in range(args.samples)]
    ok = sum(1 for r in rows if r[SAMPLE_COLUMNS.index("status")] in ("ok", "COMMUTE", "WITNESS"))
    config = json.dumps(_config(args), sort_keys=True, default=str)
    lines = [SAMPLE_HEADER, f"# config {config}", "\t".join(SAMPLE_COLUMNS)]
    lines += ["\t".join(r) for r in rows]
    lines.append(f"# success {ok}/{len(rows)}")
    return "\n".join(lines) + "\n"


COMMANDS: dict[str, Callable] = {
    "eval": cmd_eval,
    "induce": cmd_induce,
    "class": cmd_class,
    "power": cmd_power,
    "commute": cmd_commute,
    "skew": cmd_skew,
    "rankone": cmd_rankone,
    "refine": cmd_refine,
    "sample": cmd_sample,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--pi", help="permutation images, e.g. 2,1")
    common.add_argument("--lambda", dest="lam", help="comma-separated exact lengths")
    common.add_argument("--field", default="Q", help="Q or 'Q(sqrt d)'")
    common.add_argument("--input", help="IET JSON file ({m, pi, lambda, field})")
    common.add_argument("--q", type=int, default=1)
    common.add_argument("--epsilon", default="1/2")
    common.add_argument("--depth", type=int, help="induction depth / steps")
    common.add_argument("--budget", type=int, default=DEFAULT_STEP_BUDGET, help="step budget")
    common.add_argument("--seed", type=int, default=0, help="64-bit RNG seed")
    common.add_argument("--format", choices=("json", "tsv", "dot"), default="json")
    common.add_argument("--out", help="write the report here instead of stdout")

    parser = argparse.ArgumentParser(prog="ietrank", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("eval", parents=[common], help="orbit of a point")
    p.add_argument("--x", help="exact starting point")
    p = sub.add_parser("induce", parents=[common], help="Rauzy-Veech path and towers")
    p.add_argument("--check", action="store_true", help="compare with the first-return map")
    sub.add_parser("class", parents=[common], help="Rauzy class graph")
    sub.add_parser("power", parents=[common], help="T^q as an explicit IET")
    sub.add_parser("commute", parents=[common], help="T^q|J_n versus (T|J_n)^q")
    sub.add_parser("skew", parents=[common], help="cycle group mod q, identity word, skew orbit")
    sub.add_parser("rankone", parents=[common], help="search and verify a tower certificate")
    p = sub.add_parser("refine", parents=[common], help="dyadic refinement check of a certificate")
    p.add_argument("--dyadic", type=int, default=1, help="dyadic rank n")
    p.add_argument("--refine-epsilon", default="1/4")
    p.add_argument("--certificate", help="certificate JSON (output of rankone)")
    p = sub.add_parser("sample", parents=[common], help="batch over random lengths (TSV)")
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--denominator", type=int, default=1000, help="denominator bound")
    p.add_argument("--pipeline", choices=("induce", "commute", "rankone"), default="induce")
    return parser


def _render(report, args) -> str:
    if isinstance(report, str):
        return report
    if args.format == "tsv":
        flat = {k: v for k, v in report.items() if not isinstance(v, (dict, list))}
        keys = sorted(flat)
        return "\t".join(keys) + "\n" + "\t".join(str(flat[k]) for k in keys) + "\n"
    report = {"config": _config(args), **report}
    return json.dumps(report, indent=2, default=str) + "\n"


def _partial_json(partial):
    if partial is None or isinstance(partial, dict):
        return partial
    if hasattr(partial, "to_json"):
        return partial.to_json()
    if isinstance(partial, RauzyPath):
        return {
            "letters": partial.letters,
            "A": format_matrix(partial.matrix),
            "lambda_n": [format_scalar(x) for x in partial.lengths],
            "pi_n": list(partial.permutation.images),
        }
    return str(partial)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _require_positive(args, "q", "budget")
        report = COMMANDS[args.command](args)
    except IETError as exc:
        err = {"error": exc.code, "message": str(exc), "config": _config(args)}
        partial = _partial_json(getattr(exc, "partial", None))
        if partial is not None:
            err["partial"] = partial
        if isinstance(exc, TieError):
            err["step"] = exc.step
        sys.stderr.write(json.dumps(err, default=str) + "\n")
        return exc.exit_code
    text = _render(report, args)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
