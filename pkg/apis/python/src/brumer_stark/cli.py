"""
Command line front end.

JSON reports go to stdout, logs to stderr. Every failure maps to the exit code
carried by its exception class.
"""
import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from brumer_stark.cache import ZetaCache
from brumer_stark.cache import default_cache_path
from brumer_stark.config import OUTPUT_FORMATS
from brumer_stark.config import RunConfig
from brumer_stark.errors import BrumerStarkError
from brumer_stark.errors import ConfigError
from brumer_stark.groupring import AbelianGroup
from brumer_stark.groupring import GroupRingElt
from brumer_stark.groupring import MinusAlgebra
from brumer_stark.groupring import gross_stark_residual
from brumer_stark.groupring import l_invariants
from brumer_stark.groupring import rl_quotient
from brumer_stark.groupring import theta_derivative
from brumer_stark.measure import MeasureHandle
from brumer_stark.measure import brumer_stark_conjugates
from brumer_stark.measure import class_handles
from brumer_stark.measure import mult_integral
from brumer_stark.measure import riemann_oracle
from brumer_stark.measure import root_of_unity_check
from brumer_stark.padic import exp_p
from brumer_stark.padic import hensel_sqrt
from brumer_stark.padic import log_p
from brumer_stark.padic import teichmuller
from brumer_stark.quadfield import make_field
from brumer_stark.quadfield import totally_positive_fundamental_unit
from brumer_stark.recognize import minimal_polynomial
from brumer_stark.recognize import recognize_coeff
from brumer_stark.shintani import ZetaQuery
from brumer_stark.shintani import cone_evaluations
from brumer_stark.shintani import partial_zeta
from brumer_stark.utils import get_logger
from brumer_stark.utils import setup

SCHEMA_VERSION = 1


def _fraction(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _query_dict(config: RunConfig) -> dict:
    return {
        "D": config.D,
        "p": config.p,
        "ell": config.ell,
        "precision": config.precision,
        "sqrt_branch": config.sqrt_branch,
        "ell_branch": config.ell_branch,
        "orientation": config.orientation,
    }


def _report(command: str, config: Optional[RunConfig], **body) -> dict:
    out = {"schema": SCHEMA_VERSION, "command": command}
    if config is not None:
        out["query"] = _query_dict(config)
    out.update(body)
    return out


def cmd_compute(config: RunConfig, cache: Optional[ZetaCache]) -> Tuple[dict, List[str]]:
    F = config.validate()
    group, records, ctx = brumer_stark_conjugates(
        F,
        config.p,
        config.ell,
        config.precision,
        config.sqrt_branch,
        config.ell_branch,
        config.orientation,
        config.subdivide,
        config.max_moment,
        config.max_level,
        cache,
        config.workers,
    )
    pairing = root_of_unity_check(group, records, config.precision)
    poly = minimal_polynomial(
        [r.value for r in records],
        ctx,
        config.guard_digits,
        check_palindromy=(pairing == "exact"),
    )
    report = _report(
        "compute",
        config,
        class_number=group.order,
        ord={str(r.class_index): r.zeta0 for r in records},
        conjugates=[r.to_dict() for r in records],
        pairing=pairing,
        minimal_polynomial=poly.to_dict(),
    )
    lines = [f"D={F.D} p={config.p} ell={config.ell} h+={group.order}"]
    lines += [f"  class {r.class_index}  rep {r.class_rep}  ord {r.zeta0}" for r in records]
    lines += [f"  X^{poly.degree - i}: {text}" for i, text in enumerate(poly.display())]
    return report, lines


def cmd_zeta(
    config: RunConfig,
    cache: Optional[ZetaCache],
    class_index: Optional[int] = None,
    residue: Optional[Sequence[int]] = None,
    level: int = 0,
    k: int = 0,
) -> Tuple[dict, List[str]]:
    F = config.validate()
    group, handles = class_handles(
        F, config.p, config.ell, config.ell_branch, config.orientation, config.subdivide, config.max_level, cache
    )
    indices = range(group.order) if class_index is None else [class_index]
    residue = tuple(residue) if residue is not None else (0, 0)
    values: Dict[str, str] = {}
    for i in indices:
        if not 0 <= i < group.order:
            raise ConfigError(f"class index {i} outside 0..{group.order - 1}")
        values[str(i)] = _fraction(handles[i].zeta(residue if level else None, level, k))
    get_logger().debug(f"{cone_evaluations()} cone evaluations so far")
    body = {"zeta": values, "level": level, "s": -k}
    if level:
        body["residue"] = list(residue)
    report = _report("zeta", config, **body)
    lines = [f"  class {i}: {v}" for i, v in values.items()]
    return report, lines


def cmd_measure(
    config: RunConfig,
    cache: Optional[ZetaCache],
    class_index: int = 0,
    level: int = 1,
    oracle_level: int = 0,
) -> Tuple[dict, List[str]]:
    F = config.validate()
    group, handles = class_handles(
        F, config.p, config.ell, config.ell_branch, config.orientation, config.subdivide, config.max_level, cache
    )
    if not 0 <= class_index < group.order:
        raise ConfigError(f"class index {class_index} outside 0..{group.order - 1}")
    handle: MeasureHandle = handles[class_index]
    table = handle.level_table(level)
    body = {
        "class_index": class_index,
        "level": level,
        "measure": {f"{r0},{r1}": v for (r0, r1), v in sorted(table.items())},
        "total": sum(table.values()),
        "zeta0": handle.zeta0,
    }
    lines = [f"  {r0},{r1}: {v}" for (r0, r1), v in sorted(table.items()) if v]
    if oracle_level:
        ctx = hensel_sqrt(config.p, config.precision, F.D, config.sqrt_branch)
        exact = mult_integral(handle, ctx, max_moment=config.max_moment)
        approx = riemann_oracle(handle, ctx, oracle_level)
        diff = exact - approx
        agreement = ctx.M if diff.is_zero() else diff.val
        body["oracle"] = {"level": oracle_level, "agreement": agreement}
        lines.append(f"  riemann product at level {oracle_level} agrees to p^{agreement}")
    return _report("measure", config, **body), lines


def cmd_gross_check(config: RunConfig, cache: Optional[ZetaCache], m: int = 2) -> Tuple[dict, List[str]]:
    F = config.validate()
    group, records, ctx = brumer_stark_conjugates(
        F,
        config.p,
        config.ell,
        config.precision,
        config.sqrt_branch,
        config.ell_branch,
        config.orientation,
        config.subdivide,
        config.max_moment,
        config.max_level,
        cache,
        config.workers,
    )
    kwargs = dict(ell_branch=config.ell_branch, orientation=config.orientation, subdivide=config.subdivide, cache=cache)
    theta_prime = theta_derivative(F, config.p, config.ell, m, **kwargs)
    report = gross_stark_residual(F, config.p, config.ell, m, group, records, theta_prime=theta_prime, **kwargs)
    invariants = l_invariants(F, config.p, config.ell, m, group, records, **kwargs)
    body = report.to_dict()
    body["theta_derivative"] = theta_prime.to_dict()
    body["l_invariants"] = invariants
    lines = [
        f"  character {row['character']}: residual valuation {row['residual_valuation']}" for row in report.rows
    ]
    lines.append(f"  minimum {report.min_valuation} (m={m})")
    return _report("gross-check", config, **body), lines


def cmd_classgroup(D: int) -> Tuple[dict, List[str]]:
    F = make_field(D)
    group = F.narrow_class_group()
    eps = totally_positive_fundamental_unit(F)
    x, y = eps.coordinates()
    body = {
        "D": F.D,
        "class_number": group.order,
        "structure": group.structure,
        "conjugation": group.conjugation,
        "representatives": [[r.a, r.b, r.content] for r in group.reps],
        "compose": group.compose,
        "eps_plus": [_fraction(x), _fraction(y)],
    }
    lines = [f"h+={group.order} structure {group.structure} conjugation {group.conjugation}"]
    lines += [f"  class {i}: {r}" for i, r in enumerate(group.reps)]
    return _report("classgroup", None, **body), lines


# Self test


def _check_field() -> bool:
    F = make_field(221)
    eps = totally_positive_fundamental_unit(F)
    return eps.norm() == 1 and eps.is_totally_positive() and F.narrow_class_number == 4


def _check_padic() -> bool:
    ctx = hensel_sqrt(3, 30, 221)
    x = ctx.elt(3, 6)
    y = ctx.elt(2, 1)
    roundtrip = log_p(ctx, exp_p(ctx, x)).equals(x, 25)
    root = (teichmuller(ctx, y) ** 8).equals(1)
    return roundtrip and root


def _check_subdivision() -> bool:
    F = make_field(221)
    _, handles = class_handles(F, 3, 5)
    rep = handles[1].class_rep
    plain = partial_zeta(ZetaQuery(F, rep, 5))
    split = partial_zeta(ZetaQuery(F, rep, 5, subdivide=True))
    return plain == split


def _check_additivity() -> bool:
    F = make_field(221)
    _, handles = class_handles(F, 3, 5)
    h = handles[1]
    coarse = h.level_table(1)
    fine = h.level_table(2)
    for (r0, r1), v in coarse.items():
        if sum(fine[(r0 + 3 * a, r1 + 3 * b)] for a in range(3) for b in range(3)) != v:
            return False
    return sum(coarse.values()) == h.zeta0


def _check_rl_toy() -> bool:
    group = AbelianGroup.cyclic([2, 3])
    target = AbelianGroup.cyclic([2])
    algebra = MinusAlgebra(group, 3, 3, 4, [g // 3 for g in range(6)], target, 1)
    theta_h = GroupRingElt.one(target)
    theta_l = GroupRingElt(group, {1: 1, 0: -1})
    return rl_quotient(algebra, theta_h, theta_l).kernel_equals_i_squared()


def _check_recognition() -> bool:
    F = make_field(221)
    ctx = hensel_sqrt(3, 30, 221)
    x = ctx.embed(F.element(3, 1) / 9)
    return recognize_coeff(x, ctx, 4, guard_digits=5) == (3, 1, 2)


SELFTESTS: Dict[str, Callable[[], bool]] = {
    "field": _check_field,
    "padic": _check_padic,
    "subdivision": _check_subdivision,
    "additivity": _check_additivity,
    "rl_quotient": _check_rl_toy,
    "recognition": _check_recognition,
}


def cmd_selftest() -> Tuple[dict, List[str], bool]:
    results = {}
    for name, check in SELFTESTS.items():
        try:
            results[name] = "ok" if check() else "FAIL"
        except (BrumerStarkError, ArithmeticError, ValueError) as err:
            results[name] = f"FAIL: {err}"
    passed = all(v == "ok" for v in results.values())
    lines = [f"  {name}: {v}" for name, v in results.items()]
    return _report("selftest", None, results=results, passed=passed), lines, passed


# Argument parsing


def _add_field_args(parser: argparse.ArgumentParser):
    parser.add_argument("-D", type=int, required=True, help="Fundamental discriminant of F.")
    parser.add_argument("-p", type=int, required=True, help="Odd prime inert in F.")
    parser.add_argument("-l", "--ell", type=int, default=5, help="Split prime used for smoothing.")
    parser.add_argument("-M", "--precision", type=int, default=RunConfig.precision, help="p-adic digits.")
    parser.add_argument("--max-level", type=int, default=RunConfig.max_level)
    parser.add_argument("--max-moment", type=int, default=RunConfig.max_moment)
    parser.add_argument("--guard-digits", type=int, default=RunConfig.guard_digits)
    parser.add_argument("--cache", type=Path, default=None, help="Zeta cache file.")
    parser.add_argument("--no-cache", action="store_true", help="Do not read or write the zeta cache.")
    parser.add_argument("--sqrt-branch", type=int, choices=(1, -1), default=1)
    parser.add_argument("--ell-branch", type=int, choices=(0, 1), default=0)
    parser.add_argument("--orientation", choices=("euler", "divisor"), default="euler")
    parser.add_argument("--subdivide", action="store_true", help="Split the domain at 1 + eps.")
    parser.add_argument("--workers", type=int, default=1)


def _add_output_args(parser: argparse.ArgumentParser):
    parser.add_argument("--format", choices=OUTPUT_FORMATS, default="json", dest="output")
    parser.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="brumer-stark", description="Brumer-Stark units of real quadratic fields."
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    compute = subparsers.add_parser("compute", help="Conjugates and minimal polynomial of u_p.")
    _add_field_args(compute)
    _add_output_args(compute)

    zeta = subparsers.add_parser("zeta", help="Smoothed partial zeta values.")
    _add_field_args(zeta)
    _add_output_args(zeta)
    zeta.add_argument("--class-index", type=int, default=None)
    zeta.add_argument("--level", type=int, default=0)
    zeta.add_argument("--residue", type=int, nargs=2, default=None, metavar=("R0", "R1"))
    zeta.add_argument("--s", type=int, default=0, help="Evaluate at s = -K for K >= 0.", dest="k")

    measure = subparsers.add_parser("measure", help="Measure of residue classes modulo p^level.")
    _add_field_args(measure)
    _add_output_args(measure)
    measure.add_argument("--class-index", type=int, default=0)
    measure.add_argument("--level", type=int, default=1)
    measure.add_argument("--oracle-level", type=int, default=0)

    gross = subparsers.add_parser("gross-check", help="Rank one Gross-Stark residuals per odd character.")
    _add_field_args(gross)
    _add_output_args(gross)
    gross.add_argument("-m", type=int, default=2, help="Ray class level.")

    classgroup = subparsers.add_parser("classgroup", help="Narrow class group of Q(sqrt(D)).")
    classgroup.add_argument("-D", type=int, required=True)
    _add_output_args(classgroup)

    selftest = subparsers.add_parser("selftest", help="Run the quick invariant checks.")
    _add_output_args(selftest)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.no_cache:
        cache_path = None
    else:
        cache_path = args.cache if args.cache is not None else default_cache_path()
    return RunConfig(
        D=args.D,
        p=args.p,
        ell=args.ell,
        precision=args.precision,
        max_level=args.max_level,
        max_moment=args.max_moment,
        guard_digits=args.guard_digits,
        cache_path=cache_path,
        output=args.output,
        sqrt_branch=args.sqrt_branch,
        ell_branch=args.ell_branch,
        orientation=args.orientation,
        subdivide=args.subdivide,
        workers=args.workers,
        verbose=args.verbose,
    )


def _emit(report: dict, lines: List[str], output: str):
    if output == "json":
        sys.stdout.write(json.dumps(report, sort_keys=True, indent=2) + "\n")
    else:
        sys.stdout.write(f"{report['command']}\n" + "\n".join(lines) + "\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup(args.verbose)
    logger = get_logger()
    try:
        if args.command == "selftest":
            report, lines, passed = cmd_selftest()
            _emit(report, lines, args.output)
            return 0 if passed else 1
        if args.command == "classgroup":
            report, lines = cmd_classgroup(args.D)
            _emit(report, lines, args.output)
            return 0

        config = config_from_args(args)
        config.validate()
        cache = ZetaCache(config.cache_path) if config.cache_path is not None else None
        if args.command == "compute":
            report, lines = cmd_compute(config, cache)
        elif args.command == "zeta":
            report, lines = cmd_zeta(config, cache, args.class_index, args.residue, args.level, args.k)
        elif args.command == "measure":
            report, lines = cmd_measure(config, cache, args.class_index, args.level, args.oracle_level)
        else:
            report, lines = cmd_gross_check(config, cache, args.m)
        if cache is not None:
            logger.debug(f"zeta cache: {cache.hits} hits, {cache.misses} misses")
        _emit(report, lines, args.output)
        return 0
    except BrumerStarkError as err:
        sys.stderr.write(f"brumer-stark: {type(err).__name__}: {err}\n")
        return err.exit_code
    except ValueError as err:
        sys.stderr.write(f"brumer-stark: {err}\n")
        return 2
    except ArithmeticError as err:
        sys.stderr.write(f"brumer-stark: {err}\n")
        return 7


if __name__ == "__main__":
    raise SystemExit(main())
