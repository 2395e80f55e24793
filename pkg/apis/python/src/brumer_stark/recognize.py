"""
Recognition of the minimal polynomial of u_p over F from its p-adic
conjugates.

Coefficients lie in O_F[1/p], so after scaling by p^k each one is an algebraic
integer a + b*omega that is read off from its two p-adic coordinates by
balanced lifts. A rank-3 lattice reduction is kept as a diagnostic fallback.
"""
from dataclasses import dataclass
from dataclasses import field as dataclass_field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from sympy import QQ
from sympy import ZZ
from sympy.polys.matrices import DomainMatrix

from brumer_stark.errors import InsufficientPrecision
from brumer_stark.errors import NoPurePDenominator
from brumer_stark.errors import PalindromyFailure
from brumer_stark.padic import PadicCtx
from brumer_stark.padic import PadicElt
from brumer_stark.quadfield import QuadField
from brumer_stark.utils import GUARD_DIGITS
from brumer_stark.utils import balanced_lift
from brumer_stark.utils import get_logger

Coeff = Tuple[int, int, int]


def elementary_symmetric(values: Sequence[PadicElt]) -> List[PadicElt]:
    """e_1..e_n of the values, read off the expansion of prod (X - v_i)."""
    if not values:
        raise ValueError("need at least one value")
    ctx = values[0].ctx
    # poly[i] is the coefficient of X^(deg - i)
    poly = [ctx.one]
    for v in values:
        nxt = poly + [None]
        for i in range(1, len(nxt)):
            term = poly[i - 1] * v
            nxt[i] = -term if i == len(poly) else poly[i] - term
        poly = nxt
    return [c if i % 2 == 0 else -c for i, c in enumerate(poly[1:], start=1)]


def _digits(n: int, p: int) -> int:
    d = 0
    n = abs(n)
    while n:
        n //= p
        d += 1
    return d


def lll_reduce(basis: Sequence[Sequence[int]], delta: Fraction = Fraction(3, 4)) -> List[List[int]]:
    """LLL reduction of an integer basis given by linearly independent rows."""
    rows = [[ZZ(int(x)) for x in row] for row in basis]
    dm = DomainMatrix(rows, (len(rows), len(rows[0])), ZZ)
    reduced = dm.lll(delta=QQ(delta.numerator, delta.denominator))
    return [[int(x) for x in row] for row in reduced.to_Matrix().tolist()]


def _lll_pair(xa: int, xb: int, modulus: int) -> Tuple[int, int]:
    rows = [[1, xa, xb], [0, modulus, 0], [0, 0, modulus]]
    for row in lll_reduce(rows):
        if abs(row[0]) == 1:
            s = row[0]
            return s * row[1], s * row[2]
    raise NoPurePDenominator("lattice reduction found no vector with unit multiplier")


def recognize_coeff(
    c: PadicElt,
    ctx: PadicCtx,
    max_k: int,
    guard_digits: int = GUARD_DIGITS,
    method: str = "lift",
) -> Coeff:
    """
    The (a, b, k) with (a + b*omega) / p^k = c, k minimal.

    Raises `InsufficientPrecision` when the lifted coordinates do not leave
    `guard_digits` digits of headroom below the recorded precision.
    """
    p = ctx.p
    k = max(0, -c.val) if not c.is_zero() else 0
    if k > max_k:
        raise NoPurePDenominator(f"denominator p^{k} exceeds the bound p^{max_k}")
    xa, xb, k = c.field_coordinates()
    M_rec = c.absprec + k
    modulus = p**M_rec
    if method == "lift":
        a, b = balanced_lift(xa, modulus), balanced_lift(xb, modulus)
    elif method == "lll":
        a, b = _lll_pair(xa, xb, modulus)
        if (a - xa) % modulus or (b - xb) % modulus:
            raise NoPurePDenominator("lattice reduction returned an inconsistent vector")
    else:
        raise ValueError(f"unknown recognition method {method!r}")
    bound = M_rec - guard_digits
    if _digits(a, p) > bound or _digits(b, p) > bound:
        raise InsufficientPrecision(
            f"coefficient needs {max(_digits(a, p), _digits(b, p))} digits, only {bound} available"
        )
    if k and a % p == 0 and b % p == 0:
        raise NoPurePDenominator("scaled coordinates are both divisible by p")
    return a, b, k


def sqrt_d_form(a: int, b: int, k: int, D: int, p: int) -> Tuple[Fraction, Fraction]:
    """(u, v) with (a + b*omega) / p^k = u + v*sqrt(D)."""
    t = D % 2
    scale = Fraction(1, p**k)
    return (a + Fraction(b * t, 2)) * scale, Fraction(b, 2) * scale


def _format_rational(x: Fraction, p: int) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    den = x.denominator
    parts = []
    for q in sorted({2, p}):
        e = 0
        while den % q == 0:
            den //= q
            e += 1
        if e:
            parts.append(str(q) if e == 1 else f"{q}^{e}")
    if den != 1:
        parts.append(str(den))
    text = "*".join(parts)
    if len(parts) > 1:
        text = f"({text})"
    return f"{x.numerator}/{text}"


def display_coeff(a: int, b: int, k: int, D: int, p: int) -> str:
    """The coefficient as rational + rational*sqrt(D)."""
    u, v = sqrt_d_form(a, b, k, D, p)
    if v == 0:
        return _format_rational(u, p)
    sign = "-" if v < 0 else "+"
    return f"{_format_rational(u, p)} {sign} {_format_rational(abs(v), p)}*sqrt({D})"


@dataclass
class MinPolyResult:
    """
    Monic polynomial over F; coeffs[i] = (a, b, k) is the coefficient of
    X^(degree - i), equal to (a + b*omega) / p^k.
    """

    D: int
    p: int
    degree: int
    coeffs: List[Coeff]
    precision: int
    headroom: int
    palindromic: bool = True
    warnings: List[str] = dataclass_field(default_factory=list)

    def sqrt_d_coeffs(self) -> List[Tuple[Fraction, Fraction]]:
        return [sqrt_d_form(a, b, k, self.D, self.p) for a, b, k in self.coeffs]

    def display(self) -> List[str]:
        return [display_coeff(a, b, k, self.D, self.p) for a, b, k in self.coeffs]

    def to_dict(self) -> dict:
        return {
            "degree": self.degree,
            "coeffs": [{"a": a, "b": b, "k": k} for a, b, k in self.coeffs],
            "display": self.display(),
            "precision": self.precision,
            "headroom": self.headroom,
        }


def minimal_polynomial(
    conjugates: Sequence[PadicElt],
    ctx: PadicCtx,
    guard_digits: int = GUARD_DIGITS,
    max_k: Optional[int] = None,
    method: str = "lift",
    check_palindromy: bool = True,
) -> MinPolyResult:
    """
    Recognize prod (X - v) over F from the conjugates v.

    The result is validated by re-embedding every coefficient and, when
    `check_palindromy`, by requiring a palindromic list with constant term 1.
    """
    logger = get_logger()
    n = len(conjugates)
    if max_k is None:
        max_k = sum(-v.val for v in conjugates if v.val < 0)
    F = QuadField(ctx.D)
    e = elementary_symmetric(conjugates)
    coeffs: List[Coeff] = [(1, 0, 0)]
    precision = None
    headroom = None
    for i, ei in enumerate(e, start=1):
        ci = ei if i % 2 == 0 else -ei
        a, b, k = recognize_coeff(ci, ctx, max_k, guard_digits, method)
        back = ctx.embed(F.element(a, b) / ctx.p**k, ci.absprec + k)
        if not back.equals(ci, ci.absprec):
            raise InsufficientPrecision(f"coefficient of X^{n - i} does not re-embed")
        M_rec = ci.absprec + k
        room = M_rec - guard_digits - max(_digits(a, ctx.p), _digits(b, ctx.p))
        precision = M_rec if precision is None else min(precision, M_rec)
        headroom = room if headroom is None else min(headroom, room)
        coeffs.append((a, b, k))
        logger.debug(f"X^{n - i}: a={a} b={b} k={k}, headroom {room} digits")
    palindromic = all(coeffs[i] == coeffs[n - i] for i in range(n + 1))
    result = MinPolyResult(ctx.D, ctx.p, n, coeffs, precision or ctx.M, headroom or 0, palindromic)
    # h+ = 1: the single conjugate is its own partner, nothing to pair
    if check_palindromy and n > 1 and (not palindromic or coeffs[-1] != (1, 0, 0)):
        raise PalindromyFailure(
            "minimal polynomial is not palindromic with constant term 1; "
            "precision is exhausted or the conjugates pair only up to a root of unity"
        )
    return result
