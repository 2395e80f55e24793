"""
Arithmetic in the unramified quadratic extension of Q_p.

For an inert odd prime p the completion F_p is Q_p(w) with w^2 = D. Elements
are stored as p^val * (c0 + c1*w) with a unit part known modulo p^prec, so
that absolute precision is val + prec.
"""
from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple, Union

from sympy import isprime
from sympy import jacobi_symbol
from sympy import sqrt_mod

from brumer_stark.errors import DomainError
from brumer_stark.errors import NotInert
from brumer_stark.errors import NotUnit
from brumer_stark.errors import Ramified
from brumer_stark.quadfield import FieldElement
from brumer_stark.utils import valuation


def _smallest_nonresidue(p: int) -> int:
    n = 2
    while jacobi_symbol(n, p) != -1:
        n += 1
    return n


@dataclass(frozen=True)
class PadicCtx:
    """
    Precision context for F_p.

    Parameters
    ----------
    p: int
        Odd prime, inert in Q(sqrt(D)).
    M: int
        Absolute precision in base-p digits.
    D: int
        Discriminant.
    branch: int
        +1 or -1; sqrt(D) in F embeds as branch * w.
    nonresidue: int
        Smallest quadratic nonresidue nr mod p; F_{p^2} is written F_p(tau)
        with tau^2 = nr.
    root: int
        s with s^2 * nr = D mod p^M, so that w = s * tau.
    """

    p: int
    M: int
    D: int
    branch: int = 1
    nonresidue: int = 0
    root: int = 0

    @property
    def modulus(self) -> int:
        return self.p**self.M

    @property
    def t(self) -> int:
        return self.D % 2

    def elt(self, c0: int = 0, c1: int = 0, val: int = 0, prec: int = None) -> "PadicElt":
        """The element p^val * (c0 + c1*w), normalised."""
        if prec is None:
            prec = self.M
        return PadicElt.normalized(self, val, c0, c1, val + prec)

    @property
    def one(self) -> "PadicElt":
        return self.elt(1)

    @property
    def zero(self) -> "PadicElt":
        return self.elt(0)

    @property
    def w(self) -> "PadicElt":
        return self.elt(0, 1)

    def from_rational(self, x: Union[int, Fraction], prec: int = None) -> "PadicElt":
        return self.embed_pair(Fraction(x), Fraction(0), prec)

    def embed_pair(self, u: Fraction, v: Fraction, prec: int = None) -> "PadicElt":
        """Embed u + v*w for rationals u, v whose denominators are prime to p or p-powers."""
        if prec is None:
            prec = self.M
        u, v = Fraction(u), Fraction(v)
        if u == 0 and v == 0:
            return PadicElt.normalized(self, prec, 0, 0, prec)
        shift = 0
        for x in (u, v):
            if x:
                e = valuation(x.denominator, self.p)
                shift = max(shift, e)
        mod = self.p ** (prec + shift)
        ps = self.p**shift

        def lift(x: Fraction) -> int:
            num = x.numerator * ps // self.p ** valuation(x.denominator, self.p)
            den = x.denominator // self.p ** valuation(x.denominator, self.p)
            return num * pow(den, -1, mod) % mod

        return PadicElt.normalized(self, -shift, lift(u), lift(v), prec)

    def embed(self, x: FieldElement, prec: int = None) -> "PadicElt":
        """Image of x under F -> F_p with sqrt(D) -> branch * w."""
        if x.field.D != self.D:
            raise ValueError("field element from a different field")
        u, v = x.sqrt_d_coordinates()
        return self.embed_pair(u, v * self.branch, prec)

    def with_precision(self, M: int) -> "PadicCtx":
        return hensel_sqrt(self.p, M, self.D, self.branch)

    def flipped(self) -> "PadicCtx":
        return PadicCtx(self.p, self.M, self.D, -self.branch, self.nonresidue, self.root)


def hensel_sqrt(p: int, M: int, D: int, branch: int = 1) -> PadicCtx:
    """
    Build the context for (p, M, D).

    w = s * tau with tau^2 = nr (smallest nonresidue) and s the lift of the
    smaller residue root of D/nr, Hensel-lifted modulo p^M.
    """
    if p == 2 or not isprime(p):
        raise ValueError(f"p={p} must be an odd prime")
    if M < 1:
        raise ValueError(f"precision M={M} must be positive")
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    if D % p == 0:
        raise Ramified(f"p={p} divides D={D}")
    if jacobi_symbol(D % p, p) != -1:
        raise NotInert(f"p={p} is not inert in Q(sqrt({D}))")
    nr = _smallest_nonresidue(p)
    target = D * pow(nr, -1, p**M) % p**M
    s = min(sqrt_mod(target % p, p, all_roots=True))
    # Newton: s <- s - (s^2 - target) / (2s)
    k = 1
    while k < M:
        k = min(2 * k, M)
        mod = p**k
        s = (s - (s * s - target) * pow(2 * s, -1, mod)) % mod
    return PadicCtx(p, M, D, branch, nr, s % p**M)


class PadicElt:
    """An element p^val * (c0 + c1*w) of F_p with capped relative precision."""

    __slots__ = ("ctx", "val", "c0", "c1", "prec")

    def __init__(self, ctx: PadicCtx, val: int, c0: int, c1: int, prec: int):
        self.ctx = ctx
        self.val = val
        self.c0 = c0
        self.c1 = c1
        self.prec = prec

    @classmethod
    def normalized(cls, ctx: PadicCtx, val: int, c0: int, c1: int, absprec: int) -> "PadicElt":
        """p^val * (c0 + c1*w) known modulo p^absprec, with the valuation pulled out."""
        p = ctx.p
        rel = absprec - val
        if rel <= 0:
            return cls(ctx, absprec, 0, 0, 0)
        mod = p**rel
        c0 %= mod
        c1 %= mod
        if c0 == 0 and c1 == 0:
            return cls(ctx, absprec, 0, 0, 0)
        g = min(valuation(c, p) if c else rel for c in (c0, c1))
        if g:
            pg = p**g
            c0 //= pg
            c1 //= pg
        return cls(ctx, val + g, c0, c1, rel - g)

    # Properties

    @property
    def absprec(self) -> int:
        return self.val + self.prec

    @property
    def valuation(self) -> int:
        return self.val

    def is_zero(self) -> bool:
        return self.c0 == 0 and self.c1 == 0

    def is_unit(self) -> bool:
        return not self.is_zero() and self.val == 0

    def __repr__(self):
        return f"PadicElt(p={self.ctx.p}, val={self.val}, c0={self.c0}, c1={self.c1}, prec={self.prec})"

    def to_record(self) -> Tuple[str, str, str]:
        return str(self.val), str(self.c0), str(self.c1)

    def residue(self) -> Tuple[int, int]:
        if self.val != 0:
            raise NotUnit(f"{self} is not a unit")
        return self.c0 % self.ctx.p, self.c1 % self.ctx.p

    # Arithmetic

    def _coerce(self, other) -> "PadicElt":
        if isinstance(other, PadicElt):
            return other
        if isinstance(other, (int, Fraction)):
            return self.ctx.from_rational(other, max(self.absprec, 1))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        p = self.ctx.p
        absprec = min(self.absprec, other.absprec)
        v = min(self.val, other.val)
        e1, e2 = p ** (self.val - v), p ** (other.val - v)
        return PadicElt.normalized(
            self.ctx, v, e1 * self.c0 + e2 * other.c0, e1 * self.c1 + e2 * other.c1, absprec
        )

    __radd__ = __add__

    def __neg__(self):
        return PadicElt(self.ctx, self.val, -self.c0 % self.ctx.p**self.prec, -self.c1 % self.ctx.p**self.prec, self.prec)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.is_zero() or other.is_zero():
            absprec = min(self.absprec + other.val, other.absprec + self.val)
            if self.is_zero() and other.is_zero():
                absprec = self.absprec + other.absprec
            return PadicElt(self.ctx, absprec, 0, 0, 0)
        prec = min(self.prec, other.prec)
        mod = self.ctx.p**prec
        D = self.ctx.D
        c0 = (self.c0 * other.c0 + D * self.c1 * other.c1) % mod
        c1 = (self.c0 * other.c1 + self.c1 * other.c0) % mod
        return PadicElt(self.ctx, self.val + other.val, c0, c1, prec)

    __rmul__ = __mul__

    def inverse(self) -> "PadicElt":
        if self.is_zero():
            raise ZeroDivisionError("inverse of a p-adic zero")
        mod = self.ctx.p**self.prec
        nm = (self.c0 * self.c0 - self.ctx.D * self.c1 * self.c1) % mod
        inv = pow(nm, -1, mod)
        return PadicElt(self.ctx, -self.val, self.c0 * inv % mod, -self.c1 * inv % mod, self.prec)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        if k == 0:
            return PadicElt(self.ctx, 0, 1, 0, max(self.prec, 1))
        if self.is_zero():
            return PadicElt(self.ctx, self.val * k, 0, 0, 0)
        mod = self.ctx.p**self.prec
        c0, c1 = _pow_pair(self.c0, self.c1, k, self.ctx.D, mod)
        return PadicElt(self.ctx, self.val * k, c0, c1, self.prec)

    def equals(self, other, digits: int = None) -> bool:
        """Agreement to absolute precision `digits` (default: the joint precision)."""
        other = self._coerce(other)
        diff = self - other
        target = min(self.absprec, other.absprec) if digits is None else digits
        return diff.is_zero() or diff.val >= target

    def __eq__(self, other):
        if not isinstance(other, (PadicElt, int, Fraction)):
            return NotImplemented
        return self.equals(other)

    __hash__ = None

    def conjugate(self) -> "PadicElt":
        """The Frobenius c0 + c1*w -> c0 - c1*w."""
        mod = self.ctx.p**self.prec
        return PadicElt(self.ctx, self.val, self.c0, -self.c1 % mod, self.prec)

    frobenius = conjugate

    def norm(self) -> "PadicElt":
        """Norm to Q_p, as an element with c1 = 0."""
        return self * self.conjugate()

    def is_rational(self) -> bool:
        return self.c1 == 0

    def field_coordinates(self) -> Tuple[int, int, int]:
        """
        (a, b, k) with p^k * self = a + b*omega modulo p^(absprec + k), for
        the smallest k >= 0 making the coordinates integral.
        """
        ctx = self.ctx
        p = ctx.p
        k = max(0, -self.val)
        mod = p ** (self.absprec + k)
        pv = p ** (self.val + k)
        x0, x1 = self.c0 * pv, self.c1 * pv
        # sqrt(D) = branch * w and omega = (t + sqrt(D)) / 2
        b = 2 * ctx.branch * x1
        a = (x0 - b * ctx.t * pow(2, -1, mod)) % mod
        return a % mod, b % mod, k


def _mul_pair(a0, a1, b0, b1, D, mod):
    return (a0 * b0 + D * a1 * b1) % mod, (a0 * b1 + a1 * b0) % mod


def _pow_pair(c0: int, c1: int, k: int, D: int, mod: int) -> Tuple[int, int]:
    r0, r1 = 1 % mod, 0
    b0, b1 = c0 % mod, c1 % mod
    while k:
        if k & 1:
            r0, r1 = _mul_pair(r0, r1, b0, b1, D, mod)
        b0, b1 = _mul_pair(b0, b1, b0, b1, D, mod)
        k >>= 1
    return r0, r1


def _ilog(n: int, p: int) -> int:
    e = 0
    while p ** (e + 1) <= n:
        e += 1
    return e


def teichmuller_pair(c0: int, c1: int, p: int, M: int, D: int) -> Tuple[int, int]:
    """Teichmuller lift of the unit residue (c0, c1) modulo p^M, as coordinates."""
    mod = p**M
    q = p * p
    return _pow_pair(c0, c1, q ** (M - 1), D, mod)


def teichmuller(ctx: PadicCtx, x: PadicElt) -> PadicElt:
    """The root of unity of order dividing p^2 - 1 congruent to the unit x mod p."""
    if not x.is_unit():
        raise NotUnit(f"{x} is not a unit")
    M = max(x.prec, 1)
    c0, c1 = teichmuller_pair(x.c0, x.c1, ctx.p, M, ctx.D)
    return PadicElt(ctx, 0, c0, c1, M)


def log_p(ctx: PadicCtx, x: PadicElt) -> PadicElt:
    """
    Iwasawa logarithm: log of the principal unit x / (p^val * omega(u)), so
    that log(p) = 0 and roots of unity map to 0.
    """
    if x.is_zero():
        raise DomainError("logarithm of zero")
    p, D = ctx.p, ctx.D
    A = x.prec
    unit = PadicElt(ctx, 0, x.c0, x.c1, A)
    principal = unit / teichmuller(ctx, unit)
    mod = p**A
    y0 = (principal.c0 - 1) % mod
    y1 = principal.c1 % mod
    if y0 % p or y1 % p:
        raise ArithmeticError("principal unit is not congruent to 1")
    y0 //= p
    y1 //= p
    # log(1 + p*y) = sum (-1)^(n+1) p^n y^n / n
    r0, r1 = 0, 0
    t0, t1 = 1, 0
    n = 1
    while True:
        # n - floor(log_p n) is nondecreasing and bounds the term valuation
        if n - _ilog(n, p) >= A:
            break
        t0, t1 = _mul_pair(t0, t1, y0, y1, D, mod)
        v = valuation(n, p)
        coef = p ** (n - v) * pow(n // p**v, -1, mod)
        if n % 2 == 0:
            coef = -coef
        r0 = (r0 + coef * t0) % mod
        r1 = (r1 + coef * t1) % mod
        n += 1
    return PadicElt.normalized(ctx, 0, r0, r1, A)


def exp_p(ctx: PadicCtx, y: PadicElt) -> PadicElt:
    """Exponential of y with valuation >= 1."""
    if y.is_zero():
        return PadicElt(ctx, 0, 1, 0, max(y.absprec, 1))
    if y.val < 1:
        raise DomainError(f"exp_p needs valuation >= 1, got {y.val}")
    p, D = ctx.p, ctx.D
    A = y.absprec
    mod = p**A
    pv = p ** (y.val - 1)
    z0, z1 = y.c0 * pv % mod, y.c1 * pv % mod
    # y = p*z; term_n = p^n z^n / n!
    r0, r1 = 1, 0
    t0, t1 = 1, 0
    fact_unit, fact_val = 1, 0
    n = 1
    while True:
        v = valuation(n, p)
        fact_val += v
        fact_unit = fact_unit * (n // p**v) % mod
        # v_p(n!) <= (n - 1) / (p - 1)
        if n * (p - 2) + 1 >= A * (p - 1):
            break
        t0, t1 = _mul_pair(t0, t1, z0, z1, D, mod)
        coef = p ** (n - fact_val) * pow(fact_unit, -1, mod)
        r0 = (r0 + coef * t0) % mod
        r1 = (r1 + coef * t1) % mod
        n += 1
    return PadicElt.normalized(ctx, 0, r0, r1, A)
