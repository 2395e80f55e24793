"""
Real quadratic fields: elements, ideals in Hermite normal form, the totally
positive fundamental unit and the narrow class group.

Elements are written x + y*omega in the integral basis (1, omega), with
omega = (t + sqrt(D)) / 2 and t = D mod 2. The first real embedding sends
sqrt(D) to the positive square root.
"""
import math
from dataclasses import dataclass
from dataclasses import field as dataclass_field
from fractions import Fraction
from functools import cached_property
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

from sympy import factorint
from sympy import isprime
from sympy import jacobi_symbol
from sympy import nextprime

from brumer_stark.errors import NotFundamental
from brumer_stark.errors import NotReal
from brumer_stark.errors import Ramified
from brumer_stark.utils import get_logger
from brumer_stark.utils import hermite_normal_form

Rational = Union[int, Fraction]
Form = Tuple[int, int, int]


def _sign_of(u: Rational, v: Rational, D: int) -> int:
    """Exact sign of u + v*sqrt(D)."""
    if u >= 0 and v >= 0:
        return 0 if (u == 0 and v == 0) else 1
    if u <= 0 and v <= 0:
        return -1
    # Opposite signs: compare u^2 with v^2 * D.
    if u > 0:
        return 1 if u * u > v * v * D else -1
    return 1 if v * v * D > u * u else -1


class FieldElement:
    """An element x + y*omega of a real quadratic field, exact."""

    __slots__ = ("field", "x", "y")

    def __init__(self, field: "QuadField", x: Rational = 0, y: Rational = 0):
        self.field = field
        self.x = Fraction(x)
        self.y = Fraction(y)

    def _coerce(self, other) -> "FieldElement":
        if isinstance(other, FieldElement):
            return other
        if isinstance(other, (int, Fraction)):
            return FieldElement(self.field, other, 0)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return FieldElement(self.field, self.x + other.x, self.y + other.y)

    __radd__ = __add__

    def __neg__(self):
        return FieldElement(self.field, -self.x, -self.y)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return FieldElement(self.field, self.x - other.x, self.y - other.y)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        t, n = self.field.t, self.field.n
        # omega^2 = t*omega - n
        xx = self.x * other.x - n * self.y * other.y
        yy = self.x * other.y + self.y * other.x + t * self.y * other.y
        return FieldElement(self.field, xx, yy)

    __rmul__ = __mul__

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
        result = FieldElement(self.field, 1, 0)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.y == 0 and self.x == other
        if not isinstance(other, FieldElement):
            return NotImplemented
        return self.field.D == other.field.D and self.x == other.x and self.y == other.y

    def __hash__(self):
        return hash((self.field.D, self.x, self.y))

    def __repr__(self):
        return f"FieldElement(D={self.field.D}, x={self.x}, y={self.y})"

    def conjugate(self) -> "FieldElement":
        # omega' = t - omega
        return FieldElement(self.field, self.x + self.field.t * self.y, -self.y)

    def norm(self) -> Fraction:
        t, n = self.field.t, self.field.n
        return self.x * self.x + t * self.x * self.y + n * self.y * self.y

    def trace(self) -> Fraction:
        return 2 * self.x + self.field.t * self.y

    def inverse(self) -> "FieldElement":
        nm = self.norm()
        if nm == 0:
            raise ZeroDivisionError("inverse of zero field element")
        c = self.conjugate()
        return FieldElement(self.field, c.x / nm, c.y / nm)

    def sqrt_d_coordinates(self) -> Tuple[Fraction, Fraction]:
        """(u, v) with self = u + v*sqrt(D)."""
        return self.x + self.field.t * self.y / 2, self.y / 2

    def sign(self, embedding: int = 0) -> int:
        u, v = self.sqrt_d_coordinates()
        if embedding:
            v = -v
        return _sign_of(u, v, self.field.D)

    def is_totally_positive(self) -> bool:
        return self.sign(0) > 0 and self.sign(1) > 0

    def is_integral(self) -> bool:
        return self.x.denominator == 1 and self.y.denominator == 1

    def is_rational(self) -> bool:
        return self.y == 0

    def coordinates(self) -> Tuple[Fraction, Fraction]:
        return self.x, self.y

    def __float__(self):
        u, v = self.sqrt_d_coordinates()
        return float(u) + float(v) * math.sqrt(self.field.D)


@dataclass(frozen=True)
class IdealRep:
    """
    A nonzero integral ideal content * (Z*a + Z*(b + omega)).

    For primitive ideals (content 1) the Hermite basis is (a, 0), (b, 1) over
    (1, omega) and the norm is a.
    """

    a: int
    b: int
    content: int = 1

    @property
    def hnf(self) -> Tuple[Tuple[int, int], Tuple[int, int]]:
        c = self.content
        return (c * self.a, 0), (c * self.b, c)

    @property
    def norm(self) -> int:
        return self.content * self.content * self.a

    @property
    def is_primitive(self) -> bool:
        return self.content == 1

    def primitive_part(self) -> "IdealRep":
        return IdealRep(self.a, self.b)

    def basis(self, field: "QuadField") -> Tuple[FieldElement, FieldElement]:
        (x0, y0), (x1, y1) = self.hnf
        return field.element(x0, y0), field.element(x1, y1)

    def min_integer(self) -> int:
        """Smallest positive rational integer in the ideal."""
        return self.content * self.a


@dataclass(frozen=True)
class NarrowClassGroup:
    """
    The narrow class group Cl+(F) with one representative ideal per class.

    Class 0 is the identity. Indices follow the ordering of prime ideals by
    (norm, residue) and do not depend on the avoidance ideal; `reps` are
    chosen coprime to it.
    """

    field: "QuadField"
    order: int
    structure: List[int]
    reps: List[IdealRep]
    compose: List[List[int]]
    avoid: IdealRep = dataclass_field(default=None)

    def class_of(self, ideal: IdealRep) -> int:
        return self.field.class_index(ideal)

    def mul(self, i: int, j: int) -> int:
        return self.compose[i][j]

    def inverse(self, i: int) -> int:
        row = self.compose[i]
        return row.index(0)

    def power(self, i: int, k: int) -> int:
        k %= self.exponent
        result = 0
        for _ in range(k):
            result = self.compose[result][i]
        return result

    def element_order(self, i: int) -> int:
        k, x = 1, i
        while x != 0:
            x = self.compose[x][i]
            k += 1
        return k

    @property
    def exponent(self) -> int:
        return self.structure[0] if self.structure else 1

    @cached_property
    def conjugation(self) -> int:
        """Class of principal ideals with a generator of negative norm."""
        return self.class_of(self.field.principal_ideal(self.field.sqrt_d))

    @cached_property
    def basis(self) -> List[Tuple[int, int]]:
        """Generators (class index, order) realising Cl+ as a product of cyclic groups."""
        return abelian_basis(self.compose)

    @cached_property
    def coordinates(self) -> Dict[int, Tuple[int, ...]]:
        return basis_coordinates(self.compose, self.basis)


def basis_coordinates(table: Sequence[Sequence[int]], basis: Sequence[Tuple[int, int]]) -> Dict[int, Tuple[int, ...]]:
    """Exponent vector of every element with respect to `basis`."""
    coords = {0: tuple(0 for _ in basis)}
    for pos, (g, d) in enumerate(basis):
        new = {}
        for elt, vec in coords.items():
            x = elt
            for e in range(d):
                v = list(vec)
                v[pos] = e
                new[x] = tuple(v)
                x = table[x][g]
        coords = new
    return coords


def abelian_basis(table: Sequence[Sequence[int]]) -> List[Tuple[int, int]]:
    """Greedy invariant-factor basis of the abelian group given by `table`."""
    h = len(table)

    def closure(gens: List[int]) -> set:
        sub = {0}
        frontier = [0]
        while frontier:
            x = frontier.pop()
            for g in gens:
                y = table[x][g]
                if y not in sub:
                    sub.add(y)
                    frontier.append(y)
        return sub

    def power(x: int, k: int) -> int:
        r = 0
        for _ in range(k):
            r = table[r][x]
        return r

    basis: List[Tuple[int, int]] = []
    sub = {0}
    while len(sub) < h:
        best = []
        best_order = 0
        for g in range(h):
            if g in sub:
                continue
            k, x = 1, g
            while x not in sub:
                x = table[x][g]
                k += 1
            if k > best_order:
                best, best_order = [g], k
            elif k == best_order:
                best.append(g)
        chosen = None
        for g in best:
            target = power(g, best_order)
            for s in sorted(sub):
                if power(s, best_order) == target:
                    chosen = table[g][table[s].index(0)]
                    break
            if chosen is not None:
                break
        if chosen is None:
            raise ArithmeticError("no complement found while splitting the class group")
        basis.append((chosen, best_order))
        sub = closure([g for g, _ in basis])
    return basis


@dataclass(frozen=True)
class QuadField:
    """
    A real quadratic field F = Q(sqrt(D)) of fundamental discriminant D.

    Parameters
    ----------
    D: int
        Fundamental discriminant, D > 1.
    """

    D: int

    @property
    def t(self) -> int:
        return self.D % 2

    @property
    def n(self) -> int:
        # Norm of omega.
        return (self.t - self.D) // 4

    @property
    def omega(self) -> FieldElement:
        return FieldElement(self, 0, 1)

    @property
    def sqrt_d(self) -> FieldElement:
        return FieldElement(self, -self.t, 2)

    def element(self, x: Rational = 0, y: Rational = 0) -> FieldElement:
        return FieldElement(self, x, y)

    @cached_property
    def eps_plus(self) -> FieldElement:
        return totally_positive_fundamental_unit(self)

    # Ideals

    def ideal_from_generators(self, gens: Sequence[FieldElement]) -> IdealRep:
        rows = []
        for g in gens:
            if not g.is_integral():
                raise ValueError(f"generator {g} is not integral")
            rows.append((int(g.y), int(g.x)))
        for g in gens:
            h = g * self.omega
            rows.append((int(h.y), int(h.x)))
        hnf = hermite_normal_form(rows, 2)
        if hnf.shape[0] != 2:
            raise ValueError("generators do not span a full-rank ideal")
        c, cb = int(hnf[0, 0]), int(hnf[0, 1])
        ca = int(hnf[1, 1])
        return IdealRep(ca // c, cb // c, c)

    def principal_ideal(self, gen: FieldElement) -> IdealRep:
        return self.ideal_from_generators([gen])

    def ideal_mul(self, i: IdealRep, j: IdealRep) -> IdealRep:
        gens = [u * v for u in i.basis(self) for v in j.basis(self)]
        return self.ideal_from_generators(gens)

    def conjugate_ideal(self, ideal: IdealRep) -> IdealRep:
        gens = [g.conjugate() for g in ideal.basis(self)]
        return self.ideal_from_generators(gens)

    def contains(self, ideal: IdealRep, x: FieldElement) -> bool:
        if not x.is_integral():
            return False
        c = ideal.content
        xx, yy = int(x.x), int(x.y)
        if yy % c:
            return False
        k = yy // c
        rem = xx - k * c * ideal.b
        return rem % (c * ideal.a) == 0

    def is_valid_ideal(self, ideal: IdealRep) -> bool:
        a, b = ideal.a, ideal.b
        if a < 1 or not 0 <= b < a or ideal.content < 1:
            return False
        return (b * b + self.t * b + self.n) % a == 0

    def prime_ideals_above(self, q: int) -> List[IdealRep]:
        """Degree-one prime ideals over q, ordered by residue."""
        return [
            IdealRep(q, b)
            for b in range(q)
            if (b * b + self.t * b + self.n) % q == 0
        ]

    def coordinates_in(self, ideal: IdealRep, x: FieldElement) -> Tuple[int, int]:
        """Integer coordinates of x in the Hermite basis of `ideal`."""
        c = ideal.content
        yy = int(x.y)
        k = yy // c
        u = (int(x.x) - k * c * ideal.b) // (c * ideal.a)
        return u, k

    def is_coprime(self, ideal: IdealRep, other: IdealRep) -> bool:
        return math.gcd(ideal.norm, other.norm) == 1

    # Narrow class group

    def form_of_ideal(self, ideal: IdealRep) -> Form:
        a, b = ideal.a, ideal.b
        return a, 2 * b + self.t, (b * b + self.t * b + self.n) // a

    def rho(self, f: Form) -> Form:
        a, b, c = f
        D = self.D
        cc = abs(c)
        if cc * cc > D:
            r = (-b) % (2 * cc)
            if r > cc:
                r -= 2 * cc
        else:
            s = math.isqrt(D)
            r = s - ((s + b) % (2 * cc))
        return c, r, (r * r - D) // (4 * c)

    def is_reduced(self, f: Form) -> bool:
        a, b, _ = f
        D = self.D
        if b <= 0 or b * b >= D:
            return False
        a2 = 2 * abs(a)
        if (a2 + b) ** 2 <= D:
            return False
        return a2 - b <= 0 or (a2 - b) ** 2 < D

    def reduce_form(self, f: Form) -> Form:
        for _ in range(10 * self.D + 100):
            if self.is_reduced(f):
                return f
            f = self.rho(f)
        raise ArithmeticError(f"form {f} failed to reduce")

    @cached_property
    def reduced_forms(self) -> List[Form]:
        D = self.D
        s = math.isqrt(D)
        forms = []
        for b in range(1, s + 1):
            if (b * b - D) % 4:
                continue
            ac = (b * b - D) // 4
            for d in _divisors(-ac):
                for a in (d, -d):
                    f = (a, b, ac // a)
                    if self.is_reduced(f):
                        forms.append(f)
        return sorted(forms)

    @cached_property
    def _cycles(self) -> Dict[Form, int]:
        """Map each reduced form to the label of its cycle under rho."""
        label = {}
        n = 0
        principal = self.reduce_form(self.form_of_ideal(IdealRep(1, 0)))
        for start in [principal] + self.reduced_forms:
            if start in label:
                continue
            f = start
            while f not in label:
                label[f] = n
                f = self.rho(f)
            n += 1
        return label

    @property
    def narrow_class_number(self) -> int:
        return len(set(self._cycles.values()))

    @cached_property
    def _class_order(self) -> List[int]:
        """Cycle labels in index order: identity first, then by smallest prime ideal."""
        h = self.narrow_class_number
        order = [0]
        for ideal in self._prime_ideal_stream():
            label = self._cycles[self.reduce_form(self.form_of_ideal(ideal))]
            if label not in order:
                order.append(label)
            if len(order) == h:
                break
        return order

    def _prime_ideal_stream(self, avoid_norm: int = 1) -> Iterator[IdealRep]:
        q = 2
        while True:
            if avoid_norm % q:
                yield from self.prime_ideals_above(q)
            q = nextprime(q)

    def class_index(self, ideal: IdealRep) -> int:
        ideal = ideal.primitive_part()
        label = self._cycles[self.reduce_form(self.form_of_ideal(ideal))]
        return self._class_order.index(label)

    def narrow_class_group(self, avoid: Optional[IdealRep] = None) -> NarrowClassGroup:
        return narrow_class_group(self, avoid)


def _divisors(n: int) -> List[int]:
    divs = [1]
    for q, e in factorint(n).items():
        divs = [d * q**k for d in divs for k in range(e + 1)]
    return sorted(divs)


def make_field(D: int) -> QuadField:
    """
    Validate a discriminant and return its field.

    Raises `NotReal` for D <= 0 and `NotFundamental` when D is not a
    fundamental discriminant.
    """
    D = int(D)
    if D <= 0:
        raise NotReal(f"D={D} does not define a real quadratic field")
    if D == 1 or math.isqrt(D) ** 2 == D:
        raise NotFundamental(f"D={D} is a perfect square")
    if D % 4 == 1:
        core = D
    elif D % 4 == 0 and (D // 4) % 4 in (2, 3):
        core = D // 4
    else:
        raise NotFundamental(f"D={D} is not 0 or 1 modulo 4 in fundamental form")
    if any(e > 1 for e in factorint(core).values()):
        raise NotFundamental(f"D={D} has a square factor")
    F = QuadField(D)
    get_logger().debug("field D=%d omega=(%d+sqrt(D))/2", D, F.t)
    return F


def _continued_fraction_convergents(P: int, Q: int, D: int) -> Iterator[Tuple[int, int]]:
    """Convergents of (P + sqrt(D))/Q, requiring Q | D - P^2."""
    s = math.isqrt(D)
    h_prev, h = 0, 1
    k_prev, k = 1, 0
    while True:
        if Q > 0:
            a = (P + s) // Q
        else:
            a = (P + s + 1) // Q
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        yield h, k
        P = a * Q - P
        Q = (D - P * P) // Q


def totally_positive_fundamental_unit(F: QuadField) -> FieldElement:
    """
    The generator eps_plus > 1 of the totally positive units.

    Runs the continued fraction of omega; the first convergent p/q with
    N((p - q*t) + q*omega) = +-1 gives the fundamental unit, which is squared
    when its norm is -1.
    """
    for p, q in _continued_fraction_convergents(F.t, 2, F.D):
        eta = F.element(p - q * F.t, q)
        nm = eta.norm()
        if nm == 1:
            eps = eta
            break
        if nm == -1:
            eps = eta * eta
            break
    if not eps.is_totally_positive():
        raise ArithmeticError(f"unit {eps} is not totally positive")
    return eps


def is_inert(F: QuadField, p: int) -> bool:
    """True iff the odd prime p is inert in F; raises `Ramified` when p | D."""
    if p == 2 or not isprime(p):
        raise ValueError(f"p={p} must be an odd prime")
    if F.D % p == 0:
        raise Ramified(f"p={p} divides D={F.D}")
    return jacobi_symbol(F.D % p, p) == -1


def narrow_class_group(F: QuadField, avoid: Optional[IdealRep] = None) -> NarrowClassGroup:
    """
    Narrow class group via cycles of reduced forms of discriminant D.

    Each class is represented by its smallest-norm prime ideal coprime to
    `avoid` (the unit ideal for the identity class).
    """
    h = F.narrow_class_number
    avoid_norm = avoid.norm if avoid is not None else 1
    reps: List[Optional[IdealRep]] = [None] * h
    reps[0] = IdealRep(1, 0)
    missing = h - 1
    stream = F._prime_ideal_stream(avoid_norm)
    while missing:
        ideal = next(stream)
        idx = F.class_index(ideal)
        if reps[idx] is None:
            reps[idx] = ideal
            missing -= 1
    compose = [[F.class_index(F.ideal_mul(reps[i], reps[j])) for j in range(h)] for i in range(h)]
    structure = [d for _, d in abelian_basis(compose)]
    get_logger().debug("narrow class group of D=%d: order %d structure %s", F.D, h, structure)
    return NarrowClassGroup(F, h, structure, reps, compose, avoid)
