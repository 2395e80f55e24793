"""
Exact Shintani zeta values of real quadratic fields.

Lattice points of an ideal inside the half-open cone C(1, eps_plus) are
summed by Shintani's closed form: every cone contributes a finite sum of
Bernoulli-polynomial products. The default path first subdivides the cone
into cones that are unimodular for the lattice (Hirzebruch-Jung), so that
each congruence class contributes one point per cone; the parallelogram path
keeps the single cone and sums over all lattice points of its fundamental
parallelogram.
"""
import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

from sympy import bernoulli
try:
    from sympy.core.intfunc import igcdex
except ImportError:  # sympy < 1.13
    from sympy.core.numbers import igcdex
from sympy import isprime

from brumer_stark.errors import LevelTooDeep
from brumer_stark.errors import UnsupportedSmoothing
from brumer_stark.quadfield import FieldElement
from brumer_stark.quadfield import IdealRep
from brumer_stark.quadfield import QuadField
from brumer_stark.utils import MAX_LEVEL
from brumer_stark.utils import MAX_MOMENT_ORDER
from brumer_stark.utils import get_logger

Vector = Tuple[int, int]
Residue = Tuple[int, int]

SMOOTHING_ORIENTATIONS = ("euler", "divisor")

_counter_lock = threading.Lock()
_cone_evaluations = 0


def _count(n: int = 1):
    global _cone_evaluations
    with _counter_lock:
        _cone_evaluations += n


def cone_evaluations() -> int:
    """Number of single-cone Shintani evaluations performed by this process."""
    return _cone_evaluations


def reset_cone_evaluations():
    global _cone_evaluations
    with _counter_lock:
        _cone_evaluations = 0


# Bernoulli numbers and polynomials


@lru_cache(maxsize=None)
def bernoulli_numbers(n: int) -> Tuple[Fraction, ...]:
    """B_0..B_n with B_1 = -1/2, whatever convention sympy follows."""
    if n < 0:
        raise ValueError("n must be >= 0")
    out = []
    for m in range(n + 1):
        b = bernoulli(m)
        out.append(Fraction(int(b.p), int(b.q)))
    if n >= 1:
        out[1] = Fraction(-1, 2)
    return tuple(out)


def bernoulli_poly(k: int, x) -> Fraction:
    """
    Value of the k-th Bernoulli polynomial at the rational x.

    Parameters
    ----------
    k: int
        Degree, 0 <= k <= 2 * MAX_MOMENT_ORDER + 2.
    x: int or Fraction
        Evaluation point.
    """
    if k < 0 or k > 2 * MAX_MOMENT_ORDER + 2:
        raise ValueError(f"Bernoulli polynomial degree {k} out of range")
    x = Fraction(x)
    if k == 0:
        return Fraction(1)
    if k == 1:
        return x - Fraction(1, 2)
    if k == 2:
        return x * x - x + Fraction(1, 6)
    B = bernoulli_numbers(k)
    result = Fraction(0)
    for i in range(k + 1):
        if B[i]:
            result += math.comb(k, i) * B[i] * x ** (k - i)
    return result


# Cones and domains


@dataclass(frozen=True)
class ShintaniCone:
    """
    Half-open cone {x*v1 + y*v2 : x > 0, y >= 0} spanned by two totally
    positive field elements. The ray through v1 is included, the ray through
    v2 is excluded.
    """

    v1: FieldElement
    v2: FieldElement
    include_v1: bool = True
    include_v2: bool = False

    def __post_init__(self):
        if not (self.v1.is_totally_positive() and self.v2.is_totally_positive()):
            raise ValueError("cone generators must be totally positive")
        if _det(self.v1, self.v2) == 0:
            raise ValueError("cone generators are linearly dependent")
        if not self.include_v1 or self.include_v2:
            raise ValueError("only cones including v1 and excluding v2 are supported")

    def contains(self, x: FieldElement) -> bool:
        s1, s2 = _solve(self.v1, self.v2, x)
        return s1 > 0 and s2 >= 0


def _det(u: FieldElement, v: FieldElement) -> Fraction:
    return u.x * v.y - u.y * v.x


def _solve(v1: FieldElement, v2: FieldElement, x: FieldElement) -> Tuple[Fraction, Fraction]:
    """Rational (s1, s2) with x = s1*v1 + s2*v2."""
    d = _det(v1, v2)
    return _det(x, v2) / d, _det(v1, x) / d


def shintani_domain(F: QuadField, subdivide: bool = False) -> List[ShintaniCone]:
    """
    Fundamental domain for the totally positive units acting on the totally
    positive quadrant: C(1, eps_plus), or its split at the ray through
    1 + eps_plus.
    """
    one = F.element(1)
    eps = F.eps_plus
    if not subdivide:
        return [ShintaniCone(one, eps)]
    mid = one + eps
    return [ShintaniCone(one, mid), ShintaniCone(mid, eps)]


def domain_exponent(F: QuadField, x: FieldElement, cones: Optional[Sequence[ShintaniCone]] = None) -> int:
    """The unique t with x * eps_plus^t in the domain, for totally positive x."""
    if not x.is_totally_positive():
        raise ValueError(f"{x} is not totally positive")
    cones = cones if cones is not None else shintani_domain(F)
    eps = F.eps_plus
    # Rough start from the ratio of embeddings, then walk.
    ratio = math.log(float(x.conjugate()) / float(x)) / (2 * math.log(float(eps)))
    t = math.floor(ratio)
    for dt in range(-3, 4):
        y = x * eps ** (t + dt)
        if any(c.contains(y) for c in cones):
            return t + dt
    raise ArithmeticError(f"no unit translate of {x} lies in the domain")


@dataclass(frozen=True)
class UnimodularCone:
    """
    A half-open cone spanned by a basis (a, b) of the lattice, in lattice
    coordinates, together with the generators as field elements.
    """

    a: Vector
    b: Vector
    gen_a: FieldElement
    gen_b: FieldElement

    @property
    def det(self) -> int:
        return self.a[0] * self.b[1] - self.a[1] * self.b[0]

    def coordinates(self, X: Vector, modulus: int) -> Tuple[int, int]:
        """Coordinates (x, y) of the lattice vector X in the basis (a, b) modulo `modulus`."""
        d = self.det
        x = d * (X[0] * self.b[1] - X[1] * self.b[0])
        y = d * (self.a[0] * X[1] - self.a[1] * X[0])
        return x % modulus, y % modulus


def lattice_coordinates(F: QuadField, lattice: IdealRep, x: FieldElement) -> Tuple[Fraction, Fraction]:
    """Rational coordinates of x in the Hermite basis of `lattice`."""
    c = lattice.content
    v = x.y / c
    u = (x.x - v * c * lattice.b) / (c * lattice.a)
    return u, v


def _primitive(F: QuadField, lattice: IdealRep, x: FieldElement) -> Vector:
    u, v = lattice_coordinates(F, lattice, x)
    den = u.denominator * v.denominator // math.gcd(u.denominator, v.denominator)
    U, V = int(u * den), int(v * den)
    g = math.gcd(U, V)
    return U // g, V // g


def _element(F: QuadField, lattice: IdealRep, X: Vector) -> FieldElement:
    e1, e2 = lattice.basis(F)
    return e1 * X[0] + e2 * X[1]


def _hirzebruch_jung(U: Vector, V: Vector) -> List[Tuple[Vector, Vector]]:
    """Split the half-open cone C(U, V) into unimodular half-open cones."""
    out = []
    while True:
        delta = U[0] * V[1] - U[1] * V[0]
        d, s = abs(delta), (1 if delta > 0 else -1)
        if d == 1:
            out.append((U, V))
            return out
        g1, g2, _ = igcdex(U[0], U[1])
        W = (-s * int(g2), s * int(g1))
        k = s * (V[0] * W[1] - V[1] * W[0])
        kk = (-k) % d
        z = ((V[0] + kk * U[0]) // d, (V[1] + kk * U[1]) // d)
        out.append((U, z))
        U = z


@lru_cache(maxsize=256)
def reduced_domain(F: QuadField, lattice: IdealRep, subdivide: bool = False) -> Tuple[UnimodularCone, ...]:
    """
    Subdivide the Shintani domain into cones unimodular for `lattice`.

    Each returned cone includes its first ray and excludes its second, so the
    union is again the half-open domain.
    """
    cones = []
    for cone in shintani_domain(F, subdivide):
        U = _primitive(F, lattice, cone.v1)
        V = _primitive(F, lattice, cone.v2)
        for A, B in _hirzebruch_jung(U, V):
            cones.append(UnimodularCone(A, B, _element(F, lattice, A), _element(F, lattice, B)))
    get_logger().debug(
        "D=%d lattice %s: %d unimodular cones", F.D, lattice, len(cones)
    )
    return tuple(cones)


# Closed forms for a single cone


@lru_cache(maxsize=65536)
def _half_trace_powers(v1: FieldElement, v2: FieldElement, m_max: int) -> Tuple[Fraction, ...]:
    """(1/2) Tr((v2/v1)^m) for m = 0..m_max."""
    r = v2 / v1
    out = [Fraction(1)]
    x = r
    for _ in range(m_max):
        out.append(x.trace() / 2)
        x = x * r
    return tuple(out)


def monomial_value(v1: FieldElement, v2: FieldElement, y1: Fraction, y2: Fraction, a: int, b: int) -> Fraction:
    """
    Value at s = 0 of sum over m >= 0 of (y1+m1)^a (y2+m2)^b N(L)^(-s), with
    L = (y1+m1)*v1 + (y2+m2)*v2.
    """
    j = a + b
    h21 = _half_trace_powers(v1, v2, a + 1)[a + 1]
    h12 = _half_trace_powers(v2, v1, b + 1)[b + 1]
    value = bernoulli_poly(a + 1, y1) * bernoulli_poly(b + 1, y2) / ((a + 1) * (b + 1))
    value += (-1) ** a * bernoulli_poly(j + 2, y2) * h21 / ((a + 1) * (j + 2))
    value += (-1) ** b * bernoulli_poly(j + 2, y1) * h12 / ((b + 1) * (j + 2))
    return value


def cone_zeta(v1: FieldElement, v2: FieldElement, y1: Fraction, y2: Fraction, k: int = 0) -> Fraction:
    """Shintani's cone zeta function at s = -k, exact."""
    _count()
    if k == 0:
        return monomial_value(v1, v2, y1, y2, 0, 0)
    # N(L)^k expanded in the cone coordinates.
    c1, c2 = v1.conjugate(), v2.conjugate()
    first = [math.comb(k, i) * v1**i * v2 ** (k - i) for i in range(k + 1)]
    second = [math.comb(k, i) * c1**i * c2 ** (k - i) for i in range(k + 1)]
    total = Fraction(0)
    for a in range(2 * k + 1):
        coef = FieldElement(v1.field, 0, 0)
        for i in range(max(0, a - k), min(a, k) + 1):
            coef = coef + first[i] * second[a - i]
        if coef.y != 0:
            raise ArithmeticError("norm-weight coefficient is not rational")
        if coef.x:
            total += coef.x * monomial_value(v1, v2, y1, y2, a, 2 * k - a)
    return total


def cone_moments(v1: FieldElement, v2: FieldElement, y1: Fraction, y2: Fraction, j_max: int) -> List[FieldElement]:
    """
    Values at s = 0 of the alpha^j-weighted cone sums, j = 0..j_max, as field
    elements.
    """
    _count()
    out = []
    for j in range(j_max + 1):
        z = FieldElement(v1.field, 0, 0)
        for a in range(j + 1):
            z = z + math.comb(j, a) * v1**a * v2 ** (j - a) * monomial_value(v1, v2, y1, y2, a, j - a)
        out.append(z)
    return out


# Lattice sums over the domain


def residue_in_lattice(lattice: IdealRep, residue: Residue, modulus: int) -> Vector:
    """Lattice coordinates of the class of `residue` (in basis 1, omega) modulo `modulus`."""
    c, a, b = lattice.content, lattice.a, lattice.b
    det = c * c * a
    inv = pow(det, -1, modulus) if modulus > 1 else 0
    r0, r1 = residue
    return ((c * r0 - c * b * r1) * inv) % modulus, (c * a * r1 * inv) % modulus


def _cone_points(cone: UnimodularCone, R: Vector, P: int) -> Tuple[FieldElement, FieldElement, Fraction, Fraction]:
    x, y = cone.coordinates(R, P) if P > 1 else (0, 0)
    x1 = (x - 1) % P + 1
    return cone.gen_a * P, cone.gen_b * P, Fraction(x1, P), Fraction(y, P)


def _parallelogram_points(F: QuadField, lattice: IdealRep, cone: ShintaniCone, R: Vector, P: int):
    """Points y of the fundamental parallelogram of (P*V1, P*V2) congruent to R mod P."""
    V1 = _primitive(F, lattice, cone.v1)
    V2 = _primitive(F, lattice, cone.v2)
    W1 = (P * V1[0], P * V1[1])
    W2 = (P * V2[0], P * V2[1])
    det = W1[0] * W2[1] - W1[1] * W2[0]
    corners = [(0, 0), W1, W2, (W1[0] + W2[0], W1[1] + W2[1])]
    lo0, hi0 = min(c[0] for c in corners), max(c[0] for c in corners)
    lo1, hi1 = min(c[1] for c in corners), max(c[1] for c in corners)
    start0 = lo0 + (R[0] - lo0) % P
    start1 = lo1 + (R[1] - lo1) % P
    g1 = _element(F, lattice, W1)
    g2 = _element(F, lattice, W2)
    for X0 in range(start0, hi0 + 1, P):
        for X1 in range(start1, hi1 + 1, P):
            t1 = Fraction(X0 * W2[1] - X1 * W2[0], det)
            t2 = Fraction(W1[0] * X1 - W1[1] * X0, det)
            if 0 < t1 <= 1 and 0 <= t2 < 1:
                yield g1, g2, t1, t2


def lattice_zeta(
    F: QuadField,
    lattice: IdealRep,
    residue: Optional[Residue] = None,
    level: int = 0,
    p: Optional[int] = None,
    k: int = 0,
    subdivide: bool = False,
    method: str = "unimodular",
) -> Fraction:
    """
    Sum of N(alpha)^k over alpha in `lattice` and the domain, congruent to
    `residue` modulo p^level, continued to s = -k.
    """
    P = p**level if level else 1
    R = residue_in_lattice(lattice, residue, P) if level else (0, 0)
    total = Fraction(0)
    if method == "unimodular":
        for cone in reduced_domain(F, lattice, subdivide):
            v1, v2, y1, y2 = _cone_points(cone, R, P)
            total += cone_zeta(v1, v2, y1, y2, k)
    elif method == "parallelogram":
        for cone in shintani_domain(F, subdivide):
            for v1, v2, y1, y2 in _parallelogram_points(F, lattice, cone, R, P):
                total += cone_zeta(v1, v2, y1, y2, k)
    else:
        raise ValueError(f"unknown summation method {method!r}")
    return total


def cone_residue(lattice: IdealRep, cone: UnimodularCone, x: int, y: int, modulus: int) -> Residue:
    """Residue in basis (1, omega) of x*a + y*b for the cone basis (a, b)."""
    c = lattice.content
    X0 = x * cone.a[0] + y * cone.b[0]
    X1 = x * cone.a[1] + y * cone.b[1]
    return (c * (X0 * lattice.a + X1 * lattice.b)) % modulus, (c * X1) % modulus


def lattice_level_table(
    F: QuadField, lattice: IdealRep, p: int, level: int, k: int = 0, subdivide: bool = False
) -> Dict[Residue, Fraction]:
    """Lattice zeta values at s = -k for every residue class modulo p^level at once."""
    P = p**level
    table: Dict[Residue, Fraction] = {}
    for cone in reduced_domain(F, lattice, subdivide):
        v1, v2 = cone.gen_a * P, cone.gen_b * P
        for x1 in range(1, P + 1):
            for x2 in range(P):
                r = cone_residue(lattice, cone, x1, x2, P)
                value = cone_zeta(v1, v2, Fraction(x1, P), Fraction(x2, P), k)
                table[r] = table.get(r, Fraction(0)) + value
    return table


def lattice_moments(
    F: QuadField,
    lattice: IdealRep,
    residue: Optional[Residue],
    level: int,
    p: Optional[int],
    j_max: int,
    subdivide: bool = False,
) -> List[FieldElement]:
    """alpha^j-weighted sums over `lattice` in the domain and a congruence class, j = 0..j_max."""
    P = p**level if level else 1
    R = residue_in_lattice(lattice, residue, P) if level else (0, 0)
    total = [F.element(0)] * (j_max + 1)
    for cone in reduced_domain(F, lattice, subdivide):
        v1, v2, y1, y2 = _cone_points(cone, R, P)
        for j, z in enumerate(cone_moments(v1, v2, y1, y2, j_max)):
            total[j] = total[j] + z
    return total


# Smoothed partial zeta values


def smoothing_prime(F: QuadField, ell: int, branch: int = 0) -> IdealRep:
    """The degree-one prime (ell, b + omega) with the branch-th smallest root b."""
    if not isprime(ell):
        raise UnsupportedSmoothing(f"ell={ell} is not prime")
    primes = F.prime_ideals_above(ell)
    if not primes:
        raise UnsupportedSmoothing(f"ell={ell} is inert in Q(sqrt({F.D}))")
    return primes[branch % len(primes)]


def smoothing_lattices(F: QuadField, class_rep: IdealRep, ell: int, branch: int = 0) -> Tuple[IdealRep, IdealRep]:
    """The lattices a = conj(b) and q*a summed for the class of b."""
    a = F.conjugate_ideal(class_rep)
    q = smoothing_prime(F, ell, branch)
    return a, F.ideal_mul(q, a)


@dataclass(frozen=True)
class ZetaQuery:
    """
    A smoothed, optionally congruence-restricted partial zeta value.

    Parameters
    ----------
    field: QuadField
    class_rep: IdealRep
        Integral ideal b of the narrow class, coprime to p and ell.
    smoothing_ell: int
        Rational prime with a degree-one prime q above it.
    congruence: Optional[Tuple[Residue, int]]
        (r, n) restricts to Shintani generators congruent to r modulo p^n.
    s_value: int
        Nonpositive integer -k.
    p: Optional[int]
        The inert prime, needed whenever a congruence is present.
    """

    field: QuadField
    class_rep: IdealRep
    smoothing_ell: int
    congruence: Optional[Tuple[Residue, int]] = None
    s_value: int = 0
    p: Optional[int] = None
    ell_branch: int = 0
    orientation: str = "euler"
    subdivide: bool = False

    @property
    def level(self) -> int:
        return self.congruence[1] if self.congruence else 0

    @property
    def residue(self) -> Optional[Residue]:
        if not self.congruence:
            return None
        (r0, r1), n = self.congruence
        P = self.p**n
        return r0 % P, r1 % P

    def key(self) -> str:
        b = self.class_rep
        parts = [
            f"D={self.field.D}",
            f"b={b.a},{b.b},{b.content}",
            f"ell={self.smoothing_ell}/{self.ell_branch}",
            f"o={self.orientation}",
            f"s={self.s_value}",
        ]
        if self.level:
            r0, r1 = self.residue
            parts.append(f"p={self.p}")
            parts.append(f"r={r0},{r1}/{self.level}")
        if self.subdivide:
            parts.append("split")
        return ";".join(parts)


def validate_query(q: ZetaQuery, max_level: int = MAX_LEVEL):
    if q.s_value > 0:
        raise ValueError(f"s={q.s_value} must be a nonpositive integer")
    if q.orientation not in SMOOTHING_ORIENTATIONS:
        raise ValueError(f"unknown smoothing orientation {q.orientation!r}")
    if q.level > max_level:
        raise LevelTooDeep(f"congruence level {q.level} exceeds bound {max_level}")
    if q.congruence is not None and (q.p is None or not isprime(q.p)):
        raise ValueError("a congruence condition needs the prime p")
    if q.class_rep.norm % q.smoothing_ell == 0:
        raise ValueError(f"class representative {q.class_rep} is not coprime to ell={q.smoothing_ell}")
    if q.p is not None and q.class_rep.norm % q.p == 0:
        raise ValueError(f"class representative {q.class_rep} is not coprime to p={q.p}")


def partial_zeta(q: ZetaQuery, max_level: int = MAX_LEVEL, method: str = "unimodular") -> Fraction:
    """
    The smoothed partial zeta value of the class of q.class_rep at s = -k.

    With the lattices a = conj(b) and q*a, the "euler" orientation returns
    N(a)^(-k) * (Z(a) - ell * Z(q*a)) and the "divisor" orientation returns
    N(a)^(-k) * (ell^(-k) * Z(q*a) - ell * Z(a)).
    """
    validate_query(q, max_level)
    F = q.field
    k = -q.s_value
    a, qa = smoothing_lattices(F, q.class_rep, q.smoothing_ell, q.ell_branch)
    kwargs = dict(residue=q.residue, level=q.level, p=q.p, k=k, subdivide=q.subdivide, method=method)
    za = lattice_zeta(F, a, **kwargs)
    zqa = lattice_zeta(F, qa, **kwargs)
    ell = q.smoothing_ell
    if q.orientation == "euler":
        value = za - ell * zqa
    else:
        value = Fraction(zqa, ell**k) - ell * za
    return value / Fraction(a.norm) ** k
