"""
The Z-valued measure attached to a narrow class, its moments, and the
multiplicative integral giving the p-adic conjugates of the Brumer-Stark unit.

For the class of b with a = conj(b) and the smoothing prime q, the measure of
an open U of O_p is Z(a, U) - ell * Z(q*a, U), where Z(L, U) is the Shintani
sum at s = 0 over the points of L in the domain that lie in U.
"""
import concurrent.futures as futures
import math
from dataclasses import dataclass
from dataclasses import field as dataclass_field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np

from brumer_stark.cache import ZetaCache
from brumer_stark.errors import LevelTooDeep
from brumer_stark.errors import NotInert
from brumer_stark.errors import PalindromyFailure
from brumer_stark.errors import PrecisionExhausted
from brumer_stark.padic import PadicCtx
from brumer_stark.padic import PadicElt
from brumer_stark.padic import _ilog
from brumer_stark.padic import _mul_pair
from brumer_stark.padic import _pow_pair
from brumer_stark.padic import exp_p
from brumer_stark.padic import hensel_sqrt
from brumer_stark.padic import log_p
from brumer_stark.padic import teichmuller_pair
from brumer_stark.quadfield import FieldElement
from brumer_stark.quadfield import IdealRep
from brumer_stark.quadfield import NarrowClassGroup
from brumer_stark.quadfield import QuadField
from brumer_stark.quadfield import is_inert
from brumer_stark.shintani import ZetaQuery
from brumer_stark.shintani import bernoulli_numbers
from brumer_stark.shintani import cone_residue
from brumer_stark.shintani import lattice_level_table
from brumer_stark.shintani import lattice_moments
from brumer_stark.shintani import partial_zeta
from brumer_stark.shintani import reduced_domain
from brumer_stark.shintani import smoothing_lattices
from brumer_stark.utils import DEFAULT_PRECISION
from brumer_stark.utils import MAX_LEVEL
from brumer_stark.utils import MAX_MOMENT_ORDER
from brumer_stark.utils import balanced_lift
from brumer_stark.utils import get_logger
from brumer_stark.utils import valuation

Residue = Tuple[int, int]
Pair = Tuple[int, int]

# Levels the brute-force Riemann product is allowed to reach.
MAX_ORACLE_LEVEL = 4

# c0: centered moments over a + p^n O_p have valuation >= n*k - c0. The
# measure is Z-valued and x - a lies in p^n O_p, so c0 = 0. Every integral
# checks it up to CENTERED_CHECK_ORDER.
CENTERED_MOMENT_DEFICIT = 0
CENTERED_CHECK_ORDER = 6


@dataclass
class MeasureHandle:
    """
    The measure nu(b, D) of one narrow class, with memoized values on basic
    opens r + p^n O_p.
    """

    field: QuadField
    class_rep: IdealRep
    smoothing_ell: int
    p: int
    ell_branch: int = 0
    orientation: str = "euler"
    subdivide: bool = False
    max_level: int = MAX_LEVEL
    cache: Optional[ZetaCache] = None
    _values: Dict[Tuple[Residue, int], int] = dataclass_field(default_factory=dict, repr=False)
    _tables: Dict[int, Dict[Residue, int]] = dataclass_field(default_factory=dict, repr=False)

    @property
    def lattices(self) -> Tuple[IdealRep, IdealRep]:
        return smoothing_lattices(self.field, self.class_rep, self.smoothing_ell, self.ell_branch)

    def weighted_lattices(self) -> List[Tuple[IdealRep, int]]:
        """(lattice, weight) pairs whose weighted Shintani sums give the measure."""
        a, qa = self.lattices
        if self.orientation == "euler":
            return [(a, 1), (qa, -self.smoothing_ell)]
        return [(qa, 1), (a, -self.smoothing_ell)]

    def query(self, residue: Optional[Residue] = None, level: int = 0, k: int = 0) -> ZetaQuery:
        congruence = (tuple(residue), level) if level else None
        return ZetaQuery(
            field=self.field,
            class_rep=self.class_rep,
            smoothing_ell=self.smoothing_ell,
            congruence=congruence,
            s_value=-k,
            p=self.p,
            ell_branch=self.ell_branch,
            orientation=self.orientation,
            subdivide=self.subdivide,
        )

    def zeta(self, residue: Optional[Residue] = None, level: int = 0, k: int = 0) -> Fraction:
        """Smoothed partial zeta value at s = -k, through the cache when present."""
        q = self.query(residue, level, k)
        if self.cache is not None:
            key = q.key()
            value = self.cache.get(key)
            if value is None:
                value = partial_zeta(q, self.max_level)
                self.cache.put(key, value)
            return value
        return partial_zeta(q, self.max_level)

    @property
    def zeta0(self) -> int:
        return measure_of(self, (0, 0), 0)

    def level_table(self, level: int) -> Dict[Residue, int]:
        """Measure of every residue class modulo p^level."""
        if level > self.max_level:
            raise LevelTooDeep(f"level {level} exceeds bound {self.max_level}")
        if level in self._tables:
            return self._tables[level]
        P = self.p**level
        total: Dict[Residue, Fraction] = {}
        for lattice, weight in self.weighted_lattices():
            for r, v in lattice_level_table(self.field, lattice, self.p, level, 0, self.subdivide).items():
                total[r] = total.get(r, Fraction(0)) + weight * v
        table = {}
        for r0 in range(P):
            for r1 in range(P):
                table[(r0, r1)] = _integral(total.get((r0, r1), Fraction(0)), (r0, r1), level)
                self._values[((r0, r1), level)] = table[(r0, r1)]
        self._tables[level] = table
        return table


def _integral(value: Fraction, residue, level) -> int:
    if value.denominator != 1:
        raise ArithmeticError(f"measure of {residue} + p^{level}O is not an integer: {value}")
    return int(value)


def measure_of(handle: MeasureHandle, r: Residue, n: int) -> int:
    """nu(r + p^n O_p), an integer."""
    P = handle.p**n
    key = ((r[0] % P, r[1] % P), n) if n else ((0, 0), 0)
    if key in handle._values:
        return handle._values[key]
    value = _integral(handle.zeta(key[0], n), key[0], n)
    handle._values[key] = value
    return value


def moment(handle: MeasureHandle, r: Residue, n: int, k: int, centered: bool = False) -> FieldElement:
    """
    The integral of x^k (or (x - r)^k when `centered`) over r + p^n O_p, as
    an element of F.
    """
    if k < 0 or k > MAX_MOMENT_ORDER:
        raise ValueError(f"moment order {k} out of range")
    if n > handle.max_level:
        raise LevelTooDeep(f"level {n} exceeds bound {handle.max_level}")
    F = handle.field
    raw = [F.element(0)] * (k + 1)
    residue = (r[0], r[1]) if n else None
    for lattice, weight in handle.weighted_lattices():
        values = lattice_moments(F, lattice, residue, n, handle.p, k, handle.subdivide)
        raw = [x + weight * y for x, y in zip(raw, values)]
    if not centered:
        return raw[k]
    rhat = F.element(r[0], r[1])
    return centered_from_raw(raw, rhat)[k]


def centered_from_raw(raw: List[FieldElement], center: FieldElement) -> List[FieldElement]:
    """(x - c)^k moments from x^j moments, by binomial expansion."""
    out = []
    neg = -center
    for k in range(len(raw)):
        total = center.field.element(0)
        for j in range(k + 1):
            total = total + math.comb(k, j) * neg ** (k - j) * raw[j]
        out.append(total)
    return out


# Fast p-adic moments at level one


def _pair(ctx: PadicCtx, x: FieldElement, mod: int) -> Pair:
    u, v = x.sqrt_d_coordinates()
    c0 = u.numerator * pow(u.denominator, -1, mod) % mod
    c1 = ctx.branch * v.numerator * pow(v.denominator, -1, mod) % mod
    return c0, c1


def _pair_inverse(x: Pair, D: int, mod: int) -> Pair:
    nm = (x[0] * x[0] - D * x[1] * x[1]) % mod
    inv = pow(nm, -1, mod)
    return x[0] * inv % mod, -x[1] * inv % mod


def _q_table(p: int, K: int, mod: int) -> List[List[int]]:
    """Q_i(x) = p^(i+1) * B_i(x/p) for i <= K + 2 and x = 0..p, modulo `mod`."""
    B = bernoulli_numbers(K + 2)
    pB = []
    for b in B:
        f = p * b
        pB.append(f.numerator * pow(f.denominator, -1, mod) % mod)
    table = []
    for i in range(K + 3):
        row = []
        for x in range(p + 1):
            s = 0
            for l in range(i + 1):
                if pB[l]:
                    s += math.comb(i, l) * pB[l] * p**l * x ** (i - l)
            row.append(s % mod)
        table.append(row)
    return table


def _raw_moment_pairs(handle: MeasureHandle, ctx: PadicCtx, K: int, Mp: int) -> Tuple[Dict[Residue, List[Pair]], int]:
    """
    p-adic raw moments R_j(a) = integral of x^j over a + pO_p for every unit
    residue a and j <= K, as coordinate pairs modulo p^M_R. Returns the table
    and M_R.
    """
    p, D = handle.p, ctx.D
    mod = p**Mp
    inv2 = pow(2, -1, mod)
    Q = _q_table(p, K, mod)
    W = []
    for x2 in range(p):
        W.append(
            [
                np.array([math.comb(j + 2, m + 1) * Q[j + 1 - m][x2] % mod for m in range(j + 1)], dtype=object)
                for j in range(K + 1)
            ]
        )
    acc: Dict[Residue, List[List[int]]] = {}
    F = handle.field
    for lattice, weight in handle.weighted_lattices():
        for cone in reduced_domain(F, lattice, handle.subdivide):
            A = _pair(ctx, cone.gen_a, mod)
            B = _pair(ctx, cone.gen_b, mod)
            Ac = _pair(ctx, cone.gen_a.conjugate(), mod)
            Bc = _pair(ctx, cone.gen_b.conjugate(), mod)
            Ainv, Binv = _pair_inverse(A, D, mod), _pair_inverse(B, D, mod)
            Acinv, Bcinv = _pair_inverse(Ac, D, mod), _pair_inverse(Bc, D, mod)
            ratio = _mul_pair(*A, *Binv, D, mod)
            t = _mul_pair(*_mul_pair(*A, *Bc, D, mod), *Acinv, D, mod)
            rho2 = ((B[0] - t[0]) % mod, (B[1] - t[1]) % mod)
            t = _mul_pair(*_mul_pair(*B, *Ac, D, mod), *Bcinv, D, mod)
            rho1 = ((A[0] - t[0]) % mod, (A[1] - t[1]) % mod)

            rpow = [(1, 0)]
            Bpow = [(1, 0)]
            Apow = [(1, 0)]
            r1pow = [(1, 0)]
            r2pow = [(1, 0)]
            for _ in range(K + 1):
                rpow.append(_mul_pair(*rpow[-1], *ratio, D, mod))
                Bpow.append(_mul_pair(*Bpow[-1], *B, D, mod))
                Apow.append(_mul_pair(*Apow[-1], *A, D, mod))
                r1pow.append(_mul_pair(*r1pow[-1], *rho1, D, mod))
                r2pow.append(_mul_pair(*r2pow[-1], *rho2, D, mod))
            G2, G1 = [], []
            for j in range(K + 1):
                x = (Bpow[j + 1][0] - inv2 * r2pow[j + 1][0], Bpow[j + 1][1] - inv2 * r2pow[j + 1][1])
                G2.append(_mul_pair(p * x[0], p * x[1], *Ainv, D, mod))
                x = (Apow[j + 1][0] - inv2 * r1pow[j + 1][0], Apow[j + 1][1] - inv2 * r1pow[j + 1][1])
                G1.append(_mul_pair(p * x[0], p * x[1], *Binv, D, mod))

            for x1 in range(1, p + 1):
                U0 = np.array([Q[m + 1][x1] * rpow[m][0] % mod for m in range(K + 1)], dtype=object)
                U1 = np.array([Q[m + 1][x1] * rpow[m][1] % mod for m in range(K + 1)], dtype=object)
                for x2 in range(p):
                    if x1 == p and x2 == 0:
                        continue
                    res = cone_residue(lattice, cone, x1, x2, p)
                    row = acc.setdefault(res, [[0, 0] for _ in range(K + 1)])
                    for j in range(K + 1):
                        s0 = int(W[x2][j].dot(U0[: j + 1]))
                        s1 = int(W[x2][j].dot(U1[: j + 1]))
                        s = _mul_pair(s0, s1, *Bpow[j], D, mod)
                        q2, q1 = Q[j + 2][x2], Q[j + 2][x1]
                        row[j][0] += weight * (s[0] + q2 * G2[j][0] + q1 * G1[j][0])
                        row[j][1] += weight * (s[1] + q2 * G2[j][1] + q1 * G1[j][1])

    vmax = max(valuation((j + 1) * (j + 2), p) for j in range(K + 1))
    M_R = Mp - 4 - vmax
    mod_R = p**M_R
    table: Dict[Residue, List[Pair]] = {}
    for res, row in acc.items():
        out = []
        for j in range(K + 1):
            d = (j + 1) * (j + 2)
            v = valuation(d, p)
            pv = p ** (4 + v)
            s0, s1 = row[j][0] % mod, row[j][1] % mod
            if s0 % pv or s1 % pv:
                raise ArithmeticError(f"moment {j} of residue {res} is not p-integral")
            u = pow(d // p**v, -1, mod_R)
            out.append((s0 // pv * u % mod_R, s1 // pv * u % mod_R))
        table[res] = out
    return table, M_R


def _moment_budget(p: int, target: int, max_moment: int) -> Tuple[int, int]:
    """Number of Taylor terms K and the precision they reach."""
    def reach(k: int) -> int:
        return k + 1 - _ilog(k + 1, p) - CENTERED_MOMENT_DEFICIT

    K = 1
    while reach(K) < target and K < max_moment:
        K += 1
    return K, min(target, reach(K))


def _working_digits(p: int, K: int, target: int) -> int:
    return target + 6 + 2 * _ilog(K + 2, p) + _ilog(K, p)


def moment_table(handle: MeasureHandle, ctx: PadicCtx, k_max: int) -> Dict[Residue, List[PadicElt]]:
    """Raw moments of every unit residue class at level one, in F_p."""
    Mp = _working_digits(handle.p, k_max, ctx.M)
    table, M_R = _raw_moment_pairs(handle, ctx, k_max, Mp)
    return {
        res: [PadicElt.normalized(ctx, 0, c0, c1, M_R) for c0, c1 in row]
        for res, row in table.items()
    }


def mult_integral(
    handle: MeasureHandle,
    ctx: PadicCtx,
    min_precision: Optional[int] = None,
    max_moment: int = MAX_MOMENT_ORDER,
) -> PadicElt:
    """
    The multiplicative integral of x over O_p^* against the measure.

    Splits x = omega(x) <x>: the Teichmuller part is a finite product over
    unit residues a mod p, the rest is exp of the integral of log x, expanded
    around a representative of each residue with centered moments.
    """
    logger = get_logger()
    p, D = handle.p, ctx.D
    min_precision = ctx.M if min_precision is None else min_precision
    K, M_fin = _moment_budget(p, ctx.M, max_moment)
    if M_fin < min_precision:
        raise PrecisionExhausted(
            f"{max_moment} moments reach only {M_fin} digits, {min_precision} requested"
        )
    Mp = _working_digits(p, K, M_fin)
    logger.debug(f"class {handle.class_rep}: {K} moments, {Mp} working digits, {M_fin} digits out")
    raw, M_R = _raw_moment_pairs(handle, ctx, K, Mp)
    nu = handle.level_table(1)
    mod = p**M_fin
    modR = p**M_R

    additive = ctx.elt(0, 0, prec=M_fin)
    omega_part = (1, 0)
    for (a0, a1), R in sorted(raw.items()):
        nu_a = nu[(a0, a1)]
        if balanced_lift(R[0][0], modR) != nu_a or R[0][1] % modR:
            raise ArithmeticError(f"mass of residue {(a0, a1)} disagrees with the exact measure")
        ahat = _pair(ctx, handle.field.element(a0, a1), modR)
        neg = ((-ahat[0]) % modR, (-ahat[1]) % modR)
        negpow = [(1, 0)]
        for _ in range(K):
            negpow.append(_mul_pair(*negpow[-1], *neg, D, modR))
        inv = _pair_inverse(ahat, D, mod)
        invpow = (1, 0)
        s0, s1 = 0, 0
        for k in range(1, K + 1):
            c0, c1 = 0, 0
            for j in range(k + 1):
                b = math.comb(k, j)
                x = _mul_pair(*negpow[k - j], *R[j], D, modR)
                c0 += b * x[0]
                c1 += b * x[1]
            c0 %= modR
            c1 %= modR
            if k <= CENTERED_CHECK_ORDER:
                floor = p ** max(0, k - CENTERED_MOMENT_DEFICIT)
                if c0 % floor or c1 % floor:
                    raise ArithmeticError(
                        f"centered moment {k} of residue {(a0, a1)} has valuation below {k - CENTERED_MOMENT_DEFICIT}"
                    )
            v = valuation(k, p)
            pv = p**v
            if c0 % pv or c1 % pv:
                raise ArithmeticError(f"centered moment {k} of residue {(a0, a1)} has low valuation")
            unit_inv = pow(k // pv, -1, mod)
            invpow = _mul_pair(*invpow, *inv, D, mod)
            term = _mul_pair(c0 // pv * unit_inv, c1 // pv * unit_inv, *invpow, D, mod)
            if k % 2 == 0:
                term = (-term[0], -term[1])
            s0 += term[0]
            s1 += term[1]
        log_a = log_p(ctx, ctx.elt(ahat[0], ahat[1], prec=M_fin))
        additive = additive + ctx.elt(s0, s1, prec=M_fin) + nu_a * log_a
        t = teichmuller_pair(ahat[0], ahat[1], p, M_fin, D)
        if nu_a < 0:
            t = _pair_inverse(t, D, mod)
        omega_part = _mul_pair(*omega_part, *_pow_pair(*t, abs(nu_a), D, mod), D, mod)

    if not additive.is_zero() and additive.val < 1:
        raise ArithmeticError("additive integral does not lie in pO_p")
    result = exp_p(ctx, additive) * ctx.elt(omega_part[0], omega_part[1], prec=M_fin)
    if result.val != 0:
        raise ArithmeticError("multiplicative integral is not a unit")
    return result


def riemann_oracle(handle: MeasureHandle, ctx: PadicCtx, level: int) -> PadicElt:
    """
    Riemann product over unit residues a mod p^level of a^nu(a + p^level O),
    with a = a0 + a1*omega and 0 <= ai < p^level.
    """
    if level < 1 or level > min(MAX_ORACLE_LEVEL, handle.max_level):
        raise LevelTooDeep(f"oracle level {level} outside 1..{MAX_ORACLE_LEVEL}")
    p, D = handle.p, ctx.D
    mod = ctx.modulus
    table = handle.level_table(level)
    num, den = (1, 0), (1, 0)
    for (a0, a1), nu in table.items():
        if a0 % p == 0 and a1 % p == 0:
            continue
        if nu == 0:
            continue
        x = _pair(ctx, handle.field.element(a0, a1), mod)
        if nu > 0:
            num = _mul_pair(*num, *_pow_pair(*x, nu, D, mod), D, mod)
        else:
            den = _mul_pair(*den, *_pow_pair(*x, -nu, D, mod), D, mod)
    result = _mul_pair(*num, *_pair_inverse(den, D, mod), D, mod)
    return ctx.elt(result[0], result[1])


def brumer_stark_conjugate(
    handle: MeasureHandle,
    ctx: PadicCtx,
    min_precision: Optional[int] = None,
    max_moment: int = MAX_MOMENT_ORDER,
) -> PadicElt:
    """p^zeta(b, 0) times the multiplicative integral."""
    integral = mult_integral(handle, ctx, min_precision, max_moment)
    return PadicElt(ctx, integral.val + handle.zeta0, integral.c0, integral.c1, integral.prec)


@dataclass
class ConjugateRecord:
    class_index: int
    class_rep: IdealRep
    zeta0: int
    value: PadicElt

    @property
    def precision(self) -> int:
        return self.value.absprec

    def to_dict(self) -> dict:
        val, c0, c1 = self.value.to_record()
        return {
            "class_index": self.class_index,
            "class_rep": [self.class_rep.a, self.class_rep.b, self.class_rep.content],
            "zeta0": self.zeta0,
            "value": {"val": val, "c0": c0, "c1": c1},
            "precision": self.precision,
        }


def class_handles(
    F: QuadField,
    p: int,
    ell: int,
    ell_branch: int = 0,
    orientation: str = "euler",
    subdivide: bool = False,
    max_level: int = MAX_LEVEL,
    cache: Optional[ZetaCache] = None,
) -> Tuple[NarrowClassGroup, List[MeasureHandle]]:
    """The narrow class group (representatives coprime to p*ell) and one measure per class."""
    if not is_inert(F, p):
        raise NotInert(f"p={p} is not inert in Q(sqrt({F.D}))")
    if ell == p:
        raise ValueError("the smoothing prime must differ from p")
    group = F.narrow_class_group(IdealRep(1, 0, p * ell))
    handles = [
        MeasureHandle(F, rep, ell, p, ell_branch, orientation, subdivide, max_level, cache)
        for rep in group.reps
    ]
    return group, handles


def working_precision(M: int, zetas: List[int]) -> int:
    return M + 2 * max(abs(z) for z in zetas) + 16


def brumer_stark_conjugates(
    F: QuadField,
    p: int,
    ell: int,
    M: int = DEFAULT_PRECISION,
    branch: int = 1,
    ell_branch: int = 0,
    orientation: str = "euler",
    subdivide: bool = False,
    max_moment: int = MAX_MOMENT_ORDER,
    max_level: int = MAX_LEVEL,
    cache: Optional[ZetaCache] = None,
    workers: int = 1,
) -> Tuple[NarrowClassGroup, List[ConjugateRecord], PadicCtx]:
    """
    All conjugates sigma_b(u_p), one per narrow class, at working precision
    M + 2 max|zeta| + 16. Returns the group, the records in class order and
    the working context.
    """
    logger = get_logger()
    group, handles = class_handles(F, p, ell, ell_branch, orientation, subdivide, max_level, cache)
    zetas = [h.zeta0 for h in handles]
    logger.debug(f"D={F.D} p={p} ell={ell}: zeta values {zetas}")
    ctx = hensel_sqrt(p, working_precision(M, zetas), F.D, branch)

    def run(h: MeasureHandle) -> PadicElt:
        return brumer_stark_conjugate(h, ctx, M, max_moment)

    if workers > 1:
        with futures.ThreadPoolExecutor(max_workers=workers) as executor:
            values = list(executor.map(run, handles))
    else:
        values = [run(h) for h in handles]
    records = [
        ConjugateRecord(i, h.class_rep, z, v) for i, (h, z, v) in enumerate(zip(handles, zetas, values))
    ]
    return group, records, ctx


def root_of_unity_check(group: NarrowClassGroup, records: List[ConjugateRecord], digits: Optional[int] = None) -> str:
    """
    Check that the conjugates of b and c*b multiply to 1, c the conjugation
    class. Returns "exact", or "root_of_unity" when only the (p^2 - 1)-th
    powers agree.
    """
    c = group.conjugation
    branch = "exact"
    for rec in records:
        other = records[group.mul(c, rec.class_index)]
        prod = rec.value * other.value
        target = digits if digits is not None else prod.absprec
        if prod.equals(1, target):
            continue
        p = prod.ctx.p
        if (prod ** (p * p - 1)).equals(1, target):
            branch = "root_of_unity"
            get_logger().warning(
                f"conjugates of classes {rec.class_index} and {other.class_index} pair up to a root of unity"
            )
            continue
        raise PalindromyFailure(f"conjugates of classes {rec.class_index} and {other.class_index} do not pair")
    return branch
