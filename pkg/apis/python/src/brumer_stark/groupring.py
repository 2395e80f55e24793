"""
Group rings of finite abelian groups, their minus quotients, and the
Stickelberger data of a real quadratic field.

Linear algebra is done over Z with the modulus p^M carried as explicit
lattice generators, so that ideals, kernels and quotient structures are read
off Hermite and Smith normal forms.
"""
import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from sympy import ZZ
from sympy import factorint
from sympy import ilcm
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.normalforms import invariant_factors

from brumer_stark.cache import ZetaCache
from brumer_stark.errors import DomainError
from brumer_stark.errors import InsufficientPrecision
from brumer_stark.errors import ModulusTooSmall
from brumer_stark.errors import NonSquare
from brumer_stark.measure import ConjugateRecord
from brumer_stark.measure import MeasureHandle
from brumer_stark.measure import class_handles
from brumer_stark.padic import PadicCtx
from brumer_stark.padic import PadicElt
from brumer_stark.padic import _pow_pair
from brumer_stark.padic import hensel_sqrt
from brumer_stark.padic import log_p
from brumer_stark.padic import teichmuller_pair
from brumer_stark.quadfield import NarrowClassGroup
from brumer_stark.quadfield import QuadField
from brumer_stark.quadfield import abelian_basis
from brumer_stark.quadfield import basis_coordinates
from brumer_stark.shintani import smoothing_prime
from brumer_stark.utils import MAX_LEVEL
from brumer_stark.utils import get_logger
from brumer_stark.utils import hermite_normal_form
from brumer_stark.utils import lattice_contains
from brumer_stark.utils import valuation

Vector = np.ndarray


@dataclass(frozen=True)
class AbelianGroup:
    """A finite abelian group given by its multiplication table; 0 is the identity."""

    table: Tuple[Tuple[int, ...], ...]

    @classmethod
    def cyclic(cls, orders: Sequence[int]) -> "AbelianGroup":
        """Z/d_1 x ... x Z/d_r, elements indexed by the mixed-radix value of their coordinates."""
        orders = [int(d) for d in orders]
        elements = list(itertools.product(*[range(d) for d in orders]))
        index = {e: i for i, e in enumerate(elements)}
        table = tuple(
            tuple(index[tuple((x + y) % d for x, y, d in zip(a, b, orders))] for b in elements)
            for a in elements
        )
        return cls(table)

    @classmethod
    def from_class_group(cls, group: NarrowClassGroup) -> "AbelianGroup":
        return cls(tuple(tuple(row) for row in group.compose))

    def product(self, other: "AbelianGroup") -> "AbelianGroup":
        """Direct product; the pair (i, j) has index i * |other| + j."""
        n = other.order
        table = tuple(
            tuple(
                self.table[i1][i2] * n + other.table[j1][j2]
                for i2 in range(self.order)
                for j2 in range(n)
            )
            for i1 in range(self.order)
            for j1 in range(n)
        )
        return AbelianGroup(table)

    @property
    def order(self) -> int:
        return len(self.table)

    def mul(self, i: int, j: int) -> int:
        return self.table[i][j]

    def inverse(self, i: int) -> int:
        return self.table[i].index(0)

    def power(self, i: int, k: int) -> int:
        k %= self.element_order(i)
        result = 0
        for _ in range(k):
            result = self.table[result][i]
        return result

    def element_order(self, i: int) -> int:
        k, x = 1, i
        while x != 0:
            x = self.table[x][i]
            k += 1
        return k

    @cached_property
    def basis(self) -> List[Tuple[int, int]]:
        return abelian_basis(self.table)

    @cached_property
    def coordinates(self) -> Dict[int, Tuple[int, ...]]:
        return basis_coordinates(self.table, self.basis)

    @property
    def exponent(self) -> int:
        e = 1
        for _, d in self.basis:
            e = ilcm(e, d)
        return int(e)

    def closure(self, gens: Sequence[int]) -> set:
        sub = {0}
        frontier = [0]
        while frontier:
            x = frontier.pop()
            for g in gens:
                y = self.table[x][g]
                if y not in sub:
                    sub.add(y)
                    frontier.append(y)
        return sub

    def subgroup_generators(self, members: Sequence[int]) -> List[int]:
        gens: List[int] = []
        span = {0}
        for m in sorted(members):
            if m not in span:
                gens.append(m)
                span = self.closure(gens)
        return gens


class GroupRingElt:
    """
    An element of Z[G] or (Z/modulus)[G], stored as a dense coefficient
    vector indexed by group elements.
    """

    __slots__ = ("group", "coeffs", "modulus")

    def __init__(
        self,
        group: AbelianGroup,
        coeffs: Union[None, Sequence[int], Dict[int, int]] = None,
        modulus: Optional[int] = None,
    ):
        n = group.order
        arr = np.zeros(n, dtype=object)
        if isinstance(coeffs, dict):
            for g, c in coeffs.items():
                if not 0 <= g < n:
                    raise ValueError(f"group element {g} outside a group of order {n}")
                arr[g] += int(c)
        elif coeffs is not None:
            if len(coeffs) != n:
                raise ValueError(f"expected {n} coefficients, got {len(coeffs)}")
            for g, c in enumerate(coeffs):
                arr[g] = int(c)
        if modulus is not None:
            arr = arr % modulus
        self.group = group
        self.coeffs = arr
        self.modulus = modulus

    @classmethod
    def basis_element(cls, group: AbelianGroup, g: int, modulus: Optional[int] = None) -> "GroupRingElt":
        return cls(group, {g: 1}, modulus)

    @classmethod
    def one(cls, group: AbelianGroup, modulus: Optional[int] = None) -> "GroupRingElt":
        return cls.basis_element(group, 0, modulus)

    def _like(self, coeffs) -> "GroupRingElt":
        return GroupRingElt(self.group, list(coeffs), self.modulus)

    def _check(self, other: "GroupRingElt"):
        if (other.group is not self.group and other.group != self.group) or other.modulus != self.modulus:
            raise ValueError("group ring elements from different rings")

    def __getitem__(self, g: int) -> int:
        return self.coeffs[g]

    def __add__(self, other):
        if isinstance(other, int):
            other = GroupRingElt(self.group, {0: other}, self.modulus)
        self._check(other)
        return self._like(self.coeffs + other.coeffs)

    __radd__ = __add__

    def __neg__(self):
        return self._like(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            return self._like(self.coeffs * other)
        self._check(other)
        out = np.zeros(self.group.order, dtype=object)
        table = self.group.table
        right = [(j, b) for j, b in enumerate(other.coeffs) if b]
        for i, a in enumerate(self.coeffs):
            if not a:
                continue
            row = table[i]
            for j, b in right:
                out[row[j]] += a * b
        return self._like(out)

    def __rmul__(self, other):
        if isinstance(other, int):
            return self._like(self.coeffs * other)
        return NotImplemented

    def __eq__(self, other):
        if not isinstance(other, GroupRingElt):
            return NotImplemented
        return (
            self.group == other.group
            and self.modulus == other.modulus
            and all(a == b for a, b in zip(self.coeffs, other.coeffs))
        )

    __hash__ = None

    def __repr__(self):
        terms = [f"{c}[{g}]" for g, c in enumerate(self.coeffs) if c]
        return " + ".join(terms) if terms else "0"

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def involution(self) -> "GroupRingElt":
        """g -> g^-1 on the support."""
        out = np.zeros(self.group.order, dtype=object)
        for g, c in enumerate(self.coeffs):
            out[self.group.inverse(g)] = c
        return self._like(out)

    def augmentation(self) -> int:
        s = int(sum(self.coeffs))
        return s % self.modulus if self.modulus else s

    def reduce(self, modulus: int) -> "GroupRingElt":
        return GroupRingElt(self.group, list(self.coeffs), modulus)

    def pushforward(self, hom: Sequence[int], target: AbelianGroup) -> "GroupRingElt":
        """Image under the ring map induced by the group homomorphism `hom`."""
        out = np.zeros(target.order, dtype=object)
        for g, c in enumerate(self.coeffs):
            out[hom[g]] += c
        return GroupRingElt(target, list(out), self.modulus)

    def to_dict(self) -> Dict[str, int]:
        return {str(g): int(c) for g, c in enumerate(self.coeffs)}


class MinusAlgebra:
    """
    R = (Z/p^M)[g] / (c + 1) for a distinguished element c of order 2.

    The basis is one representative per coset of <c> (the smaller index), so
    that c * rep = -rep. When a surjection `quotient` onto `target` is given,
    `bar` is the minus algebra of the target and `ideal_generators` span the
    relative augmentation ideal I = ker(R -> bar).

    Parameters
    ----------
    group: AbelianGroup
    c: int
        Index of the order-2 element acting as -1.
    p: int
    M: int
        Working modulus p^M.
    quotient: Optional[Sequence[int]]
        quotient[g] is the image of g in `target`.
    target: Optional[AbelianGroup]
    target_c: Optional[int]
        Image of c; must be of order 2.
    """

    def __init__(
        self,
        group: AbelianGroup,
        c: int,
        p: int,
        M: int,
        quotient: Optional[Sequence[int]] = None,
        target: Optional[AbelianGroup] = None,
        target_c: Optional[int] = None,
    ):
        if group.element_order(c) != 2:
            raise ValueError(f"element {c} does not have order 2")
        self.group = group
        self.c = c
        self.p = p
        self.M = M
        self.modulus = p**M
        self.reps = sorted({min(g, group.mul(c, g)) for g in range(group.order)})
        self._position: Dict[int, Tuple[int, int]] = {}
        for j, r in enumerate(self.reps):
            self._position[r] = (j, 1)
            self._position[group.mul(c, r)] = (j, -1)
        self.quotient = None
        self.target = None
        self.bar = None
        self.kernel_generators: List[int] = []
        self.kernel_exponent = 1
        if quotient is not None:
            if target is None or target_c is None:
                raise ValueError("a quotient needs its target group and the image of c")
            quotient = [int(x) for x in quotient]
            for a in range(group.order):
                for b in range(group.order):
                    if quotient[group.mul(a, b)] != target.mul(quotient[a], quotient[b]):
                        raise ValueError("quotient map is not a homomorphism")
            if quotient[c] != target_c:
                raise ValueError("quotient map does not send c to the conjugation of the target")
            if len(set(quotient)) != target.order:
                raise ValueError("quotient map is not surjective")
            self.quotient = quotient
            self.target = target
            self.bar = MinusAlgebra(target, target_c, p, M)
            members = [g for g in range(group.order) if quotient[g] == 0]
            self.kernel_generators = group.subgroup_generators(members)
            self.kernel_exponent = max(group.element_order(h) for h in members)

    @property
    def rank(self) -> int:
        return len(self.reps)

    def project_raw(self, x: GroupRingElt) -> Vector:
        """Image of x in the free module on `reps`, over Z."""
        v = np.zeros(self.rank, dtype=object)
        for g, c in enumerate(x.coeffs):
            if c:
                j, sign = self._position[g]
                v[j] += sign * c
        return v

    def project(self, x: GroupRingElt) -> Vector:
        return self.project_raw(x) % self.modulus

    def lift(self, v: Sequence[int]) -> GroupRingElt:
        return GroupRingElt(self.group, {r: int(c) for r, c in zip(self.reps, v)})

    def element(self, g: int) -> Vector:
        return self.project(GroupRingElt.basis_element(self.group, g))

    def unit_vector(self, j: int) -> Vector:
        v = np.zeros(self.rank, dtype=object)
        v[j] = 1
        return v

    def mul(self, u: Sequence[int], v: Sequence[int]) -> Vector:
        return self.project(self.lift(u) * self.lift(v))

    def mul_matrix(self, u: Sequence[int], reduce: bool = True) -> np.ndarray:
        """Rows are u * rep_j."""
        x = self.lift(u)
        rows = [self.project_raw(x * GroupRingElt.basis_element(self.group, r)) for r in self.reps]
        m = np.array(rows, dtype=object).reshape(self.rank, self.rank)
        return m % self.modulus if reduce else m

    def to_bar(self, v: Sequence[int]) -> Vector:
        return self.bar.project(self.lift(v).pushforward(self.quotient, self.target))

    def modulus_rows(self) -> List[Vector]:
        return [self.unit_vector(j) * self.modulus for j in range(self.rank)]

    def ideal_generators(self) -> List[Vector]:
        """Z-module generators g * (h - 1) of I, g over `reps`, h over generators of the kernel."""
        gens = []
        for h in self.kernel_generators:
            hm1 = GroupRingElt(self.group, {h: 1, 0: -1})
            for r in self.reps:
                gens.append(self.project(GroupRingElt.basis_element(self.group, r) * hm1))
        return gens

    def i_squared_generators(self) -> List[Vector]:
        gens = []
        hs = self.kernel_generators
        for a, h in enumerate(hs):
            for k in hs[a:]:
                prod = GroupRingElt(self.group, {h: 1, 0: -1}) * GroupRingElt(self.group, {k: 1, 0: -1})
                for r in self.reps:
                    gens.append(self.project(GroupRingElt.basis_element(self.group, r) * prod))
        return gens

    def span(self, vectors: Sequence[Vector]) -> np.ndarray:
        """Hermite basis of the span of `vectors` together with p^M R."""
        return hermite_normal_form(list(vectors) + self.modulus_rows(), self.rank)

    def contains(self, hnf: np.ndarray, v: Sequence[int]) -> bool:
        return lattice_contains(hnf, [int(x) % self.modulus for x in v])


def _p_part_exponent(n: int, p: int) -> int:
    return valuation(n, p) or 0


@dataclass
class RLPresentation:
    """
    R_L = R[L] / (Theta_H L - Theta_L, L I, L^2, I^2) presented over Z/p^M
    as the module R + Rbar*L modulo `relations` (columns: Rbar block first,
    then R).
    """

    algebra: MinusAlgebra
    theta_h: Vector
    theta_l: Vector
    relations: np.ndarray
    kernel: np.ndarray
    i_squared: np.ndarray
    invariants: List[int]

    @property
    def rank(self) -> int:
        return self.algebra.bar.rank + self.algebra.rank

    def element(self, x: GroupRingElt) -> Vector:
        """Image in R + Rbar*L of an element of the group ring of R."""
        zero_b = np.zeros(self.algebra.bar.rank, dtype=object)
        return np.concatenate([zero_b, self.algebra.project(x)])

    def is_zero(self, v: Sequence[int]) -> bool:
        return lattice_contains(self.relations, v)

    def principal_ideal(self, v: Sequence[int]) -> np.ndarray:
        """Hermite basis of the ideal of R_L generated by v = (vbar, vr), relations included."""
        R, Rb = self.algebra, self.algebra.bar
        nb = Rb.rank
        vb = np.array(v[:nb], dtype=object)
        vr = np.array(v[nb:], dtype=object)
        zero_r = np.zeros(R.rank, dtype=object)
        rows = []
        for j in range(R.rank):
            e_j = R.unit_vector(j)
            r_part = R.mul(vr, e_j)
            rows.append(np.concatenate([Rb.mul(vb, R.to_bar(e_j)), r_part]))
            # (vbar L + vr) * L e_j = (vr e_j) L
            rows.append(np.concatenate([R.to_bar(r_part), zero_r]))
        return hermite_normal_form(rows + list(self.relations), self.rank)

    def kernel_contains(self, v: Sequence[int]) -> bool:
        return self.algebra.contains(self.kernel, v)

    def contains_i_squared(self) -> bool:
        return all(lattice_contains(self.kernel, row) for row in self.i_squared)

    def kernel_equals_i_squared(self) -> bool:
        return self.kernel.shape == self.i_squared.shape and bool(np.all(self.kernel == self.i_squared))

    def _l_action(self, row: Sequence[int]) -> Vector:
        nb = self.algebra.bar.rank
        a = np.array(row[nb:], dtype=object)
        image = self.algebra.to_bar(a)
        return np.concatenate([image, np.zeros(self.algebra.rank, dtype=object)])

    def check_relations(self) -> bool:
        """
        L kills I, L^2 = 0, and the relation lattice is stable under L, all
        checked on the presentation matrix.
        """
        alg = self.algebra
        nb = alg.bar.rank
        for i in alg.ideal_generators():
            image = self._l_action(np.concatenate([np.zeros(nb, dtype=object), i]))
            if not lattice_contains(self.relations, image):
                return False
        for row in self.relations:
            once = self._l_action(row)
            if not lattice_contains(self.relations, once):
                return False
            if any(self._l_action(once) % alg.modulus):
                return False
        return True

    def to_dict(self) -> dict:
        return {
            "modulus": self.algebra.modulus,
            "relations": [[int(x) for x in row] for row in self.relations],
            "kernel": [[int(x) for x in row] for row in self.kernel],
            "invariants": self.invariants,
            "kernel_is_i_squared": self.kernel_equals_i_squared(),
        }


def _invariant_factors(m: np.ndarray) -> List[int]:
    rows = [[ZZ(int(x)) for x in row] for row in m]
    dm = DomainMatrix(rows, (m.shape[0], m.shape[1]), ZZ)
    return [int(x) for x in invariant_factors(dm)]


def rl_quotient(algebra: MinusAlgebra, theta_h: GroupRingElt, theta_l: GroupRingElt) -> RLPresentation:
    """
    Present R_L over Z/p^M and return the kernel of R -> R_L.

    Raises `ModulusTooSmall` when the Smith pivots of multiplication by
    Theta_H use up so much of p^M that the kernel can no longer be told apart
    from I^2 at this modulus.
    """
    logger = get_logger()
    if algebra.bar is None:
        raise ValueError("the algebra needs a quotient to define I")
    if algebra.M < 1:
        raise ModulusTooSmall(f"modulus exponent {algebra.M} must be positive")
    R, Rb = algebra, algebra.bar
    p, M = algebra.p, algebra.M
    th = Rb.project(theta_h)
    tl = R.project(theta_l)

    if Rb.rank and len(R.kernel_generators):
        t_raw = Rb.mul_matrix(Rb.project_raw(theta_h), reduce=False)
        factors = _invariant_factors(t_raw)
        if len(factors) == Rb.rank and all(factors):
            e = max(_p_part_exponent(f, p) for f in factors)
            need = e + _p_part_exponent(R.kernel_exponent, p)
            if M < need:
                raise ModulusTooSmall(f"Theta_H has Smith pivots of valuation {e}; modulus p^{M} needs M >= {need}")
        else:
            logger.debug("Theta_H is a zero divisor, kernel may exceed I^2 at this modulus")

    zero_r = np.zeros(R.rank, dtype=object)
    zero_b = np.zeros(Rb.rank, dtype=object)
    rows = []
    for j in range(R.rank):
        e_j = R.unit_vector(j)
        rows.append(np.concatenate([Rb.mul(R.to_bar(e_j), th), R.mul(e_j, -tl)]))
        rows.append(np.concatenate([R.to_bar(R.mul(e_j, tl)), zero_r]))
    for i2 in R.i_squared_generators():
        rows.append(np.concatenate([zero_b, i2]))
    modulus_rows = [np.concatenate([Rb.unit_vector(j) * R.modulus, zero_r]) for j in range(Rb.rank)]
    modulus_rows += [np.concatenate([zero_b, v]) for v in R.modulus_rows()]
    relations = hermite_normal_form(rows + modulus_rows, Rb.rank + R.rank)

    kernel_rows = [row[Rb.rank :] for row in relations if not any(row[: Rb.rank])]
    kernel = np.array(kernel_rows, dtype=object).reshape(len(kernel_rows), R.rank)
    i_squared = R.span(R.i_squared_generators())
    invariants = [f for f in _invariant_factors(relations) if f != 1]
    logger.debug(f"R_L over Z/{p}^{M}: rank {R.rank}+{Rb.rank}, invariants {invariants}")
    return RLPresentation(R, th, tl, relations, kernel, i_squared, invariants)


# Fitting ideals

# Largest presentation expanded by permutations.
MAX_PRESENTATION_SIZE = 6


def _determinant(matrix: Sequence[Sequence[GroupRingElt]]) -> GroupRingElt:
    n = len(matrix)
    first = matrix[0][0]
    total = GroupRingElt(first.group, None, first.modulus)
    for perm in itertools.permutations(range(n)):
        inversions = sum(1 for a in range(n) for b in range(a + 1, n) if perm[a] > perm[b])
        term = GroupRingElt.one(first.group, first.modulus)
        for i, j in enumerate(perm):
            term = term * matrix[i][j]
            if term.is_zero():
                break
        total = total - term if inversions % 2 else total + term
    return total


@dataclass
class FittingIdeal:
    """
    The principal ideal (det) of a square presentation, in the group ring,
    in a minus algebra R, or in R_L (entries then come from R).
    """

    generator: GroupRingElt
    algebra: Union[None, MinusAlgebra, RLPresentation] = None

    @property
    def vector(self) -> Vector:
        if self.algebra is not None:
            if isinstance(self.algebra, RLPresentation):
                return self.algebra.element(self.generator)
            return self.algebra.project(self.generator)
        return self.generator.coeffs

    def is_zero(self) -> bool:
        if isinstance(self.algebra, RLPresentation):
            return self.algebra.is_zero(self.vector)
        return not any(self.vector)

    def _matrix(self) -> np.ndarray:
        if self.algebra is not None:
            return self.algebra.mul_matrix(self.vector, reduce=False)
        g = self.generator
        rows = [(g * GroupRingElt.basis_element(g.group, h, g.modulus)).coeffs for h in range(g.group.order)]
        return np.array(rows, dtype=object).reshape(g.group.order, g.group.order)

    def is_unit(self) -> bool:
        if isinstance(self.algebra, RLPresentation):
            return self.contains(GroupRingElt.one(self.algebra.algebra.group))
        m = self._matrix()
        det = int(DomainMatrix([[ZZ(int(x)) for x in row] for row in m], m.shape, ZZ).det())
        if self.algebra is not None:
            return det % self.algebra.p != 0
        modulus = self.generator.modulus
        if modulus is not None:
            return all(det % q for q in factorint(modulus))
        return abs(det) == 1

    def contains(self, x: GroupRingElt) -> bool:
        if isinstance(self.algebra, RLPresentation):
            rl = self.algebra
            return lattice_contains(rl.principal_ideal(self.vector), rl.element(x))
        m = self._matrix()
        if self.algebra is not None:
            return self.algebra.contains(self.algebra.span(list(m)), self.algebra.project(x))
        modulus = self.generator.modulus
        extra = []
        if modulus is not None:
            extra = [np.eye(len(m), dtype=object)[j] * modulus for j in range(len(m))]
        hnf = hermite_normal_form(list(m) + extra, len(m))
        return lattice_contains(hnf, x.coeffs)


def fitting_ideal(
    matrix: Sequence[Sequence[GroupRingElt]],
    algebra: Union[None, MinusAlgebra, RLPresentation] = None,
) -> FittingIdeal:
    """
    Fitting ideal of the module presented by a square matrix of group ring
    elements, read in `algebra` (a minus algebra or an R_L presentation)
    when one is given.
    """
    n = len(matrix)
    if n == 0 or any(len(row) != n for row in matrix):
        raise NonSquare(f"presentation is {n} x {[len(row) for row in matrix]}, not square")
    if n > MAX_PRESENTATION_SIZE:
        raise ValueError(f"presentation of size {n} exceeds {MAX_PRESENTATION_SIZE}")
    return FittingIdeal(_determinant(matrix), algebra)


# Stickelberger elements of Q(sqrt(D))


def stickelberger(
    F: QuadField,
    p: int,
    ell: int,
    ell_branch: int = 0,
    orientation: str = "euler",
    subdivide: bool = False,
    cache: Optional[ZetaCache] = None,
) -> GroupRingElt:
    """Theta = sum over classes b of zeta(b, 0) [b]^-1, in Z[Cl+(F)]."""
    group, handles = class_handles(F, p, ell, ell_branch, orientation, subdivide, cache=cache)
    G = AbelianGroup.from_class_group(group)
    coeffs = [0] * group.order
    for i, h in enumerate(handles):
        coeffs[group.inverse(i)] = h.zeta0
    theta = GroupRingElt(G, coeffs)
    c = GroupRingElt.basis_element(G, group.conjugation)
    if c * theta != -theta:
        raise ArithmeticError("Stickelberger element is not odd under the conjugation class")
    get_logger().debug(f"Theta for D={F.D} p={p} ell={ell}: {theta}")
    return theta


def smoothing_factor(F: QuadField, ell: int, ell_branch: int = 0, orientation: str = "euler") -> GroupRingElt:
    """
    The factor relating smoothed and unsmoothed Stickelberger elements:
    1 - ell [q]^-1 ("euler") or [q]^-1 - ell ("divisor").
    """
    group = F.narrow_class_group()
    G = AbelianGroup.from_class_group(group)
    q_inv = group.inverse(group.class_of(smoothing_prime(F, ell, ell_branch)))
    q = GroupRingElt.basis_element(G, q_inv)
    if orientation == "euler":
        return 1 - ell * q
    return q - ell


def _principal_part(x: int, p: int, m: int) -> int:
    mod = p ** (m + 1)
    return x * pow(pow(x, p**m, mod), -1, mod) % mod


def _ray_values(handle: MeasureHandle, m: int) -> Dict[int, int]:
    """
    Smoothed zeta values of the ray classes above the class of `handle`,
    keyed by k with <N c> = (1 + p)^k modulo p^(m+1).
    """
    p = handle.p
    F = handle.field
    level = m + 1
    mod = p**level
    base = handle.weighted_lattices()[0][0].norm
    base_inv = pow(base, -1, mod)
    dlog = {}
    x = 1
    for k in range(p**m):
        dlog[x] = k
        x = x * (1 + p) % mod
    values: Dict[int, int] = {}
    for (r0, r1), nu in handle.level_table(level).items():
        if nu == 0 or (r0 % p == 0 and r1 % p == 0):
            continue
        nr = (r0 * r0 + F.t * r0 * r1 + F.n * r1 * r1) * base_inv % mod
        k = dlog[_principal_part(nr, p, m)]
        values[k] = values.get(k, 0) + nu
    return values


def _ray_tables(
    F: QuadField,
    p: int,
    ell: int,
    m: int,
    ell_branch: int = 0,
    orientation: str = "euler",
    subdivide: bool = False,
    cache: Optional[ZetaCache] = None,
) -> Tuple[NarrowClassGroup, List[Dict[int, int]]]:
    if m < 1 or m + 1 > MAX_LEVEL:
        raise ValueError(f"ray level m={m} outside 1..{MAX_LEVEL - 1}")
    group, handles = class_handles(F, p, ell, ell_branch, orientation, subdivide, cache=cache)
    return group, [_ray_values(h, m) for h in handles]


def ray_group(F: QuadField, p: int, m: int) -> Tuple[AbelianGroup, int, List[int]]:
    """
    The group Cl+(F) x Z/p^m of HF_m/F, the index of its conjugation
    element and the projection onto Cl+(F).
    """
    group = F.narrow_class_group()
    G = AbelianGroup.from_class_group(group)
    big = G.product(AbelianGroup.cyclic([p**m]))
    P = p**m
    quotient = [g // P for g in range(big.order)]
    return big, group.conjugation * P, quotient


def ray_stickelberger(
    F: QuadField,
    p: int,
    ell: int,
    m: int,
    ell_branch: int = 0,
    orientation: str = "euler",
    subdivide: bool = False,
    cache: Optional[ZetaCache] = None,
) -> GroupRingElt:
    """
    Theta for HF_m/F, depleted at p: the ray class (b, k) collects the unit
    residues whose norm, divided by the norm of the summed lattice, has
    principal part (1 + p)^k modulo p^(m+1).
    """
    group, tables = _ray_tables(F, p, ell, m, ell_branch, orientation, subdivide, cache)
    big, _, _ = ray_group(F, p, m)
    P = p**m
    coeffs: Dict[int, int] = {}
    for b, values in enumerate(tables):
        for k, z in values.items():
            g = group.inverse(b) * P + (-k) % P
            coeffs[g] = coeffs.get(g, 0) + z
    return GroupRingElt(big, coeffs)


def _log_one_plus_p(p: int, m: int, D: int) -> int:
    ctx = hensel_sqrt(p, m + 1, D)
    x = log_p(ctx, ctx.elt(1 + p))
    return _rational_integer(x, m)


def _rational_integer(x: PadicElt, m: int) -> int:
    """x in Z_p as an integer modulo p^m."""
    if x.c1 % x.ctx.p ** max(x.prec, 0):
        raise ValueError("element is not rational")
    if x.is_zero() or x.val >= m:
        return 0
    if x.absprec < m:
        raise InsufficientPrecision(f"need {m} digits, have {x.absprec}")
    mod = x.ctx.p**m
    return x.c0 * x.ctx.p**x.val % mod


def theta_derivative(
    F: QuadField,
    p: int,
    ell: int,
    m: int,
    ell_branch: int = 0,
    orientation: str = "euler",
    subdivide: bool = False,
    cache: Optional[ZetaCache] = None,
) -> GroupRingElt:
    """
    Theta'_H modulo p^m: minus the sum over ray classes sigma of
    zeta(sigma) log_p eps_cyc(sigma) [sigma]^-1 pushed to Cl+(F).
    """
    group, tables = _ray_tables(F, p, ell, m, ell_branch, orientation, subdivide, cache)
    G = AbelianGroup.from_class_group(group)
    L = _log_one_plus_p(p, m, F.D)
    mod = p**m
    coeffs = [0] * group.order
    for b, values in enumerate(tables):
        coeffs[group.inverse(b)] = -L * sum(k * z for k, z in values.items()) % mod
    return GroupRingElt(G, coeffs, mod)


def unit_log_element(group: NarrowClassGroup, records: Sequence[ConjugateRecord], m: int) -> GroupRingElt:
    """sum over classes b of log_p N(sigma_b u) [b]^-1, modulo p^m."""
    G = AbelianGroup.from_class_group(group)
    coeffs = [0] * group.order
    for rec in records:
        ctx = rec.value.ctx
        coeffs[group.inverse(rec.class_index)] = _rational_integer(log_p(ctx, rec.value.norm()), m)
    return GroupRingElt(G, coeffs, records[0].value.ctx.p ** m)


# Characters


def _root_of_unity(ctx: PadicCtx, d: int) -> PadicElt:
    p, D = ctx.p, ctx.D
    q = p * p - 1
    if q % d:
        raise DomainError(f"F_p has no root of unity of order {d}")
    primes = list(factorint(q))
    for c0 in range(p):
        for c1 in range(1, p):
            if all(_pow_pair(c0, c1, q // r, D, p) != (1, 0) for r in primes):
                t = teichmuller_pair(c0, c1, p, ctx.M, D)
                z = _pow_pair(*t, q // d, D, p**ctx.M)
                return ctx.elt(z[0], z[1])
    raise ArithmeticError(f"no generator of the residue field of F_{p}")


@dataclass
class Character:
    """A character of a finite abelian group with values in the Teichmuller roots of unity."""

    exponents: Tuple[int, ...]
    values: List[PadicElt]
    odd: Optional[bool] = None

    def __call__(self, x: GroupRingElt) -> PadicElt:
        ctx = self.values[0].ctx
        total = ctx.zero
        for g, c in enumerate(x.coeffs):
            if c:
                total = total + self.values[g] * int(c)
        return total


def characters(group: AbelianGroup, ctx: PadicCtx, conjugation: Optional[int] = None) -> List[Character]:
    """
    All characters of `group`, parametrised by exponent vectors on its basis.
    Raises `DomainError` when the exponent of the group does not divide p^2 - 1.
    """
    basis = group.basis
    roots = [_root_of_unity(ctx, d) for _, d in basis]
    coords = group.coordinates
    out = []
    for exps in itertools.product(*[range(d) for _, d in basis]):
        values = []
        for g in range(group.order):
            v = ctx.one
            for z, e, x in zip(roots, exps, coords[g]):
                if e * x:
                    v = v * z ** (e * x)
            values.append(v)
        odd = None
        if conjugation is not None:
            odd = not values[conjugation].equals(1)
        out.append(Character(tuple(exps), values, odd))
    return out


def _capped_valuation(x: PadicElt, m: int) -> int:
    if x.is_zero() or x.val >= m:
        return m
    return x.val


@dataclass
class GrossStarkReport:
    m: int
    rows: List[dict]

    @property
    def min_valuation(self) -> int:
        return min((r["residual_valuation"] for r in self.rows), default=self.m)

    @property
    def derivative_nonvanishing(self) -> bool:
        """chi(Theta'_H) is nonzero modulo p^m for every odd chi."""
        return all(r["analytic_valuation"] < self.m for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "characters": self.rows,
            "min_valuation": self.min_valuation,
            "derivative_nonvanishing": self.derivative_nonvanishing,
        }


def gross_stark_residual(
    F: QuadField,
    p: int,
    ell: int,
    m: int,
    group: NarrowClassGroup,
    records: Sequence[ConjugateRecord],
    ell_branch: int = 0,
    orientation: str = "euler",
    subdivide: bool = False,
    cache: Optional[ZetaCache] = None,
    theta_prime: Optional[GroupRingElt] = None,
) -> GrossStarkReport:
    """
    For every odd character chi, the valuation of chi(Theta'_H + Lambda)
    with Lambda = sum log_p N(sigma_b u) [b]^-1; both terms are known modulo
    p^m, so a valuation of m means agreement to full precision.
    """
    if theta_prime is None:
        theta_prime = theta_derivative(F, p, ell, m, ell_branch, orientation, subdivide, cache)
    lam = unit_log_element(group, records, m)
    ctx = records[0].value.ctx.with_precision(m)
    G = theta_prime.group
    rows = []
    for chi in characters(G, ctx, group.conjugation):
        if not chi.odd:
            continue
        analytic = chi(theta_prime)
        algebraic = chi(lam)
        rows.append(
            {
                "character": list(chi.exponents),
                "analytic_valuation": _capped_valuation(analytic, m),
                "algebraic_valuation": _capped_valuation(algebraic, m),
                "residual_valuation": _capped_valuation(analytic + algebraic, m),
            }
        )
    return GrossStarkReport(m, rows)


def l_invariants(
    F: QuadField,
    p: int,
    ell: int,
    m: int,
    group: NarrowClassGroup,
    records: Sequence[ConjugateRecord],
    ell_branch: int = 0,
    orientation: str = "euler",
    subdivide: bool = False,
    cache: Optional[ZetaCache] = None,
) -> List[dict]:
    """
    Per odd character, the analytic ratio -chi(Theta'_H)/chi(Theta_H) next to
    the algebraic ratio chi(Lambda)/chi(ord), ord = Theta_H. Characters at
    which chi(Theta_H) vanishes modulo p^m are reported without ratios.
    """
    theta = stickelberger(F, p, ell, ell_branch, orientation, subdivide, cache)
    theta_prime = theta_derivative(F, p, ell, m, ell_branch, orientation, subdivide, cache)
    lam = unit_log_element(group, records, m)
    ctx = records[0].value.ctx.with_precision(m)
    out = []
    for chi in characters(theta.group, ctx, group.conjugation):
        if not chi.odd:
            continue
        denom = chi(theta)
        row = {"character": list(chi.exponents), "analytic": None, "algebraic": None, "agreement": None}
        if not denom.is_zero() and denom.val < m:
            analytic = -chi(theta_prime) / denom
            algebraic = chi(lam) / denom
            diff = analytic - algebraic
            row["analytic"] = list(analytic.to_record())
            row["algebraic"] = list(algebraic.to_record())
            row["agreement"] = min(analytic.absprec, algebraic.absprec) if diff.is_zero() else diff.val
        out.append(row)
    return out
