import pytest
from common import *

from brumer_stark.errors import NotFundamental
from brumer_stark.errors import NotReal
from brumer_stark.errors import Ramified
from brumer_stark.quadfield import IdealRep
from brumer_stark.quadfield import QuadField
from brumer_stark.quadfield import is_inert
from brumer_stark.quadfield import make_field
from brumer_stark.quadfield import totally_positive_fundamental_unit


def test_make_field():
    F = make_field(221)
    assert F.t == 1
    assert F.n == -55
    # omega^2 = omega + 55
    assert F.omega * F.omega == F.omega + 55
    assert F.sqrt_d * F.sqrt_d == 221

    F = make_field(12)
    assert F.t == 0
    assert F.omega * F.omega == 3

    for D in (8, 13, 321, 897):
        assert make_field(D).D == D


@pytest.mark.parametrize("D", [9, 7, 20, 1, 4 * 9 * 5])
def test_make_field_not_fundamental(D):
    with pytest.raises(NotFundamental):
        make_field(D)


@pytest.mark.parametrize("D", [-7, 0])
def test_make_field_not_real(D):
    with pytest.raises(NotReal):
        make_field(D)


def test_field_arithmetic():
    F = make_field(221)
    x = F.element(3, 2)
    y = F.element(Fraction(1, 3), -5)
    assert x * y == y * x
    assert (x + y) * x == x * x + y * x
    assert x / x == 1
    assert (x * y).norm() == x.norm() * y.norm()
    assert (x * y).conjugate() == x.conjugate() * y.conjugate()
    assert x * x.conjugate() == x.norm()
    assert x**-2 * x**2 == 1
    assert x.trace() == x + x.conjugate()


def test_totally_positive_fundamental_unit():
    # (1 + sqrt(5))/2 has norm -1, so its square (3 + sqrt(5))/2 is returned
    F = make_field(5)
    assert totally_positive_fundamental_unit(F) == F.element(1, 1)
    assert F.eps_plus.sqrt_d_coordinates() == (Fraction(3, 2), Fraction(1, 2))

    F = make_field(12)
    assert totally_positive_fundamental_unit(F) == F.element(2, 1)

    for D in (221, 321, 897):
        F = make_field(D)
        eps = F.eps_plus
        assert eps.norm() == 1
        assert eps * eps.conjugate() == 1
        assert eps.is_totally_positive()
        assert float(eps) > 1
        assert eps.is_integral()


def test_ideals():
    F = make_field(221)
    assert F.prime_ideals_above(5) == [IdealRep(5, 0), IdealRep(5, 4)]
    assert F.prime_ideals_above(3) == []
    assert F.prime_ideals_above(13) == [IdealRep(13, 6)]

    primes = F.prime_ideals_above(5) + F.prime_ideals_above(7) + F.prime_ideals_above(11)
    for P in primes:
        assert F.is_valid_ideal(P)
        for Q in primes:
            PQ = F.ideal_mul(P, Q)
            assert PQ.norm == P.norm * Q.norm
            assert F.is_valid_ideal(PQ.primitive_part())

    # An ideal times its conjugate is generated by its norm.
    for P in primes:
        assert F.ideal_mul(P, F.conjugate_ideal(P)) == IdealRep(1, 0, P.norm)

    x = F.element(4, 7)
    ideal = F.principal_ideal(x)
    assert ideal.norm == abs(x.norm())
    assert F.contains(ideal, x)
    assert F.contains(ideal, x * F.omega)
    assert not F.contains(ideal, F.element(1))


def test_narrow_class_group_structure():
    for D, example in EXAMPLES.items():
        group = make_field(D).narrow_class_group()
        assert group.order == len(example["ord"])
        assert group.structure == example["structure"]

    assert make_field(5).narrow_class_group().order == 1
    assert make_field(12).narrow_class_group().order == 2


def test_narrow_class_group_law():
    F = make_field(321)
    group = F.narrow_class_group()
    h = group.order
    for i in range(h):
        assert group.mul(0, i) == i
        assert group.mul(i, group.inverse(i)) == 0
        for j in range(h):
            assert group.mul(i, j) == group.mul(j, i)
            for k in range(h):
                assert group.mul(group.mul(i, j), k) == group.mul(i, group.mul(j, k))

    # Representatives are pairwise inequivalent.
    assert sorted(group.class_of(r) for r in group.reps) == list(range(h))

    # Classes of products of random prime ideals follow the table.
    primes = []
    for q in (2, 5, 11, 17, 19, 23, 29, 31):
        primes += F.prime_ideals_above(q)
    for P in primes:
        for Q in primes:
            PQ = F.ideal_mul(P, Q)
            assert group.class_of(PQ) == group.mul(group.class_of(P), group.class_of(Q))


def test_narrow_class_group_avoid():
    F = make_field(221)
    plain = F.narrow_class_group()
    avoid = IdealRep(1, 0, 15)
    group = F.narrow_class_group(avoid)
    assert group.compose == plain.compose
    for i, rep in enumerate(group.reps):
        assert F.is_coprime(rep, avoid)
        assert group.class_of(rep) == i


def test_principal_classes():
    F = make_field(221)
    group = F.narrow_class_group()
    for x in totally_positive_samples(F, 10):
        assert group.class_of(F.principal_ideal(x)) == 0
    c = group.conjugation
    assert c != 0
    assert group.element_order(c) == 2

    # sqrt(3) has negative norm and 2 + sqrt(3) is totally positive, so (sqrt(3))
    # is principal but not narrowly principal.
    F = make_field(12)
    group = F.narrow_class_group()
    assert group.conjugation == 1
    assert group.class_of(F.principal_ideal(F.omega)) == 1
    assert group.class_of(F.principal_ideal(F.element(2, 1))) == 0


def test_basis_coordinates():
    group = make_field(897).narrow_class_group()
    coords = group.coordinates
    assert len(coords) == group.order
    assert len(set(coords.values())) == group.order
    assert [d for _, d in group.basis] == [4, 2]


def test_is_inert():
    F = make_field(221)
    assert is_inert(F, 3)
    assert not is_inert(F, 5)
    with pytest.raises(Ramified):
        is_inert(F, 13)
    with pytest.raises(ValueError):
        is_inert(F, 9)
    assert QuadField(221) == F
