import pytest
from common import *

from brumer_stark.errors import LevelTooDeep
from brumer_stark.errors import NotInert
from brumer_stark.errors import PrecisionExhausted
from brumer_stark.measure import CENTERED_CHECK_ORDER
from brumer_stark.measure import CENTERED_MOMENT_DEFICIT
from brumer_stark.measure import MAX_ORACLE_LEVEL
from brumer_stark.measure import brumer_stark_conjugate
from brumer_stark.measure import centered_from_raw
from brumer_stark.measure import class_handles
from brumer_stark.measure import measure_of
from brumer_stark.measure import moment
from brumer_stark.measure import moment_table
from brumer_stark.measure import mult_integral
from brumer_stark.measure import riemann_oracle
from brumer_stark.measure import root_of_unity_check
from brumer_stark.padic import hensel_sqrt


def test_measure_is_integral_and_additive():
    F, group, handles = example_handles(221)
    for h in handles:
        coarse = h.level_table(1)
        assert len(coarse) == 9
        assert all(isinstance(v, int) for v in coarse.values())
        assert sum(coarse.values()) == h.zeta0
        for (r0, r1), v in coarse.items():
            assert measure_of(h, (r0, r1), 1) == v

    h = handles[3]
    coarse = h.level_table(1)
    fine = h.level_table(2)
    for (r0, r1), v in coarse.items():
        assert sum(fine[(r0 + 3 * a, r1 + 3 * b)] for a in range(3) for b in range(3)) == v


def test_measure_additive_level_three():
    F, group, handles = example_handles(221)
    h = handles[1]
    middle = h.level_table(2)
    for r0, r1 in [(1, 0), (2, 5), (4, 4)]:
        children = [measure_of(h, (r0 + 9 * a, r1 + 9 * b), 3) for a in range(3) for b in range(3)]
        assert sum(children) == middle[(r0, r1)]


def test_measure_of_units_vanishes():
    # pO_p carries the same mass as O_p, so the units carry none.
    F, group, handles = example_handles(221)
    for h in handles:
        assert measure_of(h, (0, 0), 1) == h.zeta0


def test_measure_antisymmetry():
    F, group, handles = example_handles(221)
    c = group.conjugation
    zetas = [h.zeta0 for h in handles]
    assert sorted(zetas) == [-15, -3, 3, 15]
    for i, z in enumerate(zetas):
        assert zetas[group.mul(c, i)] == -z


def test_moments():
    F, group, handles = example_handles(221)
    h = handles[1]
    for r in [(1, 0), (2, 1)]:
        assert moment(h, r, 1, 0) == measure_of(h, r, 1)
        raw = [moment(h, r, 1, j) for j in range(3)]
        centered = [moment(h, r, 1, j, centered=True) for j in range(3)]
        rhat = F.element(*r)
        assert raw[2] == sum((math.comb(2, j) * rhat ** (2 - j) * centered[j] for j in range(3)), F.element(0))
        assert centered_from_raw(raw, rhat) == centered
    with pytest.raises(ValueError):
        moment(h, (1, 0), 1, -1)
    with pytest.raises(LevelTooDeep):
        moment(h, (1, 0), 7, 1)


def test_moment_table_matches_exact_moments():
    F, group, handles = example_handles(221)
    h = handles[2]
    ctx = hensel_sqrt(3, 20, 221)
    table = moment_table(h, ctx, 3)
    assert set(table) == {(a, b) for a in range(3) for b in range(3)} - {(0, 0)}
    for r in [(1, 0), (0, 2), (2, 2)]:
        for j in range(4):
            exact = ctx.embed(moment(h, r, 1, j))
            assert table[r][j].equals(exact, 10)


def test_mult_integral_is_a_unit():
    F, group, handles = example_handles(221)
    ctx = hensel_sqrt(3, 12, 221)
    for h in handles:
        value = mult_integral(h, ctx)
        assert value.val == 0
        assert value.absprec >= 12


def test_mult_integral_subdivision_invariance():
    F = make_field(221)
    ctx = hensel_sqrt(3, 12, 221)
    _, plain = class_handles(F, 3, 5)
    _, split = class_handles(F, 3, 5, subdivide=True)
    assert mult_integral(plain[1], ctx) == mult_integral(split[1], ctx)


def test_mult_integral_precision_exhausted():
    F, group, handles = example_handles(221)
    ctx = hensel_sqrt(3, 40, 221)
    with pytest.raises(PrecisionExhausted):
        mult_integral(handles[1], ctx, max_moment=5)


def test_riemann_oracle_low_level():
    F, group, handles = example_handles(221)
    ctx = hensel_sqrt(3, 10, 221)
    h = handles[1]
    exact = mult_integral(h, ctx)
    assert exact.equals(riemann_oracle(h, ctx, 2), 1)
    with pytest.raises(LevelTooDeep):
        riemann_oracle(h, ctx, MAX_ORACLE_LEVEL + 1)
    with pytest.raises(LevelTooDeep):
        riemann_oracle(h, ctx, 0)


@pytest.mark.slow
@pytest.mark.parametrize("D, level", [(221, 4), (321, 3)])
def test_riemann_oracle_agrees(D, level):
    F, group, handles = example_handles(D)
    ctx = hensel_sqrt(EXAMPLES[D]["p"], 10, D)
    for h in handles:
        assert mult_integral(h, ctx).equals(riemann_oracle(h, ctx, level), level - 1)


def test_centered_moment_deficit():
    assert CENTERED_MOMENT_DEFICIT == 0
    assert CENTERED_CHECK_ORDER >= 6


@pytest.mark.slow
@pytest.mark.parametrize("D", [221, 321])
def test_centered_moment_valuations(D):
    F, group, handles = example_handles(D)
    p = EXAMPLES[D]["p"]
    ctx = hensel_sqrt(p, 20, D)
    for h in handles:
        for r0 in range(p):
            for r1 in range(p):
                if (r0, r1) == (0, 0):
                    continue
                raw = [moment(h, (r0, r1), 1, j) for j in range(CENTERED_CHECK_ORDER + 1)]
                centered = centered_from_raw(raw, F.element(r0, r1))
                for k in range(1, CENTERED_CHECK_ORDER + 1):
                    value = ctx.embed(centered[k])
                    assert value.is_zero() or value.val >= k - CENTERED_MOMENT_DEFICIT


def test_conjugates_pair_up():
    F = make_field(221)
    group, records, ctx = brumer_stark_conjugates(F, 3, 5, M=20)
    assert len(records) == 4
    assert [r.class_index for r in records] == [0, 1, 2, 3]
    for r in records:
        assert r.value.val == r.zeta0
        assert r.precision >= 20
    assert root_of_unity_check(group, records, 20) == "exact"

    product = records[0].value
    for r in records[1:]:
        product = product * r.value
    assert product.equals(1, 20)

    record = records[1].to_dict()
    assert record["class_index"] == 1
    assert record["zeta0"] == records[1].zeta0
    assert set(record["value"]) == {"val", "c0", "c1"}


def test_conjugates_with_threads():
    F = make_field(221)
    _, serial, _ = brumer_stark_conjugates(F, 3, 5, M=15)
    _, threaded, _ = brumer_stark_conjugates(F, 3, 5, M=15, workers=4)
    for a, b in zip(serial, threaded):
        assert a.value == b.value
        assert a.value.to_record() == b.value.to_record()


def test_brumer_stark_conjugate_valuation():
    F, group, handles = example_handles(221)
    ctx = hensel_sqrt(3, 40, 221)
    for h in handles:
        assert brumer_stark_conjugate(h, ctx, 12).val == h.zeta0


def test_class_handles_errors():
    F = make_field(221)
    with pytest.raises(NotInert):
        class_handles(F, 7, 5)
    with pytest.raises(ValueError):
        class_handles(F, 3, 3)
