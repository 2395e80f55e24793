import json
import math
import random
from fractions import Fraction

from brumer_stark.measure import brumer_stark_conjugates
from brumer_stark.measure import class_handles
from brumer_stark.quadfield import make_field
from brumer_stark.recognize import minimal_polynomial

# Published minimal polynomials, keyed by the power of X; each coefficient is
# (u, v) with value u + v*sqrt(D). Coefficients not listed follow by palindromy.
EXAMPLES = {
    221: {
        "p": 3,
        "ell": 5,
        "structure": [4],
        "ord": [3, -3, 15, -15],
        "coeffs": {
            3: (Fraction(-423812, 3**13), Fraction(71680, 3**15)),
            2: (Fraction(76348630, 3**18), Fraction(-5218304, 3**16)),
            1: (Fraction(-423812, 3**13), Fraction(71680, 3**15)),
        },
    },
    321: {
        "p": 7,
        "ell": 5,
        "structure": [6],
        "ord": [1, -1, 3, -3, 7, -7],
        "coeffs": {
            5: (Fraction(55935, 2 * 7**7), Fraction(-63891, 2 * 7**7)),
            4: (Fraction(1062148509, 2 * 7**10), Fraction(2960001, 2 * 7**10)),
            3: (Fraction(-49244921, 2 * 7**10), Fraction(-279429993, 2 * 7**11)),
        },
    },
    897: {
        "p": 5,
        "ell": 7,
        "structure": [4, 2],
        "ord": [7, -7, 9, -9, 11, -11, 21, -21],
        "coeffs": {
            7: (Fraction(2549757626558363, 2 * 5**21), Fraction(1416002374557, 2 * 5**21)),
            6: (Fraction(51143699935554731498041, 5**32), Fraction(56709030111424864533, 5**31)),
            5: (
                Fraction(-11738117897361345671334368371, 2 * 5**41),
                Fraction(4935116278645813872967514931, 2 * 5**41),
            ),
            4: (
                Fraction(-4489586764048071498962140328642159, 5**48),
                Fraction(49988908282076855221482, 5**34),
            ),
        },
    },
}


def sqrt_d_element(F, u, v):
    """The field element u + v*sqrt(D)."""
    u, v = Fraction(u), Fraction(v)
    return F.element(u - F.t * v, 2 * v)


def field_coeff(z, p):
    """(a, b, k) with z = (a + b*omega) / p^k and k minimal."""
    k = 0
    while True:
        a, b = z.x * p**k, z.y * p**k
        if a.denominator == 1 and b.denominator == 1:
            return int(a), int(b), k
        k += 1


def totally_positive_samples(F, n, seed=0, bound=30):
    rng = random.Random(seed)
    out = []
    while len(out) < n:
        x = F.element(rng.randint(-bound, bound), rng.randint(-bound, bound))
        if x.is_totally_positive():
            out.append(x)
    return out


def by_power(poly):
    """{power of X: (u, v)} for a MinPolyResult."""
    return {poly.degree - i: uv for i, uv in enumerate(poly.sqrt_d_coeffs())}


def matches_published(poly, published):
    """
    True when every published coefficient is reproduced, either as printed or
    with sqrt(D) negated throughout (the two smoothing primes above ell).
    """
    ours = by_power(poly)
    as_printed = all(ours[e] == uv for e, uv in published.items())
    conjugated = all(ours[e] == (u, -v) for e, (u, v) in published.items())
    return as_printed or conjugated


def compute_example(D, M=100, **kwargs):
    example = EXAMPLES[D]
    F = make_field(D)
    group, records, ctx = brumer_stark_conjugates(F, example["p"], example["ell"], M, **kwargs)
    poly = minimal_polynomial([r.value for r in records], ctx)
    return group, records, poly


def example_handles(D=221, **kwargs):
    example = EXAMPLES[D]
    F = make_field(D)
    group, handles = class_handles(F, example["p"], example["ell"], **kwargs)
    return F, group, handles


def read_json(text):
    return json.loads(text)
