import logging

import numpy as np
from common import *

from brumer_stark.utils import balanced_lift
from brumer_stark.utils import get_logger
from brumer_stark.utils import hermite_normal_form
from brumer_stark.utils import lattice_contains
from brumer_stark.utils import valuation


def test_valuation():
    assert valuation(0, 3) is None
    assert valuation(1, 3) == 0
    assert valuation(-162, 3) == 4
    assert valuation(7**5 * 2, 7) == 5


def test_balanced_lift():
    assert balanced_lift(3, 9) == 3
    assert balanced_lift(5, 9) == -4
    assert balanced_lift(-1, 9) == -1
    assert balanced_lift(13, 9) == 4
    assert balanced_lift(4, 8) == 4


def test_hermite_normal_form():
    hnf = hermite_normal_form([[2, 4, 6], [3, 6, 9], [0, 1, 5]])
    assert hnf.dtype == object
    assert hnf.tolist() == [[1, 0, -7], [0, 1, 5]]

    # pivots positive, entries above pivots reduced
    hnf = hermite_normal_form([[4, 7], [0, -3], [8, 0]])
    for i, row in enumerate(hnf):
        col = next(j for j, x in enumerate(row) if x)
        assert row[col] > 0
        for above in hnf[:i]:
            assert 0 <= above[col] < row[col]

    assert hermite_normal_form([], 3).shape == (0, 3)
    assert hermite_normal_form([[0, 0]]).shape == (0, 2)

    # same lattice, same form
    a = hermite_normal_form([[1, 2], [3, 4]])
    b = hermite_normal_form([[3, 4], [1, 2], [4, 6]])
    assert np.all(a == b)


def test_lattice_contains():
    hnf = hermite_normal_form([[3, 1, 0], [0, 9, 0], [0, 0, 9]])
    assert lattice_contains(hnf, [3, 1, 0])
    assert lattice_contains(hnf, [6, 11, 18])
    assert lattice_contains(hnf, [0, 0, 0])
    assert not lattice_contains(hnf, [1, 0, 0])
    assert not lattice_contains(hnf, [3, 2, 0])

    big = 3**40
    hnf = hermite_normal_form([[big, 0], [0, big], [1, big - 1]])
    assert lattice_contains(hnf, [2, -2])
    assert not lattice_contains(hnf, [1, 0])


def test_get_logger():
    logger = get_logger()
    assert logger.name == "brumer_stark"
    assert any(isinstance(h, logging.NullHandler) for h in logger.handlers)
    assert get_logger(name="brumer_stark.shintani").parent is logger
