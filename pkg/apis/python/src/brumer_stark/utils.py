import logging
import sys
from typing import Iterable, Optional, Sequence

import numpy as np
try:
    from sympy.core.intfunc import igcdex
except ImportError:  # sympy < 1.13
    from sympy.core.numbers import igcdex
from sympy import multiplicity

DEFAULT_PRECISION = 100
MAX_LEVEL = 6
MAX_MOMENT_ORDER = 120
GUARD_DIGITS = 10

LOG_FORMAT = "[%(asctime)s] [%(module)s] [%(funcName)s] [%(levelname)s] %(message)s"

logging.getLogger("brumer_stark").addHandler(logging.NullHandler())


def get_logger(level: int = logging.NOTSET, name: str = "brumer_stark") -> logging.Logger:
    """
    Return the package logger, attaching a stderr handler the first time a
    concrete level is requested.
    """
    logger = logging.getLogger(name)
    if level != logging.NOTSET:
        logger.setLevel(level)
        if not any(getattr(h, "_brumer_stark", False) for h in logger.handlers):
            handler = logging.StreamHandler(sys.stderr)
            handler.setFormatter(logging.Formatter(LOG_FORMAT))
            handler._brumer_stark = True
            logger.addHandler(handler)
    return logger


def setup(verbose: bool = False) -> logging.Logger:
    level = logging.DEBUG if verbose else logging.NOTSET
    return get_logger(level)


def valuation(n: int, p: int) -> Optional[int]:
    """p-adic valuation of a nonzero integer; None for zero."""
    if n == 0:
        return None
    return int(multiplicity(p, abs(int(n))))


def balanced_lift(x: int, modulus: int) -> int:
    x %= modulus
    if 2 * x > modulus:
        x -= modulus
    return x


def hermite_normal_form(rows: Iterable[Sequence[int]], ncols: Optional[int] = None) -> np.ndarray:
    """
    Row-style Hermite normal form of the Z-span of `rows`.

    Pivots are positive, entries above a pivot are reduced into [0, pivot),
    and zero rows are dropped. Returns an object-dtype array so that entries
    stay arbitrary-precision integers.
    """
    rows = [list(map(int, r)) for r in rows]
    if ncols is None:
        ncols = len(rows[0]) if rows else 0
    if not rows:
        return np.zeros((0, ncols), dtype=object)
    m = np.array(rows, dtype=object).reshape(len(rows), ncols)

    pivots = []
    pr = 0
    for col in range(ncols):
        if pr >= m.shape[0]:
            break
        for i in range(pr + 1, m.shape[0]):
            b = m[i, col]
            if b == 0:
                continue
            a = m[pr, col]
            s, t, g = igcdex(a, b)
            top = s * m[pr] + t * m[i]
            m[i] = (a // g) * m[i] - (b // g) * m[pr]
            m[pr] = top
        if m[pr, col] == 0:
            continue
        if m[pr, col] < 0:
            m[pr] = -m[pr]
        pivots.append((pr, col))
        pr += 1

    for k, col in pivots:
        piv = m[k, col]
        for i in range(k):
            q = m[i, col] // piv
            if q:
                m[i] = m[i] - q * m[k]
    return m[:pr].copy()


def lattice_contains(hnf: np.ndarray, vector: Sequence[int]) -> bool:
    """Membership test against a Hermite normal form basis."""
    v = np.array([int(x) for x in vector], dtype=object)
    for row in hnf:
        nz = [j for j, x in enumerate(row) if x != 0]
        col = nz[0]
        q, r = divmod(v[col], row[col])
        if r:
            return False
        v = v - q * row
    return all(x == 0 for x in v)
