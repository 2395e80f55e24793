from dataclasses import asdict
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from sympy import isprime
from sympy import jacobi_symbol

from brumer_stark.cache import default_cache_path
from brumer_stark.errors import ConfigError
from brumer_stark.errors import NotInert
from brumer_stark.errors import Ramified
from brumer_stark.errors import UnsupportedSmoothing
from brumer_stark.quadfield import QuadField
from brumer_stark.quadfield import make_field
from brumer_stark.shintani import SMOOTHING_ORIENTATIONS
from brumer_stark.utils import DEFAULT_PRECISION
from brumer_stark.utils import GUARD_DIGITS
from brumer_stark.utils import MAX_LEVEL
from brumer_stark.utils import MAX_MOMENT_ORDER

OUTPUT_FORMATS = ("json", "table")


@dataclass(frozen=True)
class RunConfig:
    """
    Everything one command needs. `validate()` runs before any computation
    and before the cache is opened.

    Parameters
    ----------
    D: int
        Fundamental discriminant of the real quadratic field.
    p: int
        Odd prime, inert in F.
    ell: int
        Odd prime split in F, different from p; the smoothing prime lies above it.
    precision: int
        Target p-adic precision of the conjugates, in digits.
    cache_path: Optional[Path]
        Zeta cache file; None disables the cache.
    sqrt_branch: int
        +1 or -1, the square root of D chosen in F_p.
    ell_branch: int
        0 or 1, which prime above ell smooths.
    """

    D: int
    p: int
    ell: int = 5
    precision: int = DEFAULT_PRECISION
    max_level: int = MAX_LEVEL
    max_moment: int = MAX_MOMENT_ORDER
    guard_digits: int = GUARD_DIGITS
    cache_path: Optional[Path] = None
    output: str = "json"
    sqrt_branch: int = 1
    ell_branch: int = 0
    orientation: str = "euler"
    subdivide: bool = False
    workers: int = 1
    verbose: bool = False

    @classmethod
    def with_default_cache(cls, **kwargs) -> "RunConfig":
        return cls(cache_path=default_cache_path(), **kwargs)

    def validate(self) -> QuadField:
        """Check the configuration and return the field it describes."""
        if self.precision < 1:
            raise ConfigError(f"precision {self.precision} must be positive")
        if self.guard_digits < 0 or self.guard_digits >= self.precision:
            raise ConfigError(f"guard digits {self.guard_digits} must lie in [0, {self.precision})")
        if not 1 <= self.max_level <= MAX_LEVEL:
            raise ConfigError(f"max level {self.max_level} outside 1..{MAX_LEVEL}")
        if not 1 <= self.max_moment <= MAX_MOMENT_ORDER:
            raise ConfigError(f"max moment {self.max_moment} outside 1..{MAX_MOMENT_ORDER}")
        if self.output not in OUTPUT_FORMATS:
            raise ConfigError(f"unknown output format {self.output!r}")
        if self.sqrt_branch not in (1, -1):
            raise ConfigError("square root branch must be +1 or -1")
        if self.ell_branch not in (0, 1):
            raise ConfigError("smoothing branch must be 0 or 1")
        if self.orientation not in SMOOTHING_ORIENTATIONS:
            raise ConfigError(f"unknown smoothing orientation {self.orientation!r}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

        F = make_field(self.D)
        if self.p == 2 or not isprime(self.p):
            raise ConfigError(f"p={self.p} must be an odd prime")
        if self.D % self.p == 0:
            raise Ramified(f"p={self.p} ramifies in Q(sqrt({self.D}))")
        if jacobi_symbol(self.D % self.p, self.p) != -1:
            raise NotInert(f"p={self.p} is not inert in Q(sqrt({self.D}))")
        if self.ell == 2:
            raise UnsupportedSmoothing("ell=2 is not supported, even where 2 splits: the smoothing prime must be odd")
        if not isprime(self.ell):
            raise UnsupportedSmoothing(f"ell={self.ell} must be an odd prime")
        if self.ell == self.p:
            raise UnsupportedSmoothing("the smoothing prime must differ from p")
        if self.D % self.ell == 0 or jacobi_symbol(self.D % self.ell, self.ell) != 1:
            raise UnsupportedSmoothing(f"ell={self.ell} does not split in Q(sqrt({self.D}))")
        return F

    def to_dict(self) -> dict:
        d = asdict(self)
        d["cache_path"] = str(self.cache_path) if self.cache_path is not None else None
        return d
