"""
Persistent cache of exact zeta values.

The file is newline-delimited JSON: a header line carrying the format version
and the normalization tag, then one record per query. Appends are flushed
record by record, so a crash can only leave a partial last line, which is
dropped the next time the cache is opened.
"""
import json
import os
import threading
from contextlib import contextmanager
from fractions import Fraction
from pathlib import Path
from typing import Dict, Optional, Union

from brumer_stark.cache_formats import CACHE_VERSION
from brumer_stark.cache_formats import cache_formats
from brumer_stark.cache_formats import validate_cache_version
from brumer_stark.errors import CacheError
from brumer_stark.utils import get_logger

try:
    import fcntl
except ImportError:  # pragma: no cover
    fcntl = None

CACHE_ENV_VAR = "BRUMER_STARK_CACHE"
DEFAULT_CACHE_PATH = Path("~/.cache/brumer_stark/zeta.ndjson")


def default_cache_path() -> Path:
    return Path(os.environ.get(CACHE_ENV_VAR, str(DEFAULT_CACHE_PATH))).expanduser()


@contextmanager
def _locked(f):
    if fcntl is not None:
        fcntl.flock(f.fileno(), fcntl.LOCK_EX)
    try:
        yield f
    finally:
        if fcntl is not None:
            fcntl.flock(f.fileno(), fcntl.LOCK_UN)


class ZetaCache:
    """
    Exact rational values keyed by canonical query strings.

    Parameters
    ----------
    path: str or Path
        Location of the NDJSON file; created with its header if missing.
    cache_version: str
        Format version, see `cache_formats`.
    """

    def __init__(self, path: Union[str, Path], cache_version: str = CACHE_VERSION):
        validate_cache_version(cache_version)
        self.path = Path(path).expanduser()
        self.cache_version = cache_version
        self.format = cache_formats[cache_version]
        self._lock = threading.Lock()
        self._values: Dict[str, Fraction] = {}
        self.hits = 0
        self.misses = 0
        self._load()

    def _header(self) -> str:
        fmt = self.format
        return json.dumps(
            {
                fmt["HEADER_FORMAT_KEY"]: self.cache_version,
                fmt["HEADER_NORMALIZATION_KEY"]: fmt["NORMALIZATION"],
            },
            sort_keys=True,
        )

    def _load(self):
        logger = get_logger()
        fmt = self.format
        if not self.path.exists() or self.path.stat().st_size == 0:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "w") as f, _locked(f):
                f.write(self._header() + "\n")
            return

        with open(self.path, "rb") as f:
            raw = f.read()
        lines = raw.split(b"\n")
        offset = 0
        for i, line in enumerate(lines):
            end = offset + len(line) + 1
            if not line.strip():
                offset = end
                continue
            is_last = all(not rest.strip() for rest in lines[i + 1 :])
            try:
                record = json.loads(line)
                if i == 0:
                    self._check_header(record)
                else:
                    key = record[fmt["RECORD_KEY"]]
                    value = Fraction(int(record[fmt["RECORD_NUMERATOR"]]), int(record[fmt["RECORD_DENOMINATOR"]]))
                    self._values[key] = value
            except CacheError:
                raise
            except (ValueError, KeyError, TypeError, ZeroDivisionError) as err:
                if not is_last:
                    raise CacheError(f"corrupt record on line {i + 1} of {self.path}: {err}")
                logger.warning(f"Dropping corrupt trailing record on line {i + 1} of {self.path}")
                with open(self.path, "r+b") as f, _locked(f):
                    f.truncate(offset)
                    if i == 0:
                        f.write((self._header() + "\n").encode())
                break
            offset = end
        else:
            if raw and not raw.endswith(b"\n"):
                with open(self.path, "ab") as f, _locked(f):
                    f.write(b"\n")
        logger.debug(f"Loaded {len(self._values)} cached zeta values from {self.path}")

    def _check_header(self, header):
        fmt = self.format
        if not isinstance(header, dict) or fmt["HEADER_FORMAT_KEY"] not in header:
            raise CacheError(f"{self.path} has no cache header")
        version = header[fmt["HEADER_FORMAT_KEY"]]
        try:
            validate_cache_version(version)
        except ValueError as err:
            raise CacheError(str(err))
        if header.get(fmt["HEADER_NORMALIZATION_KEY"]) != cache_formats[version]["NORMALIZATION"]:
            raise CacheError(
                f"{self.path} was written under normalization "
                f"{header.get(fmt['HEADER_NORMALIZATION_KEY'])!r}, expected {fmt['NORMALIZATION']!r}"
            )

    def get(self, key: str) -> Optional[Fraction]:
        with self._lock:
            value = self._values.get(key)
            if value is None:
                self.misses += 1
            else:
                self.hits += 1
            return value

    def put(self, key: str, value: Fraction):
        value = Fraction(value)
        fmt = self.format
        line = json.dumps(
            {
                fmt["RECORD_KEY"]: key,
                fmt["RECORD_NUMERATOR"]: str(value.numerator),
                fmt["RECORD_DENOMINATOR"]: str(value.denominator),
            },
            sort_keys=True,
        )
        with self._lock:
            if key in self._values:
                return
            with open(self.path, "a") as f, _locked(f):
                f.write(line + "\n")
                f.flush()
            self._values[key] = value

    def __contains__(self, key: str) -> bool:
        with self._lock:
            return key in self._values

    def __len__(self) -> int:
        with self._lock:
            return len(self._values)
