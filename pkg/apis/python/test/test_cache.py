import threading

import pytest
from common import *

from brumer_stark.cache import CACHE_ENV_VAR
from brumer_stark.cache import ZetaCache
from brumer_stark.cache import default_cache_path
from brumer_stark.cache_formats import CACHE_VERSION
from brumer_stark.cache_formats import cache_formats
from brumer_stark.cache_formats import validate_cache_version
from brumer_stark.errors import CacheError
from brumer_stark.shintani import cone_evaluations
from brumer_stark.shintani import reset_cone_evaluations


def test_new_cache_has_header(tmp_path):
    path = tmp_path / "nested" / "zeta.ndjson"
    cache = ZetaCache(path)
    assert len(cache) == 0
    header = json.loads(path.read_text().splitlines()[0])
    assert header["format"] == CACHE_VERSION
    assert header["normalization"] == cache_formats[CACHE_VERSION]["NORMALIZATION"]


def test_put_get_roundtrip(tmp_path):
    path = tmp_path / "zeta.ndjson"
    cache = ZetaCache(path)
    assert cache.get("a") is None
    cache.put("a", Fraction(-3, 7))
    cache.put("b", 15)
    # existing keys are not rewritten
    cache.put("b", 16)
    assert cache.get("a") == Fraction(-3, 7)
    assert cache.get("b") == 15
    assert "a" in cache
    assert "c" not in cache
    assert cache.hits == 2
    assert cache.misses == 1
    assert len(path.read_text().splitlines()) == 3

    reopened = ZetaCache(path)
    assert len(reopened) == 2
    assert reopened.get("a") == Fraction(-3, 7)
    assert reopened.get("b") == 15


def test_corrupt_trailing_record_is_dropped(tmp_path, caplog):
    path = tmp_path / "zeta.ndjson"
    cache = ZetaCache(path)
    cache.put("a", 1)
    cache.put("b", 2)
    with open(path, "a") as f:
        f.write('{"key": "c", "num": "3"')

    reopened = ZetaCache(path)
    assert len(reopened) == 2
    assert "c" not in reopened
    assert "Dropping corrupt trailing record" in caplog.text
    assert path.read_text().endswith("\n")

    # appending after the repair gives a readable file
    reopened.put("c", 3)
    assert ZetaCache(path).get("c") == 3


def test_missing_trailing_newline_is_repaired(tmp_path):
    path = tmp_path / "zeta.ndjson"
    cache = ZetaCache(path)
    cache.put("a", 1)
    path.write_text(path.read_text().rstrip("\n"))
    reopened = ZetaCache(path)
    reopened.put("b", 2)
    assert len(ZetaCache(path)) == 2


def test_corrupt_middle_record_raises(tmp_path):
    path = tmp_path / "zeta.ndjson"
    cache = ZetaCache(path)
    cache.put("a", 1)
    lines = path.read_text().splitlines()
    lines.insert(1, "not json")
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(CacheError):
        ZetaCache(path)


def test_foreign_normalization_raises(tmp_path):
    path = tmp_path / "zeta.ndjson"
    header = {"format": CACHE_VERSION, "normalization": "something-else"}
    path.write_text(json.dumps(header) + "\n")
    with pytest.raises(CacheError):
        ZetaCache(path)

    path.write_text(json.dumps({"format": "99", "normalization": "x"}) + "\n" + '{"key": "a", "num": "1", "den": "1"}\n')
    with pytest.raises(CacheError):
        ZetaCache(path)

    path.write_text('{"key": "a", "num": "1", "den": "1"}\n{"key": "b", "num": "1", "den": "1"}\n')
    with pytest.raises(CacheError):
        ZetaCache(path)


def test_cache_version(tmp_path):
    validate_cache_version(CACHE_VERSION)
    with pytest.raises(ValueError):
        validate_cache_version("0")
    with pytest.raises(ValueError):
        ZetaCache(tmp_path / "zeta.ndjson", cache_version="0")


def test_default_cache_path(tmp_path, monkeypatch):
    monkeypatch.setenv(CACHE_ENV_VAR, str(tmp_path / "env.ndjson"))
    assert default_cache_path() == tmp_path / "env.ndjson"
    monkeypatch.delenv(CACHE_ENV_VAR)
    assert default_cache_path().name == "zeta.ndjson"
    assert "~" not in str(default_cache_path())


def test_concurrent_puts(tmp_path):
    path = tmp_path / "zeta.ndjson"
    cache = ZetaCache(path)

    def work(start):
        for i in range(start, start + 25):
            cache.put(f"k{i}", Fraction(i, 3))

    threads = [threading.Thread(target=work, args=(25 * t,)) for t in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()

    reopened = ZetaCache(path)
    assert len(reopened) == 100
    assert all(reopened.get(f"k{i}") == Fraction(i, 3) for i in range(100))


def test_handles_read_through_the_cache(tmp_path):
    path = tmp_path / "zeta.ndjson"
    F, group, handles = example_handles(221, cache=ZetaCache(path))
    cold = [h.zeta0 for h in handles]

    F, group, handles = example_handles(221, cache=ZetaCache(path))
    reset_cone_evaluations()
    warm = [h.zeta0 for h in handles]
    assert warm == cold
    assert cone_evaluations() == 0
    assert handles[0].cache.hits == 4
