cache_formats = {
    "1": {
        "HEADER_FORMAT_KEY": "format",
        "HEADER_NORMALIZATION_KEY": "normalization",
        "RECORD_KEY": "key",
        "RECORD_NUMERATOR": "num",
        "RECORD_DENOMINATOR": "den",
        "NORMALIZATION": "shintani-C(1,eps)-half-open;lattice=conj(b);smoothing=ell-prime",
    },
}

CACHE_VERSION = "1"


def validate_cache_version(cache_version):
    if cache_version not in cache_formats:
        valid_versions = ", ".join(cache_formats.keys())
        raise ValueError(
            f"Invalid cache version: {cache_version} - valid versions are [{valid_versions}]"
        )
