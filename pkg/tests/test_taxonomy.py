from __future__ import annotations

import pytest

from roadsense.errors import UnknownLabel
from roadsense.rng import Xorshift64Star
from roadsense.taxonomy import SUPERCLASSES, load_taxonomy, parse_superclass


def test_registry_size_and_light_count(taxonomy):
    assert len(taxonomy) == 75
    assert sum(1 for c in taxonomy if c.kind == "light") == 5
    assert sum(1 for c in taxonomy if c.kind == "sign") == 70


def test_known_codes(taxonomy):
    assert taxonomy.lookup("DWS-01").superclass == "DWS"
    tls_r = taxonomy.lookup("TLS-R")
    assert tls_r.superclass == "TLS" and tls_r.kind == "light"


@pytest.mark.parametrize("code,expected", [
    ("SLS-50", "SLS"),
    ("TLS-G", "TLS"),
    ("DWS-01", "DWS"),
    ("RSS-02", "PRS"),
])
def test_superclass_of(taxonomy, code, expected):
    assert taxonomy.superclass_of(code) == expected


def test_unknown_code_raises(taxonomy):
    with pytest.raises(UnknownLabel) as exc:
        taxonomy.superclass_of("XYZ-99")
    assert "XYZ-99" in str(exc.value)


def test_classes_in_partition(taxonomy):
    seen = []
    for sc in SUPERCLASSES:
        members = taxonomy.classes_in(sc)
        assert all(c.superclass == sc for c in members)
        seen.extend(c.code for c in members)
    assert sorted(seen) == sorted(taxonomy.codes())
    assert len(seen) == 75


def test_classes_in_tls_and_sls(taxonomy):
    assert len(taxonomy.classes_in("TLS")) == 5
    sls = {c.code for c in taxonomy.classes_in("SLS")}
    assert {"SLS-100", "SLS-15", "SLS-40", "SLS-50",
            "SLS-60", "SLS-70", "SLS-80"} <= sls


def test_parse_superclass_closed():
    assert parse_superclass("DWS") == "DWS"
    with pytest.raises(UnknownLabel):
        parse_superclass("ZZZ")


def test_load_idempotent(taxonomy):
    assert load_taxonomy() == taxonomy


def test_random_strings_rejected(taxonomy):
    rng = Xorshift64Star(13)
    alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ-0123456789"
    for _ in range(200):
        code = "".join(alphabet[rng.randint(0, len(alphabet) - 1)]
                       for _ in range(8))
        if code in taxonomy:
            continue
        with pytest.raises(UnknownLabel):
            taxonomy.lookup(code)


def test_tsv_round_trip(taxonomy):
    from roadsense.taxonomy import _parse_registry
    assert _parse_registry(taxonomy.to_tsv()) == taxonomy
