import json
from fractions import Fraction

import pytest

from tablenli.config import ConfigError, config_from_mapping, load_config
from tablenli.numerals import HaloMode


def test_defaults():
    cfg = load_config(None)
    assert cfg.retries == 3 and cfg.backend.kind == "mock"


def test_toml(tmp_path):
    path = tmp_path / "engine.toml"
    path.write_text("""
retries = 1
parallel = 2

[halo]
mode = "empty"
modifier_width = 0.1

[triggers]
Totalling = "SUM"

[backend]
kind = "live"
url = "http://llm/v1/completions"
""")
    cfg = load_config(path)
    assert cfg.retries == 1 and cfg.parallel == 2
    assert cfg.halo.mode is HaloMode.EMPTY
    assert cfg.halo.default_modifier_width == Fraction(1, 10)
    assert cfg.backend.url.startswith("http")
    assert cfg.lexicon().match("Totalling 1 and 2")


def test_json(tmp_path):
    path = tmp_path / "engine.json"
    path.write_text(json.dumps({"halo": {"mode": "relative", "epsilon": "1/50"}}))
    assert load_config(path).halo.epsilon == Fraction(1, 50)


@pytest.mark.parametrize("raw", [
    {"colour": "blue"},
    {"halo": {"mode": "vague"}},
    {"retries": -1},
    {"backend": "mock"},
    {"backend": {"flavour": "x"}},
])
def test_rejects_bad_config(raw):
    with pytest.raises(ConfigError):
        config_from_mapping(raw)
