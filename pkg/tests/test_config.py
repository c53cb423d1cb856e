import pytest

from biplate.config import (
    THREADS_ENV,
    RunConfig,
    load_config,
    parallel_map,
    parse_config,
    parse_mu_grid,
    parse_resolution,
    thread_count,
)
from biplate.discretize import Resolution
from biplate.errors import ConfigError
from biplate.geometry import DomainSpec


def test_parse_resolution():
    assert parse_resolution("128x64") == Resolution(128, 64)
    assert parse_resolution("2x", DomainSpec.disk()) == Resolution(256, 128)
    assert parse_resolution("1x", DomainSpec.rectangle(1, 1)) == Resolution(40, 40)
    for bad in ("3x", "12", "axb"):
        with pytest.raises(ValueError):
            parse_resolution(bad, DomainSpec.disk())
    with pytest.raises(ValueError):
        parse_resolution("2x")


def test_parse_mu_grid():
    grid = parse_mu_grid("0.05:0.95:19")
    assert len(grid) == 19 and grid[0] == 0.05 and grid[-1] == 0.95 and grid[5] == 0.3
    assert parse_mu_grid("0.2, 0.3") == (0.2, 0.3)
    with pytest.raises(ValueError):
        parse_mu_grid("0.1:0.2")
    with pytest.raises(ValueError):
        parse_mu_grid("0.1:0.2:1")


def test_defaults_validate():
    cfg = RunConfig().validate()
    assert cfg.domain_spec == DomainSpec.disk(1.0)
    assert cfg.resolution_spec == Resolution(128, 64)
    assert len(cfg.mu_values) == 19


def test_parse_config_full():
    text = """
    # clamped disk
    domain = disk:2
    bc = clamped
    modes = 4      # four pairs
    resolution = 64x32
    identities = green, rellich.dirichlet
    threads = 2
    """
    cfg = parse_config(text)
    assert cfg.domain == "disk:2" and cfg.bc_kind.kind == "dirichlet"
    assert cfg.modes == 4 and cfg.threads == 2
    assert cfg.identities == ("green", "rellich.dirichlet")


@pytest.mark.parametrize("text, line, key", [
    ("domain = disk:1\nfoo = 3\n", 2, "foo"),
    ("modes = 2\nmodes = 3\n", 2, "modes"),
    ("modes = many\n", 1, "modes"),
    ("domain = blob:1\n", 1, "domain"),
    ("\n\nmodes = 50\n", 3, "modes"),
    ("doublings = 1\n", 1, "doublings"),
])
def test_parse_config_errors_name_line_and_key(text, line, key):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line and info.value.key == key
    assert f"line {line}" in str(info.value)


def test_missing_equals():
    with pytest.raises(ConfigError) as info:
        parse_config("domain disk:1")
    assert info.value.line == 1


def test_merged_overrides():
    cfg = RunConfig().merged(domain="ellipse:2,1", mu=None, identities=())
    assert cfg.domain == "ellipse:2,1" and cfg.mu is None
    with pytest.raises(ConfigError):
        RunConfig().merged(colour="red")


@pytest.mark.parametrize("kwargs, key", [
    ({"method": "fem"}, "method"),
    ({"sign_variant": "?"}, "sign_variant"),
    ({"birman_variant": "k2"}, "birman_variant"),
    ({"stencil_order": 4}, "stencil_order"),
    ({"threads": 0}, "threads"),
    ({"E": -1.0}, "E"),
    ({"mu": 1.5}, "mu"),
])
def test_validate_rejects(kwargs, key):
    with pytest.raises(ConfigError) as info:
        RunConfig(**kwargs).validate()
    assert info.value.key == key


def test_load_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("bc = navier\nmodes = 2\n")
    assert load_config(path).modes == 2


def test_thread_count(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert thread_count(3) == 3
    monkeypatch.setenv(THREADS_ENV, "4")
    assert thread_count() == 4
    monkeypatch.setenv(THREADS_ENV, "zero")
    with pytest.raises(ConfigError):
        thread_count()
    monkeypatch.setenv(THREADS_ENV, "0")
    with pytest.raises(ConfigError):
        thread_count()


def test_parallel_map_keeps_order():
    items = list(range(20))
    assert parallel_map(lambda x: x * x, items, threads=4) == [x * x for x in items]
    assert parallel_map(str, [], threads=4) == []
