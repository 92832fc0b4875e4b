import pytest

from announcer.config import Config, ConfigNotFound, load_config, parse_config
from announcer.money import format_money, parse_money


def test_defaults():
    cfg = Config()
    assert cfg.cooldown_days == 7
    assert cfg.fine_rate_per_day == 50
    assert cfg.fine_cap == 5000
    assert cfg.suppress_empty is True
    assert cfg.listen_port == 8080


def test_parse_full_file(tmp_path):
    text = """
    # campus deployment
    db_path = /var/lib/announcer.db
    listen_addr = 0.0.0.0:9000
    smsc_host = smsc.example
    smsc_port = 2776
    smsc_system_id = campus
    smsc_password = hunter2
    window_size = 4
    throttle = 5
    default_country = +44
    timezone = Europe/London
    cooldown_days = 3
    fine_rate_per_day = 1.25
    fine_cap = 20.00
    spool_dir = /var/spool/announcer
    autorun_fees_at = 01:30
    autorun_library_at = 03:45
    suppress_empty = false
    """
    cfg = parse_config(text, tmp_path)
    assert cfg.listen_host == "0.0.0.0"
    assert cfg.listen_port == 9000
    assert cfg.window_size == 4
    assert cfg.fine_rate_per_day == 125  # cents
    assert cfg.fine_cap == 2000
    assert cfg.suppress_empty is False
    assert cfg.templates_path == tmp_path / "templates.conf"


def test_unknown_key_rejected(tmp_path):
    with pytest.raises(ValueError):
        parse_config("wat = 1", tmp_path)


def test_bad_bool_rejected(tmp_path):
    with pytest.raises(ValueError):
        parse_config("suppress_empty = maybe", tmp_path)


def test_load_from_env(tmp_path, monkeypatch):
    path = tmp_path / "announcer.conf"
    path.write_text("cooldown_days = 9\n")
    monkeypatch.setenv("ANNOUNCER_CONFIG", str(path))
    assert load_config().cooldown_days == 9


def test_load_missing_file():
    with pytest.raises(ConfigNotFound):
        load_config("/no/such/file.conf")


def test_load_none_gives_defaults(monkeypatch):
    monkeypatch.delenv("ANNOUNCER_CONFIG", raising=False)
    assert load_config().cooldown_days == 7


def test_money_parse_format_roundtrip():
    assert parse_money("250.00") == 25000
    assert parse_money("0.50") == 50
    assert parse_money("3") == 300
    assert parse_money("3.5") == 350
    assert format_money(25000) == "250.00"
    assert format_money(5) == "0.05"
    for bad in ("-1.00", "1.234", "abc", ""):
        with pytest.raises(ValueError):
            parse_money(bad)
