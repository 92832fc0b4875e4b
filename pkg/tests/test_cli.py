import json

import pytest

from announcer import cli, simsc
from announcer.api.app import create_app
from announcer.runtime import Runtime

from conftest import AS_OF, ApiServer, make_fixture_csvs, write_csv


@pytest.fixture
def conf_file(tmp_path):
    path = tmp_path / "announcer.conf"
    path.write_text(
        f"db_path = {tmp_path / 'announcer.db'}\n"
        f"spool_dir = {tmp_path / 'spool'}\n"
        "default_country = +60\n"
    )
    return path


def test_import_clean_file(conf_file, tmp_path, capsys):
    csv_path = write_csv(
        tmp_path / "s.csv",
        ["student_id", "name", "phone", "email", "program"],
        [
            ["S1", "Ali", "0123456789", "", "BIT"],
            ["S2", "Siti", "0198765432", "", "BIT"],
            ["S3", "Raj", "", "r@x.edu", "BCS"],
        ],
    )
    code = cli.main(["import", "--kind", "students", "--file", str(csv_path),
                     "--config", str(conf_file)])
    out = capsys.readouterr().out
    assert code == 0
    assert "accepted: 3" in out


def test_import_json_output(conf_file, tmp_path, capsys):
    csv_path = write_csv(
        tmp_path / "s.csv",
        ["student_id", "name", "phone", "email", "program"],
        [["S1", "Ali", "abc", "", "BIT"], ["S2", "Siti", "0123456789", "", ""]],
    )
    code = cli.main(["--json", "import", "--kind", "students",
                     "--file", str(csv_path), "--config", str(conf_file)])
    payload = json.loads(capsys.readouterr().out)
    assert code == 1  # rejected rows present
    assert payload["accepted"] == 1
    assert payload["rejected"][0]["line"] == 2


def test_import_missing_file(conf_file, capsys):
    code = cli.main(["import", "--kind", "students", "--file", "/does/not/exist.csv",
                     "--config", str(conf_file)])
    assert code == 1
    assert "FILE_NOT_FOUND" in capsys.readouterr().err


def test_config_not_found(capsys):
    code = cli.main(["import", "--kind", "students", "--file", "x.csv",
                     "--config", "/no/such/announcer.conf"])
    assert code == 1
    assert "CONFIG_NOT_FOUND" in capsys.readouterr().err


def test_api_unreachable(monkeypatch, capsys):
    monkeypatch.setenv(cli.ENV_API, "http://127.0.0.1:1")
    monkeypatch.setenv(cli.ENV_TOKEN, "whatever")
    code = cli.main(["batches"])
    assert code == 1
    assert "API_UNREACHABLE" in capsys.readouterr().err


@pytest.fixture
def live_stack(test_config, tmp_path):
    sim = simsc.run(
        simsc.SimConfig(accounts=[("announcer", "secret")], receipt_delay_ms=-1)
    )
    cfg = test_config
    cfg.smsc_port = sim.port
    cfg.smsc_system_id = "announcer"
    cfg.smsc_password = "secret"
    cfg.throttle = 1000
    runtime = Runtime(cfg)
    csvs = make_fixture_csvs(tmp_path / "csv")
    for kind in ("students", "staff", "timetable", "enrollments", "fees", "loans"):
        runtime.registry.import_csv(kind.upper(), csvs[kind])
    server = ApiServer(create_app(runtime)).start()
    yield server, runtime, sim
    server.stop()
    runtime.close()
    sim.stop()


def login_env(monkeypatch, server, capsys, staff_id, password):
    monkeypatch.setenv(cli.ENV_API, server.base_url)
    code = cli.main(["--json", "login", "--staff-id", staff_id,
                     "--password", password])
    assert code == 0
    token = json.loads(capsys.readouterr().out)["token"]
    monkeypatch.setenv(cli.ENV_TOKEN, token)
    return token


def test_autorun_approve_report_flow(live_stack, monkeypatch, capsys):
    server, runtime, sim = live_stack
    login_env(monkeypatch, server, capsys, "R1", "records-pw")

    code = cli.main(["--json", "autorun", "--kind", "fees", "--as-of", str(AS_OF)])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    batch_id = payload["batch"]["batch_id"]
    assert payload["batch"]["total"] == 12

    code = cli.main(["batches", "--state", "PENDING_APPROVAL"])
    assert code == 0
    assert f"batch {batch_id}" in capsys.readouterr().out

    code = cli.main(["approve", str(batch_id)])
    assert code == 0
    assert "APPROVED" in capsys.readouterr().out

    import time

    deadline = time.monotonic() + 10
    while time.monotonic() < deadline:
        code = cli.main(["--json", "report", str(batch_id)])
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        if report["state"] == "COMPLETED":
            break
        time.sleep(0.1)
    assert report["sent"] == 12
    assert len(sim.ledger().received) == 12


def test_approve_rejected_batch_fails_with_wrong_state(live_stack, monkeypatch, capsys):
    server, runtime, sim = live_stack
    login_env(monkeypatch, server, capsys, "B1", "library-pw")
    code = cli.main(["--json", "autorun", "--kind", "library", "--as-of", str(AS_OF)])
    batch_id = json.loads(capsys.readouterr().out)["batch"]["batch_id"]
    assert cli.main(["reject", str(batch_id)]) == 0
    capsys.readouterr()
    code = cli.main(["approve", str(batch_id)])
    captured = capsys.readouterr()
    assert code == 1
    assert "WRONG_STATE" in captured.err


def test_autorun_requires_token(live_stack, monkeypatch, capsys):
    server, _, _ = live_stack
    monkeypatch.setenv(cli.ENV_API, server.base_url)
    monkeypatch.delenv(cli.ENV_TOKEN, raising=False)
    code = cli.main(["autorun", "--kind", "fees"])
    assert code == 1
    assert "ANNOUNCER_TOKEN" in capsys.readouterr().err


def test_cli_json_outputs_are_valid_json(live_stack, monkeypatch, capsys):
    server, _, _ = live_stack
    login_env(monkeypatch, server, capsys, "A1", "admin-pw")
    for argv in (
        ["--json", "batches"],
        ["--json", "autorun", "--kind", "fees", "--as-of", str(AS_OF)],
    ):
        assert cli.main(argv) == 0
        json.loads(capsys.readouterr().out)  # must parse
