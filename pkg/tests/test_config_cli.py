import json
import math

import pytest

from serrinstab.cli import main
from serrinstab.config import parse_angle, parse_config, parse_h, parse_values
from serrinstab.errors import ValidationError
from serrinstab.geometry import DomainSpec


def test_parse_angle():
    assert parse_angle("30deg") == pytest.approx(math.pi / 6)
    assert parse_angle("0.5rad") == 0.5
    assert parse_angle(" -1e-1 rad") == -0.1
    for bad in ("30", "deg", "1.0 degrees"):
        with pytest.raises(ValidationError):
            parse_angle(bad)


def test_parse_h():
    assert parse_h("1/128") == 1 / 128
    assert parse_h(0.25) == 0.25
    for bad in ("1/0", "-1/8", "x"):
        with pytest.raises(ValidationError):
            parse_h(bad)


def test_parse_values():
    assert parse_values("1.01,1.02") == (1.01, 1.02)
    assert parse_values("1:2:3") == (1.0, 1.5, 2.0)
    assert parse_values([1, 2]) == (1.0, 2.0)
    for bad in ("1:2", "1:2:0", "a,b"):
        with pytest.raises(ValidationError):
            parse_values(bad)


def _write(tmp_path, text, name="run.json"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_config_defaults_and_fields(tmp_path):
    path = _write(tmp_path, json.dumps({
        "h": "1/64", "directions": ["0deg", "45deg"], "nonlinearity": "linear:2",
        "family": {"kind": "ball", "values": "0.9,1.0"}, "seed": 3, "t": 0.1,
        "tolerances": {"lambda": 1e-7}}))
    cfg = parse_config(path)
    assert cfg.h == 1 / 64 and cfg.seed == 3 and cfg.t == 0.1
    assert cfg.directions == (0.0, pytest.approx(math.pi / 4))
    assert cfg.nonlinearity.mu == 2.0
    assert cfg.family.kind == "ball" and cfg.family.values == (0.9, 1.0)
    assert cfg.tolerances.lam == 1e-7 and cfg.tolerances.angle == 1e-3
    assert parse_config(_write(tmp_path, "{}", "empty.json")).h == 1 / 128


@pytest.mark.parametrize("text, line, key", [
    ('{\n  "h": "1/64",\n  "bogus": 1\n}', 3, "bogus"),
    ('{\n  "t": 0.7\n}', 2, "t"),
    ('{\n  "directions": ["30"]\n}', 2, "directions"),
    ('{\n  "family": {\n    "kind": "square"\n  }\n}', 3, "kind"),
    ('{\n  "tolerances": {"geo": -1}\n}', 2, "geo"),
    ('{\n  "seed": -2\n}', 2, "seed"),
])
def test_config_errors_carry_line(tmp_path, text, line, key):
    path = _write(tmp_path, text)
    with pytest.raises(ValidationError) as info:
        parse_config(path)
    msg = str(info.value)
    assert msg.startswith(f"{path}:{line}:")
    assert repr(key) in msg


def test_config_duplicate_and_syntax(tmp_path):
    with pytest.raises(ValidationError, match="duplicate key 'h'"):
        parse_config(_write(tmp_path, '{"h": 0.1, "h": 0.2}'))
    with pytest.raises(ValidationError, match=r"run.json:2:"):
        parse_config(_write(tmp_path, '{\n "h": ,\n}'))
    with pytest.raises(ValidationError):
        parse_config(tmp_path / "missing.json")


def test_cli_harnack(capsys):
    assert main(["harnack", "--theta", "90deg", "--r0", "0.1", "--xi", "1"]) == 0
    out = dict(line.split() for line in capsys.readouterr().out.splitlines())
    assert float(out["gamma"]) == pytest.approx(2.0)
    assert float(out["beta"]) == pytest.approx(3.0)
    assert out["n"] == "2"


def test_cli_movingplanes(capsys):
    assert main(["movingplanes", "--ellipse", "1.05,1", "--omega", "0deg"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert abs(rec["lambda"]) < 1e-5 and rec["case"] == "S1"


def test_cli_solve(tmp_path, capsys):
    out = tmp_path / "u.bin"
    assert main(["solve", "--disk", "1", "--h", "1/16", "--out", str(out)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["residual"] < 1e-8
    assert out.exists() and (tmp_path / "u.boundary.csv").exists()


def test_cli_validation_exit_codes(tmp_path, capsys):
    assert main(["movingplanes", "--disk", "1", "--omega", "30"]) == 2
    assert main(["solve", "--disk", "1", "--h", "1/2"]) == 2
    assert main(["movingplanes", "--disk", "1", "--ellipse", "1,1", "--omega", "0deg"]) == 2
    bad = _write(tmp_path, '{\n "bogus": 1\n}')
    assert main(["stability-sweep", "--config", str(bad)]) == 2
    err = capsys.readouterr().err
    assert f"{bad}:2:" in err
    with pytest.raises(SystemExit) as info:
        main(["no-such-command"])
    assert info.value.code == 2


def test_cli_ctheta_failure_exit_code(tmp_path, capsys):
    path = tmp_path / "peanut.json"
    DomainSpec(center=(0, 0), c0=1.0, cos=(0.0, 0.3), name="peanut").save(path)
    assert main(["ctheta", "--domain", str(path), "--omega", "90deg"]) == 3
    out = json.loads(capsys.readouterr().out)
    assert out["certificates"][0]["violating_point"]
    assert main(["ctheta", "--ellipse", "1.05,1", "--omega", "0deg"]) == 0


@pytest.fixture(scope="module")
def sweep_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("sweep")
    args = ["stability-sweep", "--family", "ball", "--r", "0.9,1.0", "--h", "1/32"]
    assert main(args + ["--out", str(d / "a.csv")]) == 0
    assert main(args + ["--out", str(d / "b.csv"), "--no-plot"]) == 0
    return d


def test_sweep_outputs(sweep_dir):
    for suffix in (".csv", ".png", ".summary.txt", ".records.json", ".plotdata.txt"):
        assert (sweep_dir / f"a{suffix}").exists()
    assert not (sweep_dir / "b.png").exists()
    head = (sweep_dir / "a.csv").read_text().splitlines()[0]
    assert head.startswith("# serrinstab stability sweep: family=ball")
    assert "degenerate" in (sweep_dir / "a.summary.txt").read_text()


def test_sweep_is_deterministic(sweep_dir):
    assert (sweep_dir / "a.csv").read_bytes() == (sweep_dir / "b.csv").read_bytes()


def test_report_regenerates(sweep_dir, tmp_path):
    out = tmp_path / "r.csv"
    assert main(["report", "--records", str(sweep_dir / "a.records.json"), "--out", str(out),
                 "--format", "svg"]) == 0
    assert out.read_bytes() == (sweep_dir / "a.csv").read_bytes()
    assert (tmp_path / "r.svg").exists()
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert main(["report", "--records", str(bad)]) == 2
