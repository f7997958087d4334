import csv
import json
import math
import re
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from flattumor.cli import main
from flattumor.config import DEFAULT, ConfigError, from_dict, load
from flattumor.model import g_inverse

G_INV_HALF = 1.915008048154537


def write(tmp_path, doc, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


STATIONARY = {"mu": 1.0, "sigma_tilde": 0.5, "period": 1.0, "a0": 1.0}
STRICT = {"mu": 1.0, "sigma_tilde": 1.5, "period": 1.0, "a0": 1.0, "n_periods": 20}


def rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


class TestConfig:
    def test_defaults_validate(self):
        cfg = from_dict(dict(DEFAULT))
        assert cfg.rel_tol == 1e-10 and cfg.seed == 0

    @pytest.mark.parametrize("key", ["mu", "sigma_tilde", "period", "a0"])
    def test_missing_required(self, key):
        doc = dict(STATIONARY)
        del doc[key]
        with pytest.raises(ConfigError) as info:
            from_dict(doc)
        assert info.value.field == key

    @pytest.mark.parametrize(
        "doc, field",
        [
            ({**STATIONARY, "mu": -1.0}, "mu"),
            ({**STATIONARY, "period": "1"}, "period"),
            ({**STATIONARY, "rel_tol": 0}, "rel_tol"),
            ({**STATIONARY, "cos": [0.7], "sin": [0.8]}, "a0"),
            ({**STATIONARY, "cos": "x"}, "cos"),
            ({**STATIONARY, "cos": [0.1, None]}, "cos[1]"),
            ({**STATIONARY, "samples": 1.5}, "samples"),
            ({**STATIONARY, "seed": -3}, "seed"),
            ({**STATIONARY, "colour": 1}, "colour"),
        ],
    )
    def test_field_errors(self, doc, field):
        with pytest.raises(ConfigError) as info:
            from_dict(doc)
        assert info.value.field == field

    def test_load_errors(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{\n  \"mu\": 1,\n  oops\n}")
        with pytest.raises(ConfigError, match="line 3"):
            load(bad)
        with pytest.raises(ConfigError):
            load(tmp_path / "missing.json")

    def test_round_trip(self, tmp_path):
        cfg = from_dict({**STATIONARY, "cos": [0.1 + 0.2], "rel_tol": 1.0 / 3e9})
        again = load(write(tmp_path, cfg.as_dict()))
        assert again == cfg


def test_simulate_stationary(tmp_path, capsys):
    doc = {**STATIONARY, "rho0": g_inverse(0.5)}
    assert main(["simulate", "--config", write(tmp_path, doc), "--out", str(tmp_path)]) == 0
    table = rows(tmp_path / "trajectory.csv")
    assert table[0] == ["t", "rho", "phi", "rhs", "lower_envelope", "upper_envelope"]
    assert len(table) == 202
    rho = [float(r[1]) for r in table[1:]]
    assert max(rho) - min(rho) <= 1e-9 * rho[0]
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["envelope_violations"] == 0
    assert summary == json.loads(capsys.readouterr().out)


def test_simulate_strict_below_ceiling(tmp_path):
    assert main(["simulate", "--config", write(tmp_path, STRICT), "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["regime"] == "extinction-strict"
    assert summary["final_rho"] <= math.e * math.exp(-10)


def test_csv_full_precision(tmp_path):
    main(["simulate", "--config", write(tmp_path, dict(DEFAULT)), "--out", str(tmp_path)])
    for row in rows(tmp_path / "trajectory.csv")[1:]:
        for cell in row:
            x = float(cell)
            assert cell == format(x, ".17g")


def test_missing_period_exit_code(tmp_path, capsys):
    doc = {k: v for k, v in STATIONARY.items() if k != "period"}
    assert main(["simulate", "--config", write(tmp_path, doc), "--out", str(tmp_path)]) == 2
    assert "period" in capsys.readouterr().err


def test_bad_cli_values(tmp_path):
    assert main(["simulate", "--periods", "0", "--out", str(tmp_path)]) == 2
    assert main(["periodic", "--tol", "-1", "--out", str(tmp_path)]) == 2


def test_integration_failure_exit_code(tmp_path):
    doc = {**STATIONARY, "max_steps": 2, "n_periods": 50}
    assert main(["simulate", "--config", write(tmp_path, doc), "--out", str(tmp_path)]) == 3


@pytest.mark.parametrize(
    "doc, regime",
    [
        ({**STATIONARY, "sigma_tilde": 1.0, "sin": [0.5]}, "extinction-critical"),
        (STATIONARY, "persistence"),
        ({**STATIONARY, "sigma_tilde": 1.2, "cos": [0.9]}, "extinction-strict"),
    ],
)
def test_classify(tmp_path, doc, regime):
    assert main(["classify", "--config", write(tmp_path, doc), "--out", str(tmp_path)]) == 0
    out = json.loads((tmp_path / "summary.json").read_text())
    assert out["regime"] == regime
    assert {"phi_bar", "phi_star", "phi_lower", "margin"} <= set(out)


def test_periodic_stationary(tmp_path):
    assert main(["periodic", "--config", write(tmp_path, STATIONARY), "--out", str(tmp_path)]) == 0
    out = json.loads((tmp_path / "summary.json").read_text())
    assert out["rho_star_0"] == pytest.approx(G_INV_HALF, rel=1e-9)
    assert out["bracket"]["x_bar"] < out["rho_star_0"] <= out["bracket"]["x2"]
    assert out["probe"]["delta"] > 0
    assert rows(tmp_path / "orbit.csv")[0] == ["t", "rho_star", "phi"]
    assert not (tmp_path / "orbit.svg").exists()


def test_periodic_extinction_exit_code(tmp_path, capsys):
    doc = {**STATIONARY, "sigma_tilde": 1.2, "cos": [0.9]}
    assert main(["periodic", "--config", write(tmp_path, doc), "--out", str(tmp_path)]) == 4
    payload = json.loads(capsys.readouterr().out)
    assert payload["regime"]["regime"] == "extinction-strict"


def test_periodic_svg(tmp_path):
    assert main(["periodic", "--svg", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "orbit.svg").read_text()
    root = ET.fromstring(text)
    ns = "{http://www.w3.org/2000/svg}"
    lines = root.findall(f"{ns}polyline")
    assert len(lines) == 2
    for line in lines:
        assert len(line.get("points").split()) == 513
    labels = {t.text for t in root.findall(f"{ns}text")}
    assert {"t", "rho*(t)", "Phi(t)"} <= labels
    assert "href" not in text and "<script" not in text


def test_figures(tmp_path):
    assert main(["simulate", "--figures", "--out", str(tmp_path)]) == 0
    assert main(["periodic", "--figures", "--out", str(tmp_path)]) == 0
    for name in ("trajectory.png", "orbit.png"):
        assert (tmp_path / name).read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_outputs_deterministic(tmp_path):
    for d in ("a", "b"):
        assert main(["periodic", "--svg", "--out", str(tmp_path / d)]) == 0
        assert main(["simulate", "--out", str(tmp_path / d)]) == 0
    for name in ("orbit.csv", "orbit.svg", "trajectory.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_verify_default(tmp_path, capsys):
    assert main(["verify", "--out", str(tmp_path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert all(re.match(r"^(PASS|SKIP)\s+\w+$", ln) for ln in lines)
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["passed"]
    conv = next(c for c in report["checks"] if c["name"] == "convergence_envelope")
    for probe in conv["measured"]["probes"]:
        assert probe["measured_rate"] >= probe["delta"]


def test_verify_loose_tolerance_fails(tmp_path, capsys):
    doc = {**DEFAULT, "rel_tol": 1e-2}
    assert main(["verify", "--config", write(tmp_path, doc), "--out", str(tmp_path)]) == 5
    assert "FAIL  oracle_equivalence" in capsys.readouterr().out


def test_verify_extinction(tmp_path):
    doc = {**STATIONARY, "sigma_tilde": 1.2, "cos": [0.9]}
    assert main(["verify", "--config", write(tmp_path, doc), "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    status = {c["name"]: c["status"] for c in report["checks"]}
    assert status["extinction_bounds"] == "pass"
    assert status["bracket_self_map"] == "skip"


def test_console_entry(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "flattumor", "classify", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["regime"] == "persistence"
