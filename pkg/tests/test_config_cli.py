import json
import math

import numpy as np
import pytest

from diracgap.cli import EXIT_OK, EXIT_SOLVER, EXIT_VALIDATION, EXIT_VIOLATION, main
from diracgap.config import DEFAULTS, config_hash, load_config
from diracgap.errors import ConfigError
from diracgap.output import read_csv_rows
from diracgap.shooting import point_charge_reference_levels

POINT_05 = """
[[measure.components]]
kind = "point"
weight = 0.5
"""


def run(tmp_path, command, text, *extra, **kw):
    cfg = tmp_path / "run.toml"
    cfg.write_text(text)
    out = tmp_path / "out"
    code = main([command, "--config", str(cfg), "--out", str(out), *extra], **kw)
    return code, out


def test_defaults_are_complete():
    cfg = load_config()
    assert cfg["radial"]["order"] == DEFAULTS["radial"]["order"]
    assert cfg is not DEFAULTS


@pytest.mark.parametrize("text, fragment", [
    ("[radial]\nbogus = 1\n", "radial.bogus"),
    ("[radial]\norder = 'six'\n", "radial.order"),
    ("[radial]\norder = 6.5\n", "radial.order"),
    ("radial = 3\n", "table"),
    ("[radial\n", "ConfigError"),
])
def test_config_rejects(text, fragment):
    with pytest.raises(ConfigError, match=fragment.replace(".", r"\.")):
        load_config(text)


def test_hash_ignores_output_and_threads():
    a = load_config("[output]\ndir = 'a'\n")
    b = load_config("[output]\ndir = 'b'\n", {"threads": 3})
    c = load_config(None, {"seed": 7})
    assert config_hash(a) == config_hash(b) != config_hash(c)


def test_spectrum_point_charge(tmp_path):
    code, out = run(tmp_path, "spectrum", POINT_05)
    assert code == EXIT_OK
    rows = read_csv_rows(out / "levels.csv")
    assert rows[0][:2] == ["k", "value"]
    assert float(rows[1][1]) == pytest.approx(math.sqrt(0.75), abs=1e-10)
    meta = json.loads((out / "spectrum.json").read_text())
    assert meta["provenance"]["config_hash"] == config_hash(load_config(POINT_05, {"command": "spectrum"}))


def test_heavy_atom_exit_code(tmp_path, capsys):
    code, _ = run(tmp_path, "spectrum", POINT_05.replace("0.5", "1.0"))
    assert code == EXIT_VALIDATION
    assert "AtomTooHeavy" in capsys.readouterr().err


def test_empty_measure_exit_code(tmp_path, capsys):
    code, _ = run(tmp_path, "spectrum", "")
    assert code == EXIT_VALIDATION
    assert "TrivialMeasure" in capsys.readouterr().err


def test_unknown_key_exit_code(tmp_path, capsys):
    code, _ = run(tmp_path, "spectrum", POINT_05 + "[radial]\nbogus = 1\n")
    assert code == EXIT_VALIDATION
    assert "unknown key" in capsys.readouterr().err


def test_solver_failure_exit_code(tmp_path, monkeypatch):
    import diracgap.minmax as minmax

    def boom(*a, **k):
        raise np.linalg.LinAlgError("singular")

    monkeypatch.setattr(minmax, "spectrum_in_gap", boom)
    code, _ = run(tmp_path, "spectrum", POINT_05)
    assert code == EXIT_SOLVER


def test_coincident_centers_rejected(tmp_path):
    text = "[molecule]\ncenters = [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]\nweights = [0.3, 0.3]\n" \
           "[pes]\nseparations = [1.0]\n"
    code, _ = run(tmp_path, "pes", text)
    assert code == EXIT_VALIDATION


def test_verify_zero_trials(tmp_path):
    code, _ = run(tmp_path, "verify", "[verify]\ntrials = 0\n")
    assert code == EXIT_VALIDATION


def test_verify_small_run_and_violation_hook(tmp_path, capsys):
    text = "[verify]\ntrials = 10\n"
    code, out = run(tmp_path, "verify", text)
    assert code == EXIT_OK
    rows = read_csv_rows(out / "verify.csv")
    assert rows[0] == ["inequality", "trial", "seed", "param", "margin", "tolerance", "pass"]
    assert all(r[-1] == "True" for r in rows[1:])
    # a too small Kato constant must surface as a violation with its seed
    code, out = run(tmp_path, "verify", text, kato_constant=1.0)
    assert code == EXIT_VIOLATION
    err = capsys.readouterr().err
    assert "violation: kato" in err
    summary = json.loads((out / "verify.json").read_text())
    assert summary["violations"] >= 1
    assert all(name == "kato" for name, _ in summary["violating_seeds"])


def test_oracle_rows(tmp_path):
    text = POINT_05 + "[oracle]\nkappas = [-1, 1]\ncount = 3\n"
    code, out = run(tmp_path, "oracle", text)
    assert code == EXIT_OK
    rows = read_csv_rows(out / "oracle.csv")[1:]
    assert [(int(r[0]), int(r[1])) for r in rows] == [(-1, 0), (-1, 1), (-1, 2), (1, 1), (1, 2), (1, 3)]
    for kappa in (-1, 1):
        ref = point_charge_reference_levels(0.5, kappa, 3)[:3]
        got = [float(r[2]) for r in rows if int(r[0]) == kappa]
        closed = [float(r[3]) for r in rows if int(r[0]) == kappa]
        assert np.allclose(got, ref, atol=1e-9)
        assert np.allclose(closed, ref, atol=0)


def test_bsnorm_rows(tmp_path):
    text = "[[measure.components]]\nkind = 'ball'\nweight = 0.5\nradius = 1.0\n" \
           "[grid]\nL = 6.0\nN = 8\n"
    code, out = run(tmp_path, "bsnorm", text)
    assert code == EXIT_OK
    rows = read_csv_rows(out / "bsnorm.csv")
    assert rows[0] == ["cycle", "estimate"]
    meta = json.loads((out / "bsnorm.json").read_text())
    assert 0 < meta["estimate"] < 1
    assert meta["residual"] <= 1e-6


def test_bsnorm_rejects_point_charge(tmp_path):
    code, _ = run(tmp_path, "bsnorm", POINT_05 + "[grid]\nN = 8\n")
    assert code == EXIT_VALIDATION


def test_reruns_are_byte_identical(tmp_path):
    text = POINT_05 + "[radial]\nkappas = [-1]\nlevels = 2\n"
    a = tmp_path / "a"
    b = tmp_path / "b"
    a.mkdir()
    b.mkdir()
    code_a, out_a = run(a, "spectrum", text)
    code_b, out_b = run(b, "spectrum", text, "--threads", "2")
    assert code_a == code_b == EXIT_OK
    assert (out_a / "levels.csv").read_bytes() == (out_b / "levels.csv").read_bytes()
