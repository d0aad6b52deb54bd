import hashlib
import json
import os
from fractions import Fraction

import pytest

from bhtlab import cli
from bhtlab.config import ConfigError, load_config, parse_exponents, parse_fraction_list
from bhtlab.experiments import StageError


def write_ini(tmp_path, text, name="cfg.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


ODD = "[experiment]\nexperiment = odd_symmetry\nN = 256\nlength = 16\ncount = 2\n"


def run_cli(tmp_path, ini, sub="out", extra=()):
    out = tmp_path / sub
    code = cli.main([ini.split("|")[0], "--config", ini.split("|")[1], "--out", str(out), *extra])
    return code, out


def tree_digests(root):
    out = {}
    for dirpath, _, files in os.walk(root):
        for f in files:
            p = os.path.join(dirpath, f)
            out[os.path.relpath(p, root)] = hashlib.sha256(open(p, "rb").read()).hexdigest()
    return out


class TestConfig:
    def test_fraction_list(self):
        assert parse_fraction_list("1, -1/2; 0.3,1e3") == (1, Fraction(-1, 2), Fraction(3, 10), 1000)

    def test_exponents(self):
        assert parse_exponents("2 2; 3/2, 3") == ((2, 2), (Fraction(3, 2), 3))

    def test_bad_number(self):
        with pytest.raises(ConfigError):
            parse_fraction_list("1, x")

    def test_overrides(self, tmp_path):
        ini = write_ini(tmp_path, ODD + "seed = 4\nextra_key = 7\n")
        cfg = load_config(ini, "odd_symmetry", seed=9, mode="desk")
        assert cfg.seed == 9 and cfg.N == 256 and cfg.opt("extra_key", 0) == 7

    @pytest.mark.parametrize("body", [
        "N = 300\n", "alphas = 0\n", "alphas = -1\n", "length = -1\n", "mode = exact\n",
    ])
    def test_invalid(self, tmp_path, body):
        ini = write_ini(tmp_path, "[experiment]\n" + body)
        with pytest.raises(ConfigError):
            load_config(ini, "adjoint")

    def test_wrong_experiment(self, tmp_path):
        ini = write_ini(tmp_path, "[experiment]\nexperiment = frame\n")
        with pytest.raises(ConfigError):
            load_config(ini, "adjoint")

    def test_missing_section(self, tmp_path):
        ini = write_ini(tmp_path, "[other]\nN = 4\n")
        with pytest.raises(ConfigError):
            load_config(ini, "adjoint")

    def test_ini_round_trip(self, tmp_path):
        cfg = load_config(write_ini(tmp_path, ODD + "alphas = 1, 1/2\nfoo = bar\n"), "odd_symmetry")
        again = load_config(write_ini(tmp_path, cli.config_to_ini(cfg), "again.ini"), "odd_symmetry")
        assert again == cfg


class TestMain:
    def test_pass_and_manifest(self, tmp_path, capsys):
        ini = write_ini(tmp_path, ODD)
        code, out = run_cli(tmp_path, f"odd_symmetry|{ini}")
        assert code == 0
        man = json.loads((out / "manifest.json").read_text())
        assert man["passed"] and man["experiment"] == "odd_symmetry"
        for e in man["files"]:
            data = (out / e["path"]).read_bytes()
            assert hashlib.sha256(data).hexdigest() == e["sha256"] and len(data) == e["bytes"]
        assert any(e["path"].endswith(".svg") for e in man["files"])
        assert not (out / "replay").exists()
        assert "PASS" in capsys.readouterr().out

    def test_deterministic(self, tmp_path):
        ini = write_ini(tmp_path, ODD)
        run_cli(tmp_path, f"odd_symmetry|{ini}", "a")
        run_cli(tmp_path, f"odd_symmetry|{ini}", "b")
        assert tree_digests(tmp_path / "a") == tree_digests(tmp_path / "b")

    def test_failed_check_writes_replay(self, tmp_path):
        ini = write_ini(tmp_path, "[experiment]\nexperiment = closure\n")
        code, out = run_cli(tmp_path, f"closure|{ini}", extra=("--no-plots",))
        assert code == 1
        man = json.loads((out / "manifest.json").read_text())
        assert not man["passed"]
        assert (out / "replay" / "config.ini").exists()
        assert any(e["path"] == os.path.join("replay", "config.ini") for e in man["files"])

    def test_config_error_exit(self, tmp_path, capsys):
        ini = write_ini(tmp_path, "[experiment]\nN = 3\n")
        code, _ = run_cli(tmp_path, f"odd_symmetry|{ini}")
        assert code == 2 and "config error" in capsys.readouterr().err

    def test_stage_error(self, tmp_path, monkeypatch):
        def boom(cfg):
            raise StageError("selection", RuntimeError("no tiles"), {"tiles.txt": "0 0 0\n"})
        monkeypatch.setattr(cli, "run", boom)
        code, out = run_cli(tmp_path, f"odd_symmetry|{write_ini(tmp_path, ODD)}")
        assert code == 2
        man = json.loads((out / "manifest.json").read_text())
        assert man["error"]["stage"] == "selection"
        assert (out / "replay" / "tiles.txt").read_text() == "0 0 0\n"

    def test_unexpected_error(self, tmp_path, monkeypatch):
        monkeypatch.setattr(cli, "run", lambda cfg: 1 / 0)
        code, out = run_cli(tmp_path, f"odd_symmetry|{write_ini(tmp_path, ODD)}")
        assert code == 2 and (out / "replay" / "config.ini").exists()

    def test_unknown_experiment(self):
        with pytest.raises(SystemExit):
            cli.main(["nonsense"])
