import json
import math

import pytest
import yaml

from isomod.cli import EXIT_CONFIG, EXIT_OK, main
from isomod.config import ConfigError, PRESETS, resolve_config

QUICK_RATE = {
    "rate": {
        "snr_db": [10.0, 30.0, 40.0],
        "search": {"coarse_points": 48, "refine_rounds": 2, "refine_factor": 8},
    }
}


def write_config(tmp_path, payload, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(payload), encoding="utf-8")
    return str(path)


def read_tree(root):
    return {
        p.relative_to(root).as_posix(): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


class TestResolveConfig:
    def test_defaults(self):
        config = resolve_config()
        assert config["channel"]["p1"] == 0.6097
        assert config["rate"]["schemes"] == []

    def test_preset_overlay(self):
        config = resolve_config("fig9")
        assert config["rate"]["schemes"] == ["b-imosk-awgn", "imosk-32"]
        assert config["preset"] == "fig9"

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            resolve_config("fig99")

    def test_all_presets_resolve(self):
        for name in PRESETS:
            resolve_config(name)


class TestRateSweep:
    def test_fig9_saturations(self, tmp_path):
        cfg = write_config(tmp_path, QUICK_RATE)
        out = tmp_path / "out"
        assert main(["rate-sweep", "--preset", "fig9", "--config", cfg, "--out", str(out)]) == EXIT_OK
        data = json.loads((out / "rate_sweep.json").read_text())
        top = {
            label: curve["points"][-1]["rate"]
            for label, curve in data["curves"].items()
        }
        assert top["b-imosk-awgn"] == pytest.approx(1.0, abs=1e-3)
        assert top["imosk-32"] == pytest.approx(5.0, abs=1e-3)
        comparison = (out / "rate_comparison.csv").read_text().splitlines()
        assert comparison[0] == "#isomod-rate-comparison-csv v1"
        assert comparison[1].startswith("# config ")
        assert comparison[2] == "snr_db,rate_b-imosk-awgn,rate_imosk-32"

    def test_byte_identical_reruns(self, tmp_path):
        cfg = write_config(tmp_path, QUICK_RATE)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        for out in (out1, out2):
            assert main([
                "rate-sweep", "--preset", "fig9", "--config", cfg,
                "--out", str(out), "--seed", "7",
            ]) == EXIT_OK
        tree1, tree2 = read_tree(out1), read_tree(out2)
        assert tree1.keys() == tree2.keys()
        for name in tree1:
            assert tree1[name] == tree2[name], f"{name} differs between reruns"

    def test_empty_scheme_list_is_usage_error(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"rate": {"schemes": [], "snr_db": [10.0]}})
        code = main(["rate-sweep", "--config", cfg, "--out", str(tmp_path / "out")])
        assert code == EXIT_CONFIG
        assert "rate.schemes" in capsys.readouterr().err

    def test_unknown_scheme_named_in_error(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"rate": {"schemes": ["b-fsk"], "snr_db": [10.0]}})
        assert main(["rate-sweep", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_CONFIG
        err = capsys.readouterr().err
        assert "rate.schemes" in err and "b-fsk" in err

    def test_fig12_order_sweep(self, tmp_path):
        cfg = write_config(
            tmp_path,
            {
                "rate": {
                    "order_sweep": {"families": ["icsk", "imosk"], "orders": [2, 4]},
                    "search": {"coarse_points": 48, "refine_rounds": 2, "refine_factor": 8},
                }
            },
        )
        out = tmp_path / "out"
        assert main(["rate-sweep", "--preset", "fig12", "--config", cfg, "--out", str(out)]) == EXIT_OK
        rows = (out / "rate_orders.csv").read_text().splitlines()
        assert rows[2] == "family,order,snr_db,rate_bits"
        assert len(rows) == 3 + 4  # two families x two orders at one SNR
        data = json.loads((out / "rate_sweep.json").read_text())
        assert len(data["order_sweep"]) == 4

    def test_fig10_rescales_triose(self, tmp_path):
        cfg = write_config(tmp_path, {"rate": {"snr_db": [10.0]}})
        out = tmp_path / "out"
        assert main(["rate-sweep", "--preset", "fig10", "--config", cfg, "--out", str(out)]) == EXIT_OK
        data = json.loads((out / "rate_sweep.json").read_text())
        assert set(data["curves"]) == {
            "b-imosk-awgn_hexose",
            "b-imosk-awgn_triose",
        }
        triose_p1 = data["curves"]["b-imosk-awgn_triose"]["channel"]["p1"]
        # hexose reference 0.6097 scaled by the diffusion ratio 0.38/0.30
        assert triose_p1 == pytest.approx(0.6097 * 38.0 / 30.0, rel=1e-9)

    def test_env_out_dir(self, tmp_path, monkeypatch):
        cfg = write_config(tmp_path, {"rate": {"snr_db": [20.0], "schemes": ["b-icsk"]}})
        env_dir = tmp_path / "from_env"
        monkeypatch.setenv("ISOMOD_OUT_DIR", str(env_dir))
        assert main(["rate-sweep", "--config", cfg]) == EXIT_OK
        assert (env_dir / "rate_sweep.json").exists()

    def test_bad_jobs(self, tmp_path, capsys):
        assert main(["rate-sweep", "--preset", "fig9", "--jobs", "0"]) == EXIT_CONFIG


class TestMcPhit:
    def test_zero_horizon(self, tmp_path):
        cfg = write_config(tmp_path, {"mc": {"horizon": 0.0, "particle_count": 100}})
        out = tmp_path / "out"
        assert main(["mc-phit", "--config", cfg, "--out", str(out)]) == EXIT_OK
        data = json.loads((out / "mc_phit.json").read_text())
        assert data["estimate"]["p_hat"] == 0.0
        assert data["calibration"] is None

    def test_seed_shifts_within_error(self, tmp_path):
        cfg = write_config(tmp_path, {"mc": {"particle_count": 3000}})
        results = []
        for seed in ("1", "2"):
            out = tmp_path / f"out{seed}"
            assert main(["mc-phit", "--config", cfg, "--out", str(out), "--seed", seed]) == EXIT_OK
            results.append(json.loads((out / "mc_phit.json").read_text())["estimate"])
        a, b = results
        assert a["p_hat"] != b["p_hat"]
        pooled = math.sqrt(a["std_err"] ** 2 + b["std_err"] ** 2)
        assert abs(a["p_hat"] - b["p_hat"]) <= 4.0 * pooled

    def test_config_echo(self, tmp_path):
        cfg = write_config(tmp_path, {"mc": {"particle_count": 500}})
        out = tmp_path / "out"
        assert main(["mc-phit", "--config", cfg, "--out", str(out)]) == EXIT_OK
        data = json.loads((out / "mc_phit.json").read_text())
        assert data["config"]["mc"]["particle_count"] == 500
        assert data["backend"] in ("numba", "numpy")

    def test_small_calibration(self, tmp_path):
        cfg = write_config(
            tmp_path,
            {
                "mc": {
                    "particle_count": 2000,
                    "calibration": {
                        "enabled": True,
                        "particle_count": 4000,
                        "final_particle_count": 8000,
                    },
                }
            },
        )
        out = tmp_path / "out"
        assert main(["mc-phit", "--config", cfg, "--out", str(out)]) == EXIT_OK
        cal = json.loads((out / "mc_phit.json").read_text())["calibration"]
        assert cal["converged"] is True
        assert cal["p1"]["p_hat"] == pytest.approx(0.6097, abs=0.05)
        assert cal["held_out_p2_rel_error"] < 0.1


class TestEnergyCommand:
    def test_breakdowns(self, tmp_path):
        cfg = write_config(tmp_path, {"energy": {"n_values": [0.0, 1000.0]}})
        out = tmp_path / "out"
        assert main(["energy", "--config", cfg, "--out", str(out)]) == EXIT_OK
        data = json.loads((out / "energy.json").read_text())
        zero, thousand = data["breakdowns"]
        assert zero["e_total"] == 0.0
        assert zero["snr_db"] is None
        assert thousand["e_synthesis"] == pytest.approx(2.111e-18, rel=1e-3)
        assert data["config"]["energy"]["n_values"] == [0.0, 1000.0]

    def test_empty_n_values(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"energy": {"n_values": []}})
        assert main(["energy", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_CONFIG
        assert "energy.n_values" in capsys.readouterr().err

    def test_custom_messenger_override(self, tmp_path):
        cfg = write_config(
            tmp_path,
            {
                "messenger": "triose",
                "messengers": {
                    "triose": {"radius_nm": 0.25, "formation_enthalpy_kj_mol": 500.0}
                },
                "energy": {"n_values": [10.0]},
            },
        )
        out = tmp_path / "out"
        assert main(["energy", "--config", cfg, "--out", str(out)]) == EXIT_OK
        data = json.loads((out / "energy.json").read_text())
        assert data["messenger"] == "triose"
        assert data["breakdowns"][0]["e_synthesis"] == pytest.approx(
            500e3 / 6.02e23, rel=1e-9
        )

    def test_missing_config_file(self, tmp_path, capsys):
        assert main(["energy", "--config", str(tmp_path / "nope.yaml")]) == EXIT_CONFIG
