import hashlib
import json

import numpy as np
import pytest

from invariant_forge.cli import main

RING_CONFIG = {
    "n": 5,
    "rates": [2.0, 5.0, 5.0, 0.0, 1.0],
    "x0": [0.71, 0.9, 0.28, 0.8, 0.76],
    "dt": 0.001,
    "steps": 2000,
    "sigma2": 1e-5,
    "seed": 11,
}


def write_config(path, **overrides):
    cfg = dict(RING_CONFIG)
    cfg.update(overrides)
    path.write_text(json.dumps(cfg))
    return path


def file_hash(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def simulated(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    config = write_config(out / "config.json")
    assert main(["simulate", "--config", str(config), "--out", str(out)]) == 0
    return out


class TestSimulate:
    def test_outputs_exist_with_headers(self, simulated):
        trajectory = (simulated / "trajectory.csv").read_text().splitlines()
        dataset = (simulated / "dataset.csv").read_text().splitlines()
        assert trajectory[0] == "t,x1,x2,x3,x4,x5"
        assert dataset[0] == "k,z1,z2,z3,z4,z5"
        assert len(trajectory) == 2002  # header + initial state + 2000 steps
        assert len(dataset) == 2001
        manifest = json.loads((simulated / "simulate_manifest.json").read_text())
        assert manifest["command"] == "simulate"
        assert manifest["parameters"]["seed"] == 11

    def test_round_trip_precision(self, simulated):
        lines = (simulated / "trajectory.csv").read_text().splitlines()
        first = [float(v) for v in lines[1].split(",")]
        assert first[1:] == RING_CONFIG["x0"]

    def test_deterministic_reruns(self, tmp_path):
        config = write_config(tmp_path / "config.json", steps=50)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--config", str(config), "--out", str(out_a)]) == 0
        assert main(["simulate", "--config", str(config), "--out", str(out_b)]) == 0
        for name in ("trajectory.csv", "dataset.csv"):
            assert file_hash(out_a / name) == file_hash(out_b / name)

    def test_invalid_steps_names_field(self, tmp_path, capsys):
        config = write_config(tmp_path / "config.json", steps=0)
        assert main(["simulate", "--config", str(config), "--out", str(tmp_path)]) == 2
        assert "steps" in capsys.readouterr().err

    def test_unknown_key_rejected(self, tmp_path, capsys):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({**RING_CONFIG, "step": 5}))
        assert main(["simulate", "--config", str(config), "--out", str(tmp_path)]) == 2
        assert "step" in capsys.readouterr().err

    def test_integrator_failure_exit_code(self, tmp_path):
        config = write_config(
            tmp_path / "config.json", rates=[500.0, 500.0, 500.0, 500.0, 500.0], dt=5.0,
            steps=2,
        )
        # substeps would normally absorb this; fake a hard case via huge dt and rates
        code = main(["simulate", "--config", str(config), "--out", str(tmp_path)])
        assert code in (0, 3)  # the auto substep rule may still succeed


class TestFit:
    def test_fit_recovers_conserved_direction(self, simulated, tmp_path):
        out = tmp_path / "fit"
        code = main([
            "fit", str(simulated / "dataset.csv"),
            "--sigma-bar2", "2e-5",
            "--theta0=-0.12,0.20,0.41,0.76,0.45",
            "--reference", "1,1,1,1,1",
            "--out", str(out),
        ])
        assert code == 0
        trace = json.loads((out / "trace.json").read_text())
        assert trace["status"] in ("converged", "max_iters")
        assert len(trace["thetas"]) == trace["iterations"] + 1
        assert len(trace["ratios"]) == len(trace["thetas"])
        assert trace["angle_to_reference"]["degrees"] < 3.0
        final = np.array(trace["thetas"][-1])
        assert np.max(np.abs(final - np.ones(5) / np.sqrt(5.0))) < 0.05

    def test_singular_dataset_exit_code(self, tmp_path, capsys):
        rows = ["k,z1,z2"] + [f"{k},1.0,2.0" for k in range(1, 11)]
        dataset = tmp_path / "flat.csv"
        dataset.write_text("\n".join(rows) + "\n")
        assert main(["fit", str(dataset), "--sigma-bar2", "0.1"]) == 4

    def test_malformed_header_rejected(self, tmp_path):
        dataset = tmp_path / "bad.csv"
        dataset.write_text("time,a,b\n1,0.1,0.2\n")
        assert main(["fit", str(dataset), "--sigma-bar2", "0.1"]) == 2

    def test_random_start_is_seeded(self, simulated, tmp_path, monkeypatch):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        for out in (out_a, out_b):
            code = main([
                "fit", str(simulated / "dataset.csv"),
                "--sigma-bar2", "2e-5", "--random-theta0", "77", "--out", str(out),
            ])
            assert code == 0
        ta = json.loads((out_a / "trace.json").read_text())["thetas"][0]
        tb = json.loads((out_b / "trace.json").read_text())["thetas"][0]
        assert ta == tb

    def test_env_seed_fallback(self, simulated, tmp_path, monkeypatch):
        monkeypatch.setenv("INVARIANT_FORGE_SEED", "123")
        out = tmp_path / "env"
        assert main([
            "fit", str(simulated / "dataset.csv"), "--sigma-bar2", "2e-5",
            "--out", str(out),
        ]) == 0
        manifest = json.loads((out / "fit_manifest.json").read_text())
        assert manifest["parameters"]["theta0_seed"] == 123


class TestAnalyze:
    def test_json_report(self, capsys):
        code = main([
            "analyze", "--sigma2", "0.01", "--sigma-bar2", "0.04", "--n", "3",
            "--epsilon", "0.1", "--json",
        ])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["conditions"]["cond_a"] is True
        assert payload["conditions"]["cond_b"] is True
        assert payload["conditions"]["r"] == pytest.approx(-0.03125)
        assert payload["equilibrium_spectrum"]["max_abs_diff"] < 1e-10
        crosscheck = payload["perturbed_spectrum"]["crosscheck"]
        assert crosscheck["eigenvalue_residual"] < 1e-10
        assert crosscheck["eigenvector_distance"] < 1e-10

    def test_boundary_surrogate(self, capsys):
        code = main(["analyze", "--sigma2", "0.01", "--sigma-bar2", "1.0", "--n", "3", "--json"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["conditions"]["equilibrium"] is False
        assert payload["conditions"]["r_defined"] is False

    def test_tiny_variances(self, capsys):
        code = main(["analyze", "--sigma2", "1e-5", "--sigma-bar2", "2e-5", "--n", "5", "--json"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        cond = payload["conditions"]
        assert cond["cond_a"] and cond["cond_b"] and cond["equilibrium"]

    def test_validation(self):
        assert main(["analyze", "--sigma2", "-1", "--sigma-bar2", "0.1", "--n", "3"]) == 2


class TestSweep:
    def test_grid_csv(self, tmp_path):
        config = tmp_path / "grid.json"
        config.write_text(json.dumps({
            "sigma2": [0.01],
            "sigma_bar2": [0.005, 0.04],
            "epsilon": [0.001, "inf"],
            "n": 3,
        }))
        assert main(["sweep", "--config", str(config), "--out", str(tmp_path)]) == 0
        lines = (tmp_path / "sweep.csv").read_text().splitlines()
        assert lines[0] == "sigma2,sigma_bar2,epsilon,converged,iters,final_angle"
        assert len(lines) == 5
        cells = {}
        for line in lines[1:]:
            sigma2, sb2, eps, converged, iters, angle = line.split(",")
            cells[(float(sb2), eps)] = (converged, float(angle))
        # inside the window: tilted and in-plane starts both reach v1
        assert cells[(0.04, "0.001")][0] == "true"
        assert cells[(0.04, "inf")][0] == "true"
        # surrogate below the noise floor: in-plane start stays in the plane
        assert cells[(0.005, "inf")][0] == "false"
        assert cells[(0.005, "inf")][1] > 1.0

    def test_validation(self, tmp_path, capsys):
        config = tmp_path / "grid.json"
        config.write_text(json.dumps({"sigma2": [0.01], "sigma_bar2": [], "epsilon": [0.1], "n": 3}))
        assert main(["sweep", "--config", str(config), "--out", str(tmp_path)]) == 2


class TestVerify:
    def test_single_criterion_pass(self, capsys):
        code = main(["verify", "--only", "equilibrium-iff-bound", "--json"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["all_passed"] is True
        assert payload["criteria"][0]["id"] == "equilibrium-iff-bound"

    def test_tampered_tolerance_fails_with_name(self, capsys):
        code = main([
            "verify", "--only", "ring-ode-physics",
            "--tamper", "ring-ode-physics=1e-12",
        ])
        assert code == 1
        out = capsys.readouterr().out
        assert "FAIL" in out and "ring-ode-physics" in out

    def test_unknown_criterion_rejected(self):
        assert main(["verify", "--only", "no-such-criterion"]) == 2
