import json

from junctionflow.cli import main

SQ3 = 3.0 ** 0.5


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def y_check_config():
    return {"version": 1, "command": "check",
            "junction": {"n": 2, "m": 1, "q": 3, "s": 2,
                         "theta": [1, 1, 1],
                         "slopes": [[SQ3], [-SQ3], [0.0]]}}


def sim_config():
    return {"version": 1, "command": "simulate",
            "geometry": {"x_left": 0.0, "x_right": SQ3 / 2, "gamma": 0.6,
                         "value": [0.0], "pins": [[0.5], [-0.5], [0.0]],
                         "theta": [1, 1, 1], "s": 2,
                         "bump_amplitude": 0.01},
            "solver": {"h": 1 / 32, "dt": 0.005},
            "T": 0.05}


class TestCheck:
    def test_y_junction_passes(self, tmp_path):
        cfg = write(tmp_path / "c.json", y_check_config())
        out = str(tmp_path / "out")
        assert main(["check", "--config", cfg, "--out", out]) == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["D"] > 0
        assert report["holds"]
        assert report["modes"]["elliptic"]["kernel_dim"] == 0
        assert report["modes"]["parabolic"]["delta"] > 0
        assert (tmp_path / "out" / "singular_values.png").exists()

    def test_equal_slope_fails_with_exit_one(self, tmp_path):
        obj = y_check_config()
        obj["junction"]["slopes"] = [[0.4], [0.4], [0.4]]
        cfg = write(tmp_path / "c.json", obj)
        assert main(["check", "--config", cfg, "--out",
                     str(tmp_path / "o"), "--no-figures"]) == 1

    def test_unknown_field_exits_two(self, tmp_path):
        obj = y_check_config()
        obj["spurious"] = True
        cfg = write(tmp_path / "c.json", obj)
        assert main(["check", "--config", cfg, "--out",
                     str(tmp_path / "o")]) == 2
        assert not (tmp_path / "o").exists()   # rejected before computing

    def test_missing_field_exits_two(self, tmp_path):
        obj = y_check_config()
        del obj["junction"]
        cfg = write(tmp_path / "c.json", obj)
        assert main(["check", "--config", cfg]) == 2

    def test_command_mismatch_exits_two(self, tmp_path):
        cfg = write(tmp_path / "c.json", y_check_config())
        assert main(["simulate", "--config", cfg]) == 2

    def test_degenerate_pair_exits_two(self, tmp_path):
        obj = y_check_config()
        # first two slopes equal but not all: no flattened frame exists
        obj["junction"]["m"] = 2
        obj["junction"]["slopes"] = [[0.4, 0.0], [0.4, 0.0], [0.1, 0.2]]
        cfg = write(tmp_path / "c.json", obj)
        assert main(["check", "--config", cfg, "--out",
                     str(tmp_path / "o"), "--no-figures"]) == 2


class TestDeterminism:
    def test_reports_byte_identical(self, tmp_path):
        cfg = write(tmp_path / "c.json", y_check_config())
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main(["check", "--config", cfg, "--out", str(out),
                         "--no-figures"]) == 0
            outs.append((out / "report.json").read_bytes())
        assert outs[0] == outs[1]

    def test_simulation_csv_identical(self, tmp_path):
        cfg = write(tmp_path / "s.json", sim_config())
        blobs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main(["simulate", "--config", cfg, "--out", str(out),
                         "--no-figures"]) == 0
            blobs.append((out / "diagnostics.csv").read_bytes())
        assert blobs[0] == blobs[1]


class TestSimulate:
    def test_outputs_written(self, tmp_path):
        cfg = write(tmp_path / "s.json", sim_config())
        out = tmp_path / "out"
        assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
        for f in ("diagnostics.csv", "final_state.csv", "report.json",
                  "network.png", "diagnostics.png", "meta.json"):
            assert (out / f).exists(), f
        rows = (out / "diagnostics.csv").read_text().splitlines()
        header = rows[0].split(",")
        assert header[:6] == ["t", "total_area", "balance_norm",
                              "brakke_residual", "max_mcf_residual", "gamma"]

    def test_override_changes_run(self, tmp_path):
        cfg = write(tmp_path / "s.json", sim_config())
        out = tmp_path / "out"
        assert main(["simulate", "--config", cfg, "--out", str(out),
                     "--no-figures", "--override", "T=0.01"]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["final"]["t"] <= 0.011


class TestHodographCommand:
    def test_passes_with_default_families(self, tmp_path):
        cfg = write(tmp_path / "h.json",
                    {"version": 1, "command": "hodograph",
                     "grid_sizes": [24, 48]})
        out = tmp_path / "out"
        assert main(["hodograph", "--config", cfg, "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["holds"]
        assert (out / "convergence.png").exists()


class TestCombinatoricsCommand:
    def test_flags_and_constants_in_report(self, tmp_path):
        out = tmp_path / "out"
        assert main(["combinatorics", "--b-max", "2", "--degree-max", "10",
                     "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["holds"]
        assert report["constants"] == {"q_pi": "12337/625",
                                       "c0_low": "257391/10000"}
        assert report["seed"] == 1729

    def test_no_config_needed(self, tmp_path):
        out = tmp_path / "out"
        assert main(["combinatorics", "--out", str(out), "--no-figures",
                     "--override", "degree_max=8", "--override",
                     "vandermonde_max=5", "--override", "combo2_max=8"]) == 0
