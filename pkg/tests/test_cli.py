import json
import math

import numpy as np
import pytest

import transferkit as tk
from transferkit.cli import _dump_complex_matrix, dump_marginal, load_marginal, load_model, main


@pytest.fixture
def model_dir(tmp_path):
    files = {}

    def write(name, doc):
        p = tmp_path / name
        p.write_text(json.dumps(doc))
        files[name.split(".")[0]] = str(p)

    write("zero.json", {"name": "zero", "d": 2, "h": _dump_complex_matrix(np.zeros((4, 4)))})
    write("xy.json", {"name": "xy", "d": 2, "h": _dump_complex_matrix(tk.xy_model(1.0).h)})
    bad = np.zeros((4, 4), dtype=complex)
    bad[0, 1] = 1.0
    write("bad.json", {"d": 2, "h": _dump_complex_matrix(bad)})
    write(
        "blocked_xy.json",
        {
            "d": 2,
            "blocking": {
                "cell_size": 2,
                "terms": [
                    _dump_complex_matrix(tk.xy_coupling_term(1.0)),
                    _dump_complex_matrix(tk.xy_coupling_term(2.0)),
                ],
            },
        },
    )
    (tmp_path / "broken.json").write_text("{not json")
    files["broken"] = str(tmp_path / "broken.json")
    files["dir"] = str(tmp_path)
    return files


class TestModelFiles:
    def test_round_trip_is_exact(self, model_dir):
        model = load_model(model_dir["xy"], 1.0)
        assert np.array_equal(model.h, tk.xy_model(1.0).h)

    def test_blocking_file(self, model_dir):
        model = load_model(model_dir["blocked_xy"], 1.0)
        reference = tk.xy_model(1.0, 2.0)
        assert model.local_dim == 4
        assert np.allclose(model.h, reference.h)

    def test_marginal_dump_round_trip(self, tmp_path):
        rng = np.random.default_rng(111)
        m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        m = m @ m.conj().T
        rho = tk.DensityMatrix(m / np.trace(m).real, 2, 2)
        path = tmp_path / "rho.json"
        path.write_text(dump_marginal(rho))
        back = load_marginal(str(path))
        assert np.array_equal(back.matrix, rho.matrix)


class TestFreeEnergyCommand:
    def test_zero_model(self, model_dir, capsys):
        assert main(["free-energy", model_dir["zero"], "--beta", "1", "--L", "4"]) == 0
        out = capsys.readouterr().out
        assert f"{-math.log(2.0):.17g}" in out

    def test_csv_format_matches_oracle(self, model_dir, capsys):
        rc = main(["free-energy", model_dir["xy"], "--beta", "1", "--L", "10", "--format", "csv"])
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "f,L,beta,residual,iterations,wall_time_s"
        f_val = float(lines[1].split(",")[0])
        assert abs(f_val - tk.xy_exact(1.0)) < 1e-8

    def test_epsilon_routes_choose_l(self, model_dir, capsys):
        rc = main(["free-energy", model_dir["zero"], "--beta", "1", "--epsilon", "1e-4"])
        assert rc == 0
        assert "chose L = 5" in capsys.readouterr().err

    def test_exit_codes(self, model_dir, capsys, monkeypatch):
        assert main(["free-energy", model_dir["broken"], "--beta", "1", "--L", "4"]) == 2
        rc = main(["free-energy", model_dir["bad"], "--beta", "1", "--L", "4"])
        assert rc == 3
        assert "asymmetry" in capsys.readouterr().err
        rc = main(["free-energy", model_dir["xy"], "--beta", "1", "--L", "6", "--max-iter", "2"])
        assert rc == 4
        monkeypatch.setenv("TRANSFERKIT_MEM_BUDGET_MB", "1")
        assert main(["free-energy", model_dir["xy"], "--beta", "1", "--L", "10"]) == 5

    def test_missing_file(self, model_dir):
        assert main(["free-energy", model_dir["dir"] + "/nope.json", "--beta", "1", "--L", "4"]) == 2

    def test_epsilon_out_of_range(self, model_dir, capsys):
        assert main(["free-energy", model_dir["zero"], "--beta", "1", "--epsilon", "0.5"]) == 2
        assert "1/e" in capsys.readouterr().err


class TestMarginalCommand:
    def test_zero_model_dump(self, model_dir, capsys):
        assert main(["marginal", model_dir["zero"], "--beta", "1", "--L", "4", "--k", "2"]) == 0
        doc = json.loads(capsys.readouterr().out)
        m = np.asarray(doc["matrix"], dtype=float)
        assert np.allclose(m[:, :, 0], np.eye(4) / 4, atol=1e-12)
        assert doc["n_sites"] == 2

    def test_k_too_large(self, model_dir):
        assert main(["marginal", model_dir["zero"], "--beta", "1", "--L", "4", "--k", "4"]) == 6

    def test_non_convergence(self, model_dir, capsys):
        rc = main(["marginal", model_dir["xy"], "--beta", "1", "--L", "5", "--k", "2", "--max-iter", "2"])
        assert rc == 4
        capsys.readouterr()

    def test_two_sided(self, model_dir, capsys):
        rc = main(["marginal", model_dir["xy"], "--beta", "1", "--L", "3", "--k", "1", "--two-sided"])
        assert rc == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["n_sites"] == 2 and doc["d"] == 2


class TestCompareCommand:
    def test_marginal_vs_bruteforce(self, model_dir, tmp_path, capsys):
        a = str(tmp_path / "a.json")
        b = str(tmp_path / "b.json")
        assert main(["marginal", model_dir["xy"], "--beta", "1", "--L", "8", "--k", "3", "--out", a]) == 0
        assert main(["oracle", "xy", "--beta", "1", "--marginal", "4", "10", "--out", b]) == 0
        assert main(["compare", a, b, "--tol", "1e-4"]) == 0
        dist = float(capsys.readouterr().out.strip())
        assert dist <= 1e-4

    def test_tolerance_violation(self, tmp_path, capsys):
        rho_a = tk.DensityMatrix(np.diag([1.0, 0.0]).astype(complex), 1, 2)
        rho_b = tk.DensityMatrix(np.diag([0.0, 1.0]).astype(complex), 1, 2)
        a, b = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        (tmp_path / "a.json").write_text(dump_marginal(rho_a))
        (tmp_path / "b.json").write_text(dump_marginal(rho_b))
        assert main(["compare", a, b, "--tol", "0.5"]) == 1
        capsys.readouterr()


class TestSweepCommand:
    def test_beta_sweep_zero_model(self, model_dir, capsys):
        rc = main(
            ["sweep", model_dir["zero"], "--param", "beta", "--values", "0.5,1,2",
             "--quantity", "free_energy", "--L", "4", "--threads", "1"]
        )
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "param,value,quantity,diagnostic_residual,wall_time_s"
        for line, beta in zip(lines[1:], (0.5, 1.0, 2.0)):
            val = float(line.split(",")[1])
            assert math.isclose(val, -math.log(2.0) / beta, rel_tol=1e-12)

    def test_byte_identical_reruns(self, model_dir, tmp_path):
        # byte-identity holds for every value-bearing column; the mandated
        # wall_time_s column is inherently run-dependent and is stripped
        args = ["sweep", model_dir["xy"], "--param", "L", "--values", "3,4,5",
                "--quantity", "free_energy", "--threads", "1"]
        out1, out2 = str(tmp_path / "s1.csv"), str(tmp_path / "s2.csv")
        assert main(args + ["--out", out1]) == 0
        assert main(args + ["--out", out2]) == 0
        b1 = open(out1, "rb").read()
        assert b"\r" not in b1  # LF line endings
        strip = lambda data: [line.rsplit(b",", 1)[0] for line in data.splitlines()]
        assert strip(b1) == strip(open(out2, "rb").read())

    def test_error_vs_oracle_decreasing_in_L(self, capsys):
        rc = main(["sweep", "xy", "--param", "L", "--values", "3,4,5,6",
                   "--quantity", "error_vs_oracle", "--oracle", "xy", "--threads", "1"])
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()[1:]
        errs = [float(l.split(",")[1]) for l in lines]
        assert all(a > b for a, b in zip(errs, errs[1:]))

    def test_distance_sweep_mi_decreasing(self, capsys):
        rc = main(["sweep", "xy", "--param", "distance", "--values", "1,2,3",
                   "--quantity", "mi", "--L", "4", "--beta", "1", "--threads", "1"])
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()[1:]
        vals = [float(l.split(",")[1]) for l in lines]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert all(v >= -1e-10 for v in vals)

    def test_per_point_failure_flags_row(self, model_dir, capsys, monkeypatch):
        monkeypatch.setenv("TRANSFERKIT_MEM_BUDGET_MB", "2")
        rc = main(["sweep", model_dir["zero"], "--param", "L", "--values", "3,12",
                   "--quantity", "free_energy", "--threads", "1"])
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()[1:]
        ok_row = lines[0].split(",")
        bad_row = lines[1].split(",")
        assert ok_row[1] != ""
        assert bad_row[1] == "" and float(bad_row[3]) == math.inf

    def test_bad_values_rejected(self, model_dir):
        rc = main(["sweep", model_dir["zero"], "--param", "beta", "--values", "2,1",
                   "--quantity", "free_energy", "--threads", "1"])
        assert rc == 2

    def test_gamma_sweep_requires_builtin(self, model_dir):
        rc = main(["sweep", model_dir["xy"], "--param", "gamma", "--values", "1,2",
                   "--quantity", "free_energy", "--threads", "1"])
        assert rc == 2

    def test_gamma_sweep_error_vs_oracle(self, capsys):
        # gamma = 2 routes through blocking (d = 4); errors are per original spin
        rc = main(["sweep", "xy", "--param", "gamma", "--values", "1,2",
                   "--quantity", "error_vs_oracle", "--oracle", "xy", "--L", "4", "--threads", "1"])
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()[1:]
        errs = [float(l.split(",")[1]) for l in lines]
        assert all(e < 1e-4 for e in errs)

    def test_threads_flag(self, model_dir, capsys):
        rc = main(["sweep", model_dir["zero"], "--param", "beta", "--values", "1,2",
                   "--quantity", "free_energy", "--L", "3", "--threads", "2"])
        assert rc == 0
        capsys.readouterr()


class TestOracleCommand:
    def test_xy_values(self, capsys):
        assert main(["oracle", "xy", "--beta", "0"]) == 0
        val = float(capsys.readouterr().out.strip().splitlines()[1].split(",")[-1])
        assert math.isclose(val, -math.log(2.0), rel_tol=1e-14)
        assert main(["oracle", "xy", "--beta", "1", "--gamma", "0"]) == 0
        val = float(capsys.readouterr().out.strip().splitlines()[1].split(",")[-1])
        assert math.isclose(val, -0.5 * math.log(2.0 + 2.0 * math.cosh(0.5)), rel_tol=1e-13)

    def test_ising_value(self, capsys):
        assert main(["oracle", "ising", "--beta", "1", "--J", "1"]) == 0
        val = float(capsys.readouterr().out.strip().splitlines()[1].split(",")[-1])
        assert math.isclose(val, -math.log(2.0 * math.cosh(1.0)), rel_tol=1e-14)

    def test_unknown_model_rejected(self):
        with pytest.raises(SystemExit) as exc:
            main(["oracle", "heisenberg", "--beta", "1"])
        assert exc.value.code == 2
