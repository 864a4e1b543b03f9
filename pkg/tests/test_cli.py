"""End-to-end runs of every CLI subcommand via main(argv)."""

import csv
import json

import numpy as np
import pytest

from contdpp.cli import main, read_chain_csv
from contdpp.kernels import KernelSpec, QualitySpec, SimilaritySpec, kernel_to_dict


@pytest.fixture
def kernel_json(tmp_path):
    spec = KernelSpec(
        quality=QualitySpec(center=np.zeros(1), cov=np.ones(1)),
        similarity=SimilaritySpec(cov=np.array([0.5])),
        dim=1,
    )
    path = tmp_path / "kernel.json"
    path.write_text(json.dumps(kernel_to_dict(spec)))
    return str(path)


@pytest.fixture
def polynomial_kernel_json(tmp_path):
    spec = KernelSpec(
        quality=QualitySpec(center=np.zeros(1), cov=np.ones(1)),
        similarity=SimilaritySpec(kind="polynomial", degree=2),
        dim=1,
    )
    path = tmp_path / "poly_kernel.json"
    path.write_text(json.dumps(kernel_to_dict(spec)))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestSample:
    def test_kdpp_sets_and_sidecar(self, kernel_json, tmp_path):
        out = str(tmp_path / "sets.csv")
        code = main([
            "sample", "--kernel", kernel_json, "--method", "nystrom",
            "--rank", "8", "--k", "3", "--n-sets", "2",
            "--seed", "5", "--out", out,
        ])
        assert code == 0
        rows = read_csv(out)
        assert rows[0] == ["set_id", "point_index", "x1"]
        assert len(rows) == 1 + 2 * 3
        with open(out + ".json") as fh:
            sidecar = json.load(fh)
        assert sidecar["seed"] == 5
        assert sidecar["map"]["type"] == "nystrom"

    def test_seed_reproducibility(self, kernel_json, tmp_path):
        outs = []
        for name, seed in (("a.csv", 7), ("b.csv", 7), ("c.csv", 8)):
            out = str(tmp_path / name)
            assert main([
                "sample", "--kernel", kernel_json, "--method", "rff",
                "--rank", "10", "--k", "2", "--seed", str(seed), "--out", out,
            ]) == 0
            outs.append(open(out).read())
        assert outs[0] == outs[1]
        assert outs[0] != outs[2]

    def test_variable_size_dpp(self, kernel_json, tmp_path):
        out = str(tmp_path / "dpp.csv")
        assert main([
            "sample", "--kernel", kernel_json, "--method", "nystrom",
            "--rank", "6", "--n-sets", "3", "--seed", "1", "--out", out,
        ]) == 0
        rows = read_csv(out)[1:]
        # set sizes are random (possibly zero), so only nonempty sets
        # contribute rows
        assert len(rows) > 0
        assert {row[0] for row in rows} <= {"0", "1", "2"}

    def test_plot_renders_png(self, kernel_json, tmp_path):
        out = str(tmp_path / "sets.csv")
        assert main([
            "sample", "--kernel", kernel_json, "--method", "nystrom",
            "--rank", "6", "--k", "2", "--seed", "2", "--out", out, "--plot",
        ]) == 0
        png = (tmp_path / "sets.csv.png").read_bytes()
        assert png[:8] == b"\x89PNG\r\n\x1a\n"


class TestTv:
    def test_sweep_rows(self, tmp_path):
        out = str(tmp_path / "tv.csv")
        code = main([
            "tv", "--sigma2", "0.5", "1.0", "--k", "2", "--rank", "6",
            "--methods", "nystrom", "--n-samples", "25", "--replicates", "2",
            "--seed", "3", "--out", out,
        ])
        assert code == 0
        rows = read_csv(out)
        assert len(rows) == 3  # header + one aggregated row per sigma2
        header = rows[0]
        tv_col = header.index("tv_mean")
        for row in rows[1:]:
            assert 0.0 <= float(row[tv_col]) <= 1.0
        assert (tmp_path / "tv.csv.json").exists()


class TestGibbsAndDiagnose:
    def test_chain_csv_round_trip_and_diagnose(self, kernel_json, tmp_path):
        chain_out = str(tmp_path / "chain.csv")
        code = main([
            "gibbs-kdpp", "--kernel", kernel_json, "--k", "3",
            "--n-cycles", "15", "--chains", "2", "--seed", "4",
            "--out", chain_out,
        ])
        assert code == 0
        chains = read_chain_csv(chain_out)
        assert set(chains) == {0, 1}
        assert chains[0].shape == (15, 3, 1)

        diag_out = str(tmp_path / "diag.json")
        assert main([
            "diagnose", "--chain", chain_out, "--truncation", "geyer",
            "--out", diag_out,
        ]) == 0
        with open(diag_out) as fh:
            payload = json.load(fh)
        assert set(payload["chains"]) == {"0", "1"}
        assert payload["mean_m"] > 0.0
        assert 0.0 < payload["mean_alpha"] <= 1.0


class TestMixture:
    def test_synthetic_run_with_heldout(self, tmp_path):
        out = str(tmp_path / "mog.csv")
        code = main([
            "mixture", "--prior", "dpp", "--synthetic", "poor-sep",
            "--n", "40", "--components", "3", "--n-iter", "30",
            "--burn-in", "10", "--thin", "2", "--heldout-fraction", "0.2",
            "--seed", "6", "--out", out,
        ])
        assert code == 0
        rows = read_csv(out)
        assert rows[0] == ["iter", "k", "pi_k", "mu_k", "sigma2_k"]
        assert len(rows) == 1 + 10 * 3
        with open(out + ".json") as fh:
            extras = json.load(fh)
        metrics = extras["metrics"]
        assert metrics["heldout_loglik"] is not None
        assert metrics["membership_entropy"] >= 0.0

    def test_data_file_input(self, tmp_path):
        data_path = tmp_path / "data.csv"
        values = np.linspace(-2, 2, 30)
        data_path.write_text("y\n" + "\n".join(str(v) for v in values) + "\n")
        out = str(tmp_path / "mog.csv")
        assert main([
            "mixture", "--prior", "iid", "--data", str(data_path),
            "--components", "2", "--n-iter", "20", "--burn-in", "5",
            "--thin", "1", "--seed", "7", "--out", out,
        ]) == 0
        assert len(read_csv(out)) == 1 + 15 * 2


class TestCoverage:
    def test_experiment_csv(self, tmp_path):
        out = str(tmp_path / "cov.csv")
        code = main([
            "coverage", "--n", "80", "--k", "5", "--rank", "10",
            "--method", "nystrom", "--seed", "8", "--out", out,
        ])
        assert code == 0
        rows = read_csv(out)
        assert rows[0] == ["epsilon", "coverage_dpp", "coverage_iid"]
        assert len(rows) == 51
        curve = [float(r[1]) for r in rows[1:]]
        assert curve == sorted(curve)


class TestExitCodes:
    def test_usage_error_exits_1(self):
        with pytest.raises(SystemExit) as exc:
            main(["sample", "--method", "rff"])  # missing required args
        assert exc.value.code == 1

    def test_config_error_returns_1(self, polynomial_kernel_json, tmp_path,
                                    capsys):
        code = main([
            "sample", "--kernel", polynomial_kernel_json, "--method", "rff",
            "--rank", "5", "--seed", "0",
            "--out", str(tmp_path / "out.csv"),
        ])
        assert code == 1
        assert "translation invariant" in capsys.readouterr().err

    def test_numeric_error_returns_2(self, tmp_path, capsys):
        # quality mass far outside the box starves landmark sampling
        spec = KernelSpec(
            quality=QualitySpec(center=np.array([100.0]), cov=np.ones(1)),
            similarity=SimilaritySpec(cov=np.ones(1)),
            dim=1,
            box=(np.array([-1.0]), np.array([1.0])),
        )
        path = tmp_path / "far.json"
        path.write_text(json.dumps(kernel_to_dict(spec)))
        code = main([
            "sample", "--kernel", str(path), "--method", "nystrom",
            "--rank", "5", "--k", "2", "--seed", "0",
            "--out", str(tmp_path / "out.csv"),
        ])
        assert code == 2
        assert "numerical failure" in capsys.readouterr().err

    def test_io_error_returns_3(self, kernel_json, tmp_path, capsys):
        code = main([
            "sample", "--kernel", kernel_json, "--method", "nystrom",
            "--rank", "5", "--k", "2", "--seed", "0",
            "--out", str(tmp_path / "missing_dir" / "out.csv"),
        ])
        assert code == 3
        assert "I/O error" in capsys.readouterr().err
