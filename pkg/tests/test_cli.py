import json
import math

import numpy as np
import pytest

from lpmkl.cli import build_parser, main
from lpmkl.harness import RunConfig
from lpmkl.kernels import gaussian_kernel, write_kernel
from lpmkl.labels import LabelVector, write_labels


@pytest.fixture
def kernel_files(tmp_path, rng):
    values = np.where(rng.uniform(size=30) < 0.4, 1, -1).astype(np.int8)
    values[0] = 1
    values[1] = -1
    y = LabelVector(values)
    paths = []
    for j in range(2):
        X = rng.normal(size=(30, 2))
        if j == 0:
            X[:, 0] += np.where(y.values > 0, 1.0, -1.0)
        path = tmp_path / f"k{j}.kmx"
        write_kernel(path, gaussian_kernel(X, 1.5, name=f"k{j}"))
        paths.append(str(path))
    labels_path = tmp_path / "y.txt"
    write_labels(labels_path, y)
    return paths, str(labels_path)


class TestCli:
    def test_toy_subcommand(self, tmp_path, capsys):
        out = tmp_path / "out"
        rc = main(["toy", "--experiment", "1", "--reps", "1", "--seed", "3",
                   "--p-grid", "inf", "--c-grid", "1", "--out", str(out)])
        assert rc == 0
        assert (out / "summary.csv").exists()
        assert "sum" in capsys.readouterr().out

    def test_cv_subcommand(self, tmp_path, kernel_files, capsys):
        paths, labels_path = kernel_files
        out = tmp_path / "cvout"
        rc = main(["cv", "--kernels", ",".join(paths), "--labels", labels_path,
                   "--folds", "2", "--p-grid", "inf,2",
                   "--c-grid", "0.1,1", "--out", str(out)])
        assert rc == 0
        assert (out / "per_fold.csv").exists()
        assert (out / "selected.csv").exists()

    def test_align_subcommand(self, tmp_path, kernel_files):
        paths, labels_path = kernel_files
        out = tmp_path / "alignout"
        rc = main(["align", "--kernels", ",".join(paths),
                   "--labels", labels_path, "--out", str(out)])
        assert rc == 0
        matrix = (out / "alignment_matrix.csv").read_text().splitlines()
        assert matrix[0] == "kernel,k0,k1"

    def test_weights_subcommand(self, tmp_path, kernel_files):
        paths, labels_path = kernel_files
        out = tmp_path / "wout"
        rc = main(["weights", "--kernels", ",".join(paths),
                   "--labels", labels_path, "--p-grid", "1,inf",
                   "--c-grid", "1", "--out", str(out)])
        assert rc == 0
        assert (out / "betas.csv").exists()

    def test_noisedemo_subcommand(self, tmp_path):
        out = tmp_path / "nd"
        rc = main(["noisedemo", "--reps", "2", "--replicates", "3",
                   "--c-grid", "1", "--seed", "1", "--out", str(out)])
        assert rc == 0
        assert (out / "summary.csv").exists()

    def test_json_config_overrides_flags(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"repetitions": 2, "seed": 9,
                                        "p_grid": ["inf"]}))
        out = tmp_path / "out"
        rc = main(["toy", "--experiment", "1", "--reps", "1", "--seed", "3",
                   "--p-grid", "2,inf", "--c-grid", "1",
                   "--config", str(cfg_path), "--out", str(out)])
        assert rc == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["repetitions"] == 2
        assert manifest["config"]["seed"] == 9
        assert manifest["config"]["p_grid"] == ["inf"]

    def test_parser_rejects_unknown_command(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["frobnicate"])

    def test_inf_token(self):
        args = build_parser().parse_args(
            ["toy", "--experiment", "1", "--p-grid", "1.125,inf",
             "--out", "x"])
        assert args.p_grid == "1.125,inf"
