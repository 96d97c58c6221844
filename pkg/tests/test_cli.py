import csv
import json
from pathlib import Path

import numpy as np
import pytest

from qmoolab.cli import (
    RESULT_COLUMNS,
    cmd_gen,
    cmd_oracle,
    main,
    report_boxdata,
    report_deltadata,
    run_matrix,
)
from qmoolab.bench import save_instance

from oracles import line_instance


def read_rows(path):
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def tiny_matrix(seeds=2, cells=None):
    return {
        "problems": [{"kind": "UMOCO-1", "n": 4, "count": 1, "seed": 3}],
        "run_seeds": seeds,
        "cells": cells or [{"algo": "qmoo", "budget": 21, "layers": 1}],
    }


class TestGen:
    def test_writes_count_files(self, tmp_path):
        files = cmd_gen("UMOCO-1", 6, 5, 1, tmp_path)
        assert len(files) == 5
        assert all(f.exists() for f in files)
        assert files[0].name == "UMOCO-1_6_0.json"

    def test_idempotent_bytes(self, tmp_path):
        first = cmd_gen("umoco2", 5, 3, 7, tmp_path)
        blobs = [f.read_bytes() for f in first]
        second = cmd_gen("umoco2", 5, 3, 7, tmp_path)
        assert [f.read_bytes() for f in second] == blobs

    def test_zero_count(self, tmp_path):
        assert cmd_gen("AFM", 4, 0, 0, tmp_path) == []

    def test_invalid_kind_exit_code(self, tmp_path, capsys):
        code = main(["gen", "--kind", "bogus", "--n", "4", "--out", str(tmp_path)])
        assert code == 1
        assert "bogus" in capsys.readouterr().err

    def test_cli_gen_runs(self, tmp_path):
        code = main(["gen", "--kind", "fm-afm", "--n", "4", "--count", "2",
                     "--seed", "5", "--out", str(tmp_path)])
        assert code == 0
        assert len(list(tmp_path.glob("FM-AFM_4_*.json"))) == 2


class TestOracle:
    def test_line_instance_front(self, tmp_path):
        path = tmp_path / "line.json"
        save_instance(line_instance(3), path)
        target = cmd_oracle(path)
        payload = json.loads(target.read_text())
        assert payload["front_size"] == 8
        assert len(payload["efficient"]) == 8
        assert payload["ideal"] == [0.0, -7.0]
        assert payload["nadir"] == [7.0, 0.0]

    def test_identical_objectives(self, tmp_path):
        from qmoolab.core import ObjectiveSpec, ProblemInstance
        inst = ProblemInstance(
            n=3, K=2,
            objectives=(ObjectiveSpec("linear", c=[1.0, 1.0, 1.0]),
                        ObjectiveSpec("linear", c=[1.0, 1.0, 1.0])),
        )
        path = tmp_path / "same.json"
        save_instance(inst, path)
        payload = json.loads(cmd_oracle(path).read_text())
        assert payload["front_size"] == 1

    def test_capability_exit_code(self, tmp_path):
        from qmoolab.core import ObjectiveSpec, ProblemInstance
        inst = ProblemInstance(
            n=26, K=2,
            objectives=(ObjectiveSpec("linear", c=np.ones(26)),
                        ObjectiveSpec("linear", c=-np.ones(26))),
        )
        path = tmp_path / "big.json"
        save_instance(inst, path)
        assert main(["oracle", str(path)]) == 2


class TestRunMatrix:
    def test_row_count_and_columns(self, tmp_path):
        out = tmp_path / "results.csv"
        written, failed = run_matrix(tiny_matrix(seeds=2), out)
        assert (written, failed) == (2, 0)
        rows = read_rows(out)
        assert len(rows) == 2
        assert list(rows[0]) == RESULT_COLUMNS
        assert {r["run_seed"] for r in rows} == {"0", "1"}

    def test_rerun_writes_nothing(self, tmp_path):
        out = tmp_path / "results.csv"
        run_matrix(tiny_matrix(), out)
        before = out.read_bytes()
        written, failed = run_matrix(tiny_matrix(), out)
        assert written == 0 and failed == 0
        assert out.read_bytes() == before

    def test_qmooc_rows_gain_paired_baseline(self, tmp_path):
        out = tmp_path / "results.csv"
        cells = [
            {"algo": "qmooc", "budget": 21, "layers": 1, "indicator": "ps", "p": 0.5},
            {"algo": "qmooc", "budget": 21, "layers": 1, "indicator": "od", "p": 0.5},
        ]
        written, _ = run_matrix(tiny_matrix(seeds=1, cells=cells), out)
        rows = read_rows(out)
        # two qmooc cells share one auto-added qmoo baseline per seed
        assert written == 3
        assert sum(r["algo"] == "qmoo" for r in rows) == 1
        assert sum(r["algo"] == "qmooc" for r in rows) == 2

    def test_full_indicator_sweep_row_count(self, tmp_path):
        # 10 weights x 6 indicators on one instance and seed: 60 rows plus one
        # shared baseline row
        out = tmp_path / "sweep.csv"
        cells = [
            {"algo": "qmooc", "budget": 21, "layers": 1,
             "indicator": ind, "p": round(0.1 * step, 1)}
            for ind in ("ps", "od", "m", "dm", "d", "ev")
            for step in range(1, 11)
        ]
        written, failed = run_matrix(tiny_matrix(seeds=1, cells=cells), out)
        assert failed == 0
        assert written == 61
        rows = read_rows(out)
        assert sum(r["algo"] == "qmoo" for r in rows) == 1

    def test_relative_hv_in_bounds(self, tmp_path):
        out = tmp_path / "results.csv"
        run_matrix(tiny_matrix(seeds=3), out)
        for row in read_rows(out):
            assert 0.0 <= float(row["rel_hv"]) <= 1.0 + 1e-9

    def test_instance_files_mode(self, tmp_path):
        inst_dir = tmp_path / "instances"
        files = cmd_gen("UMOCO-1", 4, 2, 0, inst_dir)
        out = tmp_path / "res.csv"
        matrix = {
            "instances": [str(f) for f in files],
            "run_seeds": 1,
            "cells": [{"algo": "qmoo", "budget": 21, "layers": 1}],
        }
        written, failed = run_matrix(matrix, out)
        assert (written, failed) == (2, 0)
        ids = {r["instance_id"] for r in read_rows(out)}
        assert ids == {"UMOCO-1_4_0", "UMOCO-1_4_1"}

    def test_deterministic_content(self, tmp_path):
        outs = []
        for name in ("a.csv", "b.csv"):
            out = tmp_path / name
            run_matrix(tiny_matrix(seeds=2), out)
            rows = read_rows(out)
            for r in rows:
                r.pop("wall_ms")
            outs.append(rows)
        assert outs[0] == outs[1]

    def test_parallel_same_content(self, tmp_path):
        matrix = {
            "problems": [{"kind": "UMOCO-1", "n": 4, "count": 2, "seed": 3}],
            "run_seeds": 1,
            "cells": [{"algo": "qmoo", "budget": 21, "layers": 1}],
        }
        serial, parallel = tmp_path / "s.csv", tmp_path / "p.csv"
        run_matrix(matrix, serial, jobs=1)
        run_matrix(matrix, parallel, jobs=2)
        strip = lambda rows: [{k: v for k, v in r.items() if k != "wall_ms"}
                              for r in rows]
        assert strip(read_rows(serial)) == strip(read_rows(parallel))

    def test_cli_run_via_flags(self, tmp_path):
        out = tmp_path / "cli.csv"
        code = main(["run", "--kind", "UMOCO-1", "--n", "4", "--count", "1",
                     "--seed", "3", "--algo", "qmoo", "--budget", "21",
                     "--layers", "1", "--seeds", "2", "--out", str(out)])
        assert code == 0
        assert len(read_rows(out)) == 2

    def test_usage_error_without_instances(self, tmp_path):
        code = main(["run", "--algo", "qmoo", "--out", str(tmp_path / "x.csv")])
        assert code == 1

    def test_env_out_dir_override(self, tmp_path, monkeypatch):
        override = tmp_path / "redirected"
        monkeypatch.setenv("QMOOLAB_OUT", str(override))
        run_matrix(tiny_matrix(seeds=1), "results.csv")
        assert (override / "results.csv").exists()

    def test_bad_cell_reported_without_aborting(self, tmp_path, capsys):
        out = tmp_path / "results.csv"
        cells = [
            {"algo": "qmoo", "budget": 21, "layers": 1},
            {"algo": "qmoo", "solver": "not-a-solver", "budget": 21, "layers": 1},
        ]
        written, failed = run_matrix(tiny_matrix(seeds=1, cells=cells), out)
        assert written == 1 and failed == 1
        assert "run failed" in capsys.readouterr().err
        assert len(read_rows(out)) == 1

    def test_partial_failure_exit_code(self, tmp_path):
        matrix_file = tmp_path / "matrix.json"
        matrix_file.write_text(json.dumps(tiny_matrix(
            seeds=1,
            cells=[{"algo": "qmoo", "budget": 21, "layers": 1},
                   {"algo": "qmoo", "solver": "not-a-solver", "budget": 21,
                    "layers": 1}])))
        code = main(["run", "--matrix", str(matrix_file),
                     "--out", str(tmp_path / "r.csv")])
        assert code == 3

    def test_resume_fills_only_missing_rows(self, tmp_path):
        out = tmp_path / "results.csv"
        run_matrix(tiny_matrix(seeds=1), out)  # seed 0 only
        one_row = read_rows(out)
        written, _ = run_matrix(tiny_matrix(seeds=3), out)  # wants seeds 0..2
        assert written == 2
        rows = read_rows(out)
        assert [r["run_seed"] for r in rows] == ["0", "1", "2"]
        assert rows[0] == one_row[0]


class TestReport:
    def build_results(self, tmp_path, seeds=3):
        out = tmp_path / "results.csv"
        cells = [
            {"algo": "qmoo", "budget": 21, "layers": 1},
            {"algo": "qmoom", "budget": 21, "layers": 1},
        ]
        run_matrix(tiny_matrix(seeds=seeds, cells=cells), out)
        return out

    def test_boxdata_single_row_group(self, tmp_path):
        results = self.build_results(tmp_path, seeds=1)
        box = report_boxdata(results, tmp_path / "box.csv")
        rows = read_rows(box)
        single = [r for r in rows if r["algo"] == "qmoo"][0]
        assert single["min"] == single["q1"] == single["median"] == single["max"]
        assert float(single["mean"]) == float(single["min"])

    def test_boxdata_quantiles_match_hand_computation(self, tmp_path):
        synthetic = tmp_path / "synth.csv"
        vals = [0.1, 0.2, 0.4, 0.8, 1.0]
        with synthetic.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
            writer.writeheader()
            for i, v in enumerate(vals):
                row = {c: "" for c in RESULT_COLUMNS}
                row.update({"algo": "qmoo", "solver": "nelder-mead", "kind": "X",
                            "n": "4", "instance_id": "0", "run_seed": str(i),
                            "rel_hv": repr(v), "hv": "0", "oracle_hv": "1"})
                writer.writerow(row)
        rows = read_rows(report_boxdata(synthetic, tmp_path / "box.csv"))
        assert len(rows) == 1
        got = rows[0]
        # linear-interpolation quantiles of [.1,.2,.4,.8,1.0]
        assert float(got["min"]) == 0.1
        assert float(got["q1"]) == 0.2
        assert float(got["median"]) == 0.4
        assert float(got["q3"]) == 0.8
        assert float(got["max"]) == 1.0
        assert float(got["mean"]) == pytest.approx(0.5)

    def test_deltadata_p_zero_is_exactly_zero(self, tmp_path):
        out = tmp_path / "results.csv"
        cells = [{"algo": "qmooc", "budget": 21, "layers": 1,
                  "indicator": "ps", "p": 0.0}]
        run_matrix(tiny_matrix(seeds=2, cells=cells), out)
        rows = read_rows(report_deltadata(out, tmp_path / "delta.csv"))
        assert len(rows) == 1
        assert rows[0]["indicator"] == "ps"
        assert float(rows[0]["mean_delta1"]) == 0.0
        assert float(rows[0]["mean_delta2"]) == 0.0
        assert rows[0]["pairs"] == "2"

    def test_deltadata_unmatched_excluded(self, tmp_path, capsys):
        synthetic = tmp_path / "synth.csv"
        with synthetic.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
            writer.writeheader()
            row = {c: "" for c in RESULT_COLUMNS}
            row.update({"algo": "qmooc", "solver": "nelder-mead", "indicator": "ps",
                        "p": "0.5", "kind": "X", "n": "4", "instance_id": "0",
                        "run_seed": "0", "hv": "1.0", "ps": "0.5"})
            writer.writerow(row)
        rows = read_rows(report_deltadata(synthetic, tmp_path / "delta.csv"))
        assert rows == []
        assert "excluded 1" in capsys.readouterr().err

    def test_report_cli(self, tmp_path):
        results = self.build_results(tmp_path, seeds=2)
        code = main(["report", str(results), "--mode", "boxdata",
                     "--out", str(tmp_path / "box.csv")])
        assert code == 0
        assert (tmp_path / "box.csv").exists()

    def test_empty_results_usage_error(self, tmp_path):
        empty = tmp_path / "empty.csv"
        with empty.open("w", newline="") as fh:
            csv.DictWriter(fh, fieldnames=RESULT_COLUMNS).writeheader()
        assert main(["report", str(empty), "--mode", "boxdata",
                     "--out", str(tmp_path / "box.csv")]) == 1
