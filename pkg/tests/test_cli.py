import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from descsys.cli import (
    SystemDescription,
    cmd_analyze,
    cmd_decompose,
    cmd_equilibria,
    cmd_simulate,
    dump_system,
    main,
    parse_system_text,
)
from descsys.errors import ParseError, ShapeError

DIAG = {"label": "diag", "F": [[1, 0], [0, 0]], "G": [[0.5, 0], [0, 1]], "y0": [1, 1]}
SINGULAR = {"F": [[1, 0], [0, 0]], "G": [[1, 0], [0, 0]]}


def write(tmp_path, doc, name="system.json"):
    path = tmp_path / name
    path.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return path


def decode(value, shape):
    """Report matrix to ndarray; complex entries arrive as [re, im] pairs."""
    arr = np.array(value, dtype=float)
    if arr.ndim == len(shape) + 1:
        arr = arr[..., 0] + 1j * arr[..., 1]
    return arr.reshape(shape)


def read_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], np.array([[float(x) for x in r] for r in rows[1:]])


class TestParse:
    def test_diag(self):
        desc = parse_system_text(json.dumps(DIAG))
        assert desc.m == 2 and desc.label == "diag"
        assert np.array_equal(desc.y0, [1, 1])

    def test_minimal(self):
        desc = parse_system_text('{"F": [[1]], "G": [[1]]}')
        assert desc.m == 1 and desc.y0 is None and desc.label == ""

    def test_complex_pairs(self):
        desc = parse_system_text('{"F": [[[1, 2]]], "G": [[3]]}')
        assert desc.F[0, 0] == 1 + 2j

    def test_non_square(self):
        with pytest.raises(ShapeError) as info:
            parse_system_text('{"F": [[1, 0, 0], [0, 1, 0]], "G": [[1, 0, 0], [0, 1, 0]]}')
        assert info.value.shapes["F"] == [2, 3]

    def test_mismatched_sizes(self):
        with pytest.raises(ShapeError):
            parse_system_text('{"F": [[1]], "G": [[1, 0], [0, 1]]}')

    def test_y0_length(self):
        with pytest.raises(ShapeError):
            parse_system_text('{"F": [[1]], "G": [[1]], "y0": [1, 2]}')

    def test_malformed_reports_position(self):
        with pytest.raises(ParseError) as info:
            parse_system_text('{"F": [[1]],\n "G": [[1]')
        assert info.value.line == 2

    @pytest.mark.parametrize("text", [
        "[1, 2]", '{"G": [[1]]}', '{"F": [["a"]], "G": [[1]]}',
        '{"F": [[true]], "G": [[1]]}', '{"F": [[1]], "G": [[1]], "label": 3}',
    ])
    def test_bad_documents(self, text):
        with pytest.raises(ParseError):
            parse_system_text(text)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 4), st.booleans(), st.integers(0, 2**32 - 1))
    def test_round_trip(self, m, with_y0, seed):
        rng = np.random.default_rng(seed)
        F = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
        G = rng.standard_normal((m, m))
        y0 = rng.standard_normal(m) * 1e-300 if with_y0 else None
        desc = SystemDescription(F, G.astype(complex), y0, "x")
        assert parse_system_text(dump_system(desc)) == desc


class TestAnalyze:
    def test_golden(self, tmp_path):
        status, text = cmd_analyze(write(tmp_path, DIAG))
        assert status == 0
        doc = json.loads(text)
        assert doc["stability"]["classification"] == "AsymptoticallyStable"
        assert abs(doc["stability"]["spectral_radius"] - 0.5) <= 1e-12
        assert abs(doc["consistency"]["distance"] - 1.0) <= 1e-12
        assert doc["spectrum"]["finite_eigenvalues"] == [{"value": 0.5, "block_size": 1}]
        assert (doc["spectrum"]["p"], doc["spectrum"]["q"]) == (1, 1)
        assert doc["equilibria"]["dimension"] == 0

    def test_without_y0(self, tmp_path):
        doc = {k: v for k, v in DIAG.items() if k != "y0"}
        status, text = cmd_analyze(write(tmp_path, doc))
        assert status == 0 and json.loads(text)["consistency"] is None

    def test_singular(self, tmp_path):
        status, text = cmd_analyze(write(tmp_path, SINGULAR))
        assert status == 2
        err = json.loads(text)["error"]
        assert err["type"] == "SingularPencil" and len(err["probes"]) == 3

    def test_missing_file(self, tmp_path):
        status, text = cmd_analyze(tmp_path / "absent.json")
        assert status == 1
        assert json.loads(text)["error"]["type"] == "FileNotFoundError"

    def test_parse_error(self, tmp_path):
        status, text = cmd_analyze(write(tmp_path, "{oops"))
        assert status == 3
        assert json.loads(text)["error"]["line"] == 1

    def test_complex_system(self, tmp_path):
        doc = {"F": [[1, 0], [0, 1]], "G": [[0, -0.5], [0.5, 0]]}
        status, text = cmd_analyze(write(tmp_path, doc))
        assert status == 0
        eigs = json.loads(text)["spectrum"]["finite_eigenvalues"]
        assert sorted(e["value"][1] for e in eigs) == pytest.approx([-0.5, 0.5])


class TestSimulate:
    def test_rows(self, tmp_path):
        status, text = cmd_simulate(write(tmp_path, DIAG), 3)
        assert status == 0
        header, rows = read_csv(text)
        assert header == ["k", "y_1", "y_2", "residual"]
        assert np.allclose(rows[:, 1:3], [[1, 0], [0.5, 0], [0.25, 0], [0.125, 0]], atol=1e-15)
        assert np.array_equal(rows[:, 0], np.arange(4))

    def test_zero_steps(self, tmp_path):
        _, text = cmd_simulate(write(tmp_path, DIAG), 0)
        _, rows = read_csv(text)
        assert rows.shape == (1, 4) and np.allclose(rows[0, 1:3], [1, 0])

    def test_missing_y0(self, tmp_path):
        status, text = cmd_simulate(write(tmp_path, {"F": [[1]], "G": [[0.5]]}), 3)
        assert status == 4
        assert json.loads(text)["error"]["type"] == "MissingInitialCondition"

    def test_negative_steps(self, tmp_path):
        with pytest.raises(ValueError):
            cmd_simulate(write(tmp_path, DIAG), -1)

    def test_out_file(self, tmp_path):
        out = tmp_path / "traj.csv"
        status, text = cmd_simulate(write(tmp_path, DIAG), 5, out)
        assert status == 0 and json.loads(text)["trajectory"]["rows"] == 6
        assert out.read_text() == cmd_simulate(write(tmp_path, DIAG), 5)[1]

    def test_complex_columns(self, tmp_path):
        doc = {"F": [[1, 0], [0, 1]], "G": [[0, -0.5], [0.5, 0]], "y0": [1, [0, 1]]}
        header, rows = read_csv(cmd_simulate(write(tmp_path, doc), 2)[1])
        assert header == ["k", "y_1_re", "y_1_im", "y_2_re", "y_2_im", "residual"]
        assert rows.shape == (3, 6)

    def test_lossless_digits(self, tmp_path):
        doc = {"F": [[1]], "G": [[1 / 3]], "y0": [1]}
        _, rows = read_csv(cmd_simulate(write(tmp_path, doc), 2)[1])
        assert rows[1, 1] == 1 / 3


class TestDecomposeAndEquilibria:
    def test_decompose_diag(self, tmp_path):
        status, text = cmd_decompose(write(tmp_path, DIAG))
        d = json.loads(text)["decomposition"]
        assert status == 0
        assert (d["p"], d["q"], d["Jp"], d["Hq"]) == (1, 1, [[0.5]], [[0.0]])

    def test_decompose_identity(self, tmp_path):
        doc = {"F": [[1, 0], [0, 1]], "G": [[0.5, 0.1], [0, 0.2]]}
        d = json.loads(cmd_decompose(write(tmp_path, doc))[1])["decomposition"]
        assert d["q"] == 0 and d["Hq"] == []

    def test_decompose_reproduces_canonical_form(self, tmp_path):
        rng = np.random.default_rng(0)
        F = rng.standard_normal((4, 4))
        F[:, 0] = F[:, 1]
        G = rng.standard_normal((4, 4))
        path = write(tmp_path, {"F": F.tolist(), "G": G.tolist()})
        d = json.loads(cmd_decompose(path)[1])["decomposition"]
        p, q = d["p"], d["q"]
        P, Q = decode(d["P"], (4, 4)), decode(d["Q"], (4, 4))
        Jp, Hq = decode(d["Jp"], (p, p)), decode(d["Hq"], (q, q))
        Z = np.zeros((p, q))
        assert np.allclose(P @ F @ Q, np.block([[np.eye(p), Z], [Z.T, Hq]]), atol=1e-8)
        assert np.allclose(P @ G @ Q, np.block([[Jp, Z], [Z.T, np.eye(q)]]), atol=1e-8)

    @pytest.mark.parametrize("command", [cmd_decompose, cmd_equilibria])
    def test_singular(self, tmp_path, command):
        assert command(write(tmp_path, SINGULAR))[0] == 2

    def test_equilibria_line(self, tmp_path):
        doc = {"F": [[1, 0], [0, 0]], "G": [[1, 0], [0, 1]]}
        eq = json.loads(cmd_equilibria(write(tmp_path, doc))[1])["equilibria"]
        assert eq["dimension"] == 1
        assert np.allclose(np.abs(np.array(eq["basis"])[:, 0]), [1, 0])

    def test_equilibria_trivial(self, tmp_path):
        doc = {"F": [[1, 0], [0, 1]], "G": [[0.5, 0], [0, 0.5]]}
        assert json.loads(cmd_equilibria(write(tmp_path, doc))[1])["equilibria"]["dimension"] == 0


class TestMain:
    def test_analyze(self, tmp_path, capsys):
        assert main(["analyze", str(write(tmp_path, DIAG))]) == 0
        assert json.loads(capsys.readouterr().out)["label"] == "diag"

    def test_tolerance_flags(self, tmp_path, capsys):
        main(["analyze", str(write(tmp_path, DIAG)), "--rank-rel", "1e-12"])
        assert json.loads(capsys.readouterr().out)["tolerances"]["rank_rel"] == 1e-12

    def test_bad_tolerance(self, tmp_path, capsys):
        assert main(["analyze", str(write(tmp_path, DIAG)), "--cluster-abs", "-1"]) == 3

    def test_negative_steps(self, tmp_path, capsys):
        assert main(["simulate", str(write(tmp_path, DIAG)), "--steps", "-2"]) == 3

    def test_deterministic(self, tmp_path, capsys):
        path = str(write(tmp_path, DIAG))
        outs = []
        for _ in range(2):
            main(["analyze", path])
            outs.append(capsys.readouterr().out)
        assert outs[0] == outs[1]

    def test_module_entry_point(self, tmp_path):
        path = str(write(tmp_path, SINGULAR))
        proc = subprocess.run([sys.executable, "-m", "descsys", "equilibria", path],
                              capture_output=True, text=True)
        assert proc.returncode == 2
        assert json.loads(proc.stdout)["error"]["type"] == "SingularPencil"
