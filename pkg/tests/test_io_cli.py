import json

import numpy as np
import pytest

from laplace_learn.cli import main
from laplace_learn.errors import InvalidInputError
from laplace_learn.experiments import ExperimentConfig, read_records, run_convergence_experiment
from laplace_learn.graph import laplacian_from_weights, make_graph
from laplace_learn.io import read_edgelist, read_matrix, read_report, write_edgelist, write_matrix
from laplace_learn.losses import sym_stein_loss

from oracles import eig_pinv


def test_matrix_round_trip_is_exact(tmp_path, rng):
    A = rng.standard_normal((7, 5)) * 10.0 ** rng.integers(-300, 300, (7, 5))
    A[0, 0] = 0.1 + 0.2
    write_matrix(tmp_path / "a.csv", A)
    B = read_matrix(tmp_path / "a.csv")
    assert A.tobytes() == B.tobytes()


def test_matrix_rejects_ragged(tmp_path):
    (tmp_path / "r.csv").write_text("1,2\n3\n")
    with pytest.raises(InvalidInputError):
        read_matrix(tmp_path / "r.csv")


def test_edgelist_round_trip_and_default_weight(tmp_path):
    t = make_graph("grid", 9)
    w = np.linspace(0.1, 2.0, t.m)
    write_edgelist(tmp_path / "g.edges", t, w)
    t2, w2 = read_edgelist(tmp_path / "g.edges")
    assert t2 == t and w2.tobytes() == w.tobytes()
    (tmp_path / "h.edges").write_text("p=3\n3 2\n1 2 0.5\n")
    t3, w3 = read_edgelist(tmp_path / "h.edges")
    assert t3.edges == ((0, 1), (1, 2)) and list(w3) == [0.5, 1.0]


def test_graph_make_writes_one_based_edges(tmp_path):
    out = tmp_path / "path.edges"
    assert main(["graph", "make", "--kind", "path", "--p", "3", "--out", str(out)]) == 0
    assert out.read_text().splitlines() == ["p=3", "1 2 1.0", "2 3 1.0"]


def test_graph_make_bad_grid_exits_1(tmp_path, capsys):
    assert main(["graph", "make", "--kind", "grid", "--p", "8", "--out", str(tmp_path / "g")]) == 1
    err = capsys.readouterr().err.strip()
    assert err.startswith("laplace-learn: error:") and "\n" not in err


def test_check_existence_constant_data(tmp_path, capsys):
    write_matrix(tmp_path / "x.csv", np.ones((4, 5)))
    assert main(["check-existence", "--data", str(tmp_path / "x.csv")]) == 2
    out = capsys.readouterr().out
    assert "exists=false" in out and "data graph is empty" in out


def test_check_existence_passes(tmp_path, capsys, rng):
    write_matrix(tmp_path / "x.csv", rng.standard_normal((4, 3)))
    assert main(["check-existence", "--data", str(tmp_path / "x.csv")]) == 0
    assert "exists=true" in capsys.readouterr().out


def test_missing_file_exits_1(tmp_path):
    assert main(["check-existence", "--data", str(tmp_path / "nope.csv")]) == 1


def test_estimate_tree_on_star_population(tmp_path):
    t = make_graph("star", 9)
    write_edgelist(tmp_path / "star.edges", t)
    write_matrix(tmp_path / "S.csv", eig_pinv(laplacian_from_weights(t, np.ones(8))))
    prefix = tmp_path / "est"
    rc = main(["estimate", "--cov", str(tmp_path / "S.csv"), "--edges", str(tmp_path / "star.edges"),
               "--tree", "--out", str(prefix)])
    assert rc == 0
    t2, w = read_edgelist(f"{prefix}.edges")
    assert t2 == t
    np.testing.assert_allclose(w, 1.0, atol=1e-10)
    rep = read_report(f"{prefix}.report")
    assert rep["estimator"] == "tree" and float(rep["kkt_stationarity"]) <= 1e-10
    L = read_matrix(f"{prefix}.laplacian.csv")
    np.testing.assert_allclose(L, laplacian_from_weights(t, np.ones(8)), atol=1e-10)


def test_estimate_cgl_and_ggl(tmp_path, rng):
    write_matrix(tmp_path / "x.csv", rng.standard_normal((5, 12)))
    assert main(["estimate", "--data", str(tmp_path / "x.csv"), "--out", str(tmp_path / "c")]) == 0
    rep = read_report(tmp_path / "c.report")
    assert int(rep["sweeps"]) >= 1 and float(rep["kkt_dual_feasibility"]) <= 1e-8
    assert main(["estimate", "--data", str(tmp_path / "x.csv"), "--ggl", "--alpha", "0.1",
                 "--out", str(tmp_path / "g")]) == 0
    theta = read_matrix(tmp_path / "g.theta.csv")
    assert np.all(theta[~np.eye(5, dtype=bool)] <= 0)


def test_estimate_nonexistent_exits_2(tmp_path):
    X = np.ones((3, 4))
    write_matrix(tmp_path / "x.csv", X)
    assert main(["estimate", "--data", str(tmp_path / "x.csv"), "--out", str(tmp_path / "o")]) == 2


def test_loss_command(tmp_path, capsys):
    t = make_graph("path", 2)
    write_matrix(tmp_path / "a.csv", laplacian_from_weights(t, [2.0]))
    write_matrix(tmp_path / "b.csv", laplacian_from_weights(t, [1.0]))
    assert main(["loss", "--a", str(tmp_path / "a.csv"), "--b", str(tmp_path / "b.csv")]) == 0
    fields = dict(ln.split("=", 1) for ln in capsys.readouterr().out.splitlines())
    assert float(fields["stein_forward"]) == pytest.approx(1 - np.log(2))
    assert set(fields) >= {"stein_forward", "stein_backward", "symmetrized", "cross_check_gap"}


def test_experiment_rejects_unknown_keys(tmp_path):
    (tmp_path / "c.json").write_text(json.dumps({"trials": 2, "trails": 3}))
    assert main(["experiment", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path / "r.csv")]) == 1


def test_round_trip_reproduces_experiment_cell(tmp_path):
    cfg = {"graph_families": ["grid"], "p_values": [16], "n_values": [40, 80], "trials": 2,
           "base_seed": 5, "constraint_mode": "unconstrained"}
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    assert main(["experiment", "--config", str(tmp_path / "cfg.json"), "--out", str(tmp_path / "res.csv")]) == 0
    rows = read_records(tmp_path / "res.csv")
    row = next(r for r in rows if r["n"] == "80" and r["trial"] == "1")

    d = tmp_path
    assert main(["graph", "make", "--kind", "grid", "--p", "16", "--out", str(d / "g.edges")]) == 0
    assert main(["graph", "laplacian", "--edges", str(d / "g.edges"), "--out", str(d / "L.csv")]) == 0
    assert main(["sample", "--laplacian", str(d / "L.csv"), "--n", "80", "--seed", row["seed"],
                 "--trial", "1", "--out", str(d / "X.csv")]) == 0
    assert main(["estimate", "--data", str(d / "X.csv"), "--out", str(d / "est")]) == 0
    loss = sym_stein_loss(read_matrix(d / "est.laplacian.csv"), read_matrix(d / "L.csv")).symmetrized
    assert loss == pytest.approx(float(row["loss_sym_stein"]), rel=1e-6)
    assert main(["loss", "--a", str(d / "est.laplacian.csv"), "--b", str(d / "L.csv")]) == 0
