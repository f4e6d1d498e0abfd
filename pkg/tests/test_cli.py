import csv
import io
import json
import math

import numpy as np
import pytest

from markov_hoeffding import cli
from markov_hoeffding.bounds import bound_t62, mcmc_plan
from markov_hoeffding.chain import MeasurePair, absolute_lambda, build_chain, right_lambda

BD = [[0.5, 0.5, 0.0], [0.25, 0.5, 0.25], [0.0, 0.5, 0.5]]


def dump(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def lp_matrix(pi, c):
    pi = np.asarray(pi, float)
    return (c * np.eye(len(pi)) + (1 - c) * np.outer(np.ones(len(pi)), pi)).tolist()


def parse_csv(text):
    """Split an emitted table into (header json, column names, rows)."""
    lines = text.splitlines()
    assert lines[0].startswith("# ")
    head = json.loads(lines[0][2:])
    reader = csv.DictReader(io.StringIO("\n".join(lines[1:])))
    return head, reader.fieldnames, list(reader)


def run(capsys, argv):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def files(tmp_path):
    return {
        "bd": dump(tmp_path / "bd.json", {"P": BD}),
        "lp": dump(tmp_path / "lp.json", {"P": lp_matrix([0.2, 0.3, 0.5], 0.3)}),
        "rot": dump(tmp_path / "rot.json", {"P": [[0, 1], [1, 0]]}),
        "f": dump(tmp_path / "f.json", {"values": [0, 0.5, 1], "a": 0, "b": 1, "n": 6}),
        "f2": dump(tmp_path / "f2.json", {"values": [0, 1], "a": 0, "b": 1, "n": 4}),
        "nu": dump(tmp_path / "nu.json", {"nu": [1, 0, 0]}),
        "dir": tmp_path,
    }


class TestGap:
    def test_birth_death(self, capsys, files):
        code, out, _ = run(capsys, ["gap", files["bd"]])
        doc = json.loads(out)
        assert code == 0
        assert doc["lambda_abs"] == pytest.approx(0.5, abs=1e-12)
        assert doc["alpha_abs_defined"] and len(doc["manifest_sha256"]) == 64

    def test_leon_perron(self, capsys, files):
        doc = json.loads(run(capsys, ["gap", files["lp"]])[1])
        assert doc["lambda_abs"] == pytest.approx(0.3, abs=1e-12)
        assert doc["lambda_right"] == pytest.approx(0.3, abs=1e-12)

    def test_rotation_alpha_undefined(self, capsys, files):
        doc = json.loads(run(capsys, ["gap", files["rot"]])[1])
        assert doc["lambda_abs"] == pytest.approx(1.0) and not doc["alpha_abs_defined"]
        assert doc["alpha_abs"] is None

    def test_k_csv(self, capsys, files):
        path = files["dir"] / "k.csv"
        assert run(capsys, ["gap", files["bd"], "--k-max", "8", "--k-csv", str(path)])[0] == 0
        head, cols, rows = parse_csv(path.read_text())
        assert cols == ["k", "lambda_k"] and len(rows) == 8
        assert head["manifest"]["command"] == "gap"

    def test_identity_rejected(self, capsys, tmp_path):
        code, _, err = run(capsys, ["gap", dump(tmp_path / "i.json", {"P": np.eye(3).tolist()})])
        assert code == 2 and "DegenerateStationary" in err

    def test_not_stochastic(self, capsys, tmp_path):
        code, _, err = run(capsys, ["gap", dump(tmp_path / "x.json", {"P": [[0.5, 0.6], [0.5, 0.5]]})])
        assert code == 2 and "NotStochastic" in err

    def test_missing_file(self, capsys, tmp_path):
        assert run(capsys, ["gap", str(tmp_path / "nope.json")])[0] == 2

    def test_bad_json(self, capsys, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{")
        assert run(capsys, ["gap", str(p)])[0] == 2


class TestBound:
    def tables(self, capsys, files, *extra):
        prefix = str(files["dir"] / "out")
        code, _, err = run(capsys, ["bound", files["bd"], files["f"], "--out", prefix, *extra])
        assert code == 0, err
        mgf = parse_csv(open(prefix + "_mgf.csv").read())
        tail = parse_csv(open(prefix + "_tail.csv").read())
        return mgf, tail

    @pytest.mark.parametrize("thm", ["classical", "t21", "t22", "t23", "t62", "ta1"])
    def test_schema_and_ratio(self, capsys, files, thm):
        (h1, c1, mgf), (h2, c2, tail) = self.tables(
            capsys, files, "--theorem", thm, "--eps-grid", "1,2", "--reps", "300", "--seed", "4")
        assert c1 == cli.MGF_COLUMNS and c2 == cli.TAIL_COLUMNS
        assert h1["manifest_sha256"] == h2["manifest_sha256"]
        assert len(mgf) == 4 and len(tail) == 2
        if thm != "classical":
            assert all(float(r["ratio"]) <= 1 + 1e-9 for r in mgf)
        for r in tail:
            assert 0 <= float(r["empirical_tail"]) <= 1 and float(r["wilson_halfwidth"]) > 0

    def test_t21_on_product_matches_classical(self, capsys, tmp_path):
        P = dump(tmp_path / "pi.json", {"P": lp_matrix([0.2, 0.3, 0.5], 0.0)})
        f = dump(tmp_path / "f.json", {"values": [0, 1, 0.5], "a": 0, "b": 1, "n": 5})
        out = {}
        for thm in ("t21", "classical"):
            _, text, _ = run(capsys, ["bound", P, f, "--theorem", thm])
            out[thm] = [float(r["bound"]) for r in parse_csv(text.split("\n\n")[0])[2]]
        # the computed lambda of a rank-one kernel is zero up to roundoff
        np.testing.assert_allclose(out["t21"], out["classical"], rtol=1e-12)

    def test_t62_monotone_in_burn_in(self, capsys, files):
        vals = []
        for n0 in (0, 2, 8):
            _, text, _ = run(capsys, ["bound", files["bd"], files["f"], "--theorem", "t62",
                                      "--nu-file", files["nu"], "--p", "2", "--n0", str(n0),
                                      "--t-grid", "1"])
            vals.append(float(parse_csv(text.split("\n\n")[0])[2][0]["bound"]))
        assert vals[0] >= vals[1] >= vals[2]

    def test_t22_needs_identical(self, capsys, files, tmp_path):
        f = dump(tmp_path / "fs.json", {"functions": [{"values": [0, 1, 0]}, {"values": [1, 0, 0]}]})
        code, _, _ = run(capsys, ["bound", files["bd"], f, "--theorem", "t22"])
        assert code == 2

    def test_size_mismatch(self, capsys, files):
        assert run(capsys, ["bound", files["bd"], files["f2"]])[0] == 2

    def test_seeded_determinism(self, capsys, files, monkeypatch):
        argv = ["bound", files["bd"], files["f"], "--eps-grid", "1", "--reps", "200"]
        monkeypatch.setenv(cli.SEED_ENV, "11")
        a = run(capsys, argv)[1]
        b = run(capsys, argv + ["--seed", "11"])[1]
        c = run(capsys, argv + ["--seed", "12"])[1]
        tail = lambda s: parse_csv(s.split("\n\n")[1])[2]
        assert tail(a) == tail(b)
        assert parse_csv(a.split("\n\n")[1])[0]["manifest"]["seed"] == 11
        assert parse_csv(c.split("\n\n")[1])[0]["manifest"]["seed"] == 12


class TestPlan:
    def plan(self, capsys, path, *extra):
        code, out, err = run(capsys, ["plan", path, *extra])
        assert code == 0, err
        return json.loads(out)

    def test_matches_library(self, capsys, files):
        doc = self.plan(capsys, files["lp"], "--eps", "0.1", "--delta", "0.05")
        chain = build_chain(lp_matrix([0.2, 0.3, 0.5], 0.3))
        ref = mcmc_plan(absolute_lambda(chain), right_lambda(chain),
                        MeasurePair(chain.pi, chain.pi, math.inf), 0, (0, 1), 0.1, 0.05)
        assert doc["n_required"] == ref.n_required and doc["p"] == "inf"

    def test_eps_halved(self, capsys, files):
        n1 = self.plan(capsys, files["bd"], "--eps", "0.02", "--delta", "0.05")["n_required"]
        n2 = self.plan(capsys, files["bd"], "--eps", "0.01", "--delta", "0.05")["n_required"]
        assert abs(n2 - 4 * n1) <= 4

    def test_round_trip_with_nu(self, capsys, files):
        doc = self.plan(capsys, files["bd"], "--eps", "0.05", "--delta", "0.01",
                        "--nu-file", files["nu"], "--p", "2", "--n0", "3")
        chain = build_chain(BD)
        mp = MeasurePair(np.array([1.0, 0, 0]), chain.pi, 2.0)
        lam, lr = absolute_lambda(chain), right_lambda(chain)
        n = doc["n_required"]

        def tail(m):
            return bound_t62(lam, lr, mp, 3, (0, 1), m, eps=m * 0.05).tail_bound_at_eps

        assert tail(n) <= 0.01 < tail(n - 1)

    def test_bad_delta(self, capsys, files):
        assert run(capsys, ["plan", files["bd"], "--eps", "0.1", "--delta", "1.5"])[0] == 2


class TestTheta:
    def test_table(self, capsys, files):
        out = files["dir"] / "theta.csv"
        assert run(capsys, ["theta", "--lam", "0.4", "--mu", "0.3", "--out", str(out)])[0] == 0
        _, cols, rows = parse_csv(out.read_text())
        assert cols == cli.THETA_COLUMNS and len(rows) == 5
        for r in rows:
            assert float(r["theta"]) <= float(r["theta_tilde"]) * (1 + 1e-12)

    def test_invalid(self, capsys):
        assert run(capsys, ["theta", "--lam", "1.5", "--mu", "0.3"])[0] == 2


class TestExperiment:
    def suite(self, capsys, tmp_path, name, cfg, *extra):
        path = dump(tmp_path / f"{name}.json", cfg)
        out = tmp_path / f"{name}.csv"
        code, _, err = run(capsys, ["experiment", path, "--suite", name, "--out", str(out), *extra])
        return code, err, (parse_csv(out.read_text()) if out.exists() else None)

    def test_ols(self, capsys, tmp_path):
        cfg = {"lp": {"pi": [0.2, 0.3, 0.5], "c": 0.2}, "d_feat": 2, "sigma": 0.5,
               "delta": 0.1, "runs": 6, "feature_seed": 1}
        code, err, (head, cols, rows) = self.suite(capsys, tmp_path, "ols", cfg, "--seed", "3")
        assert code == 0, err
        assert cols == cli.RUN_COLUMNS and len(rows) == 7
        assert rows[-1]["run_id"] == "summary" and head["manifest"]["seed"] == 3
        assert [int(r["seed"]) for r in rows[:-1]] == list(range(3, 9))

    def test_jobs_equal_serial(self, capsys, tmp_path):
        cfg = {"lp": {"pi": [0.2, 0.3, 0.5], "c": 0.2}, "d_feat": 2, "sigma": 0.5,
               "delta": 0.1, "runs": 4}
        a = self.suite(capsys, tmp_path, "ols", cfg)[2][2]
        b = self.suite(capsys, tmp_path, "ols", cfg, "--jobs", "2")[2][2]
        assert a == b

    def test_cov(self, capsys, tmp_path):
        cfg = {"P": lp_matrix(np.full(8, 1 / 8), 0.3), "n_blocks": 4, "s": 2, "m": 1.0,
               "delta": 1.0, "n": 3000, "runs": 4}
        code, err, (_, _, rows) = self.suite(capsys, tmp_path, "cov", cfg)
        assert code == 0, err
        assert all(r["error"] == "" for r in rows[:-1])
        assert rows[-1]["run_id"] == "summary"

    def test_lasso(self, capsys, tmp_path):
        cfg = {"lp": {"pi": [0.25] * 4, "c": 0.5}, "d_feat": 3, "s": 1, "delta": 1.0,
               "n_grid": [100, 10**6]}
        code, err, (_, _, rows) = self.suite(capsys, tmp_path, "lasso", cfg)
        assert code == 0, err
        assert [r["pass"] for r in rows] == ["False", "True"]
        assert all(float(r["metric"]) < float(r["bound"]) for r in rows)

    def test_rds(self, capsys, tmp_path):
        (tmp_path / "g.txt").write_text("\n".join(f"0 {k}" for k in range(1, 6)) + "\n1 2\n")
        cfg = {"graph": "g.txt", "infected": [1, 0, 0, 0, 0, 0], "n": 2000, "eps": 0.1, "runs": 5}
        code, err, (_, _, rows) = self.suite(capsys, tmp_path, "rds", cfg)
        assert code == 0, err
        assert len(rows) == 6

    def test_rds_disconnected(self, capsys, tmp_path):
        (tmp_path / "g.txt").write_text("0 1\n2 3\n")
        cfg = {"graph": "g.txt", "infected": [1, 0, 0, 0], "n": 50, "eps": 0.1, "runs": 2}
        code, err, out = self.suite(capsys, tmp_path, "rds", cfg)
        assert code == 3 and "Disconnected" in err and out is None

    def test_bandit(self, capsys, tmp_path):
        arm = lambda m: {"lp": {"pi": [1 - m, m], "c": 0.5}, "reward": [0, 1]}
        cfg = {"arms": [arm(0.6), arm(0.4)], "c": 7, "T": 500, "runs": 3}
        code, err, (_, _, rows) = self.suite(capsys, tmp_path, "bandit", cfg)
        assert code == 0, err
        assert rows[-1]["pass"] == "True"

    def test_bandit_c_too_small(self, capsys, tmp_path):
        arm = lambda m: {"lp": {"pi": [1 - m, m], "c": 0.5}, "reward": [0, 1]}
        cfg = {"arms": [arm(0.6), arm(0.4)], "c": 2, "T": 500, "runs": 3}
        code, err, _ = self.suite(capsys, tmp_path, "bandit", cfg)
        assert code == 3 and "CTooSmall" in err

    def test_counterexample(self, capsys, tmp_path):
        cfg = {"lams": [0.3, 0.5], "t": 1.0, "n_grid": [10, 20, 30]}
        code, err, (_, cols, rows) = self.suite(capsys, tmp_path, "counterexample", cfg)
        assert code == 0, err
        assert cols == ["lam", "n", "log_mgf", "log_mgf_per_n", "implied_alpha"]
        for lam in ("0.3", "0.5"):
            per_n = [float(r["log_mgf_per_n"]) for r in rows if r["lam"] == lam]
            assert per_n == sorted(per_n) and len(set(per_n)) == 3

    def test_missing_key(self, capsys, tmp_path):
        code, err, _ = self.suite(capsys, tmp_path, "ols", {"lp": {"pi": [0.5, 0.5], "c": 0.1}})
        assert code == 2


def test_no_command(capsys):
    with pytest.raises(SystemExit):
        cli.main([])


def test_manifest_digest_stable():
    m = cli.RunManifest("x", {"a": 1}, 3)
    assert m.digest() == cli.RunManifest("x", {"a": 1}, 3).digest()
    assert m.digest() != cli.RunManifest("x", {"a": 1}, 4).digest()
