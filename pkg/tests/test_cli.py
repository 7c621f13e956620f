import json

import numpy as np

from etaudit import __version__, load_csv
from etaudit.cli import (
    EXIT_DATA,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VIOLATION,
    render_report,
    run,
)


def gen(tmp_path, kind="indirect", gamma="0.6", n="900", seed="0", name="d.csv"):
    out = str(tmp_path / name)
    args = ["generate", "--kind", kind, "--n", n, "--seed", seed, "--out", out]
    if gamma is not None:
        args += ["--gamma", gamma]
    assert run(args) == EXIT_OK
    return out


class TestGenerate:
    def test_writes_csv_and_sidecar(self, tmp_path):
        out = gen(tmp_path)
        ds = load_csv(out, target="y", protected="z")
        assert ds.n_rows == 900
        assert ds.feature_names == ("x1", "x2", "x3", "x4", "y_prob")
        meta = json.loads((tmp_path / "d.csv.meta.json").read_text())
        assert meta["tool"] == "etaudit"
        assert meta["version"] == __version__
        assert meta["spec"]["kind"] == "indirect"
        assert meta["spec"]["gamma"] == 0.6
        assert meta["roles"] == {"target": "y", "protected": "z"}

    def test_rerun_identical_artifacts(self, tmp_path):
        a = gen(tmp_path, name="a.csv")
        b = gen(tmp_path, name="b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_bad_kind_is_usage_error(self, tmp_path):
        code = run(["generate", "--kind", "bogus", "--out", str(tmp_path / "x.csv")])
        assert code == EXIT_USAGE

    def test_missing_gamma_is_data_error(self, tmp_path):
        code = run(["generate", "--kind", "indirect", "--out", str(tmp_path / "x.csv")])
        assert code == EXIT_DATA


class TestAudit:
    def audit(self, tmp_path, data, extra=()):
        out = str(tmp_path / "report.json")
        args = [
            "audit", "--data", data, "--target", "y", "--protected", "z",
            "--drop", "x4,y_prob", "--pair", "0:1",
            "--model", "logistic", "--inspector", "logistic", "--shap", "linear",
            "--bootstrap", "1", "--seed", "0", "--out", out,
        ] + list(extra)
        return run(args), out

    def test_basic_audit_flow(self, tmp_path):
        # default gbt model + exact explanations: an uninformative-case
        # audit lands in the null band
        data = gen(tmp_path, gamma="0.9", kind="uninformative", n="3000")
        out = str(tmp_path / "report.json")
        code = run([
            "audit", "--data", data, "--target", "y", "--protected", "z",
            "--drop", "x4,y_prob", "--pair", "0:1", "--shap", "exact",
            "--background-cap", "64", "--bootstrap", "1", "--seed", "0",
            "--out", out,
        ])
        assert code == EXIT_OK
        doc = json.loads((tmp_path / "report.json").read_text())
        assert doc["version"] == __version__
        assert doc["seed"] == 0
        assert len(doc["reports"]) == 1
        rep = doc["reports"][0]
        assert 0.4 <= rep["et"]["auc"] <= 0.6  # null band for uninformative data
        assert rep["config"]["model"] == "gbt"

    def test_fail_on_violation_exit_code(self, tmp_path):
        data = gen(tmp_path, gamma="0.99", kind="indirect", n="3000")
        code, _ = self.audit(tmp_path, data, extra=["--fail-on-violation"])
        assert code == EXIT_VIOLATION
        # without the flag the same audit exits 0
        code2, _ = self.audit(tmp_path, data)
        assert code2 == EXIT_OK

    def test_pair_all_expands(self, tmp_path):
        rng = np.random.default_rng(0)
        rows = ["x1,z,y"]
        labs = ["a", "b", "c"]
        for i in range(240):
            rows.append(f"{rng.normal():.6f},{labs[i % 3]},{i % 2}")
        data = tmp_path / "multi.csv"
        data.write_text("\n".join(rows) + "\n")
        out = str(tmp_path / "rep.json")
        code = run([
            "audit", "--data", str(data), "--target", "y", "--protected", "z",
            "--pair", "all", "--model", "logistic", "--inspector", "logistic",
            "--shap", "linear", "--bootstrap", "1", "--out", out,
        ])
        assert code == EXIT_OK
        doc = json.loads((tmp_path / "rep.json").read_text())
        assert len(doc["reports"]) == 3  # C(3, 2)

    def test_missing_column_is_data_error(self, tmp_path):
        data = gen(tmp_path)
        code = run([
            "audit", "--data", data, "--target", "nope", "--protected", "z",
            "--pair", "0:1", "--out", str(tmp_path / "r.json"),
        ])
        assert code == EXIT_DATA

    def test_unknown_flag_rejected(self, tmp_path):
        assert run(["audit", "--frobnicate"]) == EXIT_USAGE

    def test_summary_csv(self, tmp_path):
        data = gen(tmp_path, n="900")
        out = str(tmp_path / "r.json")
        summary = str(tmp_path / "summary.csv")
        code = run([
            "audit", "--data", data, "--target", "y", "--protected", "z",
            "--drop", "x4,y_prob", "--pair", "0:1", "--model", "logistic",
            "--shap", "linear", "--bootstrap", "1", "--out", out,
            "--summary-csv", summary,
        ])
        assert code == EXIT_OK
        lines = (tmp_path / "summary.csv").read_text().strip().splitlines()
        assert lines[0].startswith("pair,et_auc")
        assert len(lines) == 2
        assert (tmp_path / "summary.csv.meta.json").exists()

    def test_deterministic_report_bytes(self, tmp_path):
        data = gen(tmp_path, n="900")
        _, out1 = self.audit(tmp_path, data)
        first = (tmp_path / "report.json").read_bytes()
        _, out2 = self.audit(tmp_path, data)
        assert (tmp_path / "report.json").read_bytes() == first


class TestSweepCommand:
    def test_sweep_csv(self, tmp_path):
        data = gen(tmp_path, n="900")
        out = str(tmp_path / "sweep.csv")
        code = run([
            "sweep", "--data", data, "--target", "y", "--protected", "z",
            "--drop", "x4,y_prob", "--pair", "0:1",
            "--models", "logistic,tree", "--inspectors", "logistic",
            "--depths", "2", "--shap", "exact", "--background-cap", "32",
            "--seed", "0", "--out", out,
        ])
        assert code == EXIT_OK
        lines = (tmp_path / "sweep.csv").read_text().strip().splitlines()
        assert lines[0] == "model,inspector,et_auc,et_p,error"
        assert len(lines) == 3


class TestPowerCommand:
    def test_power_csv_schema(self, tmp_path):
        out = str(tmp_path / "power.csv")
        code = run(["power", "--runs", "40", "--n", "300", "--seed", "0",
                    "--mus", "0.0,0.1", "--out", out])
        assert code == EXIT_OK
        lines = (tmp_path / "power.csv").read_text().strip().splitlines()
        assert lines[0] == "mu,power_auc,power_accuracy,runs,n"
        assert len(lines) == 3
        meta = json.loads((tmp_path / "power.csv.meta.json").read_text())
        assert meta["config"]["runs"] == 40


class TestCounterexamplesCommand:
    def test_three_pass_lines(self, tmp_path, capsys):
        out = str(tmp_path / "cx.json")
        code = run(["counterexamples", "--seed", "0", "--n", "4000", "--out", out])
        assert code == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines == ["lundberg: PASS", "ex42: PASS", "squared_dependence: PASS"]
        doc = json.loads((tmp_path / "cx.json").read_text())
        assert all(doc["results"][k]["passed"] for k in doc["results"])


class TestReportCommand:
    def test_render_is_pure_function_of_json(self, tmp_path, capsys):
        data = gen(tmp_path, gamma="0.99", n="3000")
        out = str(tmp_path / "r.json")
        run([
            "audit", "--data", data, "--target", "y", "--protected", "z",
            "--drop", "x4,y_prob", "--pair", "0:1", "--model", "logistic",
            "--shap", "linear", "--bootstrap", "1", "--out", out,
        ])
        code = run(["report", "--in", out, "--format", "md"])
        assert code == EXIT_OK
        text = capsys.readouterr().out
        assert "equal treatment" in text
        assert "pair 0 vs 1" in text
        doc = json.loads((tmp_path / "r.json").read_text())
        assert render_report(doc, "md") == text

    def test_missing_report_file(self):
        assert run(["report", "--in", "/nonexistent.json"]) == EXIT_DATA

    def test_et_without_dp_flagged_at_standard_thresholds(self, tmp_path, capsys):
        # shape-only construction: explanation audit rejects while every
        # prediction-side measure sits below its threshold
        data = gen(tmp_path, kind="ex42", gamma=None, n="6000")
        out = str(tmp_path / "r.json")
        code = run([
            "audit", "--data", data, "--target", "y", "--protected", "z",
            "--drop", "a,b", "--pair", "0:1", "--model", "linear",
            "--inspector", "gbt", "--shap", "linear", "--bootstrap", "1",
            "--seed", "0", "--out", out,
        ])
        assert code == EXIT_OK
        run(["report", "--in", out, "--format", "md"])
        text = capsys.readouterr().out
        assert "no demographic-parity violation at standard thresholds" in text

    def test_text_format(self, tmp_path, capsys):
        data = gen(tmp_path, n="900")
        out = str(tmp_path / "r.json")
        run([
            "audit", "--data", data, "--target", "y", "--protected", "z",
            "--drop", "x4,y_prob", "--pair", "0:1", "--model", "logistic",
            "--shap", "linear", "--bootstrap", "1", "--out", out,
        ])
        rendered = str(tmp_path / "report.md")
        code = run(["report", "--in", out, "--format", "text", "--out", rendered])
        assert code == EXIT_OK
        assert "PAIR 0 VS 1" in (tmp_path / "report.md").read_text()


class TestUsageErrors:
    def test_no_subcommand(self):
        assert run([]) == EXIT_USAGE

    def test_bad_pair_spec(self, tmp_path):
        data = gen(tmp_path, n="900")
        code = run(["audit", "--data", data, "--target", "y", "--protected", "z",
                    "--pair", "justone", "--out", str(tmp_path / "r.json")])
        assert code == EXIT_USAGE


class TestThreadCap:
    def test_env_variable_caps_workers(self, monkeypatch):
        from etaudit._util import resolve_workers

        monkeypatch.setenv("ETAUDIT_THREADS", "1")
        assert resolve_workers(8) == 1
        monkeypatch.setenv("ETAUDIT_THREADS", "")
        assert resolve_workers(3) == 3
        monkeypatch.setenv("ETAUDIT_THREADS", "junk")
        assert resolve_workers(3) == 3
