import json
import subprocess
import sys

import pytest

from filtered_noise.cli import RunConfig, read_config, run

ALL4 = ["--colors", "1,1,1,1", "--filters", "all,all,all,all"]


def invoke(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, json.loads(out.out), out.err


class TestExamples:

    def test_clt(self, capsys):
        code, rep, _ = invoke(capsys, "clt", *ALL4)
        assert code == 0 and rep["result"]["value"] == "3" and rep["passed"]

    def test_poisson(self, capsys):
        code, rep, _ = invoke(capsys, "poisson", "--colors", "1,1,1", "--filters", "all,all,all",
                              "--lambda", "1=1")
        assert code == 0 and rep["result"]["value"] == "5"

    def test_coarsest(self, capsys):
        code, rep, _ = invoke(capsys, "partitions", "coarsest", "--colors", "1,1,2,1,1",
                              "--filters", "p1,p2,p2,p2,p1", "--blocks", "1,3,5|2,4")
        assert code == 0 and rep["result"]["coarsest"] == "{1,5}|{2,4}|{3}"


class TestSubcommands:

    def test_partitions_count(self, capsys):
        code, rep, _ = invoke(capsys, "partitions", "count", *ALL4, "--pairs")
        assert rep["result"]["adapted"] == 3

    def test_partitions_list_boolean(self, capsys):
        code, rep, _ = invoke(capsys, "partitions", "list", "--colors", "1,1,1",
                              "--filters", "empty,empty,empty")
        assert code == 0 and rep["result"]["count"] == 4

    def test_convolve(self, capsys):
        code, rep, _ = invoke(capsys, "convolve", "--N", "2", "--colors", "1,2,1,2",
                              "--filters", "p2,all,empty,p3", "--moments", "1/2,1/3,1/5,1/7",
                              "--bruteforce")
        assert code == 0
        assert rep["result"] == {"value": "91/72", "bruteforce": "91/72"}

    def test_moment(self, capsys, tmp_path):
        model = tmp_path / "model.json"
        model.write_text(json.dumps({"a": ["0", "2"], "b": ["1/3", "5"]}))
        code, rep, _ = invoke(capsys, "moment", "--model", str(model), "--labels", "a,b,a,b",
                              "--colors", "1,2,1,2", "--filters", "all,all,all,all",
                              "--recursive")
        assert code == 0
        assert rep["result"] == {"value": "10", "recursive": "10"}

    def test_mfree(self, capsys):
        code, rep, _ = invoke(capsys, "mfree", "--m", "3", "--n", "6")
        assert rep["result"]["moments"]["6"] == "5"
        code, rep, _ = invoke(capsys, "mfree", "--m", "2", "--n", "4", "--kind", "poisson",
                              "--rate", "1")
        assert rep["result"]["moments"]["4"] == "14"

    def test_clt_normalized(self, capsys):
        code, rep, _ = invoke(capsys, "clt", *ALL4, "--N", "100")
        assert code == 0 and "normalized" in rep["result"]

    def test_fock_verify(self, capsys):
        code, rep, _ = invoke(capsys, "fock-verify", "--samples", "4", "--M", "2", "--n-max", "4")
        assert code == 0 and rep["passed"]
        assert set(rep["result"]) >= {"commutation", "pairing", "noise"}

    @pytest.mark.parametrize("check", ["cuntz", "resolution", "semicircle"])
    def test_mfree_verify(self, capsys, check):
        code, rep, _ = invoke(capsys, "mfree-verify", "--check", check, "--M", "3", "--n-max", "3")
        assert code == 0 and check in rep["result"]

    def test_suite_subset(self, capsys):
        code, rep, err = invoke(capsys, "suite", "--only", "2,4")
        assert code == 0
        assert "criterion  2 PASS" in err and "criterion  4 PASS" in err


class TestErrors:

    def test_verification_failure_is_exit_1(self, capsys):
        code, rep, _ = invoke(capsys, "fock-verify", "--check", "commutation", "--samples", "3",
                              "--M", "2", "--n-max", "3", "--tolerance", "1e-300")
        assert code == 1 and rep["passed"] is False

    def test_guard(self, capsys):
        n = 13
        code, rep, err = invoke(capsys, "partitions", "list", "--colors", ",".join(["1"] * n),
                                "--filters", ",".join(["all"] * n))
        assert code == 2 and rep["error"]["kind"] == "guard" and "guard" in err

    def test_bad_literal(self, capsys):
        code, rep, err = invoke(capsys, "clt", "--colors", "1,1", "--filters", "all,nope")
        assert code == 2 and rep["error"]["kind"] == "usage"

    def test_bad_tolerance(self, capsys):
        code, rep, _ = invoke(capsys, "clt", *ALL4, "--tolerance", "0.5")
        assert code == 2 and rep["error"]["kind"] == "usage"

    def test_argparse_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run(["clt", "--colors", "1"])
        assert exc.value.code == 2


class TestConfig:

    def test_read_config(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("# comment\nd = 1\nn-max = 3  # trailing\n\ndelta = 1/4\n")
        assert read_config(str(p)) == {"d": 1, "n_max": 3, "delta": pytest.approx(0.25)}
        p.write_text("bogus = 1\n")
        with pytest.raises(ValueError):
            read_config(str(p))

    def test_validate(self):
        RunConfig().validate()
        with pytest.raises(ValueError):
            RunConfig(tolerance=0).validate()
        with pytest.raises(ValueError):
            RunConfig(limit=0).validate()

    def test_file_env_and_flag_precedence(self, capsys, tmp_path, monkeypatch):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("limit = 5\nseed = 11\n")
        six = ["--colors", "1,1,1,1,1,1", "--filters", ",".join(["all"] * 6)]
        code, rep, _ = invoke(capsys, "partitions", "count", *six, "--config", str(cfg))
        assert code == 2 and rep["seed"] == 11
        monkeypatch.setenv("FILTERED_NOISE_CONFIG", str(cfg))
        code, rep, _ = invoke(capsys, "partitions", "count", *six)
        assert code == 2
        code, rep, _ = invoke(capsys, "partitions", "count", *six, "--limit", "12",
                              "--seed", "3")
        assert code == 0 and rep["seed"] == 3 and rep["result"]["count"] == 203


class TestReport:

    def test_key_order_and_reproducible(self, capsys):
        argv = ["mfree-verify", "--check", "decomposition", "--samples", "5", "--M", "4",
                "--n-max", "3", "--no-timing"]
        code1, _, _ = invoke(capsys, *argv)
        run(argv)
        first = capsys.readouterr().out
        run(argv)
        second = capsys.readouterr().out
        assert first == second
        keys = list(json.loads(first))
        assert keys == ["command", "argv", "version", "backend", "seed", "inputs", "result",
                        "passed"]

    def test_rationals_are_strings(self, capsys):
        _, rep, _ = invoke(capsys, "convolve", "--N", "3", "--colors", "1,1",
                           "--filters", "all,all", "--moments", "1/2,1/3")
        assert isinstance(rep["result"]["value"], str)

    def test_console_entry(self):
        proc = subprocess.run([sys.executable, "-m", "filtered_noise", "clt", *ALL4],
                              capture_output=True, text=True, timeout=120)
        assert proc.returncode == 0
        rep = json.loads(proc.stdout)
        assert rep["result"]["value"] == "3" and rep["seconds"] >= 0
