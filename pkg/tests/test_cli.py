import subprocess
import sys

import pytest

from itts_lab.cli import COMMANDS, main
from itts_lab.mushra import RatingSet, write_ratings

SMALL = ["--hidden-dim", "8", "--embed-dim", "6", "--channels", "5", "--kernel-width", "3"]


class TestBasics:
    def test_tokenize(self, capsys):
        assert main(["tokenize", "--text", "The dog is in the yard.", "--k", "2"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert len(out) == 12
        assert out[2].split("\t")[3:] == ["5", "'The dog is'"]

    def test_unknown_flag(self, capsys):
        assert main(["tokenize", "--text", "x", "--bogus"]) == 1

    def test_missing_subcommand(self, capsys):
        assert main([]) == 1

    def test_missing_corpus(self, tmp_path, capsys):
        assert main(["drift", "--corpus", str(tmp_path / "none.jsonl"), "--out-dir", str(tmp_path)]) == 2

    def test_bad_kernel_width(self, tmp_path, capsys):
        assert main(["drift", "--corpus", "c", "--kernel-width", "4", "--out-dir", str(tmp_path)]) == 1

    @pytest.mark.parametrize("command", sorted(COMMANDS))
    def test_help(self, command, capsys):
        assert main([command, "--help"]) == 0
        assert "usage" in capsys.readouterr().out

    def test_config_echo(self, capsys):
        main(["tokenize", "--text", "Hi"])
        assert '"command": "tokenize"' in capsys.readouterr().err

    def test_entry_point_module(self):
        res = subprocess.run([sys.executable, "-m", "itts_lab.cli", "tokenize", "--text", "Hi."],
                             capture_output=True, text=True)
        assert res.returncode == 0 and len(res.stdout.splitlines()) == 2


def test_end_to_end(tmp_path, capsys):
    corpus = tmp_path / "c.jsonl"
    out = tmp_path / "run"
    common = ["--corpus", str(corpus), "--out-dir", str(out), "--threads", "2", *SMALL]
    assert main(["gen-corpus", "--n-sentences", "12", "--seed", "3", "--max-words", "10", "--out", str(corpus)]) == 0
    assert main(["drift", *common, "--k-max", "3"]) == 0
    assert main(["rf", *common, "--k-max", "3", "--k-target", "0,2", "--n-estimators", "5", "--repeats", "2"]) == 0
    assert main(["assemble", *common, "--sentence-id", "syn0002", "--k", "1"]) == 0
    assert main(["assemble", *common, "--sentence-id", "missing"]) == 2
    assert main(["encode", *common, "--k-max", "1"]) == 0
    assert main(["plot", "--out-dir", str(out)]) == 0
    for rel in ("drift/drift.csv", "rf/importance_k2.json", "audio/syn0002_k1.wav", "encodings.csv",
                "drift/drift.svg", "manifest.json"):
        assert (out / rel).is_file(), rel

    scores = {(f"p{i}", "s1", c): v + i % 3 for i in range(6)
              for c, v in zip(("k1", "k2", "k4", "k6", "ref"), (20, 40, 60, 80, 95))}
    scores[("p5", "s1", "ref")] = 50.0
    write_ratings(tmp_path / "r.csv", RatingSet.from_scores(scores))
    capsys.readouterr()
    assert main(["mushra", "--ratings", str(tmp_path / "r.csv"), "--out-dir", str(out), "--plot"]) == 0
    captured = capsys.readouterr()
    assert "excluded p5" in captured.err
    assert captured.out.count("significant") == 4
    assert (out / "mushra" / "summary.csv").is_file() and (out / "mushra" / "scores.svg").is_file()
