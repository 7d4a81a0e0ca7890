# Copyright 2024 voiceprivacy developers
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from voiceprivacy.audio import AudioBuffer, write_wav
from voiceprivacy.cli import main
from voiceprivacy.metrics.verification import ScoreSet, cllr
from voiceprivacy.utils.dataloader import load_embedding_rows, write_embedding_rows

FS = 16000
TRIALS = "s1 u1 target\ns1 u2 nontarget\ns2 u3 target\ns2 u1 nontarget\ns3 u4 nontarget\n"
SCORES = "s1 u1 2.5\ns1 u2 -1.0\ns2 u3 1.5\ns2 u1 0.25\ns3 u4 -3.0\n"


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def corpus(tmp_path):
    rng = np.random.default_rng(0)
    wav_dir = tmp_path / "wav"
    wav_dir.mkdir()
    lines = []
    for i in range(2):
        write_wav(AudioBuffer(0.2 * rng.uniform(-1, 1, FS // 2), FS), wav_dir / f"utt{i}.wav")
        lines.append(f"utt{i} wav/utt{i}.wav\n")
    manifest = tmp_path / "manifest.txt"
    manifest.write_text("".join(lines))
    return manifest


def write(path, text):
    path.write_text(text)
    return str(path)


def test_anonymize(runner, corpus, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(main, ["anonymize", "--manifest", str(corpus), "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "processed 2/2 files, 0 failed" in result.output
    assert (out / "utt0.wav").exists() and (out / "utt1.wav").exists()
    report = json.loads((out / "report.json").read_text())
    assert report["metadata"]["params"]["alpha"] == 0.8
    assert [entry["alpha"] for entry in report["files"]] == [0.8, 0.8]


def test_anonymize_same_seed_same_files(runner, corpus, tmp_path):
    args = ["anonymize", "--manifest", str(corpus), "--alpha-range", "0.7", "0.9", "--seed", "5"]
    for name in ["a", "b"]:
        result = runner.invoke(main, args + ["--out", str(tmp_path / name)])
        assert result.exit_code == 0, result.output
    for i in range(2):
        assert (tmp_path / "a" / f"utt{i}.wav").read_bytes() == (tmp_path / "b" / f"utt{i}.wav").read_bytes()


def test_anonymize_report_identical_across_runs(runner, corpus, tmp_path):
    args = ["anonymize", "--manifest", str(corpus), "--out", str(tmp_path / "out"), "--alpha-range", "0.7", "0.9"]
    for name, jobs in [("r1.json", "1"), ("r2.json", "2")]:
        result = runner.invoke(main, args + ["--jobs", jobs, "--report", str(tmp_path / name)])
        assert result.exit_code == 0, result.output
    assert (tmp_path / "r1.json").read_bytes() == (tmp_path / "r2.json").read_bytes()


def test_anonymize_clamp_option(runner, corpus, tmp_path):
    for flag in ["--clamp", "--stability-clamp"]:
        out = tmp_path / flag.strip("-")
        result = runner.invoke(main, ["anonymize", "--manifest", str(corpus), "--out", str(out), flag, "0.99"])
        assert result.exit_code == 0, result.output
        assert json.loads((out / "report.json").read_text())["metadata"]["params"]["stability_clamp"] == 0.99


def test_parameters_logged_at_default_verbosity(runner, corpus, tmp_path, caplog):
    result = runner.invoke(main, ["anonymize", "--manifest", str(corpus), "--out", str(tmp_path / "out")])
    assert result.exit_code == 0, result.output
    messages = [record.getMessage() for record in caplog.records if record.name == "voiceprivacy.cli.run"]
    assert "anonymize: alpha = 0.8" in messages

    trials, scores = write(tmp_path / "trials", TRIALS), write(tmp_path / "scores", SCORES)
    caplog.clear()
    result = runner.invoke(main, ["eval-asv", "--scores", scores, "--trials", trials, "--latex"])
    assert result.exit_code == 0, result.output
    messages = [record.getMessage() for record in caplog.records if record.name == "voiceprivacy.cli.run"]
    assert f"eval-asv: scores = {Path(scores)!r}" in messages
    assert "eval-asv: latex = True" in messages


def test_anonymize_failures(runner, corpus, tmp_path):
    with open(corpus, "a") as f:
        f.write("gone wav/gone.wav\n")
    result = runner.invoke(main, ["anonymize", "--manifest", str(corpus), "--out", str(tmp_path / "out")])
    assert result.exit_code == 1
    assert "processed 2/3 files, 1 failed" in result.output

    bad = write(tmp_path / "bad.txt", "utt0\n")
    result = runner.invoke(main, ["anonymize", "--manifest", bad, "--out", str(tmp_path / "out")])
    assert result.exit_code == 2
    assert "Error:" in result.output

    result = runner.invoke(
        main, ["anonymize", "--manifest", str(corpus), "--out", str(tmp_path / "out"), "--alpha-per", "speaker"]
    )
    assert result.exit_code == 2


def embedding_files(tmp_path):
    rng = np.random.default_rng(1)
    pool = tmp_path / "pool.txt"
    write_embedding_rows([(f"p{i:02d}", f"pspk{i:02d}", rng.normal(size=4)) for i in range(50)], pool)
    sources = tmp_path / "xvectors.txt"
    write_embedding_rows([(f"u{i}", f"spk{i % 3}", rng.normal(size=4)) for i in range(6)], sources)
    return ["--embeddings", str(sources), "--pool", str(pool)]


def test_anon_embed_and_validate(runner, tmp_path):
    inputs = embedding_files(tmp_path)
    for name in ["a", "b"]:
        result = runner.invoke(
            main, ["anon-embed", *inputs, "--out", str(tmp_path / name), "--n-farthest", "20", "--n-subset", "5"]
        )
        assert result.exit_code == 0, result.output
        assert "assigned 6 pseudo-speakers for 3 speakers" in result.output
    for name in ["pseudo_enrollment.txt", "pseudo_trial.txt", "mapping.txt", "audit.json"]:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert len(load_embedding_rows(tmp_path / "a" / "pseudo_trial.txt")) == 6

    result = runner.invoke(main, ["validate", "--mapping", str(tmp_path / "a" / "mapping.txt")])
    assert result.exit_code == 0
    assert result.output.startswith("OK")


def test_anon_embed_pool_too_small(runner, tmp_path):
    result = runner.invoke(main, ["anon-embed", *embedding_files(tmp_path), "--out", str(tmp_path / "out"),
                                  "--n-farthest", "200"])
    assert result.exit_code == 2
    assert "pool too small" in result.output


def test_validate_violations(runner, tmp_path):
    mapping = write(tmp_path / "mapping.txt", "u1 a trial P1\nu2 b trial P1\nu3 a enrollment P2\n")
    report = tmp_path / "report.json"
    result = runner.invoke(main, ["validate", "--mapping", mapping, "--json", str(report)])
    assert result.exit_code == 1
    assert "rule 2:" in result.output
    assert json.loads(report.read_text())["ok"] is False

    malformed = write(tmp_path / "bad.txt", "u1 a trial\n")
    assert runner.invoke(main, ["validate", "--mapping", malformed]).exit_code == 2


def test_eval_asv(runner, tmp_path):
    trials, scores = write(tmp_path / "trials", TRIALS), write(tmp_path / "scores", SCORES)
    results = tmp_path / "asv.json"
    result = runner.invoke(main, ["eval-asv", "--scores", scores, "--trials", trials, "--dataset", "libri_dev",
                                  "--results-json", str(results)])
    assert result.exit_code == 0, result.output
    expected_cllr = cllr(ScoreSet([2.5, 1.5], [-1.0, 0.25, -3.0]))
    row = result.output.splitlines()[2].split()
    assert row == ["libri_dev", "o", "o", "all", "0.000", "0.000", f"{expected_cllr:.3f}"]
    assert json.loads(results.read_text())["asv"][0]["cllr"] == pytest.approx(expected_cllr)

    metadata = write(tmp_path / "spk2gender", "s1 f\ns2 m\ns3 f\n")
    result = runner.invoke(main, ["eval-asv", "--scores", scores, "--trials", trials, "--metadata", metadata,
                                  "--latex"])
    assert result.exit_code == 0, result.output
    assert [line.split(" & ")[-1] for line in result.output.splitlines()[1:]] == [r"f \\", r"m \\"]


def test_eval_asv_mismatches(runner, tmp_path):
    trials, scores = write(tmp_path / "trials", TRIALS), write(tmp_path / "scores", SCORES)
    counts = write(tmp_path / "counts", "target 695\n")
    result = runner.invoke(main, ["eval-asv", "--scores", scores, "--trials", trials, "--expected-counts", counts])
    assert result.exit_code == 1
    assert "count mismatch target: expected 695, observed 2" in result.output

    partial = write(tmp_path / "partial", "".join(SCORES.splitlines(keepends=True)[:-1]))
    result = runner.invoke(main, ["eval-asv", "--scores", partial, "--trials", trials])
    assert result.exit_code == 1
    assert "s3" in result.output


def test_eval_asr(runner, tmp_path):
    ref = write(tmp_path / "ref", "u1 a b c\nu2 d e\n")
    hyp = write(tmp_path / "hyp", "u1 a x c d\nu2 d\n")
    per_utterance = tmp_path / "wer.json"
    result = runner.invoke(main, ["eval-asr", "--ref", ref, "--hyp", hyp, "--per-utterance", str(per_utterance)])
    assert result.exit_code == 0, result.output
    assert result.output.splitlines()[2].split() == ["dataset", "o", "60.00"]
    assert "errors: 1 sub, 1 del, 1 ins over 5 words" in result.output
    assert json.loads(per_utterance.read_text())["u1"] == {"n_sub": 1, "n_del": 0, "n_ins": 1, "n_ref": 3}

    empty = write(tmp_path / "empty", "")
    assert runner.invoke(main, ["eval-asr", "--ref", empty, "--hyp", hyp]).exit_code == 2
    unknown = write(tmp_path / "unknown", "u9 a\n")
    assert runner.invoke(main, ["eval-asr", "--ref", ref, "--hyp", unknown]).exit_code == 1


def test_report_merges_results(runner, tmp_path):
    trials, scores = write(tmp_path / "trials", TRIALS), write(tmp_path / "scores", SCORES)
    ref = write(tmp_path / "ref", "u1 a b c\nu2 d e\n")
    asv, asr_s, asr_l = tmp_path / "asv.json", tmp_path / "asr_s.json", tmp_path / "asr_l.json"
    runner.invoke(main, ["eval-asv", "--scores", scores, "--trials", trials, "--dataset", "libri_dev",
                         "--results-json", str(asv)])
    for system, hyp_text, path in [("LM_s", "u1 a x c d\nu2 d\n", asr_s), ("LM_l", "u1 a b c\nu2 d e\n", asr_l)]:
        hyp = write(tmp_path / f"hyp_{system}", hyp_text)
        runner.invoke(main, ["eval-asr", "--ref", ref, "--hyp", hyp, "--dataset", "libri_dev",
                             "--system", system, "--results-json", str(path)])

    result = runner.invoke(main, ["report", str(asv), str(asr_s), str(asr_l), "--latex"])
    assert result.exit_code == 0, result.output
    lines = result.output.splitlines()
    assert lines[0] == "% ASV results"
    assert lines[2] == "% ASR results: LM_s LM_l"
    assert lines[3] == r"libri\_dev & 60.00 & 0.00 & o \\"

    assert runner.invoke(main, ["report", str(asv), str(asv)]).exit_code == 2
    broken = write(tmp_path / "broken.json", "{not json")
    assert runner.invoke(main, ["report", broken]).exit_code == 2


def test_seed_from_environment(runner, tmp_path, monkeypatch):
    inputs = embedding_files(tmp_path) + ["--n-farthest", "20", "--n-subset", "5"]
    runner.invoke(main, ["anon-embed", *inputs, "--out", str(tmp_path / "flag"), "--seed", "7"])
    monkeypatch.setenv("VOICEPRIVACY_SEED", "7")
    result = runner.invoke(main, ["anon-embed", *inputs, "--out", str(tmp_path / "env")])
    assert result.exit_code == 0, result.output
    audit = json.loads((tmp_path / "env" / "audit.json").read_text())
    assert audit["rng_seed"] == 7
    assert audit == json.loads((tmp_path / "flag" / "audit.json").read_text())
