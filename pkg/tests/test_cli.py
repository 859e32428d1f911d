import hashlib
import json

import pytest

from ebpfml.cli import main
from ebpfml.tracegen import load_trace
from ebpfml.replay import extract_snapshots


def sha256(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run(*argv):
    return main(list(argv))


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """One CLI pipeline run shared by the tests in this module."""
    d = tmp_path_factory.mktemp("cli")
    assert run("gen", "benign", "--seed", "31", "--duration", "4",
               "--compress-prob", "0.3", "--out", str(d / "benign.trace")) == 0
    assert run("gen", "ransomware", "--seed", "32", "--ransom-files", "60",
               "--fanout", "2", "--out", str(d / "ransom.trace")) == 0
    assert run("dataset", str(d / "benign.trace"), str(d / "ransom.trace"),
               "--out", str(d / "train.ds")) == 0
    assert run("train", str(d / "train.ds"), "--kind", "tree",
               "--out", str(d / "tree.json")) == 0
    assert run("quantize", str(d / "tree.json"), "--out", str(d / "tree.q.json")) == 0
    assert run("emit", str(d / "tree.q.json"), "--out-dir", str(d / "out"),
               "--mode", "maploaded") == 0
    return d


def test_gen_is_seed_stable(tmp_path):
    a = tmp_path / "a.trace"
    b = tmp_path / "b.trace"
    assert run("gen", "ransomware", "--seed", "9", "--ransom-files", "20", "--out", str(a)) == 0
    assert run("gen", "ransomware", "--seed", "9", "--ransom-files", "20", "--out", str(b)) == 0
    assert sha256(a) == sha256(b)


def test_gen_mixed_scenario(tmp_path):
    out = tmp_path / "m.trace"
    assert run("gen", "mixed", "--seed", "5", "--duration", "2",
               "--ransom-files", "20", "--out", str(out)) == 0
    trace = load_trace(out)
    assert trace.scenario == "mixed"
    assert set(trace.labels.values()) == {0, 1}


def test_dataset_rows_match_snapshots(workdir):
    header = json.loads((workdir / "train.ds").read_text().splitlines()[0])
    want = 0
    for name in ("benign.trace", "ransom.trace"):
        X, _, _, _ = extract_snapshots(load_trace(workdir / name), ("/data",))
        want += X.shape[0]
    assert header["rows"] == want
    assert header["meta"]["traces"][0]["sha256"] == sha256(workdir / "benign.trace")


def test_emit_outputs_lint_clean(workdir, capsys):
    assert run("lint", str(workdir / "out" / "classify.c")) == 0
    assert run("lint", str(workdir / "out" / "support.c")) == 0
    out = capsys.readouterr().out
    assert out.count("ok") == 2


def test_emit_writes_params_blob(workdir):
    manifest = json.loads((workdir / "out" / "manifest.json").read_text())
    blob = (workdir / "out" / "params.bin").read_bytes()
    assert manifest["mode"] == "maploaded"
    assert len(blob) == manifest["blob"]["byte_size"]


def test_replay_writes_report(workdir, tmp_path, capsys):
    out = tmp_path / "rep.json"
    assert run("replay", str(workdir / "ransom.trace"), str(workdir / "tree.q.json"),
               "--path", "fixed", "--out", str(out)) == 0
    text = capsys.readouterr().out
    assert "macro_f1" in text
    doc = json.loads(out.read_text())
    assert doc["report"]["path"] == "fixed"
    assert doc["report"]["single_class"] is True
    assert doc["inputs"]["trace_sha256"] == sha256(workdir / "ransom.trace")
    assert len(doc["predictions"]) == doc["report"]["sample_size"]


def test_replay_generated_path(workdir, capsys):
    assert run("replay", str(workdir / "ransom.trace"), str(workdir / "tree.q.json"),
               "--path", "generated", "--mode", "maploaded") == 0
    assert "generated" in capsys.readouterr().out


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as ei:
        run("nonsense")
    assert ei.value.code == 2
    with pytest.raises(SystemExit) as ei:
        run("train", "ds.txt")  # --kind and --out missing
    assert ei.value.code == 2


def test_data_error_exits_3(tmp_path, capsys):
    missing = tmp_path / "nope.trace"
    assert run("replay", str(missing), str(missing), "--path", "fixed") == 3
    err = capsys.readouterr().err
    assert err.startswith("error: ")

    bad = tmp_path / "bad.ds"
    bad.write_text("not a dataset\n")
    assert run("train", str(bad), "--kind", "tree", "--out", str(tmp_path / "m.json")) == 3


def test_float_model_on_fixed_path_exits_3(workdir, capsys):
    assert run("replay", str(workdir / "ransom.trace"), str(workdir / "tree.json"),
               "--path", "fixed") == 3
    assert "error:" in capsys.readouterr().err


def test_emit_rejects_float_model(workdir, tmp_path, capsys):
    assert run("emit", str(workdir / "tree.json"), "--out-dir", str(tmp_path / "o")) == 3
    assert "quantized" in capsys.readouterr().err


def test_lint_violations_exit_4(tmp_path, capsys):
    src = tmp_path / "bad.c"
    src.write_text("static s32 f(s32 x) { double d = 0; while (x) { x = x - 1; } return x; }\n")
    assert run("lint", str(src)) == 4
    out = capsys.readouterr().out
    assert "float-type" in out and "unbounded-loop" in out


def test_lint_parse_error_exits_3(tmp_path, capsys):
    src = tmp_path / "broken.c"
    src.write_text("static s32 f(void) { return 0;\n")
    assert run("lint", str(src)) == 3
    assert "error:" in capsys.readouterr().err
