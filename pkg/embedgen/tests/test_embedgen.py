import json
import os
import struct
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from embedgen import (
    EmbedJobConfig,
    EncoderError,
    HashingEncoder,
    MissingTextError,
    get_encoder,
    read_instance_texts,
    run_job,
)
from embedgen.cli import main as cli_main

PRIMARY_SRC = str(Path(__file__).resolve().parents[2] / "src")

TOPIC_WORDS = {
    "animals": ["cat", "dog", "horse", "sparrow", "otter", "fox"],
    "tools": ["hammer", "wrench", "chisel", "lathe", "pliers", "saw"],
    "weather": ["rain", "thunder", "drizzle", "frost", "breeze", "hail"],
}


def write_fixture(path, n_lines=50):
    """n_lines single-judgment records over n_lines instances with texts."""
    topics = list(TOPIC_WORDS)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"label_set": topics}) + "\n")
        for i in range(n_lines):
            topic = topics[i % len(topics)]
            words = TOPIC_WORDS[topic]
            text = (
                f"the {words[i % 6]} and the {words[(i + 1) % 6]} near "
                f"a {words[(i + 2) % 6]} number {i}"
            )
            fh.write(
                json.dumps(
                    {
                        "instance_id": f"s{i:03d}",
                        "annotator_id": f"a{i % 2}",
                        "labels": [topic],
                        "text": text,
                    }
                )
                + "\n"
            )


def read_embedding_file(path, fmt):
    """Minimal independent reader used only to inspect outputs in tests."""
    if fmt == "jsonl":
        rows = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                obj = json.loads(line)
                rows[obj["instance_id"]] = np.asarray(obj["vector"], dtype=np.float32)
        return rows
    with open(path, "rb") as fh:
        magic, version, dim, count = struct.unpack("<4sHIQ", fh.read(18))
        assert magic == b"AEMB" and version == 1
        rows = {}
        for _ in range(count):
            (id_len,) = struct.unpack("<H", fh.read(2))
            iid = fh.read(id_len).decode("utf-8")
            rows[iid] = np.frombuffer(fh.read(4 * dim), dtype="<f4")
        assert not fh.read(1)
        return rows


def run_primary(args):
    return subprocess.run(
        [sys.executable, "-m", "annoaudit", *args],
        capture_output=True,
        text=True,
        env={**os.environ, "PYTHONPATH": PRIMARY_SRC},
    )


class TestHashingEncoder:
    def test_deterministic_and_normalized(self):
        enc = HashingEncoder(64)
        a = enc.encode(["the cat sat", "a wrench turns"])
        b = enc.encode(["the cat sat", "a wrench turns"])
        assert a.dtype == np.float32
        assert a.shape == (2, 64)
        assert np.array_equal(a, b)
        np.testing.assert_allclose(np.linalg.norm(a, axis=1), 1.0, atol=1e-6)

    def test_short_text_not_zero(self):
        vec = HashingEncoder(16).encode(["ab"])
        assert np.linalg.norm(vec) > 0

    def test_get_encoder_spec(self):
        assert isinstance(get_encoder("hash:32"), HashingEncoder)
        assert get_encoder("hash:32").dim == 32
        with pytest.raises(EncoderError):
            HashingEncoder(0)


class TestTexts:
    def test_dedup_by_id(self, tmp_path):
        path = tmp_path / "j.jsonl"
        with open(path, "w") as fh:
            for annotator in ("a1", "a2"):
                fh.write(
                    json.dumps(
                        {
                            "instance_id": "t1",
                            "annotator_id": annotator,
                            "labels": ["x"],
                            "text": "same text",
                        }
                    )
                    + "\n"
                )
        texts = read_instance_texts(path)
        assert texts == {"t1": "same text"}

    def test_missing_text_lists_instances(self, tmp_path):
        path = tmp_path / "j.jsonl"
        with open(path, "w") as fh:
            fh.write(
                json.dumps(
                    {"instance_id": "t1", "annotator_id": "a1", "labels": ["x"],
                     "text": "ok"}
                )
                + "\n"
            )
            fh.write(
                json.dumps(
                    {"instance_id": "t2", "annotator_id": "a1", "labels": ["x"]}
                )
                + "\n"
            )
        with pytest.raises(MissingTextError, match="t2"):
            read_instance_texts(path)


class TestJob:
    def test_one_row_per_unique_instance(self, tmp_path):
        fixture = tmp_path / "j.jsonl"
        write_fixture(fixture, 12)
        out = tmp_path / "e.jsonl"
        count = run_job(
            EmbedJobConfig(str(fixture), str(out), "jsonl", "hash:32")
        )
        assert count == 12
        rows = read_embedding_file(out, "jsonl")
        assert len(rows) == 12
        assert all(v.shape == (32,) for v in rows.values())

    def test_formats_bit_identical(self, tmp_path):
        fixture = tmp_path / "j.jsonl"
        write_fixture(fixture, 10)
        out_jsonl = tmp_path / "e.jsonl"
        out_bin = tmp_path / "e.bin"
        run_job(EmbedJobConfig(str(fixture), str(out_jsonl), "jsonl", "hash:24"))
        run_job(EmbedJobConfig(str(fixture), str(out_bin), "bin", "hash:24"))
        a = read_embedding_file(out_jsonl, "jsonl")
        b = read_embedding_file(out_bin, "bin")
        assert a.keys() == b.keys()
        for iid in a:
            assert a[iid].tobytes() == b[iid].tobytes()

    def test_deterministic_output_bytes(self, tmp_path):
        fixture = tmp_path / "j.jsonl"
        write_fixture(fixture, 10)
        outs = []
        for name in ("x.bin", "y.bin"):
            out = tmp_path / name
            assert cli_main([str(fixture), str(out), "--model", "hash:16",
                             "--format", "bin"]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_model_load_failure_exits_nonzero(self, tmp_path, monkeypatch):
        monkeypatch.setenv("HF_HUB_OFFLINE", "1")
        fixture = tmp_path / "j.jsonl"
        write_fixture(fixture, 3)
        code = cli_main(
            [str(fixture), str(tmp_path / "e.jsonl"),
             "--model", "no-such-model-zzz"]
        )
        assert code == 1

    def test_missing_text_exits_nonzero(self, tmp_path, capsys):
        path = tmp_path / "j.jsonl"
        path.write_text(
            json.dumps({"instance_id": "t1", "annotator_id": "a1", "labels": ["x"]})
            + "\n"
        )
        assert cli_main([str(path), str(tmp_path / "e.jsonl"),
                         "--model", "hash:8"]) == 1
        assert "t1" in capsys.readouterr().err


@pytest.mark.skipif(
    os.environ.get("EMBEDGEN_REAL_MODEL") != "1",
    reason="set EMBEDGEN_REAL_MODEL=1 to exercise the pretrained default model",
)
def test_default_pretrained_model(tmp_path):
    fixture = tmp_path / "j.jsonl"
    write_fixture(fixture, 3)
    out = tmp_path / "e.jsonl"
    assert cli_main([str(fixture), str(out)]) == 0
    rows = read_embedding_file(out, "jsonl")
    assert len(rows) == 3
    assert all(v.shape == (768,) for v in rows.values())


def test_ac10_embedding_pipeline_end_to_end(tmp_path):
    """50-line fixture -> embedgen -> full audit/filter/sweep in the
    primary tool, consumed purely through files and its CLI."""
    fixture = tmp_path / "fixture.jsonl"
    write_fixture(fixture, 50)

    out_bin = tmp_path / "emb.bin"
    assert cli_main(
        [str(fixture), str(out_bin), "--model", "hash:64", "--format", "bin"]
    ) == 0
    assert len(read_embedding_file(out_bin, "bin")) == 50

    # audit: exits 0 only when every instance has an embedding
    report_path = tmp_path / "report.json"
    result = run_primary(
        [
            "audit", "--judgments", str(fixture), "--embeddings", str(out_bin),
            "--format", "bin", "--metric", "both", "--out", str(report_path),
            "--threads", "1",
        ]
    )
    assert result.returncode == 0, result.stderr
    report = json.loads(report_path.read_text())
    assert report["dataset"]["n_instances"] == 50
    assert len(report["silhouette"]["scores"]) == 50

    # filter: refined file + removal log
    refined = tmp_path / "refined.jsonl"
    result = run_primary(
        [
            "filter", "--judgments", str(fixture), "--embeddings", str(out_bin),
            "--format", "bin", "--strategy", "silhouette", "--fraction", "0.1",
            "--out", str(refined), "--threads", "1",
        ]
    )
    assert result.returncode == 0, result.stderr
    log = json.loads((tmp_path / "refined.jsonl.removal.json").read_text())
    assert log["removed_count"] == 5

    # sweep: full grid on the embedgen embeddings
    csv_path, json_path = tmp_path / "sweep.csv", tmp_path / "sweep.json"
    result = run_primary(
        [
            "sweep", "--judgments", str(fixture), "--embeddings", str(out_bin),
            "--format", "bin", "--strategies", "silhouette,random_judgments",
            "--fractions", "0,0.2", "--seeds", "2", "--seed", "0",
            "--out-csv", str(csv_path), "--out-json", str(json_path),
            "--threads", "1",
        ]
    )
    assert result.returncode == 0, result.stderr
    rows = csv_path.read_text().splitlines()
    assert len(rows) == 1 + 8  # header + 2 strategies x 2 fractions x 2 seeds
    payload = json.loads(json_path.read_text())
    assert not any(r["degenerate"] for r in payload["results"])
    print("\nAC-10 embedding pipeline: PASS (50-line fixture, zero alignment "
          "gaps, audit+filter+sweep end-to-end)")
