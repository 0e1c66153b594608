import json
import os
import struct

import pytest

import phrasemuf as pm
from phrasemuf import export


def fake_encoder(dim):
    def encode(texts):
        return [[float(len(t) % 7) - 3.0 + 0.001 * j for j in range(dim)] for t in texts]

    return encode


def write_jsonl(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")


def test_ten_phrases_make_a_readable_store(tmp_path):
    corpus = pm.Corpus([("p%d" % i, "First here. Second one. Third.") for i in range(4)])
    pm.write_phrases(pm.build_phrase_index(corpus, 1), tmp_path / "phrases.jsonl")
    # 4 passages x 3 sentences; keep 10 records
    lines = (tmp_path / "phrases.jsonl").read_text().splitlines()[:10]
    (tmp_path / "ten.jsonl").write_text("\n".join(lines) + "\n")
    n = export.export_embeddings(tmp_path / "ten.jsonl", "context", fake_encoder(768), 768, tmp_path / "out.phem")
    assert n == 10
    store = pm.read_store(tmp_path / "out.phem")
    assert (len(store), store.dim) == (10, 768)
    assert store.ids == [f"{json.loads(l)['passage_id']}#{json.loads(l)['ordinal']}" for l in lines]


def test_writer_matches_engine_encoding(tmp_path):
    store = pm.EmbeddingStore(3)
    store.add("a", [1.5, -2.0, 0.25])
    store.add("été", [0.0, 1.0, -0.0])
    export.write_phem(tmp_path / "py.phem", [("a", [1.5, -2.0, 0.25]), ("été", [0.0, 1.0, -0.0])], 3)
    assert (tmp_path / "py.phem").read_bytes() == pm.encode_store(store)
    dim, rows = export.read_phem(tmp_path / "py.phem")
    assert dim == 3 and [r[0] for r in rows] == ["a", "été"]
    export.write_phem(tmp_path / "empty.phem", [], 5)
    assert len(pm.read_store(tmp_path / "empty.phem")) == 0


def test_deterministic_payload(tmp_path):
    write_jsonl(tmp_path / "q.jsonl", [{"id": "q1", "question": "what?", "positive_passage_id": "p"}])
    for name in ("a.phem", "b.phem"):
        export.export_embeddings(tmp_path / "q.jsonl", "question", fake_encoder(8), 8, tmp_path / name)
    assert (tmp_path / "a.phem").read_bytes() == (tmp_path / "b.phem").read_bytes()


def test_rejections(tmp_path):
    write_jsonl(tmp_path / "q.jsonl", [{"id": "q1", "question": "what?"}])
    with pytest.raises(export.ExportError, match="question"):
        export.export_embeddings(tmp_path / "q.jsonl", "context", fake_encoder(4), 4, tmp_path / "x.phem")
    write_jsonl(tmp_path / "dup.jsonl", [{"id": "a", "text": "x"}, {"id": "a", "text": "y"}])
    with pytest.raises(export.ExportError, match="duplicate id 'a'"):
        export.read_records(tmp_path / "dup.jsonl")
    with pytest.raises(export.ExportError, match="components"):
        export.write_phem(tmp_path / "x.phem", [("a", [1.0])], 2)
    (tmp_path / "bad.phem").write_bytes(b"PHEM" + struct.pack("<HHIQ", 2, 0, 4, 0))
    with pytest.raises(export.ExportError):
        export.read_phem(tmp_path / "bad.phem")


FIXTURE_MODEL = os.environ.get("PHRASEMUF_DPR_MODEL")


@pytest.mark.skipif(not FIXTURE_MODEL, reason="set PHRASEMUF_DPR_MODEL to a DPR context-encoder id to run")
def test_real_encoder_ranks_gold_above_random():
    pairs = [
        ("Who wrote Hamlet?", "Hamlet is a tragedy written by William Shakespeare."),
        ("What is the capital of France?", "Paris is the capital and largest city of France."),
        ("How many legs does a spider have?", "Spiders are arachnids with eight legs."),
        ("What gas do plants absorb?", "Plants absorb carbon dioxide during photosynthesis."),
        ("When did World War II end?", "World War II ended in 1945 with the surrender of Japan."),
    ]
    ctx, dim = export.hf_encoder(FIXTURE_MODEL, "context", 8)
    qmodel = FIXTURE_MODEL.replace("ctx_encoder", "question_encoder")
    qenc, _ = export.hf_encoder(qmodel, "question", 8)
    q = qenc([p[0] for p in pairs])
    c = ctx([p[1] for p in pairs])

    def score(u, v):
        return sum(a * b for a, b in zip(u, v)) / sum(b * b for b in v) ** 0.5

    for i in range(5):
        assert score(q[i], c[i]) > score(q[i], c[(i + 1) % 5])
