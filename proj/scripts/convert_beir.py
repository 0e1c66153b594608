"""Convert a BEIR-layout dataset (corpus.jsonl, queries.jsonl, qrels/<split>.tsv)
into passages.jsonl / queries.jsonl for phrasemuf.

Each query keeps its first relevant document (score > 0) as the positive.
"""

import argparse
import csv
import json
from pathlib import Path


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("beir_dir", type=Path)
    ap.add_argument("--split", default="test")
    ap.add_argument("--out", type=Path, required=True)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    ids = set()
    with open(args.beir_dir / "corpus.jsonl", encoding="utf-8") as src, open(
        args.out / "passages.jsonl", "w", encoding="utf-8"
    ) as dst:
        for line in src:
            doc = json.loads(line)
            text = " ".join(x for x in (doc.get("title", ""), doc.get("text", "")) if x).strip()
            if not text:
                continue
            ids.add(doc["_id"])
            dst.write(json.dumps({"id": doc["_id"], "text": text}, ensure_ascii=False) + "\n")

    positive = {}
    with open(args.beir_dir / "qrels" / f"{args.split}.tsv", encoding="utf-8") as fh:
        for row in csv.DictReader(fh, delimiter="\t"):
            if int(row["score"]) > 0 and row["corpus-id"] in ids:
                positive.setdefault(row["query-id"], row["corpus-id"])

    kept = 0
    with open(args.beir_dir / "queries.jsonl", encoding="utf-8") as src, open(
        args.out / "queries.jsonl", "w", encoding="utf-8"
    ) as dst:
        for line in src:
            q = json.loads(line)
            if q["_id"] in positive:
                rec = {"id": q["_id"], "question": q["text"], "positive_passage_id": positive[q["_id"]]}
                dst.write(json.dumps(rec, ensure_ascii=False) + "\n")
                kept += 1
    print(f"{len(ids)} passages, {kept} queries -> {args.out}")


if __name__ == "__main__":
    main()
