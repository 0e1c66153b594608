"""Offline export of dense embeddings to PHEM v1 files.

    python -m phrasemuf.export --input F --role context|question \
        --model facebook/dpr-ctx_encoder-single-nq-base --batch 32 --out F.phem

Input is a line-record file: passages ({id, text}), phrases
({passage_id, ordinal, text}) or queries ({id, question, ...}). Phrase ids are
written as "passage_id#ordinal". Vectors are stored unnormalized.
"""

from __future__ import annotations

import argparse
import json
import logging
import struct
import sys
from pathlib import Path
from typing import Callable, Iterable, List, Sequence, Tuple

MAGIC = b"PHEM"
VERSION = 1

log = logging.getLogger("phrasemuf.export")

Encoder = Callable[[Sequence[str]], Sequence[Sequence[float]]]


class ExportError(ValueError):
    pass


def read_records(path: Path) -> Tuple[str, List[Tuple[str, str]]]:
    """Returns (kind, [(id, text)]) with kind in {"passages", "phrases", "queries"}."""
    kinds = set()
    records: List[Tuple[str, str]] = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise ExportError(f"{path}:{line_no}: {e}") from None
            if "passage_id" in rec and "ordinal" in rec:
                kinds.add("phrases")
                rid, text = f"{rec['passage_id']}#{rec['ordinal']}", rec.get("text")
            elif "question" in rec:
                kinds.add("queries")
                rid, text = rec.get("id"), rec["question"]
            else:
                kinds.add("passages")
                rid, text = rec.get("id"), rec.get("text")
            if not rid or not isinstance(text, str):
                raise ExportError(f"{path}:{line_no}: record needs an id and text")
            if rid in seen:
                raise ExportError(f"{path}:{line_no}: duplicate id '{rid}'")
            seen.add(rid)
            records.append((rid, text))
    if len(kinds) > 1:
        raise ExportError(f"{path}: mixed record kinds {sorted(kinds)}")
    return (kinds.pop() if kinds else "passages"), records


def check_role(kind: str, role: str) -> None:
    if role not in ("context", "question"):
        raise ExportError(f"unknown role '{role}'")
    if (kind == "queries") != (role == "question"):
        raise ExportError(f"{kind} need the {'question' if kind == 'queries' else 'context'} encoder, got {role}")


def write_phem(path: Path, rows: Iterable[Tuple[str, Sequence[float]]], dim: int) -> int:
    rows = list(rows)
    out = bytearray(MAGIC)
    out += struct.pack("<HHIQ", VERSION, 0, dim, len(rows))
    for rid, vec in rows:
        if len(vec) != dim:
            raise ExportError(f"vector for '{rid}' has {len(vec)} components, expected {dim}")
        raw = rid.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise ExportError(f"id too long: '{rid[:40]}...'")
        out += struct.pack("<H", len(raw)) + raw
        out += struct.pack(f"<{dim}f", *vec)
    Path(path).write_bytes(bytes(out))
    return len(rows)


def read_phem(path: Path) -> Tuple[int, List[Tuple[str, List[float]]]]:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ExportError("bad magic")
    version, flags, dim, count = struct.unpack_from("<HHIQ", data, 4)
    if version != VERSION or flags != 0:
        raise ExportError(f"unsupported version {version} / flags {flags}")
    pos, rows = 20, []
    for _ in range(count):
        (n,) = struct.unpack_from("<H", data, pos)
        rid = data[pos + 2 : pos + 2 + n].decode("utf-8")
        pos += 2 + n
        rows.append((rid, list(struct.unpack_from(f"<{dim}f", data, pos))))
        pos += 4 * dim
    if pos != len(data):
        raise ExportError(f"{len(data) - pos} trailing bytes")
    return dim, rows


def hf_encoder(model_id: str, role: str, batch: int) -> Tuple[Encoder, int]:
    import torch
    from transformers import AutoTokenizer, DPRContextEncoder, DPRQuestionEncoder

    cls = DPRQuestionEncoder if role == "question" else DPRContextEncoder
    tokenizer = AutoTokenizer.from_pretrained(model_id)
    model = cls.from_pretrained(model_id).eval()
    torch.use_deterministic_algorithms(True)
    limit = tokenizer.model_max_length

    def encode(texts: Sequence[str]) -> List[List[float]]:
        out: List[List[float]] = []
        for i in range(0, len(texts), batch):
            chunk = list(texts[i : i + batch])
            for t in chunk:
                if len(tokenizer.tokenize(t)) + 2 > limit:
                    log.warning("truncating input longer than %d tokens", limit)
            enc = tokenizer(chunk, padding=True, truncation=True, max_length=limit, return_tensors="pt")
            with torch.no_grad():
                out.extend(model(**enc).pooler_output.tolist())
        return out

    return encode, model.config.hidden_size


def export_embeddings(input_path: Path, role: str, encoder: Encoder, dim: int, out_path: Path) -> int:
    kind, records = read_records(input_path)
    check_role(kind, role)
    vectors = encoder([text for _, text in records]) if records else []
    if len(vectors) != len(records):
        raise ExportError(f"encoder returned {len(vectors)} vectors for {len(records)} records")
    return write_phem(out_path, zip((rid for rid, _ in records), vectors), dim)


def main(argv: Sequence[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--input", required=True, type=Path)
    ap.add_argument("--role", required=True, choices=["context", "question"])
    ap.add_argument("--model", required=True)
    ap.add_argument("--batch", type=int, default=32)
    ap.add_argument("--out", required=True, type=Path)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        encoder, dim = hf_encoder(args.model, args.role, args.batch)
    except Exception as e:  # model load failure
        log.error("cannot load %s: %s", args.model, e)
        return 1
    try:
        n = export_embeddings(args.input, args.role, encoder, dim, args.out)
    except (ExportError, OSError) as e:
        log.error("%s", e)
        return 1
    log.info("wrote %d vectors (dim %d) to %s", n, dim, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
