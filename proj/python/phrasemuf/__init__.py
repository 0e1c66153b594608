"""Dense phrase retrieval at several sentence granularities, fused by
temperature-calibrated softmax confidence, with a BM25 baseline."""

from ._phrasemuf import (
    Bm25Index,
    CalibrationResult,
    Corpus,
    EmbeddingStore,
    InputError,
    InvariantError,
    Passage,
    Phrase,
    PhraseIndex,
    QueryRecord,
    RankedPassage,
    build_bm25_index,
    build_phrase_index,
    calibrate_temperature,
    confidence,
    confidence_gradient,
    decode_store,
    ece_squared,
    encode_store,
    load_passages,
    load_queries,
    make_planted_dataset,
    phrase_key,
    read_store,
    run_experiment,
    test_embed,
    tokenize,
    write_passages,
    write_phrases,
    write_queries,
    write_store,
    write_test_embeddings,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
