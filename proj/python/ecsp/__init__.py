"""Discourse-guided sentence decontextualisation (C++ core)."""

from ._ecsp import (
    BackendError,
    NoReferences,
    ParseError,
    added_words,
    bleu,
    chrf,
    corpus_bleu,
    dataset_stats,
    evaluate,
    load_dataset,
    metric_names,
    meteor,
    mock_complete,
    normalize_text,
    parse_edu_list,
    parse_rewrite,
    porter_stem,
    process_record,
    relations,
    rouge_l,
    rule_segment,
    run_dataset,
    sari,
    tokenize,
)

__version__ = "0.1.0"
