"""gecval: reference-free evaluation toolkit for grammatical error correction.

The pipeline: parallel-data ingestion (corpus), token alignment and edit
extraction (align), error-label projection (gedlabel), a trainable encoder
(encoder), edit-impact pair generation (impact), sequential detection and
quality training (training), sentence scoring (scoring), and a
meta-evaluation statistics harness (metaeval). The `gecval` command binds
these end to end.
"""

__version__ = "0.1.0"

from .align import Edit, align_tokens, apply_edits, classify_edit, extract_edits
from .corpus import (
    JudgmentSet,
    ParallelPair,
    Sentence,
    SplitSpec,
    load_judgments,
    parse_m2,
    parse_parallel_tsv,
    serialize_m2,
    split_dataset,
)
from .encoder import (
    EncoderCheckpoint,
    EncoderConfig,
    build_vocab,
    encode,
    ged_logits,
    load_checkpoint,
    new_checkpoint,
    qe_score,
    save_checkpoint,
    similarity,
)
from .gedlabel import LabeledSentence, Taxonomy, get_taxonomy, project_labels, taxonomy_collapse
from .impact import PairExample, build_pair_dataset, edit_impact, generate_pairs
from .metaeval import (
    CorrelationReport,
    bootstrap_compare,
    kendall_tau,
    metric_ranking_trueskill,
    pairwise_rank_groups,
    pearson,
    sentence_agreement,
    spearman,
    trueskill_rank,
    williams_test,
    window_analysis,
)
from .scoring import ScoreRecord, score_corpus, score_filter_free, score_legacy
from .training import (
    SelectionProtocol,
    TrainConfig,
    ged_loss,
    qe_loss,
    select_over_seeds,
    train_ged,
    train_qe,
)

__all__ = [name for name in dir() if not name.startswith("_")]
