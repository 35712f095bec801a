"""Burst detection in dynamic co-word networks via sparse-smooth decomposition."""

__version__ = "0.1.0"

from .backend import active_backend, set_num_threads
from .baselines import (
    BurstSet,
    KleinbergParams,
    kleinberg,
    kleinberg_batch,
    threshold_derivative,
    threshold_mean_deviation,
    threshold_raw,
)
from .corpus import (
    BinnedCorpus,
    BinSpec,
    CorpusSchema,
    Document,
    TokenizedDocument,
    VocabularyIndex,
    build_vocabulary,
    ingest,
    load_stopwords,
    preprocess,
    prepare_corpus,
    restore_labels,
)
from .coword import (
    PairSeries,
    build_pair_series,
    count_pairs,
    edge_weight,
    load_pair_series,
    save_pair_series,
    stack,
)
from .decomp import (
    DecompositionResult,
    SolverConfig,
    decompose,
    gradient,
    objective,
    soft_threshold,
    verify_optimality,
)
from .evaluation import (
    EvaluationReport,
    PRPoint,
    auc,
    precision_recall,
    run_benchmark,
    sweep,
)
from .graph import BurstGraph, export_graph, extract_graph, load_graph, louvain
from .stemming import porter_stem
from .synth import (
    GroundTruth,
    StableSeries,
    SynthConfig,
    generate_stable,
    inject_bursts,
    to_pair_series,
)
