"""Multimodal style embeddings from topic models over visual and text documents."""

from .errors import ConfigurationError, ParseError, StyleTopicsError
from .interchange import (
    ActivationRecord,
    StreamFormatError,
    StreamTruncatedError,
    UnsupportedVersionError,
    read_activation_file,
    read_activation_stream,
    stream_to_bytes,
    write_activation_file,
    write_activation_stream,
)
from .lda import (
    Corpus,
    LdaModel,
    encode_corpus,
    estimate_phi,
    estimate_theta,
    full_conditional,
    infer_held_out,
    sample_posterior,
    top_words,
    train_lda,
)
from .polylda import (
    PolyLdaModel,
    TupleCorpus,
    align_tuples,
    estimate_phi_l,
    estimate_shared_theta,
    top_words_per_language,
    train_polylda,
)
from .styleeval import (
    DistanceStats,
    MissingItemsError,
    PairSet,
    UndefinedRatioError,
    concentration_stats,
    load_pairs,
    pair_distances,
    separation_ratio,
)
from .text import TextDocument, tokenize_item
from .visual import (
    LayerSpec,
    VisualDocument,
    active_channels,
    build_item_documents,
    calibrate_threshold,
    classify_dense,
    compute_layer_density,
)

__version__ = "0.1.0"
