"""Cross-language textual similarity methods and evaluation protocol."""

__version__ = "0.1.0"

from .corpus import (  # noqa: E402
    AlignedCorpus,
    Granularity,
    TextUnit,
    load_corpus,
    load_manifest,
    normalize_c3g,
    sample_units,
    tokenize_words,
)
from .evalproto import build_matrix, fingerprint, run_folds, sweep_threshold  # noqa: E402
from .lexres import (  # noqa: E402
    BilingualLexicon,
    LengthStats,
    TranslationTable,
    estimate_length_stats,
    prune_table,
    train_ibm1,
)
from .methods import (  # noqa: E402
    ASAScorer,
    C3GScorer,
    CTSScorer,
    ESAScorer,
    LengthModelScorer,
    OracleScorer,
    RandomScorer,
    Scorer,
    TMAScorer,
)
