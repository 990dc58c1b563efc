"""annoaudit: noise auditing for crowd-annotated text datasets.

Scores instances by annotation entropy and judgments by silhouette
coefficient over text embeddings, filters the noisiest data, and provides
a deterministic harness showing that filtered data trains better
classifiers than randomly reduced data.
"""

from .aggregate import MajorityLabel, majority_label, majority_labels
from .entropy import EntropyScore, audit_entropy, entropy, max_entropy
from .evaluate import (
    ClassifierModel,
    ConfidenceRecord,
    EvalResult,
    TrainConfig,
    accuracy,
    macro_f1,
    predict,
    split,
    sweep,
    train,
)
from .filtering import (
    FilterPlan,
    RemovalLog,
    apply_filter,
    filter_entropy,
    filter_random,
    filter_silhouette,
)
from .ingest import (
    AlignmentReport,
    EmbeddingStore,
    LabelMapping,
    ParseError,
    parse_embeddings,
    parse_judgment_file,
    validate_alignment,
    write_embeddings,
    write_judgment_file,
)
from .model import (
    AnnotationRecord,
    CountVector,
    Dataset,
    Judgment,
    LabelSet,
    SchemaError,
    expand_judgments,
    label_counts,
)
from .silhouette import (
    ClusterPointSet,
    SilhouetteScore,
    audit_silhouette,
    build_points,
    silhouette_scores,
)
from .synth import NoiseMask, SynthConfig, generate

__version__ = "0.1.0"
