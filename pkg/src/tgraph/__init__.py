"""Template-guided analysis of brain connectivity graphs.

The package goes from regional time series to group-level findings in four
stages: Pearson connectivity matrices, sparse per-group templates fitted by
exact block coordinate descent, a small structured network trained on
template-augmented matrices, and a contrast subgraph that localizes the
difference between two groups.  The ``tgraph`` command line drives the same
stages over CSV/JSON artifacts.
"""

from . import kernels
from .connectivity import (
    ConnectivityMatrix,
    GlobalTemplate,
    TimeSeriesTable,
    ValidationReport,
    Violation,
    augment,
    global_template,
    pearson_connectivity,
    read_matrix_csv,
    read_timeseries_csv,
    validate_connectivity,
    write_matrix_csv,
    write_timeseries_csv,
)
from .contrast import (
    ContrastProblem,
    ContrastSubgraph,
    brute_force,
    contrast_matrix,
    extract_subgraph,
    local_search,
    read_subgraph_json,
    subgraph_score,
    write_subgraph_json,
)
from .dataset import LabeledDataset, Subject
from .errors import (
    ConstantColumn,
    DataFormatError,
    DimensionMismatch,
    EmptyTargets,
    GroupTooSmall,
    IndexOutOfRange,
    InvalidSpec,
    NonFinite,
    SingleClassSlice,
    StaleCache,
    TgraphError,
    TooFewTimepoints,
    TooLarge,
)
from .evaluation import EvalReport, auc_binary, evaluate, split
from .manifest import (
    DatasetManifest,
    ManifestEntry,
    load_dataset,
    read_manifest,
    write_manifest,
)
from .network import (
    NetworkHyperParams,
    NetworkParameters,
    TrainedModel,
    backward,
    cross_entropy,
    forward,
    init_network,
    load_model,
    predict_proba,
    save_model,
    sgd_step,
    softmax,
    train,
)
from .synth import (
    SynthGroundTruth,
    SynthSpec,
    differentiated_f1,
    recovered_differentiated_pairs,
    support_f1,
    synth_generate,
)
from .templates import (
    TemplateHyperParams,
    TemplateSet,
    WeightTable,
    adaptive_weight,
    fit_templates,
    hinge_penalty,
    induced_objective,
    load_templates,
    objective,
    save_templates,
    similarity_scores,
    solve_entry,
    template_fingerprint,
    update_template,
)

__version__ = "0.1.0"

__all__ = [
    "ConnectivityMatrix",
    "ConstantColumn",
    "ContrastProblem",
    "ContrastSubgraph",
    "DataFormatError",
    "DatasetManifest",
    "DimensionMismatch",
    "EmptyTargets",
    "EvalReport",
    "GlobalTemplate",
    "GroupTooSmall",
    "IndexOutOfRange",
    "InvalidSpec",
    "LabeledDataset",
    "ManifestEntry",
    "NetworkHyperParams",
    "NetworkParameters",
    "NonFinite",
    "SingleClassSlice",
    "StaleCache",
    "Subject",
    "SynthGroundTruth",
    "SynthSpec",
    "TemplateHyperParams",
    "TemplateSet",
    "TgraphError",
    "TimeSeriesTable",
    "TooFewTimepoints",
    "TooLarge",
    "TrainedModel",
    "ValidationReport",
    "Violation",
    "WeightTable",
    "adaptive_weight",
    "auc_binary",
    "augment",
    "backward",
    "brute_force",
    "contrast_matrix",
    "cross_entropy",
    "differentiated_f1",
    "evaluate",
    "extract_subgraph",
    "fit_templates",
    "forward",
    "global_template",
    "hinge_penalty",
    "induced_objective",
    "init_network",
    "kernels",
    "load_dataset",
    "load_model",
    "load_templates",
    "local_search",
    "objective",
    "pearson_connectivity",
    "predict_proba",
    "read_manifest",
    "read_matrix_csv",
    "read_subgraph_json",
    "read_timeseries_csv",
    "recovered_differentiated_pairs",
    "save_model",
    "save_templates",
    "sgd_step",
    "similarity_scores",
    "softmax",
    "solve_entry",
    "split",
    "subgraph_score",
    "support_f1",
    "synth_generate",
    "template_fingerprint",
    "train",
    "update_template",
    "validate_connectivity",
    "write_manifest",
    "write_matrix_csv",
    "write_subgraph_json",
    "write_timeseries_csv",
]
