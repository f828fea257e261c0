"""Periocular recognition pipeline.

Feature fusion (min/max/mean), variance-retention PCA, five classic
classifier families, and stratified cross-validated evaluation over the
VPF-CSV feature file format.
"""

from . import classify, dataset, errors, evaluate, fusion, pca
from .classify import (
    GaussianNBSpec,
    KnnSpec,
    MlpSpec,
    RandomForestSpec,
    knn_search,
    train,
)
from .dataset import (
    AgeGroup,
    Expression,
    FeatureDataset,
    Gender,
    SampleMeta,
    TaskLabelView,
    derive_age_group,
    format_sample_name,
    label_view,
    load_features,
    parse_sample_name,
    save_features,
    synth_dataset,
)
from .evaluate import (
    ConfusionMatrix,
    EvalReport,
    FoldPlan,
    PipelineConfig,
    accuracy,
    confusion_matrix,
    cross_validate,
    prc_area,
    roc_area,
    stratified_folds,
    weighted_f_measure,
)
from .fusion import merge

__version__ = "0.1.0"
