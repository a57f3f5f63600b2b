"""The ten learners behind one train / predict / describe contract."""

from .model import (
    FORMAT_VERSION,
    MAGIC,
    Prediction,
    TrainedModel,
    describe,
    dumps_model,
    load_model,
    loads_model,
    predict,
    predict_batch,
    predict_category,
    predict_indices,
    save_model,
    train,
)
from .specs import (
    DISCRETIZE,
    MLP,
    NORMALIZE,
    RAW,
    SMO,
    SPEC_TYPES,
    BayesNet,
    ClassifierSpec,
    DecisionTable,
    J48,
    JRip,
    LBk,
    NaiveBayes,
    NBTree,
    OneR,
    default_specs,
    spec_from_ident,
    spec_from_json,
)

__all__ = [name for name in dir() if not name.startswith("_")]
