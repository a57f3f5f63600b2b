"""Uniform train / predict / describe contract over the ten learners, plus the
binary model container."""

from __future__ import annotations

import io
import json
import pickle
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..errors import InvalidSpecError, ModelFormatError, SingleClassError
from ..kdd_data import Category, Connection, Dataset
from . import bayes, lazy, mlp, rules, smo, trees
from .encoding import Encoder
from .specs import ClassifierSpec, spec_from_json

_LEARNERS = {
    "BayesNet": bayes.BayesNetLearner,
    "NaiveBayes": bayes.GaussianNaiveBayes,
    "J48": trees.C45Tree,
    "NBTree": trees.NBTreeLearner,
    "DecisionTable": rules.DecisionTableLearner,
    "JRip": rules.Ripper,
    "OneR": rules.OneRule,
    "MLP": mlp.Perceptron,
    "SMO": smo.PairwiseSMO,
    "LBk": lazy.NearestNeighbor,
}


@dataclass(frozen=True)
class Prediction:
    category: Category
    scores: Mapping[Category, float] | None = None


@dataclass(frozen=True, eq=False)
class TrainedModel:
    spec: ClassifierSpec
    class_list: tuple[Category, ...]
    training_time_s: float
    encoder: Encoder
    learner: object = field(repr=False)
    # set when training saw a single class; the model then always predicts it
    constant: Category | None = None

    @property
    def preprocessing_recipe(self) -> str:
        return self.encoder.describe()

    @property
    def degenerate(self) -> bool:
        return self.constant is not None


def train(spec: ClassifierSpec, train_set: Dataset) -> TrainedModel:
    """Fit ``spec`` on ``train_set``. Training time covers preprocessing and
    fitting, not I/O."""
    if not isinstance(spec, ClassifierSpec):
        raise InvalidSpecError(f"not a classifier spec: {spec!r}")
    if len(train_set) == 0:
        raise ValueError("training set is empty")
    if not train_set.labeled:
        raise ValueError("every training record needs a label")
    cats = train_set.categories()
    present = np.unique(cats)
    class_list = tuple(Category(int(c)) for c in present)

    start = time.perf_counter()
    encoder = Encoder(spec.recipe, getattr(spec, "bins", 10)).fit(train_set)
    if len(class_list) == 1:
        if spec.name == "SMO":
            raise SingleClassError("SMO needs at least two classes in the training data")
        elapsed = time.perf_counter() - start
        return TrainedModel(spec, class_list, elapsed, encoder, None, class_list[0])
    y = np.searchsorted(present, cats).astype(np.int64)
    X = encoder.transform(train_set)
    learner = _LEARNERS[spec.name](spec)
    learner.fit(X, y, len(class_list))
    elapsed = time.perf_counter() - start
    return TrainedModel(spec, class_list, elapsed, encoder, learner)


def _wrap(model: TrainedModel, idx: np.ndarray, scores: np.ndarray | None) -> list[Prediction]:
    classes = model.class_list
    out = []
    for r, k in enumerate(idx.tolist()):
        s = None
        if scores is not None:
            s = {c: float(v) for c, v in zip(classes, scores[r])}
        out.append(Prediction(classes[k], s))
    return out


def predict(model: TrainedModel, record: Connection) -> Prediction:
    if model.constant is not None:
        model.encoder.encode_connection(record)
        return Prediction(model.constant, {model.constant: 1.0})
    idx, scores = model.learner.predict(model.encoder.encode_connection(record))
    return _wrap(model, idx, scores)[0]


def predict_category(model: TrainedModel, record: Connection) -> Category:
    """Cheaper :func:`predict` that skips building score mappings."""
    if model.constant is not None:
        model.encoder.encode_connection(record)
        return model.constant
    idx, _ = model.learner.predict(model.encoder.encode_connection(record))
    return model.class_list[int(idx[0])]


def predict_indices(model: TrainedModel, records: Dataset) -> np.ndarray:
    """Category codes (ints) for every record; vectorized."""
    if model.constant is not None:
        model.encoder.transform(records)
        return np.full(len(records), int(model.constant), dtype=np.int64)
    if len(records) == 0:
        return np.zeros(0, dtype=np.int64)
    idx, _ = model.learner.predict(model.encoder.transform(records))
    lut = np.array([int(c) for c in model.class_list], dtype=np.int64)
    return lut[idx]


def predict_batch(model: TrainedModel, records: Dataset, parallel: bool = False,
                  workers: int | None = None, chunk_size: int = 2048) -> list[Prediction]:
    """Elementwise :func:`predict` over a dataset, in order. With
    ``parallel`` the dataset is cut into chunks scored on a thread pool."""
    n = len(records)
    if n == 0:
        return []

    def run(lo):
        part = records.take(np.arange(lo, min(lo + chunk_size, n)))
        if model.constant is not None:
            model.encoder.transform(part)
            return [Prediction(model.constant, {model.constant: 1.0})] * len(part)
        idx, scores = model.learner.predict(model.encoder.transform(part))
        return _wrap(model, idx, scores)

    starts = range(0, n, chunk_size)
    if parallel:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    return [p for part in parts for p in part]


def describe(model: TrainedModel) -> str:
    """Human-readable dump. Training time is left out so that dumps of the
    same spec on the same data are identical."""
    names = model.encoder.schema.names
    classes = [c.display for c in model.class_list]
    head = [
        f"{model.spec.ident}",
        f"classes: {', '.join(classes)}",
        f"preprocessing: {model.preprocessing_recipe}",
        "",
    ]
    if model.constant is not None:
        body = f"constant predictor: {model.constant.display}"
    else:
        body = model.learner.describe(names, classes, model.encoder.value_names())
    return "\n".join(head) + body + "\n"


# -- container -------------------------------------------------------------------

MAGIC = b"CATNET01"
FORMAT_VERSION = 1


def dumps_model(model: TrainedModel) -> bytes:
    header = json.dumps({
        "version": FORMAT_VERSION,
        "spec": model.spec.to_json(),
        "recipe": model.encoder.recipe,
        "preprocessing": model.preprocessing_recipe,
        "classes": [c.display for c in model.class_list],
        "training_time_s": model.training_time_s,
    }, sort_keys=True).encode()
    state = pickle.dumps({"encoder": model.encoder, "learner": model.learner,
                          "constant": model.constant}, protocol=4)
    return MAGIC + struct.pack(">HI", FORMAT_VERSION, len(header)) + header + state


def loads_model(blob: bytes) -> TrainedModel:
    if blob[:8] != MAGIC:
        raise ModelFormatError("not a catnet model (bad magic)")
    try:
        version, hlen = struct.unpack(">HI", blob[8:14])
    except struct.error:
        raise ModelFormatError("truncated model header") from None
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"model format version {version}, expected {FORMAT_VERSION}")
    header = json.loads(blob[14:14 + hlen])
    if header.get("version") != version:
        raise ModelFormatError("inconsistent model header")
    state = pickle.loads(blob[14 + hlen:])
    classes = tuple(Category.parse(c) for c in header["classes"])
    return TrainedModel(spec_from_json(header["spec"]), classes, header["training_time_s"],
                        state["encoder"], state["learner"], state["constant"])


def save_model(model: TrainedModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps_model(model))


def load_model(path) -> TrainedModel:
    with open(path, "rb") as fh:
        return loads_model(fh.read())
