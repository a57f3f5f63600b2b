"""Classifier specifications: one frozen dataclass per algorithm, carrying its
hyperparameters with the benchmark's settings as defaults."""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass
from typing import ClassVar

from ..errors import InvalidSpecError

# Preprocessing applied before fitting.
RAW = "raw"
DISCRETIZE = "discretize"
NORMALIZE = "normalize"


@dataclass(frozen=True)
class ClassifierSpec:
    name: ClassVar[str] = ""
    family: ClassVar[str] = ""
    recipe: ClassVar[str] = RAW

    def __post_init__(self):
        self.validate()

    def validate(self):
        pass

    def params(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def ident(self) -> str:
        """Stable identifier: the bare name for default parameters, otherwise
        the name followed by the non-default parameters as JSON."""
        default = type(self)().params()
        changed = {k: v for k, v in self.params().items() if default[k] != v}
        if not changed:
            return self.name
        return f"{self.name}{json.dumps(changed, sort_keys=True, separators=(',', ':'))}"

    def to_json(self) -> dict:
        return {"name": self.name, "params": self.params()}

    def __str__(self):
        return self.ident


def _check(cond, msg):
    if not cond:
        raise InvalidSpecError(msg)


@dataclass(frozen=True)
class BayesNet(ClassifierSpec):
    name: ClassVar[str] = "BayesNet"
    family: ClassVar[str] = "Bayes"
    recipe: ClassVar[str] = DISCRETIZE
    estimator: str = "Simple"
    search: str = "K2"
    use_adtree: bool = False
    alpha: float = 1.0
    max_parents: int = 2
    bins: int = 10

    def validate(self):
        _check(self.estimator == "Simple", "only the Simple estimator is supported")
        _check(self.search == "K2", "only K2 search is supported")
        _check(not self.use_adtree, "ADTree counting is not supported")
        _check(self.alpha > 0, "alpha must be > 0")
        _check(self.max_parents >= 1, "max_parents must be >= 1")
        _check(self.bins >= 1, "bins must be >= 1")


@dataclass(frozen=True)
class NaiveBayes(ClassifierSpec):
    name: ClassVar[str] = "NaiveBayes"
    family: ClassVar[str] = "Bayes"
    continuous_handling: str = "Gaussian"

    def validate(self):
        _check(self.continuous_handling == "Gaussian", "only Gaussian densities are supported")


@dataclass(frozen=True)
class J48(ClassifierSpec):
    name: ClassVar[str] = "J48"
    family: ClassVar[str] = "Trees"
    confidence_factor: float = 0.25
    num_folds: int = 3
    seed: int = 1
    unpruned: bool = False
    min_num_obj: int = 2

    def validate(self):
        _check(0 < self.confidence_factor <= 1, "confidence_factor must lie in (0, 1]")
        _check(self.num_folds >= 2, "num_folds must be >= 2")
        _check(self.min_num_obj >= 1, "min_num_obj must be >= 1")


@dataclass(frozen=True)
class NBTree(ClassifierSpec):
    name: ClassVar[str] = "NBTree"
    family: ClassVar[str] = "Trees"
    folds: int = 5
    min_instances: int = 30
    min_relative_gain: float = 0.05
    seed: int = 1

    def validate(self):
        _check(self.folds >= 2, "folds must be >= 2")
        _check(self.min_instances >= 2, "min_instances must be >= 2")
        _check(0 <= self.min_relative_gain < 1, "min_relative_gain must lie in [0, 1)")


@dataclass(frozen=True)
class DecisionTable(ClassifierSpec):
    name: ClassVar[str] = "DecisionTable"
    family: ClassVar[str] = "Rules"
    cross_val: int = 1
    search: str = "BestFirst"
    use_ibk: bool = False
    stale_limit: int = 5
    bins: int = 10

    def validate(self):
        _check(self.cross_val == 1, "only leave-one-out evaluation (cross_val=1) is supported")
        _check(self.search == "BestFirst", "only BestFirst search is supported")
        _check(not self.use_ibk, "IBk fallback is not supported")
        _check(self.stale_limit >= 1, "stale_limit must be >= 1")
        _check(self.bins >= 1, "bins must be >= 1")


@dataclass(frozen=True)
class JRip(ClassifierSpec):
    name: ClassVar[str] = "JRip"
    family: ClassVar[str] = "Rules"
    folds: int = 3
    min_no: float = 2.0
    optimizations: int = 2
    seed: int = 1
    use_pruning: bool = True

    def validate(self):
        _check(self.folds >= 2, "folds must be >= 2")
        _check(self.min_no > 0, "min_no must be > 0")
        _check(self.optimizations >= 0, "optimizations must be >= 0")


@dataclass(frozen=True)
class OneR(ClassifierSpec):
    name: ClassVar[str] = "OneR"
    family: ClassVar[str] = "Rules"
    min_bucket_size: int = 6

    def validate(self):
        _check(self.min_bucket_size >= 1, "min_bucket_size must be >= 1")


@dataclass(frozen=True)
class MLP(ClassifierSpec):
    name: ClassVar[str] = "MLP"
    family: ClassVar[str] = "Functions"
    recipe: ClassVar[str] = NORMALIZE
    learning_rate: float = 0.3
    momentum: float = 0.2
    random_seed: int = 0
    validation_threshold: int = 20
    hidden_layers: int = 1
    hidden_units: int | None = None  # None: ceil((inputs + classes) / 2)
    max_epochs: int = 500
    validation_fraction: float = 0.1

    def validate(self):
        _check(self.learning_rate > 0, "learning_rate must be > 0")
        _check(0 <= self.momentum < 1, "momentum must lie in [0, 1)")
        _check(self.validation_threshold >= 1, "validation_threshold must be >= 1")
        _check(self.hidden_layers == 1, "exactly one hidden layer is supported")
        _check(self.hidden_units is None or self.hidden_units >= 1, "hidden_units must be >= 1")
        _check(self.max_epochs >= 1, "max_epochs must be >= 1")
        _check(0 <= self.validation_fraction < 1, "validation_fraction must lie in [0, 1)")


@dataclass(frozen=True)
class SMO(ClassifierSpec):
    name: ClassVar[str] = "SMO"
    family: ClassVar[str] = "Functions"
    recipe: ClassVar[str] = NORMALIZE
    c: float = 1.0
    epsilon: float = 1.0e-12
    kernel: str = "Polynomial"
    degree: int = 1
    num_folds: int = -1
    random_seed: int = 1
    tolerance: float = 1.0e-3
    max_iter: int = 100_000

    def validate(self):
        _check(self.c > 0, "c must be > 0")
        _check(self.epsilon > 0, "epsilon must be > 0")
        _check(self.kernel == "Polynomial", "only the polynomial kernel is supported")
        _check(self.degree >= 1, "degree must be >= 1")
        _check(self.num_folds == -1, "probability calibration folds are not supported")
        _check(self.tolerance > 0, "tolerance must be > 0")
        _check(self.max_iter >= 1, "max_iter must be >= 1")


@dataclass(frozen=True)
class LBk(ClassifierSpec):
    name: ClassVar[str] = "LBk"
    family: ClassVar[str] = "Lazy"
    recipe: ClassVar[str] = NORMALIZE
    k: int = 1
    cross_validate: bool = False
    search: str = "LinearScan"
    window_size: int = 0

    def validate(self):
        _check(self.k >= 1, "k must be >= 1")
        _check(not self.cross_validate, "cross-validated k selection is not supported")
        _check(self.search == "LinearScan", "only linear scan search is supported")
        _check(self.window_size >= 0, "window_size must be >= 0")


SPEC_TYPES = {cls.name: cls for cls in (
    BayesNet, NaiveBayes, J48, NBTree, DecisionTable, JRip, OneR, MLP, SMO, LBk)}

# Aliases accepted on input.
_ALIASES = {"naivebayes": "NaiveBayes", "naïvebayes": "NaiveBayes", "decision table": "DecisionTable",
            "ibk": "LBk", "decisiontable": "DecisionTable"}


def default_specs() -> list[ClassifierSpec]:
    """The ten benchmarked classifiers with default parameters."""
    return [cls() for cls in SPEC_TYPES.values()]


def spec_from_json(obj: dict) -> ClassifierSpec:
    cls = _lookup(obj["name"])
    try:
        return cls(**obj.get("params", {}))
    except TypeError as exc:
        raise InvalidSpecError(str(exc)) from None


def _lookup(name: str):
    name = _ALIASES.get(name.lower(), name)
    for key, cls in SPEC_TYPES.items():
        if key.lower() == name.lower():
            return cls
    raise InvalidSpecError(f"unknown classifier {name!r}")


_IDENT = re.compile(r"^([A-Za-z0-9_ ]+?)\s*(\{.*\})?$")


def spec_from_ident(ident: str) -> ClassifierSpec:
    """Inverse of :attr:`ClassifierSpec.ident`."""
    m = _IDENT.match(ident.strip())
    if not m:
        raise InvalidSpecError(f"malformed classifier identifier {ident!r}")
    cls = _lookup(m.group(1))
    params = json.loads(m.group(2)) if m.group(2) else {}
    try:
        return cls(**params)
    except TypeError as exc:
        raise InvalidSpecError(str(exc)) from None
