"""Turns datasets into the numeric views the learners consume.

Symbolic values are re-coded against the training vocabulary; values never
seen in training become -1 and each learner decides what that means.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SchemaMismatchError
from ..kdd_data import (
    Connection,
    Dataset,
    Discretizer,
    FeatureSchema,
    NormalizationParams,
    bin_labels,
    fit_normalization,
)
from .specs import DISCRETIZE, NORMALIZE, RAW

UNSEEN = -1


@dataclass(frozen=True)
class Encoded:
    cont: np.ndarray  # (n, p) float64
    sym: np.ndarray  # (n, q) int64, UNSEEN for values outside the training vocabulary
    sym_sizes: tuple[int, ...]
    cont_features: tuple[int, ...]  # schema index of each cont column
    sym_features: tuple[int, ...]

    def __len__(self):
        return self.cont.shape[0]

    def columns(self):
        """(schema_index, kind, position) for every column, by schema index."""
        cols = [(f, "cont", j) for j, f in enumerate(self.cont_features)]
        cols += [(f, "sym", j) for j, f in enumerate(self.sym_features)]
        return sorted(cols)

    def take(self, index) -> "Encoded":
        return Encoded(self.cont[index], self.sym[index], self.sym_sizes,
                       self.cont_features, self.sym_features)

    def onehot(self) -> np.ndarray:
        """Continuous columns followed by one indicator block per symbolic
        column; unseen values encode as all zeros."""
        n = len(self)
        blocks = [self.cont]
        for j, size in enumerate(self.sym_sizes):
            block = np.zeros((n, size))
            codes = self.sym[:, j]
            seen = codes >= 0
            block[np.flatnonzero(seen), codes[seen]] = 1.0
            blocks.append(block)
        return np.hstack(blocks) if blocks else np.zeros((n, 0))

    @property
    def onehot_width(self) -> int:
        return self.cont.shape[1] + sum(self.sym_sizes)


class Encoder:
    """Fitted preprocessing: optional discretization or normalization plus the
    training vocabulary of every symbolic column."""

    def __init__(self, recipe: str = RAW, bins: int = 10):
        if recipe not in (RAW, DISCRETIZE, NORMALIZE):
            raise ValueError(f"unknown recipe {recipe!r}")
        self.recipe = recipe
        self.bins = bins
        self.schema: FeatureSchema | None = None
        self.discretizer: Discretizer | None = None
        self.normalization: NormalizationParams | None = None
        self.vocab: list[dict[str, int]] = []

    def fit(self, ds: Dataset) -> "Encoder":
        self.schema = ds.schema
        if self.recipe == DISCRETIZE:
            self.discretizer = Discretizer.fit(ds, self.bins)
            view = self.discretizer.transform(ds)
        else:
            view = ds
            if self.recipe == NORMALIZE:
                self.normalization = fit_normalization(ds)
        binned = set(ds.schema.continuous_index) if self.discretizer else set()
        labels = bin_labels(self.bins)
        self.vocab = []
        for j, f in enumerate(view.schema.symbolic_index):
            if f in binned:
                values = labels
            else:
                present = np.unique(view.sym[:, j]) if len(view) else []
                values = [view.vocab[j][c] for c in present]
            self.vocab.append({v: k for k, v in enumerate(values)})
        self._view_schema = view.schema
        return self

    @property
    def sym_sizes(self) -> tuple[int, ...]:
        return tuple(len(v) for v in self.vocab)

    def value_names(self) -> list[list[str]]:
        """Training vocabulary of each symbolic column, indexed by code."""
        return [list(v) for v in self.vocab]

    def describe(self) -> str:
        if self.recipe == DISCRETIZE:
            return f"discretize(equal-width, bins={self.bins})"
        if self.recipe == NORMALIZE:
            return "normalize(min-max) + symbolic codes"
        return "raw"

    def _check_schema(self, schema: FeatureSchema):
        if schema.names != self.schema.names or (
            schema.continuous_index != self.schema.continuous_index
        ):
            raise SchemaMismatchError("record schema differs from the training schema")

    def transform(self, ds: Dataset) -> Encoded:
        self._check_schema(ds.schema)
        view = self.discretizer.transform(ds) if self.discretizer else ds
        cont = view.cont
        if self.normalization is not None:
            cont = self.normalization.scale(cont)
        binned = set(ds.schema.continuous_index) if self.discretizer else set()
        cols = []
        for j, f in enumerate(view.schema.symbolic_index):
            if f in binned:
                cols.append(view.sym[:, j].astype(np.int64))
                continue
            remap = np.array([self.vocab[j].get(v, UNSEEN) for v in view.vocab[j]] or [UNSEEN],
                             dtype=np.int64)
            cols.append(remap[view.sym[:, j]] if len(view) else np.zeros(0, dtype=np.int64))
        sym = np.stack(cols, axis=1) if cols else np.zeros((len(ds), 0), dtype=np.int64)
        return Encoded(np.ascontiguousarray(cont, dtype=np.float64), sym, self.sym_sizes,
                       view.schema.continuous_index, view.schema.symbolic_index)

    def encode_connection(self, rec: Connection) -> Encoded:
        """Single-record fast path equivalent to transform on a one-row set."""
        schema = self.schema
        feats = rec.features
        if len(feats) != len(schema):
            raise SchemaMismatchError(f"expected {len(schema)} features, got {len(feats)}")
        try:
            cont = np.array([[float(feats[i]) for i in schema.continuous_index]], dtype=np.float64)
        except (TypeError, ValueError):
            raise SchemaMismatchError("non-numeric value in a continuous feature") from None
        for i in schema.symbolic_index:
            if not isinstance(feats[i], str):
                raise SchemaMismatchError(f"feature {schema[i].name} must be symbolic text")
        if self.discretizer is not None:
            bins = self.discretizer.codes(cont)[0]
            bin_of = dict(zip(schema.continuous_index, bins.tolist()))
            sym = []
            for j, f in enumerate(self._view_schema.symbolic_index):
                if f in bin_of:
                    sym.append(bin_of[f])
                else:
                    sym.append(self.vocab[j].get(feats[f], UNSEEN))
            return Encoded(np.zeros((1, 0)), np.array([sym], dtype=np.int64), self.sym_sizes,
                           (), self._view_schema.symbolic_index)
        if self.normalization is not None:
            cont = self.normalization.scale(cont)
        sym = [self.vocab[j].get(feats[f], UNSEEN) for j, f in enumerate(schema.symbolic_index)]
        return Encoded(cont, np.array([sym], dtype=np.int64).reshape(1, -1), self.sym_sizes,
                       schema.continuous_index, schema.symbolic_index)
