"""KDD99 connection records: schema, parsing, attack taxonomy, sampling and
the preprocessing views consumed by the learners.

Records are held column-wise (a float matrix for continuous features and an
integer code matrix for symbolic ones) so that half a million connections fit
comfortably in memory; :class:`Connection` objects are materialized on demand.
"""

from __future__ import annotations

import enum
import io
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    FieldCountError,
    FieldTypeError,
    InsufficientRecordsError,
    SchemaMismatchError,
    UnknownLabelError,
)

CONTINUOUS = "continuous"
SYMBOLIC = "symbolic"

N_FEATURES = 41


class Category(enum.IntEnum):
    NORMAL = 0
    DOS = 1
    PROBE = 2
    U2R = 3
    R2L = 4

    @property
    def display(self) -> str:
        return _DISPLAY[self]

    def __str__(self):
        return self.display

    @classmethod
    def parse(cls, text: str) -> "Category":
        key = text.strip().lower()
        for cat, name in _DISPLAY.items():
            if name.lower() == key:
                return cat
        raise ValueError(f"not an attack category: {text!r}")


_DISPLAY = {
    Category.NORMAL: "Normal",
    Category.DOS: "DoS",
    Category.PROBE: "Probe",
    Category.U2R: "U2R",
    Category.R2L: "R2L",
}

ALL_CATEGORIES = tuple(Category)
ATTACK_CATEGORIES = (Category.DOS, Category.PROBE, Category.U2R, Category.R2L)


@dataclass(frozen=True)
class FeatureDescriptor:
    name: str
    kind: str
    index: int
    # None for continuous features; for symbolic ones the known values, with
    # open=True meaning unseen values are legal (e.g. new services).
    domain: tuple[str, ...] | None = None
    open: bool = False

    def __post_init__(self):
        if self.kind not in (CONTINUOUS, SYMBOLIC):
            raise ValueError(f"bad feature kind {self.kind!r}")
        if self.kind == CONTINUOUS and self.domain is not None:
            raise ValueError(f"continuous feature {self.name} cannot carry a domain")
        if self.kind == SYMBOLIC and self.domain is None:
            object.__setattr__(self, "domain", ())
            object.__setattr__(self, "open", True)

    @property
    def is_continuous(self) -> bool:
        return self.kind == CONTINUOUS


@dataclass(frozen=True)
class FeatureSchema:
    descriptors: tuple[FeatureDescriptor, ...]

    def __post_init__(self):
        if len(self.descriptors) != N_FEATURES:
            raise ValueError(f"schema needs {N_FEATURES} descriptors, got {len(self.descriptors)}")
        if [d.index for d in self.descriptors] != list(range(N_FEATURES)):
            raise ValueError("descriptor indices must be dense 0..40 in order")

    def __len__(self):
        return len(self.descriptors)

    def __iter__(self):
        return iter(self.descriptors)

    def __getitem__(self, i):
        return self.descriptors[i]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.descriptors)

    @property
    def continuous_index(self) -> tuple[int, ...]:
        return tuple(d.index for d in self.descriptors if d.is_continuous)

    @property
    def symbolic_index(self) -> tuple[int, ...]:
        return tuple(d.index for d in self.descriptors if not d.is_continuous)

    def index_of(self, name: str) -> int:
        return self.names.index(name)


_KDD_FEATURES = [
    ("duration", CONTINUOUS),
    ("protocol_type", SYMBOLIC),
    ("service", SYMBOLIC),
    ("flag", SYMBOLIC),
    ("src_bytes", CONTINUOUS),
    ("dst_bytes", CONTINUOUS),
    ("land", SYMBOLIC),
    ("wrong_fragment", CONTINUOUS),
    ("urgent", CONTINUOUS),
    ("hot", CONTINUOUS),
    ("num_failed_logins", CONTINUOUS),
    ("logged_in", SYMBOLIC),
    ("num_compromised", CONTINUOUS),
    ("root_shell", CONTINUOUS),
    ("su_attempted", CONTINUOUS),
    ("num_root", CONTINUOUS),
    ("num_file_creations", CONTINUOUS),
    ("num_shells", CONTINUOUS),
    ("num_access_files", CONTINUOUS),
    ("num_outbound_cmds", CONTINUOUS),
    ("is_host_login", SYMBOLIC),
    ("is_guest_login", SYMBOLIC),
    ("count", CONTINUOUS),
    ("srv_count", CONTINUOUS),
    ("serror_rate", CONTINUOUS),
    ("srv_serror_rate", CONTINUOUS),
    ("rerror_rate", CONTINUOUS),
    ("srv_rerror_rate", CONTINUOUS),
    ("same_srv_rate", CONTINUOUS),
    ("diff_srv_rate", CONTINUOUS),
    ("srv_diff_host_rate", CONTINUOUS),
    ("dst_host_count", CONTINUOUS),
    ("dst_host_srv_count", CONTINUOUS),
    ("dst_host_same_srv_rate", CONTINUOUS),
    ("dst_host_diff_srv_rate", CONTINUOUS),
    ("dst_host_same_src_port_rate", CONTINUOUS),
    ("dst_host_srv_diff_host_rate", CONTINUOUS),
    ("dst_host_serror_rate", CONTINUOUS),
    ("dst_host_srv_serror_rate", CONTINUOUS),
    ("dst_host_rerror_rate", CONTINUOUS),
    ("dst_host_srv_rerror_rate", CONTINUOUS),
]

_CLOSED_DOMAINS = {
    "protocol_type": ("icmp", "tcp", "udp"),
    "land": ("0", "1"),
    "logged_in": ("0", "1"),
    "is_host_login": ("0", "1"),
    "is_guest_login": ("0", "1"),
}


def _kdd_descriptor(i, name, kind):
    if kind == CONTINUOUS:
        return FeatureDescriptor(name, kind, i)
    if name in _CLOSED_DOMAINS:
        return FeatureDescriptor(name, kind, i, _CLOSED_DOMAINS[name], open=False)
    return FeatureDescriptor(name, kind, i, (), open=True)


KDD_SCHEMA = FeatureSchema(
    tuple(_kdd_descriptor(i, n, k) for i, (n, k) in enumerate(_KDD_FEATURES))
)


# Attack names present in the KDD99 training data.
_TRAINING_LABELS = {
    "normal": Category.NORMAL,
    "back": Category.DOS,
    "land": Category.DOS,
    "neptune": Category.DOS,
    "pod": Category.DOS,
    "smurf": Category.DOS,
    "teardrop": Category.DOS,
    "ipsweep": Category.PROBE,
    "nmap": Category.PROBE,
    "portsweep": Category.PROBE,
    "satan": Category.PROBE,
    "buffer_overflow": Category.U2R,
    "loadmodule": Category.U2R,
    "perl": Category.U2R,
    "rootkit": Category.U2R,
    "ftp_write": Category.R2L,
    "guess_passwd": Category.R2L,
    "imap": Category.R2L,
    "multihop": Category.R2L,
    "phf": Category.R2L,
    "spy": Category.R2L,
    "warezclient": Category.R2L,
    "warezmaster": Category.R2L,
}


class CategoryMap(Mapping[str, Category]):
    """Raw label -> attack category. Immutable; ``extend`` returns a new map."""

    def __init__(self, entries: Mapping[str, Category]):
        self._entries = {normalize_label(k): Category(v) for k, v in entries.items()}

    def __getitem__(self, label):
        try:
            return self._entries[label]
        except KeyError:
            raise UnknownLabelError(label) from None

    def __iter__(self):
        return iter(self._entries)

    def __len__(self):
        return len(self._entries)

    def __eq__(self, other):
        return isinstance(other, CategoryMap) and self._entries == other._entries

    def __hash__(self):
        return hash(frozenset(self._entries.items()))

    def extend(self, entries: Mapping[str, Category | str]) -> "CategoryMap":
        merged = dict(self._entries)
        for k, v in entries.items():
            merged[normalize_label(k)] = v if isinstance(v, Category) else Category.parse(v)
        return CategoryMap(merged)

    @classmethod
    def from_file(cls, path, base: "CategoryMap | None" = None) -> "CategoryMap":
        """Load ``label<TAB>category`` lines, layered over ``base`` when given."""
        entries = {}
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise ValueError(f"{path}:{line_no}: expected label<TAB>category")
                entries[parts[0]] = Category.parse(parts[1])
        if base is None:
            return CategoryMap({}).extend(entries)
        return base.extend(entries)


def normalize_label(label: str) -> str:
    label = label.strip().lower()
    if label.endswith("."):
        label = label[:-1]
    return label


DEFAULT_CATEGORY_MAP = CategoryMap(_TRAINING_LABELS)


def map_category(label: str, category_map: CategoryMap = DEFAULT_CATEGORY_MAP) -> Category:
    """Accepts raw file labels, trailing dot included."""
    return category_map[normalize_label(label)]


@dataclass(frozen=True)
class Connection:
    """One featurized connection. ``features`` holds floats for continuous
    fields and strings for symbolic ones, in schema order."""

    features: tuple
    label: str | None = None

    def __post_init__(self):
        if len(self.features) != N_FEATURES:
            raise ValueError(f"a connection has {N_FEATURES} features, got {len(self.features)}")
        for v in self.features:
            if isinstance(v, float) and not math.isfinite(v):
                raise ValueError("continuous feature values must be finite")


def _parse_float(text, line_no, field_index):
    try:
        value = float(text)
    except ValueError:
        raise FieldTypeError(
            f"non-numeric value {text!r} in continuous field", line_no, field_index
        ) from None
    if not math.isfinite(value):
        raise FieldTypeError(f"non-finite value {text!r}", line_no, field_index)
    return value


def parse_record(line: str, schema: FeatureSchema = KDD_SCHEMA, line_no: int | None = None) -> Connection:
    fields = line.rstrip("\r\n").split(",")
    if len(fields) not in (N_FEATURES, N_FEATURES + 1):
        raise FieldCountError(f"expected 41 or 42 fields, got {len(fields)}", line_no)
    values = []
    for d in schema:
        text = fields[d.index].strip()
        if d.is_continuous:
            values.append(_parse_float(text, line_no, d.index))
        else:
            values.append(text)
    label = normalize_label(fields[N_FEATURES]) if len(fields) > N_FEATURES else None
    return Connection(tuple(values), label)


def _format_value(v) -> str:
    if isinstance(v, float):
        return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)
    return str(v)


def serialize_record(record: Connection) -> str:
    """Inverse of :func:`parse_record`; labels get their trailing period back."""
    text = ",".join(_format_value(v) for v in record.features)
    if record.label is not None:
        text += f",{record.label}."
    return text


class Dataset:
    """An immutable, column-stored collection of connections.

    ``cont`` is (n, #continuous) float64 in schema order of the continuous
    features; ``sym`` is (n, #symbolic) int32 codes into ``vocab``.  ``ids``
    carries record identity through sampling and splitting.
    """

    def __init__(self, schema, cont, sym, vocab, labels=None, ids=None,
                 category_map: CategoryMap = DEFAULT_CATEGORY_MAP, provenance=None):
        self.schema = schema
        cont = np.asarray(cont, dtype=np.float64)
        n = cont.shape[0] if cont.ndim == 2 else np.asarray(sym).shape[0]
        cont = cont.reshape(n, len(schema.continuous_index))
        sym = np.asarray(sym, dtype=np.int32).reshape(n, len(schema.symbolic_index))
        if len(vocab) != sym.shape[1]:
            raise SchemaMismatchError("one vocabulary per symbolic column required")
        if labels is not None:
            labels = np.asarray(labels, dtype=object)
            if labels.shape != (n,):
                raise SchemaMismatchError("one label per record required")
        ids = np.arange(n, dtype=np.int64) if ids is None else np.asarray(ids, dtype=np.int64)
        for a in (cont, sym, ids) + ((labels,) if labels is not None else ()):
            a.flags.writeable = False
        self.cont = cont
        self.sym = sym
        self.vocab = tuple(tuple(v) for v in vocab)
        self.labels = labels
        self.ids = ids
        self.category_map = category_map
        self.provenance = dict(provenance or {})
        self._categories = None

    # -- construction -------------------------------------------------------

    @classmethod
    def empty(cls, schema=KDD_SCHEMA, category_map=DEFAULT_CATEGORY_MAP):
        return cls(schema, np.zeros((0, len(schema.continuous_index))),
                   np.zeros((0, len(schema.symbolic_index)), dtype=np.int32),
                   [()] * len(schema.symbolic_index), labels=np.array([], dtype=object),
                   category_map=category_map)

    @classmethod
    def from_connections(cls, records: Iterable[Connection], schema=KDD_SCHEMA,
                         category_map=DEFAULT_CATEGORY_MAP):
        records = list(records)
        ci, si = schema.continuous_index, schema.symbolic_index
        cont = np.array([[r.features[i] for i in ci] for r in records], dtype=np.float64)
        raw_sym = [[str(r.features[i]) for r in records] for i in si]
        vocab, codes = [], []
        for col in raw_sym:
            values, inverse = np.unique(np.array(col, dtype=str), return_inverse=True)
            vocab.append(tuple(values.tolist()))
            codes.append(inverse)
        sym = np.stack(codes, axis=1) if codes and records else np.zeros((len(records), len(si)))
        labels = np.array([r.label for r in records], dtype=object)
        if records and all(l is None for l in labels):
            labels = None
        return cls(schema, cont.reshape(len(records), len(ci)), sym, vocab, labels,
                   category_map=category_map)

    # -- access ---------------------------------------------------------------

    def __len__(self):
        return self.cont.shape[0]

    def __iter__(self) -> Iterator[Connection]:
        for i in range(len(self)):
            yield self.record(i)

    def __getitem__(self, i):
        return self.record(i)

    def record(self, i: int) -> Connection:
        values = [None] * len(self.schema)
        for j, idx in enumerate(self.schema.continuous_index):
            values[idx] = float(self.cont[i, j])
        for j, idx in enumerate(self.schema.symbolic_index):
            values[idx] = self.vocab[j][self.sym[i, j]]
        label = None if self.labels is None else self.labels[i]
        return Connection(tuple(values), label)

    @property
    def labeled(self) -> bool:
        return self.labels is not None and all(l is not None for l in self.labels)

    def symbolic_values(self, j: int) -> np.ndarray:
        """Symbolic column ``j`` decoded to strings."""
        return np.asarray(self.vocab[j], dtype=object)[self.sym[:, j]] if len(self) else np.array([], dtype=object)

    def categories(self) -> np.ndarray:
        """Category code per record (int8)."""
        if self._categories is None:
            if self.labels is None:
                raise SchemaMismatchError("dataset is unlabeled")
            uniq, inverse = np.unique(self.labels.astype(str), return_inverse=True)
            lut = np.array([int(self.category_map[l]) for l in uniq], dtype=np.int8)
            cats = lut[inverse] if len(self) else np.zeros(0, dtype=np.int8)
            cats.flags.writeable = False
            self._categories = cats
        return self._categories

    def category_counts(self) -> dict[Category, int]:
        counts = np.bincount(self.categories(), minlength=len(Category))
        return {c: int(counts[c]) for c in Category}

    def take(self, index) -> "Dataset":
        index = np.asarray(index, dtype=np.int64)
        ds = Dataset(self.schema, self.cont[index], self.sym[index], self.vocab,
                     None if self.labels is None else self.labels[index],
                     self.ids[index], self.category_map, self.provenance)
        if self._categories is not None:
            ds._categories = self._categories[index]
        return ds

    def with_category_map(self, category_map: CategoryMap) -> "Dataset":
        return Dataset(self.schema, self.cont, self.sym, self.vocab, self.labels,
                       self.ids, category_map, self.provenance)

    def with_provenance(self, **info) -> "Dataset":
        ds = self.take(np.arange(len(self)))
        ds.provenance.update(info)
        return ds

    def to_lines(self) -> list[str]:
        """Serialize every record (same text as :func:`serialize_record`)."""
        if len(self) == 0:
            return []
        cols = [None] * len(self.schema)
        for j, idx in enumerate(self.schema.continuous_index):
            cols[idx] = _format_column(self.cont[:, j])
        for j, idx in enumerate(self.schema.symbolic_index):
            cols[idx] = np.asarray(self.vocab[j], dtype=object)[self.sym[:, j]].tolist()
        if self.labels is not None:
            cols.append([f"{l}." if l is not None else None for l in self.labels])
        lines = []
        for row in zip(*cols):
            if row[-1] is None and len(row) > N_FEATURES:
                row = row[:-1]
            lines.append(",".join(row))
        return lines

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for line in self.to_lines():
                fh.write(line)
                fh.write("\n")


def _format_column(values: np.ndarray) -> list[str]:
    integral = (values == np.round(values)) & (np.abs(values) < 1e15)
    if integral.all():
        return values.astype(np.int64).astype(str).tolist()
    out = values.astype(str).astype(object)
    out[integral] = values[integral].astype(np.int64).astype(str)
    return out.tolist()


def _open_text(source):
    if isinstance(source, (str, os.PathLike)):
        path = Path(source)
        if path.suffix == ".gz":
            import gzip

            return gzip.open(path, "rt", encoding="utf-8")
        return open(path, encoding="utf-8")
    if isinstance(source, io.IOBase):
        return source
    return None


def read_dataset(source, schema: FeatureSchema = KDD_SCHEMA,
                 category_map: CategoryMap = DEFAULT_CATEGORY_MAP,
                 chunk_size: int = 50_000) -> Dataset:
    """Parse a KDD-format file (path, open text file or iterable of lines).

    Blank lines are skipped; line numbers in errors are 1-based positions in
    the source.
    """
    fh = _open_text(source)
    lines = fh if fh is not None else iter(source)
    ci, si = schema.continuous_index, schema.symbolic_index
    cont_parts, sym_parts, label_parts = [], [], []
    try:
        chunk, start = [], 1
        for line_no, line in enumerate(lines, 1):
            if not chunk:
                start = line_no
            chunk.append(line)
            if len(chunk) >= chunk_size:
                _parse_chunk(chunk, start, ci, si, cont_parts, sym_parts, label_parts)
                chunk = []
        if chunk:
            _parse_chunk(chunk, start, ci, si, cont_parts, sym_parts, label_parts)
    finally:
        if fh is not None and fh is not source:
            fh.close()

    if not cont_parts:
        ds = Dataset.empty(schema, category_map)
    else:
        cont = np.concatenate(cont_parts)
        vocab, codes = [], []
        for j in range(len(si)):
            col = np.concatenate([p[j] for p in sym_parts])
            values, inverse = np.unique(col, return_inverse=True)
            vocab.append(tuple(values.tolist()))
            codes.append(inverse.astype(np.int32))
        sym = np.stack(codes, axis=1)
        labels = np.concatenate(label_parts)
        if all(l is None for l in labels):
            labels = None
        ds = Dataset(schema, cont, sym, vocab, labels, category_map=category_map)
    if isinstance(source, (str, os.PathLike)):
        ds.provenance["source"] = str(source)
    return ds


def _parse_chunk(lines, start, ci, si, cont_parts, sym_parts, label_parts):
    rows, numbers = [], []
    for offset, line in enumerate(lines):
        line = line.rstrip("\r\n")
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) not in (N_FEATURES, N_FEATURES + 1):
            raise FieldCountError(f"expected 41 or 42 fields, got {len(fields)}", start + offset)
        rows.append(fields)
        numbers.append(start + offset)
    if not rows:
        return
    cont = np.empty((len(rows), len(ci)), dtype=np.float64)
    for j, idx in enumerate(ci):
        col = [r[idx] for r in rows]
        try:
            cont[:, j] = np.asarray(col, dtype=np.float64)
        except ValueError:
            for r, text in enumerate(col):
                _parse_float(text.strip(), numbers[r], idx)
            raise
        bad = ~np.isfinite(cont[:, j])
        if bad.any():
            r = int(np.flatnonzero(bad)[0])
            raise FieldTypeError(f"non-finite value {col[r]!r}", numbers[r], idx)
    sym_parts.append([np.array([r[idx].strip() for r in rows], dtype=str) for idx in si])
    cont_parts.append(cont)
    label_parts.append(np.array(
        [normalize_label(r[N_FEATURES]) if len(r) > N_FEATURES else None for r in rows],
        dtype=object))


def concat(datasets: Sequence[Dataset]) -> Dataset:
    """Stack datasets sharing a schema, merging symbolic vocabularies."""
    datasets = [d for d in datasets]
    if not datasets:
        return Dataset.empty()
    schema = datasets[0].schema
    vocab, codes = [], []
    for j in range(len(schema.symbolic_index)):
        merged = sorted(set().union(*(d.vocab[j] for d in datasets)))
        pos = {v: k for k, v in enumerate(merged)}
        parts = []
        for d in datasets:
            remap = np.array([pos[v] for v in d.vocab[j]] or [0], dtype=np.int32)
            parts.append(remap[d.sym[:, j]] if len(d) else np.zeros(0, dtype=np.int32))
        vocab.append(tuple(merged))
        codes.append(np.concatenate(parts))
    n = sum(len(d) for d in datasets)
    sym = np.stack(codes, axis=1) if codes else np.zeros((n, 0), dtype=np.int32)
    labeled = all(d.labels is not None for d in datasets)
    return Dataset(
        schema,
        np.concatenate([d.cont for d in datasets]),
        sym,
        vocab,
        np.concatenate([d.labels for d in datasets]) if labeled else None,
        np.concatenate([d.ids for d in datasets]),
        datasets[0].category_map,
    )


# -- sampling -----------------------------------------------------------------

# Training-sample composition used by default (counts per category).
TABLE2_COUNTS = {
    Category.NORMAL: 9_841,
    Category.DOS: 39_092,
    Category.PROBE: 437,
    Category.U2R: 13,
    Category.R2L: 213,
}

TABLE1_COUNTS = {
    Category.NORMAL: 97_277,
    Category.DOS: 391_458,
    Category.PROBE: 4_107,
    Category.U2R: 52,
    Category.R2L: 1_126,
}


@dataclass(frozen=True)
class SampleSpec:
    per_category_counts: Mapping[Category, int]
    seed: int = 1
    total: int | None = None

    def __post_init__(self):
        counts = {Category(k): int(v) for k, v in self.per_category_counts.items()}
        for c in Category:
            counts.setdefault(c, 0)
        if any(v < 0 for v in counts.values()):
            raise ValueError("per-category counts must be >= 0")
        object.__setattr__(self, "per_category_counts", counts)
        total = sum(counts.values())
        if self.total is None:
            object.__setattr__(self, "total", total)
        elif self.total != total:
            raise ValueError(f"counts sum to {total}, total says {self.total}")

    @classmethod
    def table2(cls, seed: int = 1) -> "SampleSpec":
        return cls(TABLE2_COUNTS, seed)


def stratified_sample(dataset: Dataset, spec: SampleSpec) -> Dataset:
    """Draw exactly ``spec`` records per category, uniformly within each
    category; the result is shuffled with the same generator."""
    rng = np.random.default_rng(spec.seed)
    cats = dataset.categories()
    chosen = []
    for c in Category:
        want = spec.per_category_counts[c]
        pool = np.flatnonzero(cats == c)
        if want > len(pool):
            raise InsufficientRecordsError(c, want, len(pool))
        if want:
            chosen.append(rng.choice(pool, size=want, replace=False))
    if not chosen:
        return dataset.take(np.zeros(0, dtype=np.int64))
    index = np.concatenate(chosen)
    index = index[rng.permutation(len(index))]
    return dataset.take(index)


def largest_remainder(total: int, weights: Mapping) -> dict:
    """Apportion ``total`` proportionally to integer ``weights``; leftover
    units go to the largest fractional parts, earlier keys first on ties."""
    keys = list(weights)
    denom = sum(weights.values())
    if denom == 0:
        if total:
            raise ValueError("cannot apportion over zero weight")
        return {k: 0 for k in keys}
    base = {k: total * weights[k] // denom for k in keys}
    rem = {k: total * weights[k] % denom for k in keys}
    left = total - sum(base.values())
    for k in sorted(keys, key=lambda k: -rem[k])[:left]:
        base[k] += 1
    return base


def split_holdout(dataset: Dataset, test_total: int, seed: int = 1) -> tuple[Dataset, Dataset]:
    """Category-proportional holdout split. Both halves keep input order."""
    if not 0 <= test_total <= len(dataset):
        raise ValueError(f"test_total must lie in [0, {len(dataset)}]")
    counts = dataset.category_counts()
    alloc = largest_remainder(test_total, counts)
    rng = np.random.default_rng(seed)
    cats = dataset.categories()
    mask = np.zeros(len(dataset), dtype=bool)
    for c in Category:
        pool = np.flatnonzero(cats == c)
        if alloc[c] > len(pool):
            raise InsufficientRecordsError(c, alloc[c], len(pool))
        if alloc[c]:
            mask[rng.choice(pool, size=alloc[c], replace=False)] = True
    return dataset.take(np.flatnonzero(~mask)), dataset.take(np.flatnonzero(mask))


# -- preprocessing --------------------------------------------------------------

@dataclass(frozen=True)
class NormalizationParams:
    mins: np.ndarray
    maxs: np.ndarray

    def scale(self, cont: np.ndarray) -> np.ndarray:
        span = self.maxs - self.mins
        safe = np.where(span > 0, span, 1.0)
        out = (cont - self.mins) / safe
        out[:, span <= 0] = 0.0
        return out

    def apply(self, dataset: Dataset) -> Dataset:
        return Dataset(dataset.schema, self.scale(dataset.cont), dataset.sym, dataset.vocab,
                       dataset.labels, dataset.ids, dataset.category_map, dataset.provenance)


def fit_normalization(dataset: Dataset) -> NormalizationParams:
    k = dataset.cont.shape[1]
    if len(dataset) == 0:
        return NormalizationParams(np.zeros(k), np.ones(k))
    return NormalizationParams(dataset.cont.min(axis=0), dataset.cont.max(axis=0))


def normalize_continuous(dataset: Dataset) -> tuple[Dataset, NormalizationParams]:
    """Min-max scale continuous features to [0, 1]; constant features become 0."""
    params = fit_normalization(dataset)
    return params.apply(dataset), params


def bin_labels(bins: int) -> tuple[str, ...]:
    return tuple(f"bin{k}" for k in range(bins))


@dataclass(frozen=True)
class Discretizer:
    """Equal-width bins fitted on training min/max. Values outside the fitted
    range clamp to the edge bins."""

    bins: int
    lows: np.ndarray
    highs: np.ndarray

    @classmethod
    def fit(cls, dataset: Dataset, bins: int = 10) -> "Discretizer":
        if bins < 1:
            raise ValueError("bins must be >= 1")
        params = fit_normalization(dataset)
        return cls(bins, params.mins, params.maxs)

    def codes(self, cont: np.ndarray) -> np.ndarray:
        span = self.highs - self.lows
        width = np.where(span > 0, span / self.bins, 1.0)
        idx = np.floor((cont - self.lows) / width)
        idx[:, span <= 0] = 0
        return np.clip(idx, 0, self.bins - 1).astype(np.int32)

    def edges(self, j: int) -> np.ndarray:
        """Interior boundaries of continuous column ``j``."""
        lo, hi = self.lows[j], self.highs[j]
        return lo + (hi - lo) * np.arange(1, self.bins) / self.bins

    def transform(self, dataset: Dataset) -> Dataset:
        schema = dataset.schema
        labels = bin_labels(self.bins)
        desc = tuple(
            FeatureDescriptor(d.name, SYMBOLIC, d.index, labels, open=False) if d.is_continuous else d
            for d in schema
        )
        new_schema = FeatureSchema(desc)
        binned = self.codes(dataset.cont)
        cpos = {idx: j for j, idx in enumerate(schema.continuous_index)}
        spos = {idx: j for j, idx in enumerate(schema.symbolic_index)}
        cols, vocab = [], []
        for idx in new_schema.symbolic_index:
            if idx in cpos:
                cols.append(binned[:, cpos[idx]])
                vocab.append(labels)
            else:
                cols.append(dataset.sym[:, spos[idx]])
                vocab.append(dataset.vocab[spos[idx]])
        sym = np.stack(cols, axis=1) if len(dataset) else np.zeros((0, len(cols)), dtype=np.int32)
        return Dataset(new_schema, np.zeros((len(dataset), 0)), sym, vocab, dataset.labels,
                       dataset.ids, dataset.category_map, dataset.provenance)


def discretize_continuous(dataset: Dataset, bins: int = 10) -> Dataset:
    """Replace continuous features by equal-width bin labels. The fitted
    :class:`Discretizer` is kept on ``result.provenance['discretizer']`` for
    reuse on test data."""
    disc = Discretizer.fit(dataset, bins)
    out = disc.transform(dataset)
    out.provenance["discretizer"] = disc
    return out
