"""Bundled fixtures: the published benchmark tables, the test-only label
map and a 2,000-record synthetic KDD-format file."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .kdd_data import DEFAULT_CATEGORY_MAP, Category, CategoryMap, Dataset, read_dataset
from .metrics import PerformanceTable

MINI_COUNTS = {Category.NORMAL: 700, Category.DOS: 900, Category.PROBE: 250,
               Category.U2R: 40, Category.R2L: 110}


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("catnet") / "fixtures" / name))


def load_table4() -> PerformanceTable:
    """The ten-classifier benchmark table as published (rates as fractions)."""
    return PerformanceTable.from_json(fixture_path("table4.json").read_text(encoding="utf-8"))


def load_table5() -> dict:
    """Published per-category TP/FP of the two selection models and the
    competition winner. Comparison only; never fed to selection."""
    return json.loads(fixture_path("table5.json").read_text(encoding="utf-8"))


def extended_category_map() -> CategoryMap:
    """The default map extended with attack names seen only in the test file."""
    return CategoryMap.from_file(fixture_path("kdd_test_labels.tsv"), base=DEFAULT_CATEGORY_MAP)


def load_mini() -> Dataset:
    return read_dataset(fixture_path("kdd_mini_2000.txt"))
