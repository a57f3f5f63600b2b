"""Per-category network intrusion detection with an ensemble of classic learners."""

__version__ = "0.1.0"
