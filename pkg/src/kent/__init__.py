"""Witness-database k-entanglement measures for multi-qubit states."""

__version__ = "0.1.0"

from .database import Database, augment_db, build_db, load_db, save_db
from .errors import KentError
from .measures import MeasureResult, e_w_k, e_w_subpartition, measure_tuple, negativity
from .partitions import Partition, all_valid, coarsenings_b, enumerate_valid
from .scan import MeasureSpec, ScanSpec, curve, threshold_bisect
from .sepeig import GConfig, g_partition, g_profile
from .states import NoisyFamily, family_state, named_pure, random_density, random_separable

__all__ = [
    "Database",
    "GConfig",
    "KentError",
    "MeasureResult",
    "MeasureSpec",
    "NoisyFamily",
    "Partition",
    "ScanSpec",
    "all_valid",
    "augment_db",
    "build_db",
    "coarsenings_b",
    "curve",
    "e_w_k",
    "e_w_subpartition",
    "enumerate_valid",
    "family_state",
    "g_partition",
    "g_profile",
    "load_db",
    "measure_tuple",
    "named_pure",
    "negativity",
    "random_density",
    "random_separable",
    "save_db",
    "threshold_bisect",
]
