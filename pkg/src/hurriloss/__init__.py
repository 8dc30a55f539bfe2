"""ZCTA-level hurricane loss modelling: data fusion, tree ensembles, MLP, stacking and evaluation."""

from .core import derive_seed
from .features import assemble, build_design
from .ingest import DatasetBundle, read_bundle, write_bundle
from .synthetic import generate_synthetic

__version__ = "0.1.0"

__all__ = ["DatasetBundle", "assemble", "build_design", "derive_seed", "generate_synthetic", "read_bundle", "write_bundle"]
