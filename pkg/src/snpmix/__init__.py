"""Model-based clustering of SNPs in case-control association studies.

Submodules are imported explicitly (``from snpmix import genotype_model``);
this package file stays import-light so the CLI can configure the numba
thread pool before any kernel module loads.
"""

__version__ = "0.1.0"
