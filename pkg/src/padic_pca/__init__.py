"""p-adic principal component analysis and anomaly detection over Z/p^E."""

from .core import NotAUnit, Params, ParamsError, mod_inverse, norm_q, valuation
from .datagen import LabeledDataset, gen_affine, gen_balls, gen_uniform
from .detect import DetectConfig, ExperimentReport, build_report, classify, compress_ratio
from .ortho import OrthoConfig, iterated_orthogonalization, orthogonalize
from .pca import FactorModel, nrpca, residual, rpca, total_loss
from .projection import project, project_rows
from .refine import DirectionSet, RefineConfig, coordinate_descent, line_search

__version__ = "0.1.0"

__all__ = [
    "DetectConfig",
    "DirectionSet",
    "ExperimentReport",
    "FactorModel",
    "LabeledDataset",
    "NotAUnit",
    "OrthoConfig",
    "Params",
    "ParamsError",
    "RefineConfig",
    "build_report",
    "classify",
    "compress_ratio",
    "coordinate_descent",
    "gen_affine",
    "gen_balls",
    "gen_uniform",
    "iterated_orthogonalization",
    "line_search",
    "mod_inverse",
    "norm_q",
    "nrpca",
    "orthogonalize",
    "project",
    "project_rows",
    "residual",
    "rpca",
    "total_loss",
    "valuation",
]
