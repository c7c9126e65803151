"""End-to-end stages: generate, fit, detect, and all three in one go."""

from __future__ import annotations

import logging

import numpy as np

from .config import RunConfig, substream
from .datagen import LabeledDataset, gen_affine, gen_balls
from .detect import DetectConfig, ExperimentReport, build_report
from .ortho import OrthoConfig
from .pca import FactorModel, nrpca, residual, rpca, total_loss
from .refine import RefineConfig, coordinate_descent, line_search, random_direction_set

log = logging.getLogger(__name__)


def generate(cfg: RunConfig) -> LabeledDataset:
    params = cfg.params
    seed = substream(cfg.seed, 0)
    if cfg.generator == "balls":
        return gen_balls(cfg.B, cfg.rate_r, cfg.count, params, seed)
    return gen_affine(cfg.D_prime, cfg.rate_r, cfg.count, params, seed)


def fit(cfg: RunConfig, Y: np.ndarray) -> FactorModel:
    """Run the configured PCA, then the optional refinement passes.

    ``info["losses"]`` records the exact total loss of the data, after the
    PCA and after each refinement pass that ran.
    """
    params = cfg.params
    if Y.shape[1] != params.D:
        raise ValueError(f"data has {Y.shape[1]} columns, configuration says D={params.D}")
    if cfg.algorithm == "NRPCA":
        model = nrpca(Y, cfg.d_minus, params, cfg.d_prime_minus, cfg.workers)
    else:
        model = rpca(Y, cfg.d_minus, params, OrthoConfig(cfg.t_io), cfg.workers)
    R = model.info.pop("residual", None)
    losses = {"data": total_loss(Y, params), "pca": total_loss(R if R is not None else residual(Y, model), params)}
    rcfg = RefineConfig(cfg.t_ls)
    if cfg.coordinate_descent:
        model = coordinate_descent(Y, model, rcfg, params, cfg.workers)
        losses["coordinate_descent"] = total_loss(residual(Y, model), params)
    if cfg.line_search_random and len(model):
        dirs = random_direction_set(len(model), cfg.line_search_random, substream(cfg.seed, 1), params)
        model = line_search(Y, model, dirs, rcfg, params, cfg.workers)
        losses["line_search"] = total_loss(residual(Y, model), params)
    model.info["losses"] = losses
    log.info("losses: %s", losses)
    return model


def detect(cfg: RunConfig, ds: LabeledDataset, model: FactorModel) -> ExperimentReport:
    balls = ds.meta.get("generator", cfg.generator) == "balls"
    report = build_report(
        ds.Y, model, ds.labels, DetectConfig(cfg.eps_ad), ds.params, group_rows=balls, title=cfg.title
    )
    report.meta = {"config": cfg.to_dict(), "components": len(model)}
    return report


def experiment(cfg: RunConfig) -> tuple[LabeledDataset, FactorModel, ExperimentReport]:
    ds = generate(cfg)
    model = fit(cfg, ds.Y)
    return ds, model, detect(cfg, ds, model)
