"""Rating prediction with weed-optimised neighbour weights."""

import json as _json

from . import _core
from ._core import (
    IwocfError,
    IwoParams,
    RatingMatrix,
    SimilarityParams,
    UserModel,
    combined_weight,
    confidence,
    fallback_prediction,
    fit_user,
    load_ratings,
    optimize,
    parse_ratings,
    pearson_sim,
    predict_rating,
    seed_count,
    select_important_users,
    sigma_at,
    split_ratings,
    uniform_model,
)

__all__ = [
    "IwocfError",
    "IwoParams",
    "RatingMatrix",
    "SimilarityParams",
    "UserModel",
    "combined_weight",
    "confidence",
    "fallback_prediction",
    "fit_user",
    "load_ratings",
    "optimize",
    "parse_ratings",
    "pearson_sim",
    "predict_rating",
    "run_experiment",
    "seed_count",
    "select_important_users",
    "sigma_at",
    "split_ratings",
    "uniform_model",
]


def run_experiment(
    matrix,
    baseline="proposed",
    *,
    dataset="unnamed",
    format="generic",
    sim=None,
    iwo=None,
    split_fraction=0.2,
    split_seed=42,
    fitness_holdout=0.25,
    global_seed=1,
    workers=0,
    sample_users=None,
    sample_seed=7,
):
    """Run one baseline over a seeded split and return the report as a dict."""
    text = _core.run_experiment_json(
        matrix,
        baseline,
        dataset,
        format,
        sim or SimilarityParams(),
        iwo or IwoParams(),
        split_fraction,
        split_seed,
        fitness_holdout,
        global_seed,
        workers,
        sample_users,
        sample_seed,
    )
    return _json.loads(text)

