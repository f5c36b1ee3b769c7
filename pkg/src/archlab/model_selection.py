"""Archetype-count sweeps with a fixed train/test split and elbow detection."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import deep_aa, linear_aa
from .errors import InsufficientPoints, ParameterError
from .numerics import rng_create

TEST_FRACTION = 0.1


@dataclass
class SelectionCurve:
    ks: list
    losses: list  # test reconstruction MSE per k; None marks a failed fit
    chosen_k: int | None = None


def split_train_test(n: int, seed: int):
    """Deterministic 90/10 split of row indices."""
    order = rng_create(seed).permutation(n)
    n_test = max(1, int(round(n * TEST_FRACTION))) if n > 1 else 0
    return np.sort(order[n_test:]), np.sort(order[:n_test])


def _seed_for(seed: int, k: int) -> int:
    return int(np.random.SeedSequence([seed, k]).generate_state(1)[0])


def _linear_test_mse(dataset, k, cfg_overrides, seed):
    train_idx, test_idx = split_train_test(dataset.x.shape[0], seed)
    cfg = linear_aa.LinearAaConfig(k=k, seed=_seed_for(seed, k),
                                   **(cfg_overrides or {}))
    model = linear_aa.fit_linear_aa(dataset.x[train_idx], cfg)
    x_test = dataset.x[test_idx]
    a_test = linear_aa.transform(x_test, model.z)
    return float(np.mean((x_test - a_test @ model.z) ** 2))


def _deep_test_mse(dataset, k, cfg_overrides, seed):
    from .datasets import Dataset

    train_idx, test_idx = split_train_test(dataset.x.shape[0], seed)
    overrides = dict(cfg_overrides or {})
    arch_kw = overrides.pop("arch", {})
    arch_kw.pop("k", None)
    hyper_kw = overrides.pop("hyper", {})
    hyper_kw["seed"] = _seed_for(seed, k)
    arch = deep_aa.DeepAaArch(input_dim=dataset.x.shape[1], k=k, **arch_kw)
    hyper = deep_aa.DeepAaHyper(**hyper_kw)
    model = deep_aa.DeepAaModel(arch, seed=hyper.seed)
    labels = None if dataset.labels is None else dataset.labels[train_idx]
    deep_aa.train(model, Dataset(x=dataset.x[train_idx], labels=labels),
                  hyper)
    x_test = dataset.x[test_idx]
    _, _, _, mu = model.encode(x_test)
    x_hat, _ = model.decode(mu)
    return float(np.mean((x_test - x_hat) ** 2))


def sweep(dataset, ks, fit: str = "linear", cfg: dict | None = None,
          seed: int = 0) -> SelectionCurve:
    """Fit one model per archetype count and record test reconstruction MSE.

    Per-k fits may run in parallel (capped by ARCHLAB_THREADS); results are
    merged by k, so the curve does not depend on scheduling. A fit that
    raises is recorded as a missing point rather than aborting the sweep.
    """
    ks = list(ks)
    if not ks:
        raise ParameterError("ks must be non-empty")
    if sorted(set(ks)) != ks:
        raise ParameterError("ks must be strictly ascending")
    if fit == "linear":
        worker = _linear_test_mse
    elif fit == "deep":
        worker = _deep_test_mse
    else:
        raise ParameterError(f"unknown fitter '{fit}'")

    def run(k):
        try:
            return worker(dataset, k, cfg, seed)
        except Exception:
            return None

    threads = max(1, int(os.environ.get("ARCHLAB_THREADS", "1")))
    if threads > 1 and len(ks) > 1:
        with ThreadPoolExecutor(max_workers=min(threads, len(ks))) as pool:
            losses = list(pool.map(run, ks))
    else:
        losses = [run(k) for k in ks]

    curve = SelectionCurve(ks=ks, losses=losses)
    usable = [(k, l) for k, l in zip(ks, losses) if l is not None]
    if len(usable) == 1:
        curve.chosen_k = usable[0][0]
    elif len(usable) >= 3:
        curve.chosen_k = detect_elbow(
            SelectionCurve(ks=[k for k, _ in usable],
                           losses=[l for _, l in usable]))
    return curve


def detect_elbow(curve: SelectionCurve, rel_threshold: float = 0.05) -> int:
    """Smallest k from which every subsequent relative improvement stays at
    or below ``rel_threshold``. Invariant under scaling all losses."""
    points = [(k, l) for k, l in zip(curve.ks, curve.losses) if l is not None]
    if len(points) < 3:
        raise InsufficientPoints(f"elbow detection needs >= 3 points, got {len(points)}")
    losses = np.array([l for _, l in points])
    # losses at the curve's floating-point floor (relative to its scale) are
    # treated as fully converged: ratios of rounding noise are meaningless
    floor = 1e-12 * losses.max()
    rel = np.zeros(len(losses) - 1)
    meaningful = losses[:-1] > floor
    rel[meaningful] = ((losses[:-1][meaningful] - losses[1:][meaningful])
                       / losses[:-1][meaningful])
    # tiny slack so an improvement of exactly the threshold counts as
    # converged despite floating-point rounding of the ratio
    slack = rel_threshold + 1e-12
    for i in range(len(rel)):
        if np.all(rel[i:] <= slack):
            return points[i][0]
    return points[-1][0]


def curve_rows(curve: SelectionCurve):
    """(k, loss) rows for CSV export, skipping failed fits."""
    return [(k, l) for k, l in zip(curve.ks, curve.losses) if l is not None]
