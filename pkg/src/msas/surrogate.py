"""Gaussian-process surrogate with a lower-confidence-bound infill criterion.

The kernel is an isotropic squared exponential on unit-cube inputs. Targets
are standardized before fitting, so the signal variance is fixed at 1 in
standardized units and only the length-scale is fitted, by maximizing the
log marginal likelihood over a grid in log space followed by a bounded
scalar refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from scipy.optimize import minimize_scalar
from scipy.spatial.distance import cdist

STD_FLOOR = 1e-12
LOG_LS_BOUNDS = (-3.0, 1.0)
LOG_LS_GRID = np.linspace(LOG_LS_BOUNDS[0], LOG_LS_BOUNDS[1], 9)


@dataclass(frozen=True)
class SurrogateConfig:
    kernel: str = "se"
    fit: str = "grid+bounded"
    nugget: float = 1e-6
    kappa: float = 2.0

    def __post_init__(self):
        if self.kernel != "se":
            raise ValueError(f"unsupported kernel {self.kernel!r}")
        if self.fit != "grid+bounded":
            raise ValueError(f"unsupported fit strategy {self.fit!r}")
        if not self.nugget > 0:
            raise ValueError("nugget must be positive")
        if not self.kappa >= 0:
            raise ValueError("kappa must be non-negative")


@dataclass(frozen=True, eq=False)
class SurrogateModel:
    X: np.ndarray
    y_mean: float
    y_std: float
    length_scale: float
    signal_var: float
    nugget: float
    chol: np.ndarray  # lower Cholesky factor of K + nugget*I
    weights: np.ndarray  # (K + nugget*I)^-1 y_standardized
    log_marginal_likelihood: float

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def predict(self, x):
        return predict(self, x)


def _se_kernel(sqdist: np.ndarray, length_scale: float, signal_var: float) -> np.ndarray:
    return signal_var * np.exp(-0.5 * sqdist / (length_scale * length_scale))


def _factor(sqdist, y_std_units, log_ls, nugget):
    ls = math.exp(log_ls)
    K = _se_kernel(sqdist, ls, 1.0)
    K[np.diag_indices_from(K)] += nugget
    L, _ = cho_factor(K, lower=True, check_finite=False)
    alpha = cho_solve((L, True), y_std_units, check_finite=False)
    lml = -0.5 * float(y_std_units @ alpha) - float(np.sum(np.log(np.diag(L)))) - 0.5 * len(y_std_units) * math.log(2 * math.pi)
    return L, alpha, lml


def fit(X, y, cfg: SurrogateConfig | None = None) -> SurrogateModel:
    """Fit the GP on unit-space points ``X`` and raw objective values ``y``."""
    cfg = cfg or SurrogateConfig()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.size:
        raise ValueError(f"got {X.shape[0]} points but {y.size} targets")
    if y.size < 2:
        raise ValueError("need at least 2 training points")
    if not np.all(np.isfinite(y)) or not np.all(np.isfinite(X)):
        raise ValueError("training data must be finite")

    y_mean = float(y.mean())
    y_std = max(float(y.std()), STD_FLOOR)
    ys = (y - y_mean) / y_std
    sqdist = cdist(X, X, "sqeuclidean")

    def neg_lml(log_ls):
        return -_factor(sqdist, ys, log_ls, cfg.nugget)[2]

    grid_scores = [neg_lml(t) for t in LOG_LS_GRID]
    best = int(np.argmin(grid_scores))
    step = LOG_LS_GRID[1] - LOG_LS_GRID[0]
    lo = max(LOG_LS_BOUNDS[0], LOG_LS_GRID[best] - step)
    hi = min(LOG_LS_BOUNDS[1], LOG_LS_GRID[best] + step)
    res = minimize_scalar(neg_lml, bounds=(lo, hi), method="bounded", options={"xatol": 1e-3})
    log_ls = float(res.x) if res.fun < grid_scores[best] else float(LOG_LS_GRID[best])

    L, alpha, lml = _factor(sqdist, ys, log_ls, cfg.nugget)
    X = X.copy()
    for arr in (X, L, alpha):
        arr.setflags(write=False)
    return SurrogateModel(
        X=X,
        y_mean=y_mean,
        y_std=y_std,
        length_scale=math.exp(log_ls),
        signal_var=1.0,
        nugget=cfg.nugget,
        chol=L,
        weights=alpha,
        log_marginal_likelihood=lml,
    )


def predict(model: SurrogateModel, x):
    """Posterior mean and standard deviation in raw objective units.

    ``x`` may be a single point of shape ``(d,)`` (returns two floats) or a
    batch of shape ``(m, d)`` (returns two arrays).
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = np.atleast_2d(x)
    if xb.ndim != 2 or xb.shape[1] != model.dim:
        raise ValueError(f"expected points of dimension {model.dim}, got shape {x.shape}")
    Ks = _se_kernel(cdist(xb, model.X, "sqeuclidean"), model.length_scale, model.signal_var)
    mean_s = Ks @ model.weights
    v = solve_triangular(model.chol, Ks.T, lower=True, check_finite=False)
    var_s = np.maximum(model.signal_var - np.einsum("ij,ij->j", v, v), 0.0)
    mean = model.y_mean + model.y_std * mean_s
    std = model.y_std * np.sqrt(var_s)
    if single:
        return float(mean[0]), float(std[0])
    return mean, std


def infill_lcb(model: SurrogateModel, x, kappa: float = 2.0):
    """Lower confidence bound ``mean - kappa * std`` (to be minimized)."""
    mean, std = predict(model, x)
    return mean - kappa * std
