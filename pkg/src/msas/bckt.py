"""Bayesian competitive knowledge transfer.

For every ordered pair of tasks (source i, target j) a Gaussian posterior
over the scalar transferability tau is maintained. Each transfer event
contributes two Gaussian factors: the realized transfer ratio T_l with
variance sigma_I^2 * exp(-l), and the surrogate rank correlation R_l with
variance sigma_I^2. Their product is again Gaussian with

    precision = (k + eps) / sigma_I^2,            eps = sum_{l<=k} e^l
    mean      = (sum_l e^l T_l + sum_l R_l) / (k + eps)

which is what :func:`posterior_params` returns. ``eps`` grows like e^k, so
the pair state keeps it in log space and stores the e^l-weighted mean of T
rather than the raw weighted sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .sas import EvaluationDatabase
from .stats import spearman
from .surrogate import SurrogateModel, predict

DEGENERATE_TOL = 1e-12
CONVERGED_K = 700


class DegenerateDenominator(ValueError):
    """Projected improvement too close to zero to form a transfer observation."""


def log_epsilon(k: int) -> float:
    """log(sum_{l=1..k} e^l) = log(e (e^k - 1) / (e - 1)), stable for large k."""
    if k < 1:
        return -math.inf
    return k + 1.0 - math.log(math.e - 1.0) + math.log1p(-math.exp(-k))


@dataclass
class TransferPairState:
    source: int = -1
    target: int = -1
    sigma_I: float = 0.05
    k: int = 0
    mean_T: float = 0.0  # sum_l e^l T_l / eps
    sum_R: float = 0.0
    history: list[tuple[float, float]] = field(default_factory=list)

    def __post_init__(self):
        if not self.sigma_I > 0:
            raise ValueError("sigma_I must be positive")

    @property
    def log_epsilon(self) -> float:
        return log_epsilon(self.k)

    @property
    def epsilon(self) -> float:
        if self.k == 0:
            return 0.0
        le = self.log_epsilon
        return math.exp(le) if le < 709.0 else math.inf

    @property
    def sum_weighted_T(self) -> float:
        if self.k == 0:
            return 0.0
        return self.mean_T * self.epsilon


@dataclass(frozen=True)
class PosteriorParams:
    mean: float
    variance: float
    omega: float

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


def _one_minus_omega(k: int) -> float:
    # 1 - omega = k / (k + eps) = k e^-logeps / (1 + k e^-logeps)
    if k >= CONVERGED_K:
        return 0.0
    r = k * math.exp(-log_epsilon(k))
    return r / (1.0 + r)


def posterior_params(state: TransferPairState) -> PosteriorParams:
    """Closed-form Gaussian posterior over tau after ``state.k`` transfers."""
    k = state.k
    if k < 1:
        raise ValueError("posterior_params needs at least one transfer observation; use sample_tau for k = 0")
    one_minus = _one_minus_omega(k)
    omega = 1.0 - one_minus
    mean = omega * state.mean_T + one_minus * (state.sum_R / k)
    if k >= CONVERGED_K:
        variance = state.sigma_I**2 * math.exp(-log_epsilon(k))
    else:
        variance = state.sigma_I**2 / (k + math.exp(log_epsilon(k)))
    return PosteriorParams(mean=mean, variance=variance, omega=omega)


def sample_tau(state: TransferPairState, current_R: float | None, rng: np.random.Generator) -> float:
    """Draw a transferability sample; before any transfer, centre it on ``current_R``."""
    if state.k == 0:
        if current_R is None:
            raise ValueError("current_R is required before the first transfer")
        return float(rng.normal(current_R, state.sigma_I))
    post = posterior_params(state)
    return float(rng.normal(post.mean, post.std))


def update_pair(state: TransferPairState, T: float, R: float) -> TransferPairState:
    """Fold one transfer observation ``(T, R)`` into the pair state in place."""
    if not (math.isfinite(T) and math.isfinite(R)):
        raise ValueError(f"non-finite transfer observation T={T!r}, R={R!r}")
    k_new = state.k + 1
    if state.k == 0:
        state.mean_T = T
    else:
        # eps_{k-1}/eps_k and e^k/eps_k, both in log space
        le_new = log_epsilon(k_new)
        keep = math.exp(log_epsilon(state.k) - le_new)
        add = math.exp(k_new - le_new)
        state.mean_T = keep * state.mean_T + add * T
    state.k = k_new
    state.sum_R += R
    state.history.append((float(T), float(R)))
    return state


def new_pair_states(n: int, sigma_I: float) -> list[list[TransferPairState | None]]:
    """Independent state objects for every ordered pair (i, j), i != j."""
    return [[None if i == j else TransferPairState(source=i, target=j, sigma_I=sigma_I) for j in range(n)] for i in range(n)]


def rank_correlation(source_model: SurrogateModel, target_db: EvaluationDatabase) -> float:
    """Spearman correlation between source predictions and target objectives on the target's points."""
    if len(target_db) < 3:
        raise ValueError("rank_correlation needs at least 3 target points")
    pred, _ = predict(source_model, target_db.X)
    return spearman(pred, target_db.y)


def projected_improvement(
    source_model: SurrogateModel,
    source_db: EvaluationDatabase,
    target_db: EvaluationDatabase,
) -> float:
    """Source-estimated gain of the source best over every target point, on the target's scale."""
    if len(source_db) == 0 or len(target_db) == 0:
        raise ValueError("projected_improvement needs non-empty databases")
    pred, _ = predict(source_model, target_db.X)
    return projected_improvement_from_values(pred, source_db.y, target_db.y)


def projected_improvement_from_values(source_predictions, source_y, target_y) -> float:
    bracket = float(np.min(source_predictions)) - float(np.min(source_y))
    max_source = float(np.max(source_y))
    scale = 1.0 if abs(max_source) < DEGENERATE_TOL else float(np.max(target_y)) / max_source
    return bracket * scale


def external_improvement(tau: float, delta_p: float) -> float:
    return tau * delta_p


def compete(delta_in: float, x_p, externals) -> tuple[np.ndarray, int | None]:
    """Pick the solution with the largest estimated improvement.

    ``externals`` holds ``(source_index, delta_ex, x_best_source)`` triples.
    Returns ``(point, source)`` where ``source`` is ``None`` for the
    internal proposal. Ties go to the internal proposal, then to the lowest
    source index.
    """
    if delta_in < 0:
        raise ValueError("delta_in must be non-negative")
    best_val, best_src, best_x = delta_in, None, x_p
    for src, dex, xb in sorted(externals, key=lambda e: e[0]):
        if dex > best_val:
            best_val, best_src, best_x = dex, src, xb
    return np.asarray(best_x), best_src


def observation_T(min_y_before: float, f_transferred: float, delta_p: float) -> float:
    """Realized transfer ratio: actual target improvement over the projected one."""
    if abs(delta_p) < DEGENERATE_TOL:
        raise DegenerateDenominator(f"projected improvement {delta_p!r} is too close to zero")
    return (min_y_before - f_transferred) / delta_p
