"""Single-task surrogate-assisted search: initial design, infill optimization and
the internal improvement of the proposed point."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .benchmarks import TaskInstance, evaluate
from .stats import latin_hypercube
from .surrogate import SurrogateConfig, SurrogateModel, fit, infill_lcb

DUPLICATE_TOL = 1e-9
JITTER_WIDTH = 1e-3


class EvaluationDatabase:
    """Evaluated unit-space points of one task with their raw objective values."""

    def __init__(self, dim: int):
        self.dim = dim
        self._X: list[np.ndarray] = []
        self._y: list[float] = []
        self._cache: tuple[np.ndarray, np.ndarray] | None = None
        self.best_index = -1

    @classmethod
    def from_arrays(cls, X, y) -> "EvaluationDatabase":
        X = np.atleast_2d(np.asarray(X, dtype=float))
        db = cls(X.shape[1])
        for x, v in zip(X, np.asarray(y, dtype=float).ravel()):
            db.add(x, float(v))
        return db

    def add(self, x, value: float) -> None:
        x = np.array(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected point of shape ({self.dim},), got {x.shape}")
        if not np.isfinite(value):
            raise ValueError(f"non-finite objective value {value!r}")
        self._X.append(x)
        self._y.append(float(value))
        self._cache = None
        # strict '<' keeps the first occurrence on ties
        if self.best_index < 0 or value < self._y[self.best_index]:
            self.best_index = len(self._y) - 1

    def __len__(self) -> int:
        return len(self._y)

    def _arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if self._cache is None:
            X = np.array(self._X, dtype=float).reshape(len(self._X), self.dim)
            y = np.array(self._y, dtype=float)
            X.setflags(write=False)
            y.setflags(write=False)
            self._cache = (X, y)
        return self._cache

    @property
    def X(self) -> np.ndarray:
        return self._arrays()[0]

    @property
    def y(self) -> np.ndarray:
        return self._arrays()[1]

    @property
    def best_x(self) -> np.ndarray:
        return self._X[self.best_index].copy()

    @property
    def best_y(self) -> float:
        return self._y[self.best_index]

    @property
    def max_y(self) -> float:
        return max(self._y)

    def contains(self, x, tol: float = DUPLICATE_TOL) -> bool:
        """True when some stored point is within ``tol`` of ``x`` in max-norm."""
        if not self._y:
            return False
        return bool(np.any(np.max(np.abs(self.X - np.asarray(x)), axis=1) < tol))


@dataclass
class Proposal:
    x_p: np.ndarray
    delta_in: float
    model: SurrogateModel


def initialize_database(task: TaskInstance, n_init: int, rng: np.random.Generator) -> EvaluationDatabase:
    """Latin hypercube design of ``n_init`` points, each evaluated on the real task.

    The caller is responsible for counting the ``n_init`` function evaluations.
    """
    if n_init < 2:
        raise ValueError("n_init must be at least 2")
    db = EvaluationDatabase(task.dim)
    for u in latin_hypercube(n_init, task.dim, rng):
        db.add(u, evaluate(task, u))
    return db


def differential_evolution(
    func,
    dim: int,
    rng: np.random.Generator,
    pop_size: int = 40,
    generations: int = 60,
    F: float = 0.5,
    CR: float = 0.9,
    seed_points=None,
) -> tuple[np.ndarray, float]:
    """DE/rand/1/bin over the unit cube for a vectorized objective ``func``.

    ``func`` maps an ``(m, dim)`` array to ``m`` values. Optional
    ``seed_points`` replace the first members of the random initial
    population. Components that leave the cube are repaired to the midpoint
    between the parent and the violated bound. Selection is greedy, so the
    best value never gets worse from one generation to the next.
    """
    pop = rng.random((pop_size, dim))
    if seed_points is not None:
        seeds = np.atleast_2d(seed_points)[:pop_size]
        pop[: len(seeds)] = seeds
    fit_vals = np.asarray(func(pop), dtype=float)
    idx = np.arange(pop_size)
    for _ in range(generations):
        # three distinct partners per member, none equal to the member itself
        keys = rng.random((pop_size, pop_size))
        keys[idx, idx] = np.inf
        partners = np.argsort(keys, axis=1)[:, :3]
        mutant = pop[partners[:, 0]] + F * (pop[partners[:, 1]] - pop[partners[:, 2]])
        cross = rng.random((pop_size, dim)) < CR
        cross[idx, rng.integers(0, dim, size=pop_size)] = True
        trial = np.where(cross, mutant, pop)
        # out-of-range components move halfway from the parent to the violated bound
        trial = np.where(trial < 0.0, 0.5 * pop, trial)
        trial = np.where(trial > 1.0, 0.5 * (pop + 1.0), trial)
        trial_vals = np.asarray(func(trial), dtype=float)
        better = trial_vals <= fit_vals
        pop[better] = trial[better]
        fit_vals[better] = trial_vals[better]
    best = int(np.argmin(fit_vals))
    return pop[best].copy(), float(fit_vals[best])


def propose(
    db: EvaluationDatabase,
    cfg: SurrogateConfig | None,
    rng: np.random.Generator,
    pop_size: int = 40,
    generations: int = 60,
) -> Proposal:
    """Fit the surrogate on ``db`` and return the LCB minimizer with its internal improvement."""
    cfg = cfg or SurrogateConfig()
    if len(db) < 2:
        raise ValueError("propose needs at least 2 evaluated points")
    model = fit(db.X, db.y, cfg)
    infill_X = infill_lcb(model, db.X, cfg.kappa)
    start = db.X[int(np.argmin(infill_X))]
    x_p, _ = differential_evolution(
        lambda P: infill_lcb(model, P, cfg.kappa),
        db.dim,
        rng,
        pop_size=pop_size,
        generations=generations,
        seed_points=start,
    )
    if db.contains(x_p):
        x_p = np.clip(x_p + rng.uniform(-JITTER_WIDTH / 2, JITTER_WIDTH / 2, size=db.dim), 0.0, 1.0)
    delta_in = internal_improvement(model, db, x_p, cfg.kappa)
    return Proposal(x_p=x_p, delta_in=delta_in, model=model)


def internal_improvement(model: SurrogateModel, db: EvaluationDatabase, x_p, kappa: float) -> float:
    """Best infill value over evaluated points minus the infill at ``x_p``, floored at 0."""
    x_p = np.asarray(x_p, dtype=float)
    vals = infill_lcb(model, db.X, kappa)
    # BLAS results depend on batch layout; reuse the stored value for an exact match
    same = np.flatnonzero(np.all(db.X == x_p, axis=1))
    at_p = float(vals[same[0]]) if same.size else float(infill_lcb(model, x_p, kappa))
    return max(0.0, float(np.min(vals)) - at_p)
