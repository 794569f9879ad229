"""Multi-task and many-task benchmark suites with planted, controllable optima.

Every task lives in the unit cube. A unit point ``u`` is decoded through the
task's box bounds and the base function is evaluated on the offset from the
decoded optimum, so each task has minimum value 0 at ``u == task.shift``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

# ---------------------------------------------------------------------------
# Base functions, all written on z = x - x* with f(0) = 0.
# ---------------------------------------------------------------------------


def ackley(z: np.ndarray) -> float:
    d = z.size
    s1 = math.sqrt(float(z @ z) / d)
    s2 = float(np.sum(np.cos(2.0 * np.pi * z))) / d
    # grouped so that z = 0 gives exactly 0
    return 20.0 * (1.0 - math.exp(-0.2 * s1)) + (math.e - math.exp(s2))


def griewank(z: np.ndarray) -> float:
    i = np.arange(1, z.size + 1)
    return 1.0 + float(z @ z) / 4000.0 - float(np.prod(np.cos(z / np.sqrt(i))))


def sphere(z: np.ndarray) -> float:
    return float(z @ z)


def rastrigin(z: np.ndarray) -> float:
    return float(np.sum(z * z + 10.0 * (1.0 - np.cos(2.0 * np.pi * z))))


def elliptic(z: np.ndarray) -> float:
    d = z.size
    if d == 1:
        return float(z @ z)
    w = 1e6 ** (np.arange(d) / (d - 1))
    return float(np.sum(w * z * z))


def rosenbrock(z: np.ndarray) -> float:
    x = z + 1.0
    if x.size == 1:
        return float((x[0] - 1.0) ** 2)
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (x[:-1] - 1.0) ** 2))


_W_A = 0.5
_W_B = 3.0
_W_KMAX = 20
_W_AK = _W_A ** np.arange(_W_KMAX + 1)
_W_BK = _W_B ** np.arange(_W_KMAX + 1)


def _weierstrass_rows(z: np.ndarray) -> np.ndarray:
    return np.cos(2.0 * np.pi * _W_BK[None, :] * (z[:, None] + 0.5)) @ _W_AK


_W_OFFSET = float(_weierstrass_rows(np.zeros(1))[0])


def weierstrass(z: np.ndarray) -> float:
    return float(np.sum(_weierstrass_rows(z) - _W_OFFSET))


def levy(z: np.ndarray) -> float:
    w = 1.0 + z / 4.0
    head = math.sin(math.pi * w[0]) ** 2
    mid = np.sum((w[:-1] - 1.0) ** 2 * (1.0 + 10.0 * np.sin(np.pi * w[:-1] + 1.0) ** 2))
    tail = (w[-1] - 1.0) ** 2 * (1.0 + math.sin(2.0 * math.pi * w[-1]) ** 2)
    return float(head + mid + tail)


def schwefel12(z: np.ndarray) -> float:
    c = np.cumsum(z)
    return float(c @ c)


def quartic(z: np.ndarray) -> float:
    i = np.arange(1, z.size + 1)
    return float(np.sum(i * z**4))


BASE_FUNCTIONS: dict[str, Callable[[np.ndarray], float]] = {
    "Ackley": ackley,
    "Griewank": griewank,
    "Sphere": sphere,
    "Rastrigin": rastrigin,
    "Elliptic": elliptic,
    "Rosenbrock": rosenbrock,
    "Weierstrass": weierstrass,
    "Levy": levy,
    "Schwefel12": schwefel12,
    "Quartic": quartic,
}

# ---------------------------------------------------------------------------
# Task and problem containers
# ---------------------------------------------------------------------------


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TaskInstance:
    fn_id: str
    dim: int
    lower: np.ndarray
    upper: np.ndarray
    shift: np.ndarray
    task_label: str = ""

    def __post_init__(self):
        if self.fn_id not in BASE_FUNCTIONS:
            raise ValueError(f"unknown base function {self.fn_id!r}")
        if self.dim < 1:
            raise ValueError("dim must be positive")
        lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (self.dim,))
        upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (self.dim,))
        shift = np.asarray(self.shift, dtype=float)
        if shift.shape != (self.dim,):
            raise ValueError(f"shift must have shape ({self.dim},), got {shift.shape}")
        if not np.all(lower < upper):
            raise ValueError("lower bounds must be strictly below upper bounds")
        object.__setattr__(self, "lower", _frozen(lower))
        object.__setattr__(self, "upper", _frozen(upper))
        object.__setattr__(self, "shift", _frozen(np.clip(shift, 0.0, 1.0)))

    def decode(self, u) -> np.ndarray:
        return self.lower + (self.upper - self.lower) * np.asarray(u, dtype=float)

    @property
    def optimum(self) -> np.ndarray:
        """The decoded optimum x* in the task's own coordinates."""
        return self.decode(self.shift)

    def __call__(self, u) -> float:
        return evaluate(self, u)

    def __eq__(self, other):
        if not isinstance(other, TaskInstance):
            return NotImplemented
        return (
            self.fn_id == other.fn_id
            and self.dim == other.dim
            and self.task_label == other.task_label
            and np.array_equal(self.lower, other.lower)
            and np.array_equal(self.upper, other.upper)
            and np.array_equal(self.shift, other.shift)
        )


BETA_BY_CLASS = {"HS": 0.0, "MS": 0.2, "LS": 0.6}


@dataclass(frozen=True)
class ProblemSet:
    name: str
    tasks: tuple[TaskInstance, ...]
    groups: tuple[tuple[int, ...], ...]
    similarity_class: str
    beta: float
    construction_seed: int

    def __post_init__(self):
        members = sorted(i for g in self.groups for i in g)
        if members != list(range(len(self.tasks))):
            raise ValueError("groups must partition the task indices")
        if BETA_BY_CLASS.get(self.similarity_class) != self.beta:
            raise ValueError(f"beta {self.beta} does not match class {self.similarity_class}")

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    def __len__(self) -> int:
        return len(self.tasks)


def evaluate(task: TaskInstance, u) -> float:
    """Objective value of ``task`` at unit point ``u`` (clamped to the cube)."""
    u = np.asarray(u, dtype=float)
    if u.shape != (task.dim,):
        raise ValueError(f"{task.task_label or task.fn_id}: expected point of shape ({task.dim},), got {u.shape}")
    u = np.clip(u, 0.0, 1.0)
    z = task.decode(u) - task.optimum
    return BASE_FUNCTIONS[task.fn_id](z)


def generate_optima(group_center, beta: float, dim: int, count: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Perturb a group center by ``beta * r`` with ``r ~ U[-1, 1]^dim``, truncated to the cube."""
    center = np.asarray(group_center, dtype=float)
    if center.shape != (dim,):
        raise ValueError(f"group center must have shape ({dim},)")
    if np.any(center < 0) or np.any(center > 1):
        raise ValueError("group center must lie in the unit cube")
    if beta < 0:
        raise ValueError("beta must be non-negative")
    shifts = []
    for _ in range(count):
        r = rng.uniform(-1.0, 1.0, size=dim)
        shifts.append(np.clip(center + beta * r, 0.0, 1.0))
    return shifts


# (fn_id, lower, upper) per task, groups as 0-based indices, similarity class, dim
_SUITES: dict[str, dict] = {
    "mtop1": dict(dim=10, cls="HS", tasks=[("Ackley", -32, 32), ("Griewank", -200, 200)]),
    "mtop2": dict(dim=15, cls="HS", tasks=[("Sphere", -100, 100), ("Rastrigin", -10, 10)]),
    "mtop3": dict(dim=20, cls="HS", tasks=[("Elliptic", -50, 50), ("Rosenbrock", -50, 50)]),
    "mtop4": dict(dim=20, cls="MS", tasks=[("Griewank", -200, 200), ("Weierstrass", -0.5, 0.5)]),
    "mtop5": dict(dim=10, cls="MS", tasks=[("Schwefel12", -10, 10), ("Levy", -30, 30)]),
    "mtop6": dict(dim=20, cls="MS", tasks=[("Ackley", -32, 32), ("Sphere", -100, 100)]),
    "mtop7": dict(dim=15, cls="LS", tasks=[("Sphere", -50, 50), ("Rastrigin", -10, 10)]),
    "mtop8": dict(dim=20, cls="LS", tasks=[("Quartic", -5, 5), ("Levy", -30, 30)]),
    "mtop9": dict(dim=10, cls="LS", tasks=[("Ackley", -32, 32), ("Griewank", -200, 200)]),
    "matop1": dict(
        dim=15,
        cls="HS",
        tasks=[("Sphere", -100, 100), ("Rastrigin", -10, 10), ("Ackley", -32, 32), ("Elliptic", -50, 50), ("Griewank", -200, 200)],
        groups=[(0, 1), (2, 3, 4)],
    ),
    "matop2": dict(
        dim=20,
        cls="HS",
        tasks=[("Ackley", -32, 32), ("Sphere", -100, 100), ("Rosenbrock", -50, 50), ("Weierstrass", -0.5, 0.5), ("Griewank", -200, 200)],
        groups=[(0, 1), (2,), (3, 4)],
    ),
    "matop3": dict(
        dim=10,
        cls="MS",
        tasks=[("Sphere", -100, 100), ("Rastrigin", -10, 10), ("Elliptic", -50, 50), ("Weierstrass", -0.5, 0.5), ("Schwefel12", -10, 10)],
        groups=[(0, 1), (2, 3), (4,)],
    ),
    "matop4": dict(
        dim=15,
        cls="MS",
        tasks=[("Levy", -30, 30), ("Ackley", -32, 32), ("Sphere", -100, 100), ("Rastrigin", -10, 10), ("Griewank", -200, 200)],
        groups=[(0,), (1, 4), (2, 3)],
    ),
    "matop5": dict(
        dim=20,
        cls="LS",
        tasks=[("Schwefel12", -10, 10), ("Levy", -30, 30), ("Quartic", -5, 5), ("Rastrigin", -10, 10), ("Ackley", -32, 32)],
        groups=[(0,), (1,), (2,), (3,), (4,)],
    ),
    "matop6": dict(
        dim=10,
        cls="LS",
        tasks=[("Sphere", -100, 100), ("Schwefel12", -10, 10), ("Weierstrass", -0.5, 0.5), ("Griewank", -200, 200), ("Elliptic", -50, 50)],
        groups=[(0,), (1,), (2,), (3,), (4,)],
    ),
}

SUITE_IDS: tuple[str, ...] = tuple(_SUITES)


def suite_info(suite: str) -> dict:
    """Static description of a suite: dims, bounds, groups and beta."""
    key = suite.lower()
    if key not in _SUITES:
        raise KeyError(f"unknown suite id {suite!r}; expected one of {', '.join(SUITE_IDS)}")
    raw = _SUITES[key]
    groups = raw.get("groups", [tuple(range(len(raw["tasks"])))])
    return dict(
        suite=key,
        dim=raw["dim"],
        similarity_class=raw["cls"],
        beta=BETA_BY_CLASS[raw["cls"]],
        tasks=[dict(fn_id=f, lower=lo, upper=hi) for f, lo, hi in raw["tasks"]],
        groups=[tuple(g) for g in groups],
    )


def build_suite(suite: str, seed: int = 0) -> ProblemSet:
    """Construct a suite deterministically from ``(suite, seed)``.

    Each group gets an independent uniform center in the unit cube; task
    optima are the center perturbed by the class's beta.
    """
    info = suite_info(suite)
    rng = np.random.default_rng(seed)
    dim, beta = info["dim"], info["beta"]
    shifts: dict[int, np.ndarray] = {}
    for group in info["groups"]:
        center = rng.uniform(0.0, 1.0, size=dim)
        for idx, s in zip(group, generate_optima(center, beta, dim, len(group), rng)):
            shifts[idx] = s
    tasks = tuple(
        TaskInstance(
            fn_id=t["fn_id"],
            dim=dim,
            lower=np.full(dim, float(t["lower"])),
            upper=np.full(dim, float(t["upper"])),
            shift=shifts[k],
            task_label=f"{info['suite']}-T{k + 1}",
        )
        for k, t in enumerate(info["tasks"])
    )
    return ProblemSet(
        name=info["suite"],
        tasks=tasks,
        groups=tuple(info["groups"]),
        similarity_class=info["similarity_class"],
        beta=beta,
        construction_seed=seed,
    )
