import itertools
import logging
import math
import threading
from abc import ABC, abstractmethod

import numpy as np

from polytope_em.exceptions import DimensionError

logger = logging.getLogger(__name__)


def _angle(u: np.ndarray, v: np.ndarray) -> float:
    cos = float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))
    return math.acos(min(1.0, max(-1.0, cos)))


def exact_cone_fraction(normals: np.ndarray) -> float:
    """
    Fraction of directions v with n_i . v >= 0 for every row n_i.

    Closed forms cover up to three linearly independent half-spaces:
    a wedge of opening pi - phi, or a spherical triangle whose area is
    given by Girard's excess 2 pi - sum(phi_ij).
    """
    normals = np.atleast_2d(np.asarray(normals, dtype=float))
    m = normals.shape[0] if normals.size else 0
    if m == 0:
        return 1.0
    if m == 1:
        return 0.5
    if m == 2:
        return (math.pi - _angle(normals[0], normals[1])) / (2 * math.pi)
    if m == 3 and np.linalg.matrix_rank(normals) == 3:
        excess = 2 * math.pi - sum(_angle(normals[i], normals[j])
                                   for i, j in itertools.combinations(range(3), 2))
        return excess / (4 * math.pi)
    raise DimensionError(f"No closed form for a cone cut by {m} half-spaces")


class SolidAngleMethod(ABC):

    @abstractmethod
    def cone_fraction(self, normals: np.ndarray) -> float:
        """
        :param normals: inward normals (m x d) of the facets active at the point
        :return: normalized solid angle of the tangent cone
        """
        ...

    @abstractmethod
    def check_dimension(self, d: int):
        ...


class ExactLowDim(SolidAngleMethod):

    def cone_fraction(self, normals: np.ndarray) -> float:
        return exact_cone_fraction(normals)

    def check_dimension(self, d: int):
        if d > 3:
            raise DimensionError(f"Exact solid angles are available for d <= 3, got d={d}")

    def __repr__(self):
        return 'exact'


class MonteCarlo(SolidAngleMethod):
    """
    Fraction of sampled unit directions u for which x - eps*u stays in the
    polytope. Only the tangent cone matters for eps below the distance from
    x to its inactive facets, so a direction is accepted when
    n_i . (-u) >= 0 for every active facet.

    Every call reuses the same seeded sample, so results are reproducible.
    The sample for a dimension is drawn once under a lock and is read-only after.
    """

    def __init__(self, samples: int, seed: int):
        if samples < 1:
            raise ValueError(f"Monte Carlo needs a positive sample count, got {samples}")
        self.samples = samples
        self.seed = seed
        self._directions = {}
        self._lock = threading.Lock()

    def _sample(self, d: int) -> np.ndarray:
        with self._lock:
            if d not in self._directions:
                rng = np.random.default_rng(self.seed)
                u = rng.standard_normal((self.samples, d))
                u = u / np.linalg.norm(u, axis=1, keepdims=True)
                u.setflags(write=False)
                self._directions[d] = u
            return self._directions[d]

    def cone_fraction(self, normals: np.ndarray) -> float:
        normals = np.atleast_2d(np.asarray(normals, dtype=float))
        if normals.size == 0:
            return 1.0
        u = self._sample(normals.shape[1])
        inside = np.all((-u) @ normals.T >= 0.0, axis=1)
        return float(np.mean(inside))

    def standard_error(self, fraction: float) -> float:
        return math.sqrt(fraction * (1 - fraction) / self.samples)

    def check_dimension(self, d: int):
        pass

    def __repr__(self):
        return f'mc:{self.samples}:{self.seed}'


def parse_method(text: str, seed: int = 0) -> SolidAngleMethod:
    """ 'exact', 'mc:<samples>:<seed>', or 'mc:<samples>' with the given seed """
    if text == 'exact':
        return ExactLowDim()
    parts = text.split(':')
    if parts[0] == 'mc' and len(parts) in (2, 3):
        return MonteCarlo(samples=int(parts[1]), seed=int(parts[2]) if len(parts) == 3 else seed)
    raise ValueError(f"Unknown solid angle method '{text}', expected exact or mc:<samples>:<seed>")
