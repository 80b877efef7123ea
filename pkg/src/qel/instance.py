"""Per-instance data: what is observed at decision time, and what is realised."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qel.ising import AffineIsing, IsingModel, ProblemSpec


@dataclass(frozen=True, eq=False)
class Context:
    """Covariates (one row per uncertain edge) plus fixed, known problem data."""

    spec: ProblemSpec
    covariates: np.ndarray
    distances: np.ndarray | None = None

    def __post_init__(self):
        X = np.asarray(self.covariates, dtype=np.float64)
        object.__setattr__(self, "covariates", X)
        m = len(self.spec.uncertain_edges())
        if X.ndim != 2 or X.shape[0] != m:
            raise ValueError(f"expected covariates of shape ({m}, d_x), got {X.shape}")
        if self.spec.kind == "qap":
            if self.distances is None:
                raise ValueError("QAP instances need a distance matrix")
            object.__setattr__(self, "distances", np.asarray(self.distances, dtype=np.float64))

    @property
    def d_x(self) -> int:
        return self.covariates.shape[1]

    def family(self) -> AffineIsing:
        return self.spec.affine_family(self.distances)


@dataclass(frozen=True, eq=False)
class ContextualInstance(Context):
    """A context together with its realised coefficients y."""

    y: np.ndarray = None

    def __post_init__(self):
        super().__post_init__()
        y = np.asarray(self.y, dtype=np.float64)
        if y.shape != (self.covariates.shape[0],):
            raise ValueError(f"expected {self.covariates.shape[0]} coefficients, got {y.shape}")
        object.__setattr__(self, "y", y)

    def context(self) -> Context:
        return Context(self.spec, self.covariates, self.distances)

    def model(self) -> IsingModel:
        return self.spec.build_model(self.y, self.distances)

    def energies(self) -> np.ndarray:
        return self.family().energies(self.y)
