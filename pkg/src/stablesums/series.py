"""Multivariate series container shared by estimators and simulators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError

__all__ = ["MultiSeries", "as_multiseries"]


@dataclass(frozen=True)
class MultiSeries:
    """An n x d array of observations with station labels."""

    values: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise PreconditionError("series values must be 1- or 2-dimensional")
        object.__setattr__(self, "values", v)
        names = tuple(self.names) if self.names else tuple(
            f"s{j + 1}" for j in range(v.shape[1]))
        if len(names) != v.shape[1]:
            raise PreconditionError(
                f"{len(names)} names for {v.shape[1]} coordinates")
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def norms(self) -> np.ndarray:
        """Supremum norm of each row."""
        return np.max(np.abs(self.values), axis=1)

    def coordinate(self, j: int) -> np.ndarray:
        return self.values[:, j]


def as_multiseries(x) -> MultiSeries:
    if isinstance(x, MultiSeries):
        return x
    return MultiSeries(values=np.asarray(x, dtype=float))
