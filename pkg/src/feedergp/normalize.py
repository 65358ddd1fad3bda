"""Input/target normalization shared by the GP and the MLP baseline.

Both models see identically standardized inputs so benchmark comparisons
are not confounded by preprocessing differences.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class Standardizer:
    """Per-dimension affine map x -> (x - mean) / scale.

    Dimensions with zero variance get scale 1 so they map to exactly 0;
    ``active`` flags the dimensions that actually vary.
    """

    mean: np.ndarray
    scale: np.ndarray
    active: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardizer":
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[0] < 1:
            raise ValueError("expected a nonempty 2-d array")
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        # relative floor so constant nonzero columns (std at rounding level)
        # are treated as dead, not as microscopic-variance dimensions
        active = std > 1e-12 * np.maximum(1.0, np.abs(mean))
        scale = np.where(active, std, 1.0)
        return cls(mean=mean, scale=scale, active=active)

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x - self.mean) / self.scale

    def inverse(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=float) * self.scale + self.mean
