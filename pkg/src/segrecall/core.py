"""Core domain types: class specs, label maps, and per-pixel probability maps.

All types are immutable after construction (arrays are locked read-only) and
safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidClassError,
    NotNormalizedError,
    OutOfRangeError,
    ShapeMismatchError,
)

DEFAULT_IGNORE_ID = 255
PROB_SUM_TOL = 1e-4
LOG_CLAMP = 1e-12


def _frozen_array(data, dtype=None) -> np.ndarray:
    arr = np.array(data, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ClassSpec:
    """Class names plus the id used to mark ignored (void) pixels.

    The ignore id must lie outside ``[0, num_classes - 1]``; 255 is the
    conventional value for byte-encoded label maps.
    """

    names: tuple[str, ...]
    ignore_id: int = DEFAULT_IGNORE_ID

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if not names:
            raise InvalidClassError("at least one class name is required")
        if any(not isinstance(n, str) or not n for n in names):
            raise InvalidClassError("class names must be non-empty strings")
        if len(set(names)) != len(names):
            raise InvalidClassError("class names must be unique")
        if 0 <= self.ignore_id < len(names):
            raise InvalidClassError(
                f"ignore id {self.ignore_id} collides with class ids 0..{len(names) - 1}"
            )

    @property
    def num_classes(self) -> int:
        return len(self.names)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise InvalidClassError(f"unknown class name {name!r}") from None


@dataclass(frozen=True)
class LabelMap:
    """Dense H×W map of class ids; ``ignore_id`` marks excluded pixels."""

    data: np.ndarray
    ignore_id: int = DEFAULT_IGNORE_ID

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2 or data.size == 0:
            raise ShapeMismatchError(f"label map must be 2-D and non-empty, got shape {data.shape}")
        if not np.issubdtype(data.dtype, np.integer):
            raise InvalidClassError(f"label map must hold integers, got dtype {data.dtype}")
        object.__setattr__(self, "data", _frozen_array(data))

    @classmethod
    def from_array(cls, data, spec: ClassSpec) -> "LabelMap":
        """Build a validated map: every value must be a class id or the ignore id."""
        lm = cls(data, ignore_id=spec.ignore_id)
        values = lm.data
        valid = ((values >= 0) & (values < spec.num_classes)) | (values == spec.ignore_id)
        if not valid.all():
            y, x = np.argwhere(~valid)[0]
            raise InvalidClassError(
                f"label {int(values[y, x])} at pixel ({y}, {x}) is not a class id or ignore id"
            )
        return lm

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def mask(self) -> np.ndarray:
        """Boolean H×W array, True where the pixel is not ignored."""
        return self.data != self.ignore_id


@dataclass(frozen=True)
class ProbMap:
    """Dense H×W×C map of per-pixel class probabilities.

    Produced upstream by a softmax layer; this package only consumes them.
    Use :func:`validate_probmap` (or ``from_array``) to enforce normalization.
    """

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 3 or data.size == 0:
            raise ShapeMismatchError(
                f"probability map must be H*W*C and non-empty, got shape {data.shape}"
            )
        if data.dtype not in (np.float32, np.float64):
            data = data.astype(np.float64)
        object.__setattr__(self, "data", _frozen_array(data))

    @classmethod
    def from_array(cls, data, tol: float = PROB_SUM_TOL) -> "ProbMap":
        pm = cls(data)
        validate_probmap(pm, tol=tol)
        return pm

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def num_classes(self) -> int:
        return self.data.shape[2]


def validate_probmap(p: ProbMap, tol: float = PROB_SUM_TOL) -> None:
    """Check that every entry is a probability and every pixel sums to 1 ± tol.

    Raises OutOfRangeError for entries outside [0, 1] (or non-finite ones) and
    NotNormalizedError for pixels whose channel sum strays beyond the tolerance.
    """
    data = p.data
    in_range = np.isfinite(data) & (data >= 0.0) & (data <= 1.0)
    if not in_range.all():
        y, x, c = np.argwhere(~in_range)[0]
        raise OutOfRangeError(
            f"probability {data[y, x, c]!r} at pixel ({y}, {x}) channel {c} is outside [0, 1]"
        )
    sums = data.sum(axis=2, dtype=np.float64)
    off = np.abs(sums - 1.0) > tol
    if off.any():
        y, x = np.argwhere(off)[0]
        raise NotNormalizedError(
            f"channel sum {sums[y, x]:.6f} at pixel ({y}, {x}) is outside 1 +/- {tol}"
        )


def one_hot(label: int, spec: ClassSpec) -> np.ndarray:
    """Length-C indicator vector for a class id; the ignore id is rejected."""
    label = int(label)
    if label == spec.ignore_id or not 0 <= label < spec.num_classes:
        raise InvalidClassError(f"label {label} is not a valid class id")
    vec = np.zeros(spec.num_classes, dtype=np.float64)
    vec[label] = 1.0
    return vec


def check_same_resolution(a, b, what: str = "maps") -> None:
    """Raise ShapeMismatchError unless the two maps share height and width."""
    if (a.height, a.width) != (b.height, b.width):
        raise ShapeMismatchError(
            f"{what} differ in resolution: {a.height}x{a.width} vs {b.height}x{b.width}"
        )
