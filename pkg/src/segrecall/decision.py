"""Bayes and Maximum-Likelihood pixel decision rules plus spatial class priors.

The ML rule divides each posterior channel by a per-location class prior
estimated from training labels, which lifts rare classes and raises their
recall. Priors are per-pixel class frequencies, optionally smoothed with a
separable Gaussian, then clamped below by a floor so the division is safe.
The per-pixel evidence term of the posterior cancels inside the argmax, so
it never needs a runtime representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DEFAULT_IGNORE_ID, ClassSpec, LabelMap, ProbMap, check_same_resolution
from .errors import (
    DomainError,
    EmptyInputError,
    NegativeSigmaError,
    ShapeMismatchError,
)
from .metrics import ConfusionMatrix, GroupSpec, SummaryReport, accumulate, class_metrics, summarize


@dataclass(frozen=True)
class PriorsMap:
    """H×W×C spatial class priors, floored away from zero."""

    data: np.ndarray
    sigma: float
    floor: float

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64).copy()
        if data.ndim != 3 or data.size == 0:
            raise ShapeMismatchError(f"priors must be H*W*C, got shape {data.shape}")
        if not self.floor > 0:
            raise DomainError(f"floor must be positive, got {self.floor}")
        if data.min() < self.floor or data.max() > 1.0:
            raise DomainError("prior entries must lie in [floor, 1]")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def num_classes(self) -> int:
        return self.data.shape[2]


def _reflect_indices(n: int, radius: int) -> np.ndarray:
    # Symmetric reflection with edge repeat; wraps for pads wider than the axis.
    idx = np.arange(-radius, n + radius)
    period = 2 * n
    j = np.mod(idx, period)
    return np.where(j >= n, period - 1 - j, j)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian taps with radius ceil(3*sigma)."""
    radius = math.ceil(3.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (x / sigma) ** 2)
    return kernel / kernel.sum()


def _convolve_rows(field: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    n = field.shape[0]
    radius = (kernel.size - 1) // 2
    padded = field[_reflect_indices(n, radius), :]
    out = np.zeros_like(field)
    for t, tap in enumerate(kernel):
        out += tap * padded[t : t + n, :]
    return out


def gaussian_smooth(field: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with reflect padding; sigma = 0 is a no-op.

    The kernel is truncated at radius ceil(3*sigma) and renormalized to unit
    mass, so constant fields pass through unchanged.
    """
    if sigma < 0:
        raise NegativeSigmaError(f"sigma must be non-negative, got {sigma}")
    field = np.asarray(field, dtype=np.float64)
    if field.ndim != 2:
        raise ShapeMismatchError(f"smoothing expects a 2-D field, got shape {field.shape}")
    if sigma == 0:
        return field.copy()
    kernel = gaussian_kernel(sigma)
    return _convolve_rows(_convolve_rows(field, kernel).T, kernel).T


def class_frequencies(labels, spec: ClassSpec) -> np.ndarray:
    """Per-location class frequencies over a stack of label maps.

    Ignored pixels drop out of that location's denominator; locations that
    are ignored everywhere fall back to the uniform distribution. Channel
    sums are 1 at every location.
    """
    labels = list(labels)
    if not labels:
        raise EmptyInputError("at least one label map is required")
    shape = labels[0].data.shape
    for lm in labels:
        if lm.data.shape != shape:
            raise ShapeMismatchError(
                f"label maps differ in resolution: {lm.data.shape} vs {shape}"
            )
    c = spec.num_classes
    counts = np.zeros(shape + (c,), dtype=np.float64)
    for lm in labels:
        for k in range(c):
            counts[:, :, k] += lm.data == k
    totals = counts.sum(axis=2, keepdims=True)
    uniform = np.full(c, 1.0 / c)
    with np.errstate(invalid="ignore"):
        freq = np.where(totals > 0, counts / np.where(totals > 0, totals, 1.0), uniform)
    return freq


def estimate_priors(labels, spec: ClassSpec, sigma: float, floor: float) -> PriorsMap:
    """Spatial priors: per-location frequencies, smoothed, then floored.

    Flooring happens after smoothing and without renormalization; the ML
    argmax is scale-free per pixel, so renormalizing would change nothing.
    """
    if not floor > 0:
        raise DomainError(f"floor must be positive, got {floor}")
    freq = class_frequencies(labels, spec)
    if sigma < 0:
        raise NegativeSigmaError(f"sigma must be non-negative, got {sigma}")
    if sigma > 0:
        for k in range(freq.shape[2]):
            freq[:, :, k] = gaussian_smooth(freq[:, :, k], sigma)
    data = np.clip(freq, floor, 1.0)
    return PriorsMap(data=data, sigma=float(sigma), floor=float(floor))


def decide_bayes(p: ProbMap, ignore_id: int = DEFAULT_IGNORE_ID) -> LabelMap:
    """Per-pixel argmax of the posterior; ties go to the lowest class id."""
    return LabelMap(np.argmax(p.data, axis=2).astype(np.int64), ignore_id=ignore_id)


def decide_ml(p: ProbMap, priors: PriorsMap, ignore_id: int = DEFAULT_IGNORE_ID) -> LabelMap:
    """Per-pixel argmax of posterior / prior; ties go to the lowest class id."""
    if p.data.shape != priors.data.shape:
        raise ShapeMismatchError(
            f"probabilities {p.data.shape} and priors {priors.data.shape} differ"
        )
    scores = p.data.astype(np.float64) / priors.data
    return LabelMap(np.argmax(scores, axis=2).astype(np.int64), ignore_id=ignore_id)


@dataclass(frozen=True)
class DecisionRule:
    """A labeling rule: plain posterior argmax, or prior-corrected argmax.

    The maximum-likelihood kind cannot be constructed without priors.
    """

    kind: str  # "bayes" | "ml"
    priors: PriorsMap | None = None

    def __post_init__(self):
        if self.kind not in ("bayes", "ml"):
            raise DomainError(f"unknown decision rule {self.kind!r}")
        if self.kind == "ml" and self.priors is None:
            raise DomainError("the maximum-likelihood rule requires priors")

    def apply(self, p: ProbMap, ignore_id: int = DEFAULT_IGNORE_ID) -> LabelMap:
        if self.kind == "bayes":
            return decide_bayes(p, ignore_id=ignore_id)
        return decide_ml(p, self.priors, ignore_id=ignore_id)


@dataclass(frozen=True)
class RuleComparison:
    """Side-by-side evaluation of the Bayes and ML rules on one scene set."""

    bayes: SummaryReport
    ml: SummaryReport
    disagreement: int


def compare_rules(
    p: ProbMap, priors: PriorsMap, gt: LabelMap, groups: GroupSpec | None = None
) -> RuleComparison:
    """Run both rules against ground truth and count where they differ."""
    check_same_resolution(p, gt)
    bayes_pred = decide_bayes(p, ignore_id=gt.ignore_id)
    ml_pred = decide_ml(p, priors, ignore_id=gt.ignore_id)
    c = p.num_classes
    bayes_cm = accumulate(ConfusionMatrix.empty(c), bayes_pred, gt)
    ml_cm = accumulate(ConfusionMatrix.empty(c), ml_pred, gt)
    return RuleComparison(
        bayes=summarize(class_metrics(bayes_cm), groups),
        ml=summarize(class_metrics(ml_cm), groups),
        disagreement=int((bayes_pred.data != ml_pred.data).sum()),
    )
