"""Cross-entropy variants and the importance-aware loss with analytic gradients.

The importance-aware loss splits pixels into importance groups G1..GL (least
to most important), takes the mean cross-entropy I_l of each group, and
scales the more important groups by dynamic weights measuring how far the
ground-truth-channel outputs p' sit from per-level targets m_t:

    f_t = mean over contributing pixels of [ sqrt(m_t[y] + lambda) * (p' - m_t[y]) ]^2

    total = I_1 + (f_1 + alpha) * I_2 + (f_2 + alpha) * (f_3 + alpha) * I_3

With a single group the loss degenerates to plain unweighted cross-entropy.
Group terms use means (not sums) so lambda and alpha behave identically at
any image resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import LOG_CLAMP, LabelMap, ProbMap, check_same_resolution
from .errors import DomainError, FormatError, ShapeMismatchError, UngroupedClassError
from .fileio import load_json
from .metrics import GroupSpec


@dataclass(frozen=True)
class FrequencyWeights:
    """Per-class weights 1 / ln(a + f) from class pixel frequencies f.

    The smoothing constant a must exceed 1 so every weight stays finite and
    positive; rarer classes get strictly larger weights.
    """

    frequencies: np.ndarray
    smoothing: float = 1.02

    def __post_init__(self):
        freq = np.asarray(self.frequencies, dtype=np.float64).copy()
        if freq.ndim != 1 or freq.size == 0:
            raise ShapeMismatchError("frequencies must be a non-empty 1-D vector")
        if (freq < 0).any() or (freq > 1).any():
            raise DomainError("class frequencies must lie in [0, 1]")
        if not self.smoothing > 1.0:
            raise DomainError(f"smoothing constant must exceed 1, got {self.smoothing}")
        freq.setflags(write=False)
        object.__setattr__(self, "frequencies", freq)

    @property
    def weights(self) -> np.ndarray:
        return 1.0 / np.log(self.smoothing + self.frequencies)


def class_pixel_frequencies(labels, num_classes: int) -> np.ndarray:
    """Fraction of non-ignored pixels per class over a sequence of label maps."""
    counts = np.zeros(num_classes, dtype=np.int64)
    total = 0
    for lm in labels:
        values = lm.data[lm.mask()]
        counts += np.bincount(values, minlength=num_classes)[:num_classes]
        total += values.size
    if total == 0:
        return np.zeros(num_classes, dtype=np.float64)
    return counts / total


MASKED = np.nan  # masked entries of a target vector take no part in f_t


@dataclass(frozen=True)
class ImportanceConfig:
    """Importance groups plus the scalars and target vectors driving the loss.

    ``targets`` may be given explicitly (one length-C vector per level, NaN
    marking masked classes); otherwise the default construction is used:
    level t < L scores classes above level t against 1, level-t classes
    against 0, and masks the rest; the final level targets only the top group.
    """

    groups: GroupSpec
    lam: float = 0.5
    alpha: float = 1.0
    explicit_targets: tuple | None = None

    def __post_init__(self):
        if len(self.groups) == 0:
            raise UngroupedClassError("at least one importance group is required")
        if self.lam < 0:
            raise DomainError(f"lambda must be non-negative, got {self.lam}")
        if self.alpha < 0:
            raise DomainError(f"alpha must be non-negative, got {self.alpha}")
        if self.explicit_targets is not None:
            targets = tuple(
                np.asarray(t, dtype=np.float64).copy() for t in self.explicit_targets
            )
            if len(targets) != len(self.groups):
                raise ShapeMismatchError(
                    f"{len(targets)} target vectors for {len(self.groups)} groups"
                )
            for t in targets:
                if t.shape != (self.groups.num_classes,):
                    raise ShapeMismatchError(
                        f"target vector shape {t.shape} != ({self.groups.num_classes},)"
                    )
                live = t[~np.isnan(t)]
                if ((live < 0) | (live > 1)).any():
                    raise DomainError("target entries must lie in [0, 1] or be masked")
                t.setflags(write=False)
            object.__setattr__(self, "explicit_targets", targets)

    @property
    def targets(self) -> tuple:
        if self.explicit_targets is not None:
            return self.explicit_targets
        return default_importance_targets(self.groups)


def default_importance_targets(groups: GroupSpec) -> tuple:
    """Per-level target vectors from the nested group construction."""
    member = groups.membership()
    levels = len(groups)
    out = []
    for t in range(1, levels + 1):
        m = np.full(groups.num_classes, MASKED, dtype=np.float64)
        if t < levels:
            m[member > t - 1] = 1.0
            m[member == t - 1] = 0.0
        else:
            m[member == levels - 1] = 1.0
        m.setflags(write=False)
        out.append(m)
    return tuple(out)


def _gt_channel_values(p: ProbMap, gt: LabelMap):
    """(labels, p') over non-ignored pixels, plus their (ys, xs) indices."""
    check_same_resolution(p, gt)
    ys, xs = np.nonzero(gt.mask())
    labels = gt.data[ys, xs].astype(np.int64)
    if labels.size and labels.max() >= p.num_classes:
        raise ShapeMismatchError(
            f"label {int(labels.max())} exceeds the {p.num_classes} probability channels"
        )
    return ys, xs, labels, p.data[ys, xs, labels].astype(np.float64)


def cross_entropy(p: ProbMap, gt: LabelMap, weights: FrequencyWeights | None = None) -> float:
    """Mean of -w[y] * ln p'(y) over non-ignored pixels (w = 1 when unweighted).

    Probabilities are clamped below at 1e-12 before the log.
    """
    _, _, labels, py = _gt_channel_values(p, gt)
    if labels.size == 0:
        return 0.0
    loss = -np.log(np.clip(py, LOG_CLAMP, None))
    if weights is not None:
        w = weights.weights
        if w.shape[0] != p.num_classes:
            raise ShapeMismatchError(
                f"{w.shape[0]} frequency weights for {p.num_classes} classes"
            )
        loss = loss * w[labels]
    return float(loss.mean())


def dynamic_weight(p: ProbMap, gt: LabelMap, target: np.ndarray, lam: float) -> float:
    """Mean squared target miss sqrt(m[y]+lambda)*(p' - m[y]) over live pixels.

    Pixels whose ground-truth class is masked (NaN) in the target vector do
    not contribute; an empty contributor set yields 0.
    """
    target = np.asarray(target, dtype=np.float64)
    if target.shape != (p.num_classes,):
        raise ShapeMismatchError(f"target shape {target.shape} != ({p.num_classes},)")
    _, _, labels, py = _gt_channel_values(p, gt)
    m = target[labels]
    live = ~np.isnan(m)
    if not live.any():
        return 0.0
    miss = np.sqrt(m[live] + lam) * (py[live] - m[live])
    return float(np.mean(miss**2))


@dataclass(frozen=True)
class IALBreakdown:
    """Per-group loss terms, dynamic weights, and the combined total."""

    group_losses: tuple[float, ...]
    dynamic_weights: tuple[float, ...]
    multipliers: tuple[float, ...]
    alpha: float
    total: float

    def recombined_total(self) -> float:
        """Recompute the total from the stored parts (must match ``total``)."""
        mult = _multipliers(self.dynamic_weights, self.alpha)
        return _combine(self.group_losses, mult)


def _multipliers(f: tuple[float, ...], alpha: float) -> tuple[float, ...]:
    # Group 1 is unscaled; the top group compounds the last two weights.
    levels = len(f)
    if levels == 1:
        return (1.0,)
    mult = [1.0]
    for l in range(1, levels - 1):
        mult.append(f[l - 1] + alpha)
    mult.append((f[levels - 2] + alpha) * (f[levels - 1] + alpha))
    return tuple(mult)


def _combine(group_losses, multipliers) -> float:
    return float(sum(m * i for m, i in zip(multipliers, group_losses)))


def _group_pixel_split(p: ProbMap, gt: LabelMap, cfg: ImportanceConfig):
    ys, xs, labels, py = _gt_channel_values(p, gt)
    member = cfg.groups.membership()
    if labels.size:
        grp = member[labels]
        if (grp < 0).any():
            missing = sorted(int(c) for c in np.unique(labels[grp < 0]))
            raise UngroupedClassError(f"class ids {missing} are in no importance group")
    else:
        grp = labels
    return ys, xs, labels, py, grp


def ial(p: ProbMap, gt: LabelMap, cfg: ImportanceConfig) -> IALBreakdown:
    """Importance-aware loss with its full per-group breakdown.

    Every class present in the (non-ignored) ground truth must belong to a
    group. Empty groups contribute a zero loss term.
    """
    _, _, _, py, grp = _group_pixel_split(p, gt, cfg)
    ce = -np.log(np.clip(py, LOG_CLAMP, None))
    group_losses = []
    for l in range(len(cfg.groups)):
        sel = grp == l
        group_losses.append(float(ce[sel].mean()) if sel.any() else 0.0)
    f = tuple(dynamic_weight(p, gt, m, cfg.lam) for m in cfg.targets)
    mult = _multipliers(f, cfg.alpha)
    return IALBreakdown(
        group_losses=tuple(group_losses),
        dynamic_weights=f,
        multipliers=mult,
        alpha=cfg.alpha,
        total=_combine(group_losses, mult),
    )


def ial_gradient(p: ProbMap, gt: LabelMap, cfg: ImportanceConfig) -> np.ndarray:
    """Gradient of the loss w.r.t. pre-softmax logits, H×W×C float64.

    Dynamic weights are frozen at the current probabilities (they are not
    differentiated through), so each pixel contributes
    (multiplier / group pixel count) * (softmax - one_hot); ignored pixels
    get a zero gradient.
    """
    ys, xs, labels, _, grp = _group_pixel_split(p, gt, cfg)
    breakdown = ial(p, gt, cfg)
    grad = np.zeros(p.data.shape, dtype=np.float64)
    for l, mult in enumerate(breakdown.multipliers):
        sel = grp == l
        n = int(sel.sum())
        if n == 0:
            continue
        w = mult / n
        gy, gx, gl = ys[sel], xs[sel], labels[sel]
        grad[gy, gx, :] = w * p.data[gy, gx, :].astype(np.float64)
        grad[gy, gx, gl] -= w
    return grad


def check_gradient(p: ProbMap, gt: LabelMap, cfg: ImportanceConfig, step: float = 1e-6) -> float:
    """Max relative error of the analytic gradient vs central differences.

    The finite-difference objective freezes the dynamic weights at the input
    probabilities, matching the analytic gradient's contract. Intended for
    small, soft verification fixtures; saturated probabilities make the
    finite differences themselves noisy.
    """
    ys, xs, labels, _, grp = _group_pixel_split(p, gt, cfg)
    multipliers = ial(p, gt, cfg).multipliers
    counts = [int((grp == l).sum()) for l in range(len(cfg.groups))]

    def objective(logits: np.ndarray) -> float:
        z = logits - logits.max(axis=2, keepdims=True)
        q = np.exp(z)
        q /= q.sum(axis=2, keepdims=True)
        py = q[ys, xs, labels]
        ce = -np.log(np.clip(py, LOG_CLAMP, None))
        total = 0.0
        for l, mult in enumerate(multipliers):
            if counts[l]:
                total += mult * float(ce[grp == l].sum()) / counts[l]
        return total

    analytic = ial_gradient(p, gt, cfg)
    logits = np.log(np.clip(p.data.astype(np.float64), LOG_CLAMP, None))
    worst = 0.0
    for y in range(p.height):
        for x in range(p.width):
            for c in range(p.num_classes):
                bumped = logits.copy()
                bumped[y, x, c] += step
                above = objective(bumped)
                bumped[y, x, c] -= 2 * step
                below = objective(bumped)
                fd = (above - below) / (2 * step)
                denom = max(abs(fd), abs(analytic[y, x, c]), 1e-10)
                worst = max(worst, abs(fd - analytic[y, x, c]) / denom)
    return worst


def load_importance_config(path, spec) -> ImportanceConfig:
    """Read an ImportanceConfig from JSON.

    Schema: {"groups": [{"name", "classes"}...], "lambda": 0.5, "alpha": 1.0,
    "targets": optional list of per-level vectors with null = masked}.
    Classes may be names (resolved against the class spec) or ids.
    """
    payload = load_json(path)
    try:
        raw_groups = payload["groups"]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{path}: importance config needs a 'groups' list") from exc
    names = tuple(g.get("name", f"G{i + 1}") for i, g in enumerate(raw_groups))
    ids = tuple(
        tuple(spec.index_of(c) if isinstance(c, str) else int(c) for c in g.get("classes", []))
        for g in raw_groups
    )
    groups = GroupSpec(num_classes=spec.num_classes, groups=ids, names=names)
    targets = payload.get("targets")
    if targets is not None:
        targets = tuple(
            np.array([math.nan if v is None else float(v) for v in vec], dtype=np.float64)
            for vec in targets
        )
    return ImportanceConfig(
        groups=groups,
        lam=float(payload.get("lambda", 0.5)),
        alpha=float(payload.get("alpha", 1.0)),
        explicit_targets=targets,
    )
