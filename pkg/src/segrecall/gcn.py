"""Class-relation graphs, graph-convolution forward passes, and the derived
pixel classifier.

Nodes are classes. The graph follows the importance ordering: a node sees
every node of equal or lower importance, so top-group rows connect to all
nodes while bottom-group rows stay within their own group. One-hot node
embeddings feed layers H <- activation(A_hat H W); the final layer is linear
and its n x D output acts directly as a C x D feature-selecting classifier.

Matrix products accumulate with exact (order-independent) summation so that
relabeling the nodes permutes the output bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ClassSpec, ProbMap
from .fileio import load_json
from .errors import (
    DimensionMismatchError,
    DomainError,
    FormatError,
    IsolatedNodeError,
    UngroupedClassError,
)
from .metrics import GroupSpec


@dataclass(frozen=True)
class GraphSpec:
    """Weighted adjacency over class nodes; entry (i, j) is the edge i -> j."""

    adjacency: np.ndarray
    directed: bool = True

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=np.float64).copy()
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1] or adj.shape[0] == 0:
            raise DimensionMismatchError(f"adjacency must be square, got {adj.shape}")
        if (adj < 0).any() or not np.isfinite(adj).all():
            raise DomainError("adjacency entries must be finite and non-negative")
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)

    @property
    def num_nodes(self) -> int:
        return self.adjacency.shape[0]


@dataclass(frozen=True)
class GcnWeights:
    """Ordered per-layer transformation matrices plus the leaky-ReLU slope."""

    layers: tuple
    leaky_slope: float = 0.01

    def __post_init__(self):
        layers = tuple(np.asarray(w, dtype=np.float64).copy() for w in self.layers)
        if not layers:
            raise DimensionMismatchError("at least one weight matrix is required")
        for w in layers:
            if w.ndim != 2:
                raise DimensionMismatchError(f"weight matrices must be 2-D, got {w.shape}")
            w.setflags(write=False)
        for a, b in zip(layers, layers[1:]):
            if a.shape[1] != b.shape[0]:
                raise DimensionMismatchError(
                    f"layer output dim {a.shape[1]} does not feed layer input dim {b.shape[0]}"
                )
        object.__setattr__(self, "layers", layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].shape[0]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].shape[1]


@dataclass(frozen=True)
class ClassifierMatrix:
    """C×D selector: row k scores features for class k."""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64).copy()
        if rows.ndim != 2 or rows.size == 0:
            raise DimensionMismatchError(f"classifier must be C*D, got shape {rows.shape}")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def num_classes(self) -> int:
        return self.rows.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.rows.shape[1]


def build_graph(groups: GroupSpec) -> GraphSpec:
    """Directed graph from importance groups: edge i -> j iff i is at least
    as important as j. Every class must be grouped; self-loops are implied."""
    member = groups.membership()
    if (member < 0).any():
        missing = sorted(int(c) for c in np.nonzero(member < 0)[0])
        raise UngroupedClassError(f"class ids {missing} are in no group")
    adjacency = (member[:, None] >= member[None, :]).astype(np.float64)
    return GraphSpec(adjacency=adjacency, directed=True)


def normalize_adjacency(g: GraphSpec, symmetric: bool = False) -> np.ndarray:
    """Row-stochastic D^-1 A, or D^-1/2 A D^-1/2 with ``symmetric=True``."""
    sums = g.adjacency.sum(axis=1)
    dead = np.nonzero(sums == 0)[0]
    if dead.size:
        raise IsolatedNodeError(f"node {int(dead[0])} has no outgoing edges")
    if symmetric:
        inv_sqrt = 1.0 / np.sqrt(sums)
        return inv_sqrt[:, None] * g.adjacency * inv_sqrt[None, :]
    return g.adjacency / sums[:, None]


def _matmul_exact(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # fsum makes each entry the correctly rounded sum of its products, so the
    # result is independent of summation order (needed for bit-exact node
    # permutation equivariance). Node counts are tiny; speed is irrelevant.
    out = np.empty((a.shape[0], b.shape[1]), dtype=np.float64)
    for i in range(a.shape[0]):
        rows = a[i, :]
        for k in range(b.shape[1]):
            out[i, k] = math.fsum(rows * b[:, k])
    return out


def leaky_relu(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x >= 0, x, slope * x)


def gcn_forward(
    h: np.ndarray, g: GraphSpec, w: GcnWeights, symmetric: bool = False
) -> np.ndarray:
    """Stacked graph convolutions A_hat H W with leaky rectification.

    The final layer stays linear so the resulting classifier scores are
    unbounded; squashing happens once, inside :func:`classify_features`.
    """
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] != g.num_nodes:
        raise DimensionMismatchError(
            f"node features {h.shape} do not match {g.num_nodes} graph nodes"
        )
    if h.shape[1] != w.input_dim:
        raise DimensionMismatchError(
            f"feature dim {h.shape[1]} does not match first layer input {w.input_dim}"
        )
    a_hat = normalize_adjacency(g, symmetric=symmetric)
    out = h
    last = len(w.layers) - 1
    for i, layer in enumerate(w.layers):
        out = _matmul_exact(_matmul_exact(a_hat, out), layer)
        if i != last:
            out = leaky_relu(out, w.leaky_slope)
    return out


def embed_one_hot(spec: ClassSpec) -> np.ndarray:
    """Initial node features: the C×C identity (one-hot per class node)."""
    return np.eye(spec.num_classes, dtype=np.float64)


def as_classifier(gcn_output: np.ndarray) -> ClassifierMatrix:
    """Reinterpret the final GCN layer output as the C×D feature selector."""
    return ClassifierMatrix(rows=gcn_output)


def classify_features(features: np.ndarray, cls: ClassifierMatrix) -> ProbMap:
    """Score H×W×D features against each class row and softmax per pixel."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 3:
        raise DimensionMismatchError(f"features must be H*W*D, got shape {features.shape}")
    if features.shape[2] != cls.feature_dim:
        raise DimensionMismatchError(
            f"feature depth {features.shape[2]} does not match classifier width {cls.feature_dim}"
        )
    scores = np.tensordot(features, cls.rows, axes=([2], [1]))
    scores -= scores.max(axis=2, keepdims=True)
    np.exp(scores, out=scores)
    scores /= scores.sum(axis=2, keepdims=True)
    return ProbMap(scores)


def random_weights(dims, seed: int, leaky_slope: float = 0.01) -> GcnWeights:
    """Seeded uniform [-0.1, 0.1] layer stack for property tests and demos."""
    dims = tuple(int(d) for d in dims)
    if len(dims) < 2:
        raise DimensionMismatchError("need at least input and output dimensions")
    rng = np.random.default_rng(seed)
    layers = tuple(
        rng.uniform(-0.1, 0.1, size=(a, b)) for a, b in zip(dims, dims[1:])
    )
    return GcnWeights(layers=layers, leaky_slope=leaky_slope)


def load_graph_spec(path, spec: ClassSpec | None = None) -> GraphSpec:
    """Read a GraphSpec from JSON.

    Either {"adjacency": [[...]]} verbatim, or {"groups": [{"name",
    "classes"}...]} to apply the importance rule (requires a class spec when
    classes are referenced by name).
    """
    payload = load_json(path)
    if not isinstance(payload, dict):
        raise FormatError(f"{path}: graph JSON must be an object")
    if "adjacency" in payload:
        return GraphSpec(
            adjacency=np.asarray(payload["adjacency"], dtype=np.float64),
            directed=bool(payload.get("directed", True)),
        )
    if "groups" in payload:
        raw = payload["groups"]
        ids = []
        for item in raw:
            members = []
            for ref in item.get("classes", []):
                if isinstance(ref, str):
                    if spec is None:
                        raise FormatError(f"{path}: class names need a class spec to resolve")
                    members.append(spec.index_of(ref))
                else:
                    members.append(int(ref))
            ids.append(tuple(members))
        n = spec.num_classes if spec is not None else payload.get("num_classes")
        if n is None:
            raise FormatError(f"{path}: group-rule graphs need 'num_classes' or a class spec")
        return build_graph(GroupSpec(num_classes=int(n), groups=tuple(ids)))
    raise FormatError(f"{path}: graph JSON needs 'adjacency' or 'groups'")
