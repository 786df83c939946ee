"""Block specification of a 2d-QBD-type nonnegative matrix.

A model is four families of ``s0 x s0`` blocks, one per boundary face:

========  ======================  ===========================
family    used on levels          forbidden displacements
========  ======================  ===========================
empty     the origin              ``i1 = -1`` or ``i2 = -1``
b1        ``x1 >= 1, x2 = 0``     ``i2 = -1``
b2        ``x1 = 0, x2 >= 1``     ``i1 = -1``
b12       ``x1 >= 1, x2 >= 1``    none
========  ======================  ===========================

Each family is stored as a read-only array of shape ``(3, 3, s0, s0)``
indexed by ``[i1 + 1, i2 + 1]``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from math import gcd
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .errors import ModelFileError, ModelValidationError

FAMILIES = ("empty", "b1", "b2", "b12")
STEPS = (-1, 0, 1)
PROXY_BOX = 12


def family_of(x1: int, x2: int) -> str:
    """Name of the block family governing transitions out of level (x1, x2)."""
    return FAMILIES[(x1 > 0) + 2 * (x2 > 0)]


def forbidden(family: str, i1: int, i2: int) -> bool:
    """True if displacement (i1, i2) must carry a zero block in ``family``."""
    if family == "empty":
        return i1 < 0 or i2 < 0
    if family == "b1":
        return i2 < 0
    if family == "b2":
        return i1 < 0
    return False


def _freeze(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


class BlockModel:
    """Immutable block model; hashable so derived quantities can be cached."""

    def __init__(self, s0: int, families: dict):
        if not isinstance(s0, (int, np.integer)) or s0 < 1:
            raise ModelFileError("s0 must be a positive integer")
        self.s0 = int(s0)
        unknown = set(families) - set(FAMILIES)
        if unknown:
            raise ModelFileError("unknown block families: %s" % sorted(unknown))
        fam = {}
        for name in FAMILIES:
            a = families.get(name)
            if a is None:
                a = np.zeros((3, 3, s0, s0))
            a = np.asarray(a, dtype=float)
            if a.shape != (3, 3, s0, s0):
                raise ModelFileError(
                    "family %s has shape %s, expected %s" % (name, a.shape, (3, 3, s0, s0))
                )
            if not np.isfinite(a).all():
                raise ModelFileError("family %s has non-finite entries" % name)
            if (a < 0).any():
                raise ModelFileError("family %s has negative entries" % name)
            fam[name] = _freeze(a)
        self._families = fam

    def family(self, name: str) -> np.ndarray:
        return self._families[name]

    def block(self, name: str, i1: int, i2: int) -> np.ndarray:
        return self._families[name][i1 + 1, i2 + 1]

    @property
    def interior(self) -> np.ndarray:
        return self._families["b12"]

    def row_block(self, x1: int, x2: int, d1: int, d2: int) -> np.ndarray:
        """Block ``T[(x1,x2), (x1+d1, x2+d2)]``; ``x`` may be any level."""
        return self.block(family_of(x1, x2), d1, d2)

    def transpose_model(self) -> "ReversedModel":
        return ReversedModel(self)

    # identity -----------------------------------------------------------
    def _key(self):
        return (self.s0,) + tuple(self._families[n].tobytes() for n in FAMILIES)

    def __eq__(self, other):
        return isinstance(other, BlockModel) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return "BlockModel(s0=%d)" % self.s0

    def to_dict(self) -> dict:
        """JSON-ready dict in the model-file layout; zero blocks omitted."""
        blocks = {}
        for name in FAMILIES:
            entries = {}
            for i1 in STEPS:
                for i2 in STEPS:
                    b = self.block(name, i1, i2)
                    if b.any():
                        entries["%d,%d" % (i1, i2)] = b.tolist()
            if entries:
                blocks[name] = entries
        return {"s0": self.s0, "blocks": blocks}

    def sha256(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


class ReversedModel:
    """Block layout of the transpose of a model's operator.

    Rows of the transpose fall into nine classes ``(min(x1,2), min(x2,2))``
    rather than four faces, because the block ``U[x, x']`` is the transpose
    of ``T[x', x]`` and so depends on which face the *target* lies on.
    """

    def __init__(self, source: BlockModel):
        self.source = source
        self.s0 = source.s0
        a = source.interior
        self._b12 = _freeze(np.transpose(a[::-1, ::-1], (0, 1, 3, 2)))

    @property
    def interior(self) -> np.ndarray:
        """``B[i+1, j+1] = A^{12}[-i, -j]^T``."""
        return self._b12

    def row_block(self, x1: int, x2: int, d1: int, d2: int) -> np.ndarray:
        y1, y2 = x1 + d1, x2 + d2
        if y1 < 0 or y2 < 0:
            return np.zeros((self.s0, self.s0))
        return self.source.row_block(y1, y2, -d1, -d2).T

    def row_classes(self) -> dict:
        """All nine row-class families as ``(3,3,s0,s0)`` arrays."""
        out = {}
        for c1 in range(3):
            for c2 in range(3):
                fam = np.zeros((3, 3, self.s0, self.s0))
                for d1 in STEPS:
                    for d2 in STEPS:
                        fam[d1 + 1, d2 + 1] = self.row_block(c1, c2, d1, d2)
                out[(c1, c2)] = fam
        return out

    def __eq__(self, other):
        return isinstance(other, ReversedModel) and self.source == other.source

    def __hash__(self):
        return hash(("reversed", self.source))

    def __repr__(self):
        return "ReversedModel(s0=%d)" % self.s0


def reverse_model(m):
    """Transpose duality. Applying it to a ReversedModel returns the source."""
    if isinstance(m, ReversedModel):
        return m.source
    return ReversedModel(m)


# ---------------------------------------------------------------------------
# file I/O


def _parse_key(key):
    try:
        i1, i2 = (int(t) for t in key.split(","))
    except ValueError:
        raise ModelFileError("bad block key %r (expected 'i1,i2')" % key) from None
    if i1 not in STEPS or i2 not in STEPS:
        raise ModelFileError("block key %r outside {-1,0,1}^2" % key)
    return i1, i2


def model_from_dict(data) -> BlockModel:
    if not isinstance(data, dict):
        raise ModelFileError("model file must contain a JSON object")
    extra = set(data) - {"s0", "blocks"}
    if extra:
        raise ModelFileError("unknown top-level keys: %s" % sorted(extra))
    if "s0" not in data:
        raise ModelFileError("missing key 's0'")
    s0 = data["s0"]
    if isinstance(s0, bool) or not isinstance(s0, int) or s0 < 1:
        raise ModelFileError("s0 must be a positive integer")
    blocks = data.get("blocks", {})
    if not isinstance(blocks, dict):
        raise ModelFileError("'blocks' must be an object")
    families = {}
    for name, entries in blocks.items():
        if name not in FAMILIES:
            raise ModelFileError("unknown block family %r" % name)
        if not isinstance(entries, dict):
            raise ModelFileError("family %r must be an object" % name)
        fam = np.zeros((3, 3, s0, s0))
        for key, rows in entries.items():
            i1, i2 = _parse_key(key)
            try:
                b = np.array(rows, dtype=float)
            except (TypeError, ValueError):
                raise ModelFileError("block %s[%s] is not a numeric matrix" % (name, key)) from None
            if b.shape != (s0, s0):
                raise ModelFileError(
                    "block %s[%s] has shape %s, expected (%d, %d)" % (name, key, b.shape, s0, s0)
                )
            if not np.isfinite(b).all():
                raise ModelFileError("block %s[%s] has non-finite entries" % (name, key))
            if (b < 0).any():
                raise ModelFileError("block %s[%s] has a negative entry" % (name, key))
            fam[i1 + 1, i2 + 1] = b
        families[name] = fam
    return BlockModel(s0, families)


def load_model(path, validate: bool = True) -> BlockModel:
    """Read a model file; with ``validate`` the structural report must be empty."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelFileError("cannot read %s: %s" % (path, exc)) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError("%s: invalid JSON: %s" % (path, exc)) from None
    m = model_from_dict(data)
    if validate:
        report = validate_model(m)
        if not report.ok:
            raise ModelValidationError("; ".join(report.violations), report)
    return m


def save_model(m: BlockModel, path) -> None:
    Path(path).write_text(json.dumps(m.to_dict(), indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": list(self.violations), "notes": list(self.notes)}


def _period(adj: csr_matrix, start: int) -> int:
    """Period of the strongly connected component containing ``start``."""
    order, _ = breadth_first_order(adj, start, directed=True, return_predecessors=True)
    level = np.full(adj.shape[0], -1)
    level[start] = 0
    for u in order:
        for v in adj.indices[adj.indptr[u]:adj.indptr[u + 1]]:
            if level[v] < 0:
                level[v] = level[u] + 1
    g = 0
    reach = level >= 0
    for u in np.flatnonzero(reach):
        for v in adj.indices[adj.indptr[u]:adj.indptr[u + 1]]:
            if reach[v]:
                g = gcd(g, int(level[u] + 1 - level[v]))
    return g


def _box_graph(row_block, s0, n, interior_only=False):
    """Reachability graph of the operator restricted to the box {0..n-1}^2."""
    rows, cols = [], []
    lo = 1 if interior_only else 0

    def idx(x1, x2, j):
        return ((x1 - lo) * (n - lo) + (x2 - lo)) * s0 + j

    for x1 in range(lo, n):
        for x2 in range(lo, n):
            for d1 in STEPS:
                for d2 in STEPS:
                    y1, y2 = x1 + d1, x2 + d2
                    if not (lo <= y1 < n and lo <= y2 < n):
                        continue
                    b = row_block(x1, x2, d1, d2)
                    for j, k in zip(*np.nonzero(b)):
                        rows.append(idx(x1, x2, j))
                        cols.append(idx(y1, y2, k))
    size = (n - lo) ** 2 * s0
    adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(size, size))
    return adj, idx


def validate_model(m: BlockModel) -> ValidationReport:
    """Check zero patterns plus finite irreducibility/aperiodicity proxies."""
    rep = ValidationReport()
    for name in FAMILIES:
        for i1 in STEPS:
            for i2 in STEPS:
                if forbidden(name, i1, i2) and m.block(name, i1, i2).any():
                    rep.violations.append(
                        "zero-pattern: block %s[%d,%d] must be zero" % (name, i1, i2)
                    )

    agg = m.interior.sum(axis=(0, 1))
    agg_graph = csr_matrix(agg > 0)
    ncomp, _ = connected_components(agg_graph, directed=True, connection="strong")
    if ncomp != 1:
        rep.violations.append("irreducibility: aggregate interior matrix is reducible")
    elif _period(agg_graph, 0) != 1:
        rep.violations.append("aperiodicity: aggregate interior matrix is periodic")

    adj, _ = _box_graph(lambda x1, x2, d1, d2: m.interior[d1 + 1, d2 + 1], m.s0, PROXY_BOX,
                        interior_only=True)
    ncomp, _ = connected_components(adj, directed=True, connection="strong")
    if ncomp != 1:
        rep.violations.append("irreducibility: interior walk on a %d-box is not strongly "
                              "connected" % PROXY_BOX)
    else:
        p = _period(adj, 0)
        if p != 1:
            rep.violations.append("aperiodicity: interior walk has period %d" % p)

    adj, idx = _box_graph(m.row_block, m.s0, PROXY_BOX)
    hub = idx(1, 1, 0)
    fwd = breadth_first_order(adj, hub, directed=True, return_predecessors=False)
    bwd = breadth_first_order(adj.T.tocsr(), hub, directed=True, return_predecessors=False)
    size = adj.shape[0]
    if len(fwd) != size or len(bwd) != size:
        rep.violations.append(
            "irreducibility: %d-level truncation is not strongly connected through "
            "level (1,1)" % PROXY_BOX
        )
    rep.notes.append("irreducibility and aperiodicity are checked on finite proxies only")
    rep.notes.append("finiteness of the potential matrix is not checked here; the "
                     "truncated oracle reports divergence")
    return rep


# ---------------------------------------------------------------------------
# reference models


def _scalar_family(weights: dict) -> np.ndarray:
    fam = np.zeros((3, 3, 1, 1))
    for (i1, i2), p in weights.items():
        fam[i1 + 1, i2 + 1, 0, 0] = p
    return fam


def _restrict(weights: dict, name: str, total: float) -> dict:
    kept = {k: v for k, v in weights.items() if not forbidden(name, *k)}
    scale = total / sum(kept.values())
    return {k: v * scale for k, v in kept.items()}


M1_INTERIOR = {(0, 0): 0.3, (1, 0): 0.1, (-1, 0): 0.2, (0, 1): 0.1, (0, -1): 0.2}


def scalar_model(interior: dict, total: float | None = None, boundary: str = "restrict"):
    """Scalar model from interior weights.

    ``boundary="restrict"`` gives every boundary family the interior weights
    on its allowed support, rescaled to ``total`` (default: the interior
    mass); ``boundary="zero"`` leaves boundary families empty.
    """
    if total is None:
        total = sum(interior.values())
    families = {"b12": _scalar_family(interior)}
    if boundary == "restrict":
        for name in ("empty", "b1", "b2"):
            families[name] = _scalar_family(_restrict(interior, name, total))
    elif boundary != "zero":
        raise ValueError("boundary must be 'restrict' or 'zero'")
    return BlockModel(1, families)


def model_m1() -> BlockModel:
    """Scalar reference model with interior mass 0.9 and restricted boundaries."""
    return scalar_model(M1_INTERIOR, 0.9)


M2_SEED = 20240607
M2_MASS = 0.9


def random_model(s0: int, seed: int, mass: float = M2_MASS) -> BlockModel:
    """Random dense model; every family's aggregate has row sums ``mass``."""
    rng = np.random.default_rng(seed)
    families = {}
    for name in FAMILIES:
        fam = np.zeros((3, 3, s0, s0))
        for i1 in STEPS:
            for i2 in STEPS:
                if not forbidden(name, i1, i2):
                    fam[i1 + 1, i2 + 1] = rng.uniform(size=(s0, s0))
        rows = fam.sum(axis=(0, 1, 3))
        fam *= (mass / rows)[None, None, :, None]
        families[name] = fam
    return BlockModel(s0, families)


def model_m2() -> BlockModel:
    """Two-phase reference model with a fixed seed."""
    return random_model(2, M2_SEED)


def symmetric_model(p_axis: float = 0.2, p_center: float = 0.1, boundary: str = "zero"):
    """Scalar nearest-neighbour walk with equal weight on the four axis moves."""
    w = {(0, 0): p_center, (1, 0): p_axis, (-1, 0): p_axis, (0, 1): p_axis, (0, -1): p_axis}
    return scalar_model(w, boundary=boundary)


__all__ = [
    "FAMILIES",
    "BlockModel",
    "ReversedModel",
    "ValidationReport",
    "family_of",
    "forbidden",
    "load_model",
    "model_from_dict",
    "model_m1",
    "model_m2",
    "random_model",
    "reverse_model",
    "save_model",
    "scalar_model",
    "symmetric_model",
    "validate_model",
]
