"""Clustering instances: objectives, connection costs, CSV loading and
distance normalization."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import cdist

MAX_ENTRIES = 10**7


class InvalidK(ValueError):
    """k is not a positive integer no larger than the number of facilities."""


class BadInput(ValueError):
    """Malformed or non-finite input data."""


class Objective(enum.Enum):
    EUCLIDEAN_KMEANS = "kmeans"
    EUCLIDEAN_KMEDIAN = "kmedian"
    GENERAL_KMEANS = "kmeans-general"

    @property
    def squared(self) -> bool:
        return self is not Objective.EUCLIDEAN_KMEDIAN

    @property
    def euclidean(self) -> bool:
        return self is not Objective.GENERAL_KMEANS

    @classmethod
    def parse(cls, value) -> "Objective":
        if isinstance(value, cls):
            return value
        for obj in cls:
            if value in (obj.value, obj.name):
                return obj
        raise BadInput(f"unknown objective {value!r}")


class FacilityMode(enum.Enum):
    EXEMPLAR = "exemplar"  # F = D
    EXPLICIT = "explicit"


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Instance:
    """An immutable clustering instance.

    ``cost[j, i]`` is the connection cost of client j to facility i in
    objective units (squared distance for k-means, distance for k-median).
    ``facility_cost[i, i2]`` is the same quantity between two facilities and
    is what the conflict graph compares against.
    """

    cost: np.ndarray
    facility_cost: np.ndarray
    objective: Objective
    k: int
    client_coords: Optional[np.ndarray] = None
    facility_coords: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "cost", _readonly(self.cost))
        object.__setattr__(self, "facility_cost", _readonly(self.facility_cost))
        for attr in ("client_coords", "facility_coords"):
            val = getattr(self, attr)
            if val is not None:
                object.__setattr__(self, attr, _readonly(val))
        c = self.cost
        if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
            raise BadInput("cost must be a non-empty 2-d matrix")
        if c.size > MAX_ENTRIES:
            raise BadInput(f"n*m = {c.size} exceeds the dense limit {MAX_ENTRIES}")
        if not np.all(np.isfinite(c)) or np.any(c < 0):
            raise BadInput("costs must be finite and non-negative")
        m = c.shape[1]
        if self.facility_cost.shape != (m, m):
            raise BadInput("facility_cost must be m x m")
        if not np.all(np.isfinite(self.facility_cost)) or np.any(self.facility_cost < 0):
            raise BadInput("facility costs must be finite and non-negative")
        if not isinstance(self.k, (int, np.integer)) or self.k < 1 or self.k > m:
            raise InvalidK(f"k={self.k} must satisfy 1 <= k <= m={m}")
        object.__setattr__(self, "k", int(self.k))

    @property
    def n(self) -> int:
        return self.cost.shape[0]

    @property
    def m(self) -> int:
        return self.cost.shape[1]

    @property
    def has_coords(self) -> bool:
        return self.client_coords is not None and self.facility_coords is not None

    def distances(self) -> np.ndarray:
        """Client-facility distances d(j, i)."""
        return np.sqrt(self.cost) if self.objective.squared else self.cost

    def facility_distances(self) -> np.ndarray:
        return np.sqrt(self.facility_cost) if self.objective.squared else self.facility_cost

    def with_k(self, k: int) -> "Instance":
        return Instance(self.cost, self.facility_cost, self.objective, k,
                        self.client_coords, self.facility_coords, self.name)

    def solution_cost(self, opened) -> float:
        idx = np.asarray(sorted(opened), dtype=int)
        return float(self.cost[:, idx].min(axis=1).sum())


def pairwise_cost(a: np.ndarray, b: np.ndarray, squared: bool) -> np.ndarray:
    return cdist(a, b, "sqeuclidean" if squared else "euclidean")


def _as_points(points, what="points") -> np.ndarray:
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] == 0:
        raise BadInput(f"{what} must be a non-empty table")
    if not np.all(np.isfinite(x)):
        raise BadInput(f"{what} contain non-finite coordinates")
    return x


def build_instance(points, objective="kmeans", k: int = 1,
                   facility_mode: FacilityMode | str = FacilityMode.EXEMPLAR,
                   facilities=None, name: str = "") -> Instance:
    """Build a Euclidean-coordinate instance.

    Exemplar mode uses the points themselves as candidate centers. Explicit
    mode takes a separate facility table. The general-metric objective
    accepts coordinates too (Euclidean is a metric), which is handy for tests.
    """
    objective = Objective.parse(objective)
    mode = FacilityMode(facility_mode) if not isinstance(facility_mode, FacilityMode) else facility_mode
    x = _as_points(points)
    if mode is FacilityMode.EXEMPLAR:
        f = x
    else:
        if facilities is None:
            raise BadInput("explicit facility mode needs a facility table")
        f = _as_points(facilities, "facilities")
        if f.shape[1] != x.shape[1]:
            raise BadInput("clients and facilities have different dimensions")
    if x.shape[0] * f.shape[0] > MAX_ENTRIES:
        raise BadInput("instance exceeds the dense cost limit")
    if not isinstance(k, (int, np.integer)) or k < 1 or k > f.shape[0]:
        raise InvalidK(f"k={k} must satisfy 1 <= k <= m={f.shape[0]}")
    sq = objective.squared
    cost = pairwise_cost(x, f, sq)
    ff = pairwise_cost(f, f, sq)
    return Instance(cost, ff, objective, int(k), x, f, name)


def derived_facility_cost(cost: np.ndarray, squared: bool) -> np.ndarray:
    """Facility-facility costs implied by routing through a shared client.

    d(i, i') = min_j d(j, i) + d(j, i') is the largest value consistent with
    the triangle inequality, so it is a safe stand-in when only the client
    facility matrix is known.
    """
    d = np.sqrt(cost) if squared else np.asarray(cost, dtype=float)
    ff = (d[:, :, None] + d[:, None, :]).min(axis=0)
    np.fill_diagonal(ff, 0.0)
    return ff**2 if squared else ff


def from_costs(cost, objective="kmeans-general", k: int = 1, facility_cost=None,
               name: str = "") -> Instance:
    """Instance from an explicit cost matrix (no coordinates)."""
    objective = Objective.parse(objective)
    c = np.asarray(cost, dtype=float)
    if c.ndim != 2 or c.size == 0:
        raise BadInput("cost must be a non-empty 2-d matrix")
    if not np.all(np.isfinite(c)):
        raise BadInput("cost contains non-finite entries")
    if facility_cost is None:
        facility_cost = derived_facility_cost(c, objective.squared)
    return Instance(c, facility_cost, objective, k, None, None, name)


def validate_metric(inst: Instance, tol: float = 1e-9) -> bool:
    """Check the triangle inequality on the distances we can see.

    Distances are square roots of costs for the squared objectives. Triangles
    client-facility-facility and facility-client-facility are checked.
    """
    d = inst.distances()
    dff = inst.facility_distances()
    # d(j,i) <= d(j,i') + d(i',i)
    via_fac = (d[:, :, None] + dff[None, :, :]).min(axis=1)
    if np.any(d > via_fac + tol):
        return False
    # d(i,i') <= d(i,j) + d(j,i')
    via_cli = (d[:, :, None] + d[:, None, :]).min(axis=0)
    if np.any(dff > via_cli + tol):
        return False
    return bool(np.all(np.abs(dff - dff.T) <= tol))


# CSV plumbing -------------------------------------------------------------

def _read_rows(path) -> list[list[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(cell.strip() for cell in r)]
    return rows


def _numeric_table(rows: list[list[str]]) -> np.ndarray:
    def is_number(s):
        try:
            float(s)
            return True
        except ValueError:
            return False

    if rows and not all(is_number(cell) for cell in rows[0]):
        rows = rows[1:]  # header
    if not rows:
        raise BadInput("no data rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise BadInput("ragged CSV rows")
    try:
        table = np.array([[float(cell) for cell in r] for r in rows])
    except ValueError as exc:
        raise BadInput(f"non-numeric cell: {exc}") from None
    if not np.all(np.isfinite(table)):
        raise BadInput("non-finite value in CSV")
    return table


def read_points(path) -> np.ndarray:
    return _numeric_table(_read_rows(path))


def write_points(path, points: np.ndarray, fmt: str = "%.17g") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for row in np.atleast_2d(points):
            fh.write(",".join(fmt % v for v in row) + "\n")


COST_MARKER = "#cost"


def read_cost_csv(path) -> tuple[np.ndarray, Optional[np.ndarray]]:
    """Read the abstract-cost CSV extension.

    The first line is ``#cost``; the following rows hold the n x m client
    facility matrix. An optional line ``#facility_cost`` introduces an m x m
    facility-facility block.
    """
    rows = _read_rows(path)
    if not rows or rows[0][0].strip() != COST_MARKER:
        raise BadInput("abstract-cost CSV must start with #cost")
    blocks: dict[str, list[list[str]]] = {"#cost": []}
    current = "#cost"
    for r in rows[1:]:
        head = r[0].strip()
        if head.startswith("#"):
            current = head
            blocks[current] = []
        else:
            blocks[current].append(r)
    cost = _numeric_table(blocks["#cost"])
    ff = _numeric_table(blocks["#facility_cost"]) if blocks.get("#facility_cost") else None
    return cost, ff


def is_cost_csv(path) -> bool:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
    return first.split(",")[0].strip() == COST_MARKER


def write_cost_csv(path, cost: np.ndarray, facility_cost: Optional[np.ndarray] = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(COST_MARKER + "\n")
        for row in cost:
            fh.write(",".join("%.17g" % v for v in row) + "\n")
        if facility_cost is not None:
            fh.write("#facility_cost\n")
            for row in facility_cost:
                fh.write(",".join("%.17g" % v for v in row) + "\n")


def load_instance(path, objective="kmeans", k: int = 1, facilities_path=None) -> Instance:
    """Load a point CSV (exemplar or explicit facilities) or an abstract-cost CSV."""
    if is_cost_csv(path):
        cost, ff = read_cost_csv(path)
        return from_costs(cost, objective, k, ff, name=str(path))
    pts = read_points(path)
    if facilities_path is None:
        return build_instance(pts, objective, k, FacilityMode.EXEMPLAR, name=str(path))
    fac = read_points(facilities_path)
    return build_instance(pts, objective, k, FacilityMode.EXPLICIT, fac, name=str(path))


# Normalization ------------------------------------------------------------

class NormalizationMode(enum.Enum):
    GENERAL_METRIC = "general-metric"
    EUCLIDEAN_EMBEDDING = "euclidean-embedding"


@dataclass
class NormalizationRecord:
    """How an instance was rescaled.

    ``scale`` multiplies raw distances; costs scale by ``scale**2`` for the
    squared objectives. ``kept_facilities`` maps facility indices of the
    normalized instance back to the original ones.
    """

    scale: float
    clamp_high: float
    floor_low: float
    mode: NormalizationMode
    estimate: float
    kept_facilities: np.ndarray
    cluster_map: Optional[np.ndarray] = None
    facility_cluster: Optional[np.ndarray] = None
    already_trivial: bool = False
    band_violations: int = 0
    notes: list[str] = field(default_factory=list)

    @property
    def cost_scale(self) -> float:
        return self.scale**2 if self._squared else self.scale

    _squared: bool = True

    def undo_cost(self, normalized_cost: float) -> float:
        return normalized_cost / self.cost_scale

    def to_original(self, opened) -> list[int]:
        return sorted(int(self.kept_facilities[i]) for i in opened)


def _band(n: int, squared: bool) -> tuple[float, float]:
    """Allowed cost range after normalization."""
    return (1.0, float(n) ** 6) if squared else (1.0, float(n) ** 3)


def normalize_distances(inst: Instance, mode: Optional[NormalizationMode] = None,
                        estimate: Optional[float] = None) -> tuple[Instance, NormalizationRecord]:
    """Rescale an instance so all client-facility costs sit in a polynomial band.

    For k-means the band is [1, n^6] on squared distances and the estimate M of
    the optimum is mapped to roughly n^3. For k-median the same construction is
    done on plain distances with target n^2 and band [1, n^3].

    The default mode is the Euclidean embedding for Euclidean k-means instances
    with coordinates and the general-metric clamp otherwise.
    """
    from .oracle import greedy_opt_estimate

    n = inst.n
    squared = inst.objective.squared
    if mode is None:
        mode = (NormalizationMode.EUCLIDEAN_EMBEDDING
                if inst.objective is Objective.EUCLIDEAN_KMEANS and inst.has_coords
                else NormalizationMode.GENERAL_METRIC)
    if mode is NormalizationMode.EUCLIDEAN_EMBEDDING and not (
            inst.has_coords and inst.objective is Objective.EUCLIDEAN_KMEANS):
        raise BadInput("the embedding mode needs Euclidean k-means coordinates")
    M = greedy_opt_estimate(inst, inst.k) if estimate is None else float(estimate)
    all_kept = np.arange(inst.m)
    if M <= 0:
        rec = NormalizationRecord(1.0, math.inf, 0.0, mode, M, all_kept,
                                  already_trivial=True, _squared=squared)
        rec.notes.append("AlreadyTrivial: optimum estimate is zero, instance returned unchanged")
        return inst, rec

    fallback = mode is NormalizationMode.EUCLIDEAN_EMBEDDING and n == 1
    if fallback:
        # with one client the band is the single value 1, out of the embedding's reach
        mode = NormalizationMode.GENERAL_METRIC
    if mode is NormalizationMode.GENERAL_METRIC:
        if squared:
            scale = math.sqrt(n**3 / M)
            high = float(n) ** 2
        else:
            scale = n**2 / M
            high = float(n) ** 3
        d = inst.distances() * scale
        dff = inst.facility_distances() * scale
        d = np.clip(d, 1.0, high)
        off = ~np.eye(inst.m, dtype=bool)
        dff = np.where(off, np.clip(dff, 1.0, high), 0.0)
        cost = d**2 if squared else d
        ff = dff**2 if squared else dff
        out = Instance(cost, ff, inst.objective, inst.k, None, None, inst.name)
        rec = NormalizationRecord(scale, high, 1.0, mode, M, all_kept, _squared=squared)
        if fallback:
            rec.notes.append("single client: clamped instead of embedded")
    else:
        out, rec = _euclidean_embedding(inst, M)
    lo, hi = _band(n, squared)
    rec.band_violations = int(np.sum((out.cost < lo - 1e-9 * lo) | (out.cost > hi * (1 + 1e-9))))
    if rec.band_violations:
        rec.notes.append(f"{rec.band_violations} client-facility costs outside [{lo:g}, {hi:g}]")
    return out, rec


def _euclidean_embedding(inst: Instance, M: float) -> tuple[Instance, NormalizationRecord]:
    n = inst.n
    scale = math.sqrt(n**3 / M)
    x = inst.client_coords * scale
    f = inst.facility_coords * scale
    # clients closer than n^2/4 end up in the same cluster (transitively)
    near = cdist(x, x) < n**2 / 4.0
    n_clusters, labels = connected_components(csr_matrix(near), directed=False)
    dxf = cdist(f, x)
    close = dxf < n**2 / 8.0
    fac_cluster = np.full(inst.m, -1)
    for i in range(inst.m):
        hits = np.flatnonzero(close[i])
        if hits.size:
            fac_cluster[i] = labels[hits[np.argmin(dxf[i, hits])]]
    kept = np.flatnonzero(fac_cluster >= 0)
    notes = []
    if kept.size < inst.k:
        # tiny instances can leave too few facilities; keep the nearest ones
        order = np.argsort(dxf.min(axis=1), kind="stable")
        for i in order:
            if fac_cluster[i] < 0:
                j = int(np.argmin(dxf[i]))
                fac_cluster[i] = labels[j]
            if np.count_nonzero(fac_cluster >= 0) >= inst.k:
                break
        kept = np.flatnonzero(fac_cluster >= 0)
        notes.append("kept extra facilities so that k <= m holds")
    f = f[kept]
    fcl = fac_cluster[kept]
    dim = x.shape[1]
    xe = np.zeros((n, dim + n_clusters + 1))
    fe = np.zeros((kept.size, dim + n_clusters + 1))
    for c in range(n_clusters):
        members = np.concatenate([x[labels == c], f[fcl == c]])
        centroid = members.mean(axis=0)
        xe[labels == c, :dim] = x[labels == c] - centroid
        fe[fcl == c, :dim] = f[fcl == c] - centroid
        xe[labels == c, dim + c] = n**2
        fe[fcl == c, dim + c] = n**2
    fe[:, -1] = 1.0
    out = build_instance(xe, Objective.EUCLIDEAN_KMEANS, inst.k, FacilityMode.EXPLICIT, fe,
                         name=inst.name)
    rec = NormalizationRecord(scale, float(n) ** 2, 1.0, NormalizationMode.EUCLIDEAN_EMBEDDING,
                              M, kept, labels, fcl, _squared=True, notes=notes)
    return out, rec


def random_points(rng: np.random.Generator, n: int, dims: int = 2, mixture_k: int = 3,
                  spread: float = 1.0, box: float = 10.0) -> np.ndarray:
    """Gaussian-mixture sample used by the generator command and the tests."""
    centers = rng.uniform(0.0, box, size=(max(1, mixture_k), dims))
    which = rng.integers(0, centers.shape[0], size=n)
    return centers[which] + spread * rng.standard_normal((n, dims))


def random_metric_instance(rng: np.random.Generator, n: int, m: int, k: int = 1,
                           edge_prob: float = 0.3) -> Instance:
    """General-metric k-means instance from shortest paths on a random graph.

    The metric lives on the n + m nodes; costs are squared path lengths.
    """
    from scipy.sparse.csgraph import shortest_path

    size = n + m
    w = rng.uniform(0.1, 1.0, size=(size, size))
    mask = rng.random((size, size)) < edge_prob
    # a spanning path keeps the graph connected
    idx = np.arange(size - 1)
    mask[idx, idx + 1] = True
    adj = np.where(mask | mask.T, np.minimum(w, w.T), 0.0)
    np.fill_diagonal(adj, 0.0)
    dist = shortest_path(csr_matrix(adj), directed=False)
    d_cf = dist[:n, n:]
    d_ff = dist[n:, n:]
    return Instance(d_cf**2, d_ff**2, Objective.GENERAL_KMEANS, k)
