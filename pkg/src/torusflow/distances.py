"""Grid geodesics: stencil shortest paths and flat-torus closed forms.

Length convention ds^2 = 2 Re(g_{jk} dz^j dz-bar^k): a unit Hermitian
coefficient on the unit torus gives Euclidean lengths scaled by sqrt(2).
Graph distances over-approximate continuous ones; the dominant error is
angular (stencil resolution, decreasing in the radius), not radial.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .fields import TorusGeometry
from .geometry import (
    FlatMetric,
    HermitianField,
    KahlerMetric,
    PositivityError,
    assemble,
    min_eigenvalue,
    riemann_norm,
)
from .flow import FlowTrace

__all__ = [
    "StencilConfig",
    "DistanceQuery",
    "primitive_offsets",
    "MetricGraph",
    "graph_distance",
    "flat_distance_exact",
    "random_queries",
    "check_distance_estimate",
]


@dataclass(frozen=True)
class StencilConfig:
    """Neighbor offsets: integer vectors in [-r, r]^{2n} with coprime entries."""

    radius: int = 3

    def __post_init__(self):
        if not isinstance(self.radius, int) or self.radius < 1:
            raise ValueError(f"stencil radius must be a positive integer, got {self.radius!r}")


@dataclass(frozen=True)
class DistanceQuery:
    source: tuple
    target: tuple

    def __post_init__(self):
        for p in (self.source, self.target):
            if not all(isinstance(c, (int, np.integer)) for c in p):
                raise ValueError("query endpoints must be grid index tuples")


def primitive_offsets(radius: int, dim: int) -> np.ndarray:
    """All nonzero integer vectors in [-radius, radius]^dim with gcd 1."""
    if radius < 1 or dim < 1:
        raise ValueError("radius and dimension must be positive")
    span = range(-radius, radius + 1)
    out = [
        v
        for v in itertools.product(span, repeat=dim)
        if any(v) and math.gcd(*(abs(c) for c in v)) == 1
    ]
    return np.array(out, dtype=np.int64)


def _grid_coefficients(metric, geometry=None):
    if isinstance(metric, HermitianField):
        return metric.geometry, metric.values
    if isinstance(metric, KahlerMetric):
        g = assemble(metric)
        return g.geometry, g.values
    if isinstance(metric, FlatMetric):
        geo = metric.geometry if metric.geometry is not None else geometry
        if geo is None:
            raise ValueError("flat metric carries no grid; pass geometry explicitly")
        vals = np.broadcast_to(metric.H, geo.shape + (geo.n, geo.n))
        return geo, vals
    raise TypeError(f"not a metric-like object: {type(metric).__name__}")


class MetricGraph:
    """Shortest-path oracle over one metric snapshot.

    The edge table (one weight array per canonical offset) is built once;
    queries share it read-only.  Edge weight = segment length under the
    midpoint value of the squared line element, approximated by the mean
    of the endpoint quadratic forms, which keeps every weight positive.
    """

    def __init__(self, metric, stencil: StencilConfig = StencilConfig(), geometry=None):
        geo, vals = _grid_coefficients(metric, geometry)
        if min_eigenvalue(metric) <= 0:
            raise PositivityError("distance on a non-positive metric")
        self.geometry = geo
        self.stencil = stencil
        dim = geo.axes
        offs = primitive_offsets(stencil.radius, dim)
        # canonical half: first nonzero entry positive; dijkstra reads the
        # matrix as undirected so each edge is stored once
        keep = []
        for v in offs:
            nz = v[np.nonzero(v)[0][0]]
            if nz > 0:
                keep.append(v)
        self._offsets = np.array(keep, dtype=np.int64)
        npts = geo.npoints
        base = np.arange(npts, dtype=np.int32).reshape(geo.shape)
        h = geo.spacing
        axes = tuple(range(dim))
        rows, cols, data = [], [], []
        for v in self._offsets:
            disp = v.astype(float) * h
            w = disp[0::2] + 1j * disp[1::2]
            q = 2.0 * np.einsum("...jk,j,k->...", vals, w, np.conj(w)).real
            shift = tuple(-int(c) for c in v)
            q_far = np.roll(q, shift=shift, axis=axes)
            wts = np.sqrt(0.5 * (q + q_far))
            rows.append(base.ravel())
            cols.append(np.roll(base, shift=shift, axis=axes).ravel())
            data.append(wts.ravel())
        self._graph = csr_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(npts, npts),
        )

    def node(self, point) -> int:
        idx = tuple(int(c) % self.geometry.N for c in point)
        if len(idx) != self.geometry.axes:
            raise ValueError(f"point has {len(idx)} coordinates, grid has {self.geometry.axes}")
        return int(np.ravel_multi_index(idx, self.geometry.shape))

    def distances_from(self, source) -> np.ndarray:
        d = dijkstra(self._graph, directed=False, indices=self.node(source))
        return d.reshape(self.geometry.shape)

    def distance(self, source, target) -> float:
        full = self.distances_from(source)
        return float(full[tuple(int(c) % self.geometry.N for c in target)])

    def distance_batch(self, queries) -> np.ndarray:
        sources = sorted({self.node(q.source) for q in queries})
        table = dijkstra(self._graph, directed=False, indices=sources)
        row_of = {s: k for k, s in enumerate(sources)}
        return np.array(
            [table[row_of[self.node(q.source)], self.node(q.target)] for q in queries]
        )


def graph_distance(metric, x, y, stencil: StencilConfig = StencilConfig(), geometry=None) -> float:
    return MetricGraph(metric, stencil, geometry).distance(x, y)


def flat_distance_exact(H: FlatMetric, x, y) -> float:
    """Flat-torus distance: min over lattice shifts in {-1,0,1}^{2n}.

    x, y are real coordinate vectors in the unit cell (grid indices / N
    work after dividing by N).
    """
    mat = H.H if isinstance(H, FlatMetric) else np.asarray(H, dtype=np.complex128)
    n = mat.shape[0]
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (2 * n,) or y.shape != (2 * n,):
        raise ValueError(f"points must have {2 * n} real coordinates")
    best = math.inf
    for k in itertools.product((-1.0, 0.0, 1.0), repeat=2 * n):
        d = y - x + np.array(k)
        w = d[0::2] + 1j * d[1::2]
        q = 2.0 * np.einsum("jk,j,k->", mat, w, np.conj(w)).real
        best = min(best, math.sqrt(max(q, 0.0)))
    return best


def random_queries(geometry: TorusGeometry, count: int, seed: int) -> list:
    """Distinct-endpoint query pairs, uniform over grid points."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        pts = rng.integers(0, geometry.N, size=(2, geometry.axes))
        if np.array_equal(pts[0], pts[1]):
            continue
        out.append(DistanceQuery(tuple(int(c) for c in pts[0]), tuple(int(c) for c in pts[1])))
    return out


def flat_accuracy_battery(
    flat: FlatMetric,
    geometry: TorusGeometry | None = None,
    count: int = 100,
    seed: int = 2024,
    stencil: StencilConfig = StencilConfig(),
) -> dict:
    """Graph-vs-closed-form accuracy on a constant metric.

    The graph value always over-approximates; the worst relative excess
    over the battery is the stencil's effective angular error.
    """
    geo = flat.geometry if flat.geometry is not None else geometry
    if geo is None:
        raise ValueError("flat metric carries no grid; pass geometry explicitly")
    queries = random_queries(geo, count, seed)
    graph = MetricGraph(flat, stencil, geo)
    approx = graph.distance_batch(queries)
    rows = []
    worst = 0.0
    for q, d in zip(queries, approx):
        exact = flat_distance_exact(
            flat,
            np.array(q.source, dtype=float) / geo.N,
            np.array(q.target, dtype=float) / geo.N,
        )
        rel = (float(d) - exact) / exact
        worst = max(worst, abs(rel))
        rows.append({"query": q, "graph": float(d), "exact": exact, "rel_error": rel})
    return {"max_rel_error": worst, "rows": rows, "count": count}


def check_distance_estimate(
    trace: FlowTrace,
    queries,
    times=(0.05, 0.25, 1.0),
    stencil: StencilConfig = StencilConfig(),
) -> dict:
    """Shrinking-distance bound d_0(x,y) <= d_t(x,y) + C sqrt(L t).

    L is measured as sup_t t * max |Rm(g(t))| over the snapshots, C is
    fitted as the smallest constant covering every (query, t) pair, and
    the flat comparison records max |d_0 - d_flat| / d_flat against the
    attractor's closed form.
    """
    geo = trace.initial.geometry
    queries = list(queries)
    g0_graph = MetricGraph(assemble(trace.initial), stencil)
    d0 = g0_graph.distance_batch(queries)

    L = 0.0
    for s in trace.snapshots:
        L = max(L, s.t * float(riemann_norm(s.metric()).values.max()))

    rows = []
    ratios = []
    for t in times:
        snap = trace.snapshot_at(t)
        gt_graph = MetricGraph(assemble(snap.metric()), stencil)
        dt = gt_graph.distance_batch(queries)
        for qid, (q, a, b) in enumerate(zip(queries, d0, dt)):
            gap = float(a - b)
            scale = math.sqrt(max(L * t, 0.0))
            rows.append({"query": qid, "t": t, "d0": float(a), "dt": float(b), "gap": gap})
            if scale > 0 and gap > 0:
                ratios.append(gap / scale)
    fitted_c = max(ratios, default=0.0)
    for r in rows:
        r["slack"] = fitted_c * math.sqrt(max(L * r["t"], 0.0)) - r["gap"]

    flat_rel = 0.0
    flat_rows = []
    for qid, q in enumerate(queries):
        xs = np.array(q.source, dtype=float) / geo.N
        ys = np.array(q.target, dtype=float) / geo.N
        d_flat = flat_distance_exact(trace.alpha, xs, ys)
        rel = abs(float(d0[qid]) - d_flat) / d_flat
        flat_rel = max(flat_rel, rel)
        flat_rows.append({"query": qid, "d0": float(d0[qid]), "d_flat": d_flat, "rel_gap": rel})

    min_slack = min((r["slack"] for r in rows), default=0.0)
    return {
        "L": L,
        "fitted_C": fitted_c,
        "rows": rows,
        "min_slack": min_slack,
        "flat_rows": flat_rows,
        "max_flat_relative_gap": flat_rel,
        "pass": bool(min_slack >= -1e-9),
    }
