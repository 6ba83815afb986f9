"""Bell-local, Local-Friendliness and no-signalling polytopes.

Tables are flattened in C order over ``(x, y, a, b)``. The LF polytope is the
convex hull of the no-signalling "fibers" in which Alice's setting 0 (the
friend's always-performed measurement) has a deterministic outcome ``c``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Literal

import numpy as np
from scipy.optimize import linprog

from . import dd
from .scenario import CorrelationTable

NS_TOL = 1e-10
CERT_TOL = 1e-9
RECON_TOL = 1e-8
DEDUP_TOL = 1e-8
MAX_VERTICES = 10**6

Dims = tuple[int, int, int, int]


class PolytopeError(ValueError):
    pass


class SizeGuardError(PolytopeError):
    pass


class LPFailure(RuntimeError):
    """The LP solver failed or produced a certificate that does not verify."""


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class Inequality:
    """``sum(coeffs * p) <= bound``; scaled so that max |coeff| = 1."""

    coeffs: np.ndarray = field(repr=False)
    bound: float
    sense: str = "<="

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 4:
            raise PolytopeError(f"coefficients must be indexed (x, y, a, b), got shape {c.shape}")
        if not np.all(np.isfinite(c)) or not np.isfinite(self.bound):
            raise PolytopeError("inequality has non-finite entries")
        bound = float(self.bound)
        scale = float(np.max(np.abs(c))) if c.size else 0.0
        if scale > 0:
            c, bound = c / scale, bound / scale
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "bound", bound)

    @property
    def dims(self) -> Dims:
        return self.coeffs.shape


@dataclass(frozen=True)
class VertexSet:
    dims: Dims
    vertices: np.ndarray = field(repr=False)  # (m, nx, ny, ka, kb)
    model: Literal["Bell", "LF", "NS"]
    exact: tuple[tuple[Fraction, ...], ...] | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.vertices)

    def tables(self) -> list[CorrelationTable]:
        return [CorrelationTable(v) for v in self.vertices]

    def flat(self) -> np.ndarray:
        return self.vertices.reshape(len(self.vertices), -1)


@dataclass(frozen=True)
class MembershipCertificate:
    verdict: Literal["inside", "outside"]
    witness: object  # convex weights, LF blocks, or a separating Inequality
    gap: float
    model: str = ""

    @property
    def inside(self) -> bool:
        return self.verdict == "inside"


@dataclass(frozen=True)
class NSReport:
    alice_deviation: float
    bob_deviation: float
    tol: float = NS_TOL

    @property
    def deviation(self) -> float:
        return max(self.alice_deviation, self.bob_deviation)

    @property
    def passed(self) -> bool:
        return self.deviation < self.tol


def _as_table(t) -> CorrelationTable:
    return t if isinstance(t, CorrelationTable) else CorrelationTable(np.asarray(t, dtype=float))


# ---------------------------------------------------------------------------
# no-signalling


def check_no_signalling(t, tol: float = NS_TOL) -> NSReport:
    t = _as_table(t)
    pa = t.alice_marginals()  # [x, y, a]
    pb = t.bob_marginals()  # [x, y, b]
    dev_a = float(np.max(np.abs(pa - pa[:, :1, :]))) if t.ny > 1 else 0.0
    dev_b = float(np.max(np.abs(pb - pb[:1, :, :]))) if t.nx > 1 else 0.0
    return NSReport(dev_a, dev_b, tol)


def _check_dims(nx, ny, ka, kb):
    for v in (nx, ny, ka, kb):
        if int(v) < 1:
            raise PolytopeError(f"dimensions must be >= 1, got {(nx, ny, ka, kb)}")


def _flat_index(dims: Dims):
    nx, ny, ka, kb = dims
    return lambda x, y, a, b: ((x * ny + y) * ka + a) * kb + b


def ns_equalities(dims: Dims, homogeneous: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Normalization and no-signalling equalities ``E p = f``.

    With ``homogeneous=True`` normalization becomes "same total weight for every
    setting pair" and ``f = 0`` (used for subnormalized LF blocks).
    """
    nx, ny, ka, kb = dims
    n = nx * ny * ka * kb
    idx = _flat_index(dims)
    rows, rhs = [], []
    for x, y in itertools.product(range(nx), range(ny)):
        r = np.zeros(n)
        for a, b in itertools.product(range(ka), range(kb)):
            r[idx(x, y, a, b)] += 1
        if homogeneous:
            if (x, y) == (0, 0):
                continue
            for a, b in itertools.product(range(ka), range(kb)):
                r[idx(0, 0, a, b)] -= 1
            rows.append(r)
            rhs.append(0.0)
        else:
            rows.append(r)
            rhs.append(1.0)
    for x, y, a in itertools.product(range(nx), range(1, ny), range(ka)):
        r = np.zeros(n)
        for b in range(kb):
            r[idx(x, y, a, b)] += 1
            r[idx(x, 0, a, b)] -= 1
        rows.append(r)
        rhs.append(0.0)
    for y, x, b in itertools.product(range(ny), range(1, nx), range(kb)):
        r = np.zeros(n)
        for a in range(ka):
            r[idx(x, y, a, b)] += 1
            r[idx(0, y, a, b)] -= 1
        rows.append(r)
        rhs.append(0.0)
    return np.array(rows), np.array(rhs)


def _fiber_zeros(dims: Dims, c: int) -> list[int]:
    """Flat indices forced to zero when Alice's setting 0 outputs ``c``."""
    nx, ny, ka, kb = dims
    idx = _flat_index(dims)
    return [idx(0, y, a, b) for y in range(ny) for a in range(ka) if a != c for b in range(kb)]


# ---------------------------------------------------------------------------
# vertex enumeration


def bell_vertices(nx: int, ny: int, ka: int, kb: int) -> VertexSet:
    """All deterministic local strategies, ``ka**nx * kb**ny`` of them."""
    _check_dims(nx, ny, ka, kb)
    count = ka**nx * kb**ny
    if count > MAX_VERTICES:
        raise SizeGuardError(f"{count} Bell vertices exceeds the guard of {MAX_VERTICES}")
    verts = np.zeros((count, nx, ny, ka, kb))
    for k, (fa, fb) in enumerate(
        itertools.product(itertools.product(range(ka), repeat=nx), itertools.product(range(kb), repeat=ny))
    ):
        for x, y in itertools.product(range(nx), range(ny)):
            verts[k, x, y, fa[x], fb[y]] = 1.0
    exact = tuple(tuple(Fraction(int(v)) for v in row) for row in verts.reshape(count, -1))
    return VertexSet((nx, ny, ka, kb), verts, "Bell", exact)


def _polytope_hrep(dims: Dims, zeros: list[int]) -> dd.HRep:
    n = int(np.prod(dims))
    E, f = ns_equalities(dims)
    A = [[-int(i == j) for j in range(n)] for i in range(n)]
    b = [0] * n
    E_rows = [[int(round(v)) for v in row] for row in E] + [[int(i == j) for j in range(n)] for i in zeros]
    f_rows = [int(round(v)) for v in f] + [0] * len(zeros)
    return dd.HRep.make(A, b, E_rows, f_rows)


def _vertex_set(dims: Dims, exact_pts, model) -> VertexSet:
    exact = sorted(set(exact_pts))
    arr = np.array([[float(v) for v in p] for p in exact]).reshape((len(exact),) + tuple(dims))
    # float-level dedup guard
    keep = []
    for i in range(len(arr)):
        if all(np.max(np.abs(arr[i] - arr[j])) > DEDUP_TOL for j in keep):
            keep.append(i)
    return VertexSet(dims, arr[keep], model, tuple(exact[i] for i in keep))


def _dd_guard(dims: Dims):
    nx, ny, ka, kb = dims
    dim_ns = nx * ny * (ka - 1) * (kb - 1) + nx * (ka - 1) + ny * (kb - 1)
    if dim_ns > dd.MAX_DIM:
        raise SizeGuardError(f"no-signalling polytope dimension {dim_ns} exceeds the guard of {dd.MAX_DIM}")


@lru_cache(maxsize=None)
def _ns_vertices(dims: Dims) -> VertexSet:
    _dd_guard(dims)
    v = dd.h_to_v(_polytope_hrep(dims, []))
    return _vertex_set(dims, v.vertices, "NS")


def ns_vertices(nx: int, ny: int, ka: int, kb: int) -> VertexSet:
    _check_dims(nx, ny, ka, kb)
    return _ns_vertices((nx, ny, ka, kb))


@lru_cache(maxsize=None)
def _lf_vertices(dims: Dims) -> VertexSet:
    _dd_guard(dims)
    pts = []
    for c in range(dims[2]):
        pts += dd.h_to_v(_polytope_hrep(dims, _fiber_zeros(dims, c))).vertices
    return _vertex_set(dims, pts, "LF")


def lf_vertices(nx: int, ny: int, ka: int, kb: int) -> VertexSet:
    """Vertices of the LF polytope: union over ``c`` of the x=0-deterministic NS fibers."""
    _check_dims(nx, ny, ka, kb)
    return _lf_vertices((nx, ny, ka, kb))


# ---------------------------------------------------------------------------
# inequalities


def evaluate_inequality(t, iq: Inequality, tol: float = CERT_TOL) -> dict:
    t = _as_table(t)
    if t.shape != iq.dims:
        raise PolytopeError(f"shape mismatch: table {t.shape} vs inequality {iq.dims}")
    value = float(np.sum(iq.coeffs * t.p))
    return {"value": value, "violated": value > iq.bound + tol, "margin": value - iq.bound}


def chsh_inequality() -> Inequality:
    """Standard CHSH in probability form for (2, 2, 2, 2); bound 2."""
    c = np.zeros((2, 2, 2, 2))
    for x, y, a, b in itertools.product(range(2), repeat=4):
        c[x, y, a, b] = (-1) ** (x * y) * (-1) ** (a + b)
    return Inequality(c, 2.0)


def max_over_vertices(iq: Inequality, vs: VertexSet) -> float:
    return float(np.max(vs.flat() @ iq.coeffs.reshape(-1)))


def _clean(s: np.ndarray) -> np.ndarray:
    s = np.where(np.abs(s) < 1e-12, 0.0, s)
    return s


# ---------------------------------------------------------------------------
# membership


_HIGHS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


def _lp(c, **kw):
    res = linprog(c, method="highs", options=_HIGHS, **kw)
    if res.status not in (0, 2):
        raise LPFailure(f"LP solver failed: {res.message}")
    return res


def _prepare(t, ns_tol: float = NS_TOL) -> CorrelationTable:
    t = _as_table(t)
    if not t.is_normalized(max(ns_tol, 1e-10)):
        raise PolytopeError(f"table is not normalized (error {t.normalization_error():.3g})")
    ns = check_no_signalling(t, ns_tol)
    if not ns.passed:
        raise PolytopeError(f"table is signalling (deviation {ns.deviation:.3g})")
    return t


def bell_membership(t, *, ns_tol: float = NS_TOL) -> MembershipCertificate:
    """Decide membership in the Bell-local polytope, with a self-verified certificate."""
    t = _prepare(t, ns_tol)
    vs = bell_vertices(*t.shape)
    V = vs.flat()
    m, n = V.shape
    p = t.p.reshape(-1)

    # separation: max s.p - beta  s.t.  V s <= beta,  |s| <= 1
    c = np.concatenate([-p, [1.0]])
    A_ub = np.hstack([V, -np.ones((m, 1))])
    res = _lp(c, A_ub=A_ub, b_ub=np.zeros(m), bounds=[(-1, 1)] * n + [(None, None)])
    if res.status != 0:
        raise LPFailure(f"separation LP failed: {res.message}")
    s = _clean(res.x[:n])
    beta = float(np.max(V @ s))
    gap = float(s @ p - beta)
    if gap > CERT_TOL:
        iq = Inequality(s.reshape(t.shape), beta)
        _verify_outside(iq, t, V)
        return MembershipCertificate("outside", iq, evaluate_inequality(t, iq)["margin"], "Bell")

    res = _lp(np.zeros(m), A_eq=np.vstack([V.T, np.ones((1, m))]), b_eq=np.concatenate([p, [1.0]]),
              bounds=[(0, None)] * m)
    if res.status != 0:
        raise LPFailure("neither a separating inequality nor convex weights were found")
    w = np.clip(res.x, 0.0, None)
    err = float(np.max(np.abs(V.T @ w - p)))
    if err >= RECON_TOL:
        raise LPFailure(f"convex weights reconstruct the table only to {err:.3g}")
    return MembershipCertificate("inside", w, 0.0, "Bell")


def _verify_outside(iq: Inequality, t: CorrelationTable, V: np.ndarray | None) -> None:
    s = iq.coeffs.reshape(-1)
    if V is not None and np.max(V @ s) > iq.bound + CERT_TOL:
        raise LPFailure("separating inequality is violated by a polytope vertex")
    if evaluate_inequality(t, iq)["margin"] <= CERT_TOL:
        raise LPFailure("separating inequality is not violated by the table")


@dataclass(frozen=True)
class LFDecomposition:
    """Subnormalized blocks ``q_c`` summing to the table; block ``c`` has x=0 outcome ``c``."""

    blocks: np.ndarray  # (ka, nx, ny, ka, kb)

    @property
    def weights(self) -> np.ndarray:
        return self.blocks[:, 0, 0].sum(axis=(1, 2))


def _fiber_system(dims: Dims):
    """Per-fiber equality system ``A_c v = b_c`` (normalized, NS, deterministic x=0)."""
    n = int(np.prod(dims))
    E, f = ns_equalities(dims)
    out = []
    for c in range(dims[2]):
        zs = _fiber_zeros(dims, c)
        Z = np.zeros((len(zs), n))
        for r, i in enumerate(zs):
            Z[r, i] = 1.0
        out.append((np.vstack([E, Z]), np.concatenate([f, np.zeros(len(zs))])))
    return out


def lf_membership(t, *, verify_vertices: bool | None = None, ns_tol: float = NS_TOL) -> MembershipCertificate:
    """Decide membership in the LF (partially deterministic) polytope.

    Outside certificates are checked through their LP-dual bound; when the
    fibers are small enough they are also checked on every LF vertex.
    """
    t = _prepare(t, ns_tol)
    dims = t.shape
    nx, ny, ka, kb = dims
    n = int(np.prod(dims))
    p = t.p.reshape(-1)
    fibers = _fiber_system(dims)

    # separation: max s.p - beta,  s <= A_c^T mu_c,  b_c.mu_c <= beta
    sizes = [A.shape[0] for A, _ in fibers]
    nvar = n + 1 + sum(sizes)
    c = np.zeros(nvar)
    c[:n] = -p
    c[n] = 1.0
    rows, rhs = [], []
    off = n + 1
    for (A, b), k in zip(fibers, sizes):
        blk = np.zeros((n, nvar))
        blk[:, :n] = np.eye(n)
        blk[:, off:off + k] = -A.T
        rows.append(blk)
        rhs.append(np.zeros(n))
        r = np.zeros((1, nvar))
        r[0, off:off + k] = b
        r[0, n] = -1.0
        rows.append(r)
        rhs.append(np.zeros(1))
        off += k
    bounds = [(-1, 1)] * n + [(None, None)] * (1 + sum(sizes))
    res = _lp(c, A_ub=np.vstack(rows), b_ub=np.concatenate(rhs), bounds=bounds)
    if res.status != 0:
        raise LPFailure(f"LF separation LP failed: {res.message}")
    s = _clean(res.x[:n])
    # rigorous bound from the dual multipliers: for v >= 0 with sum(v) = nx*ny,
    # s.v <= b_c.mu_c + nx*ny * max(s - A_c^T mu_c)^+
    beta = -np.inf
    off = n + 1
    for (A, b), k in zip(fibers, sizes):
        mu = res.x[off:off + k]
        excess = max(0.0, float(np.max(s - A.T @ mu)))
        beta = max(beta, float(b @ mu) + nx * ny * excess)
        off += k
    gap = float(s @ p - beta)
    if gap > CERT_TOL:
        iq = Inequality(s.reshape(dims), beta)
        if verify_vertices is None:
            verify_vertices = _lf_enumerable(dims)
        V = lf_vertices(*dims).flat() if verify_vertices else None
        _verify_outside(iq, t, V)
        return MembershipCertificate("outside", iq, evaluate_inequality(t, iq)["margin"], "LF")

    # feasibility: blocks q_c >= 0, homogeneous NS, zeros on x=0 outcomes != c, sum_c q_c = p
    Eh, _ = ns_equalities(dims, homogeneous=True)
    A_eq = np.zeros((ka * Eh.shape[0] + n, ka * n))
    for cc in range(ka):
        A_eq[cc * Eh.shape[0]:(cc + 1) * Eh.shape[0], cc * n:(cc + 1) * n] = Eh
        A_eq[ka * Eh.shape[0]:, cc * n:(cc + 1) * n] = np.eye(n)
    b_eq = np.concatenate([np.zeros(ka * Eh.shape[0]), p])
    bounds = []
    for cc in range(ka):
        zs = set(_fiber_zeros(dims, cc))
        bounds += [(0, 0) if i in zs else (0, None) for i in range(n)]
    res = _lp(np.zeros(ka * n), A_eq=A_eq, b_eq=b_eq, bounds=bounds)
    if res.status != 0:
        raise LPFailure("neither an LF separating inequality nor an LF decomposition was found")
    q = np.clip(res.x, 0.0, None).reshape((ka,) + tuple(dims))
    err = float(np.max(np.abs(q.sum(axis=0) - t.p)))
    block_err = max(float(np.max(np.abs(Eh @ q[cc].reshape(-1)))) for cc in range(ka))
    if max(err, block_err) >= RECON_TOL:
        raise LPFailure(f"LF decomposition reconstructs the table only to {max(err, block_err):.3g}")
    return MembershipCertificate("inside", LFDecomposition(q), 0.0, "LF")


def _lf_enumerable(dims: Dims) -> bool:
    nx, ny, ka, kb = dims
    return nx * ny * (ka - 1) * (kb - 1) + nx * (ka - 1) + ny * (kb - 1) <= 12


# ---------------------------------------------------------------------------
# exact facet descriptions (independent hull-membership oracle)


@lru_cache(maxsize=None)
def _facets(model: str, dims: Dims) -> dd.HRep:
    vs = {"Bell": bell_vertices, "LF": lf_vertices, "NS": ns_vertices}[model](*dims)
    return dd.v_to_h(dd.VRep(vs.exact))


def facets(model: str, nx: int, ny: int, ka: int, kb: int) -> dd.HRep:
    """Exact H-representation (facets + affine hull) of the given polytope."""
    return _facets(model, (nx, ny, ka, kb))


def facet_inequalities(model: str, nx: int, ny: int, ka: int, kb: int) -> list[Inequality]:
    h = facets(model, nx, ny, ka, kb)
    shape = (nx, ny, ka, kb)
    return [Inequality(np.array([float(v) for v in row]).reshape(shape), float(bv)) for row, bv in zip(h.A, h.b)]


def hull_contains(t, model: str, tol: float = RECON_TOL) -> bool:
    """Membership via the exact facet list of the enumerated vertex set."""
    t = _as_table(t)
    return dd.contains(facets(model, *t.shape), t.p.reshape(-1), tol)


def is_positivity(iq: Inequality, vs: VertexSet) -> bool:
    """True when ``iq`` is equivalent on ``vs``'s affine hull to some ``p(a,b|x,y) >= 0``."""
    V = vs.flat()
    slack = iq.bound - V @ iq.coeffs.reshape(-1)
    for col in V.T:
        nn = float(col @ col)
        if nn == 0:
            continue
        lam = float(slack @ col) / nn
        if lam > 1e-12 and np.max(np.abs(slack - lam * col)) < 1e-9:
            return True
    return False


def sample_ns_points(rng: np.random.Generator, dims: Dims, count: int, concentration: float = 0.3) -> list[CorrelationTable]:
    """Random no-signalling tables: Dirichlet mixtures of NS vertices."""
    V = ns_vertices(*dims).vertices
    out = []
    for _ in range(count):
        w = rng.dirichlet(np.full(len(V), concentration))
        out.append(CorrelationTable(np.tensordot(w, V, axes=1)))
    return out


@dataclass(frozen=True)
class StrictContainment:
    dims: Dims
    lf_count: int
    bell_count: int
    outside: list[MembershipCertificate]  # Bell certificates of LF vertices outside Bell
    checked: list[Dims]


def smallest_strict_scenario(max_cells: int = 64) -> StrictContainment:
    """Search sizes in order of table size until LF has a vertex outside Bell.

    Sizes with equal ``nx*ny*ka*kb`` are tried in lexicographic order.
    """
    sizes = [d for d in itertools.product(range(2, max_cells // 8 + 1), repeat=4) if int(np.prod(d)) <= max_cells]
    sizes.sort(key=lambda d: (int(np.prod(d)), d))
    checked = []
    for dims in sizes:
        checked.append(dims)
        lf, bell = lf_vertices(*dims), bell_vertices(*dims)
        if len(lf) == len(bell):
            continue
        certs = [c for c in (bell_membership(t) for t in lf.tables()) if not c.inside]
        if certs:
            return StrictContainment(dims, len(lf), len(bell), certs, checked)
    raise PolytopeError(f"no strict containment found up to {max_cells} cells")
