"""Exact double-description conversion between H- and V-representations.

Everything is carried in Python integers (rows and rays are kept primitive),
so results are exact for rational input. Sized for desk-scale polytopes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

MAX_DIM = 24
MAX_RAYS = 200_000


class DDError(ValueError):
    pass


class UnboundedError(DDError):
    pass


class SizeGuardError(DDError):
    pass


def _frac(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, float):
        return Fraction(v).limit_denominator(10**12)
    return Fraction(v)


def _primitive(v: Sequence[int]) -> tuple[int, ...]:
    g = 0
    for a in v:
        g = math.gcd(g, a)
    if g <= 1:
        return tuple(v)
    return tuple(a // g for a in v)


def _int_row(row: Sequence[Fraction]) -> tuple[int, ...]:
    den = 1
    for a in row:
        den = den * a.denominator // math.gcd(den, a.denominator)
    return _primitive([int(a * den) for a in row])


@dataclass(frozen=True)
class HRep:
    """{x : A x <= b, E x = f} with rational entries."""

    A: tuple[tuple[Fraction, ...], ...]
    b: tuple[Fraction, ...]
    E: tuple[tuple[Fraction, ...], ...] = ()
    f: tuple[Fraction, ...] = ()

    @classmethod
    def make(cls, A, b, E=(), f=()) -> "HRep":
        A = tuple(tuple(_frac(v) for v in row) for row in A)
        E = tuple(tuple(_frac(v) for v in row) for row in E)
        return cls(A, tuple(_frac(v) for v in b), E, tuple(_frac(v) for v in f))

    @property
    def dim(self) -> int:
        if self.A:
            return len(self.A[0])
        return len(self.E[0])


@dataclass(frozen=True)
class VRep:
    vertices: tuple[tuple[Fraction, ...], ...]

    @classmethod
    def make(cls, vertices) -> "VRep":
        return cls(tuple(tuple(_frac(v) for v in row) for row in vertices))


# ---------------------------------------------------------------------------
# exact linear algebra


def rref(rows: Sequence[Sequence[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    m = [list(r) for r in rows]
    pivots: list[int] = []
    if not m:
        return m, pivots
    ncol = len(m[0])
    r = 0
    for c in range(ncol):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        pv = m[r][c]
        m[r] = [v / pv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                fac = m[i][c]
                m[i] = [a - fac * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def solve_affine(E, f, n: int):
    """Parametrize {x : E x = f} as x = x0 + N z. Returns (x0, N columns) or None if empty."""
    if not E:
        x0 = [Fraction(0)] * n
        cols = [[Fraction(int(i == j)) for i in range(n)] for j in range(n)]
        return x0, cols
    aug = [list(row) + [fv] for row, fv in zip(E, f)]
    red, piv = rref(aug)
    if n in piv:
        return None
    x0 = [Fraction(0)] * n
    for row, p in zip(red, piv):
        x0[p] = row[n]
    free = [j for j in range(n) if j not in piv]
    cols = []
    for j in free:
        v = [Fraction(0)] * n
        v[j] = Fraction(1)
        for row, p in zip(red, piv):
            v[p] = -row[j]
        cols.append(v)
    return x0, cols


def _rank(rows: Sequence[Sequence[int]]) -> int:
    return len(rref([[Fraction(v) for v in r] for r in rows])[1])


# ---------------------------------------------------------------------------
# double description on a pointed cone {y : M y >= 0}


def _cone_rays(M: list[tuple[int, ...]], guard: int = MAX_RAYS) -> list[tuple[int, ...]]:
    d = len(M[0])
    # initial nonsingular subsystem
    chosen: list[int] = []
    basis_rows: list[list[Fraction]] = []
    for i, row in enumerate(M):
        trial = basis_rows + [[Fraction(v) for v in row]]
        if len(rref(trial)[1]) > len(basis_rows):
            basis_rows = trial
            chosen.append(i)
            if len(chosen) == d:
                break
    if len(chosen) < d:
        raise UnboundedError("cone is not pointed (polytope unbounded or not full-dimensional)")
    # rays of the simplicial cone = columns of the inverse of the chosen rows
    inv = _inverse(basis_rows)
    rays = []
    for j in range(d):
        col = [inv[i][j] for i in range(d)]
        rays.append(_int_row(col))
    zsets = [sum(1 << chosen[k] for k in range(d) if k != j) for j in range(d)]
    chosen_set = set(chosen)
    for i in (i for i in range(len(M)) if i not in chosen_set):
        row = M[i]
        bit = 1 << i
        vals = [sum(a * b for a, b in zip(row, r)) for r in rays]
        pos = [k for k, v in enumerate(vals) if v > 0]
        neg = [k for k, v in enumerate(vals) if v < 0]
        new_rays = [rays[k] for k, v in enumerate(vals) if v >= 0]
        new_z = [zsets[k] | (bit if v == 0 else 0) for k, v in enumerate(vals) if v >= 0]
        for p in pos:
            zp = zsets[p]
            for q in neg:
                common = zp & zsets[q]
                if common.bit_count() < d - 2:
                    continue
                if any(k != p and k != q and (common & zk) == common for k, zk in enumerate(zsets)):
                    continue
                vp, vq = vals[p], -vals[q]
                new_rays.append(_primitive([vq * a + vp * b for a, b in zip(rays[p], rays[q])]))
                new_z.append(common | bit)
        rays, zsets = new_rays, new_z
        if len(rays) > guard:
            raise SizeGuardError(f"double description exceeded {guard} intermediate rays")
    return rays


def _inverse(rows: list[list[Fraction]]) -> list[list[Fraction]]:
    n = len(rows)
    aug = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(rows)]
    red, piv = rref(aug)
    return [row[n:] for row in red]


# ---------------------------------------------------------------------------
# conversions


def h_to_v(h: HRep) -> VRep:
    """Vertices of a bounded polytope given by inequalities and equalities."""
    n = h.dim
    if n > MAX_DIM * 4:
        raise SizeGuardError(f"ambient dimension {n} too large")
    sol = solve_affine(list(h.E), list(h.f), n)
    if sol is None:
        return VRep(())
    x0, cols = sol
    k = len(cols)
    if k > MAX_DIM:
        raise SizeGuardError(f"polytope dimension {k} exceeds guard {MAX_DIM}")
    if k == 0:
        ok = all(sum(a * x for a, x in zip(row, x0)) <= bv for row, bv in zip(h.A, h.b))
        return VRep((tuple(x0),) if ok else ())
    # A (x0 + N z) <= b   ->   (b - A x0) t - (A N) z >= 0, plus t >= 0
    M = []
    for row, bv in zip(h.A, h.b):
        slack = bv - sum(a * x for a, x in zip(row, x0))
        coeffs = [-sum(a * c[j] for j, a in enumerate(row)) for c in cols]
        M.append(_int_row([slack] + coeffs))
    M.append(tuple([1] + [0] * k))
    M = [r for r in M if any(r)]
    if _rank(M) < k + 1:
        raise UnboundedError("polytope is unbounded")
    rays = _cone_rays(M)
    verts = set()
    for r in rays:
        t = r[0]
        if t < 0:
            continue
        if t == 0:
            if any(r[1:]):
                raise UnboundedError("polytope has a recession direction")
            continue
        z = [Fraction(v, t) for v in r[1:]]
        x = tuple(x0[i] + sum(z[j] * cols[j][i] for j in range(k)) for i in range(n))
        verts.add(x)
    return VRep(tuple(sorted(verts)))


def v_to_h(v: VRep) -> HRep:
    """Facets plus affine-hull equalities of the convex hull of the vertices."""
    pts = [list(p) for p in v.vertices]
    if not pts:
        raise DDError("empty vertex set")
    n = len(pts[0])
    base = pts[0]
    diffs = [[a - b for a, b in zip(p, base)] for p in pts[1:]]
    red, piv = rref(diffs) if diffs else ([], [])
    k = len(piv)
    if k > MAX_DIM:
        raise SizeGuardError(f"polytope dimension {k} exceeds guard {MAX_DIM}")
    # affine hull: orthogonal complement of the difference span
    comp = solve_affine(red, [Fraction(0)] * len(red), n)[1] if red else [
        [Fraction(int(i == j)) for i in range(n)] for j in range(n)
    ]
    E = tuple(tuple(c) for c in comp)
    f = tuple(sum(a * b for a, b in zip(c, base)) for c in comp)
    if k == 0:
        return HRep((), (), E, f)
    # pivot coordinates are an injective chart of the affine hull
    M = [_int_row([Fraction(1)] + [p[j] for j in piv]) for p in pts]
    rays = _cone_rays(M)
    A, b = [], []
    for r in rays:
        # r0 + r . x_piv >= 0   ->   -r . x_piv <= r0
        row = [Fraction(0)] * n
        for j, coef in zip(piv, r[1:]):
            row[j] = Fraction(-coef)
        A.append(tuple(row))
        b.append(Fraction(r[0]))
    order = sorted(range(len(A)), key=lambda i: (A[i], b[i]))
    return HRep(tuple(A[i] for i in order), tuple(b[i] for i in order), E, f)


def incidence(h: HRep, v: VRep) -> list[frozenset[int]]:
    """For each inequality, the set of vertex indices where it is tight."""
    out = []
    for row, bv in zip(h.A, h.b):
        out.append(frozenset(i for i, p in enumerate(v.vertices) if sum(a * x for a, x in zip(row, p)) == bv))
    return out


def contains(h: HRep, point: Sequence[float], tol: float = 1e-9) -> bool:
    """Float membership test against an exact H-representation."""
    for row, bv in zip(h.A, h.b):
        if sum(float(a) * x for a, x in zip(row, point) if a) > float(bv) + tol:
            return False
    for row, fv in zip(h.E, h.f):
        if abs(sum(float(a) * x for a, x in zip(row, point) if a) - float(fv)) > tol:
            return False
    return True
