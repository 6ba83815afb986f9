"""Measurement-setting search for maximal inequality violation.

Parameters are Bloch angles ``(theta, phi)`` per qubit projective measurement.
Alice's setting 0 is always the pointer question; her remaining settings are
reverse-and-measure bases. Coordinate descent with a golden-section line
search maximizes the inequality value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import polytope
from .polytope import Inequality
from .scenario import (
    BubbleScenario,
    CorrelationTable,
    PointerAsk,
    make_scenario,
    qubit_basis,
    run_correlations,
)

GOLDEN = (math.sqrt(5) - 1) / 2
SCAN_POINTS = 12


@dataclass(frozen=True)
class ViolationTemplate:
    nx: int
    ny: int
    optimize_state: bool = False
    free_friend: bool = False

    @property
    def n_params(self) -> int:
        n = 2 * (self.nx - 1) + 2 * self.ny
        return n + 2 * self.optimize_state + 2 * self.free_friend


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 20
    seed: int = 0
    max_iters: int = 200
    tol: float = 1e-10
    optimize_state: bool = False

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizerConfig":
        unknown = set(d) - {"restarts", "seed", "max_iters", "tol", "optimize_state"}
        if unknown:
            raise ValueError(f"unknown optimizer config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class MeasurementParams:
    alice: tuple[tuple[float, float], ...]  # settings 1..nx-1
    bob: tuple[tuple[float, float], ...]
    state: tuple[float, float] | None = None
    friend: tuple[float, float] | None = None

    def __post_init__(self):
        for pair in self.alice + self.bob + tuple(p for p in (self.state, self.friend) if p is not None):
            if len(pair) != 2 or not all(math.isfinite(v) for v in pair):
                raise ValueError(f"invalid angle pair {pair!r}")

    def to_vector(self) -> np.ndarray:
        parts = [v for pair in self.alice + self.bob for v in pair]
        if self.state is not None:
            parts += list(self.state)
        if self.friend is not None:
            parts += list(self.friend)
        return np.array(parts, dtype=float)

    @classmethod
    def from_vector(cls, v, template: ViolationTemplate) -> "MeasurementParams":
        v = [float(t) for t in v]
        if len(v) != template.n_params:
            raise ValueError(f"expected {template.n_params} parameters, got {len(v)}")
        pairs = [(v[i], v[i + 1]) for i in range(0, len(v), 2)]
        na = template.nx - 1
        alice, bob = tuple(pairs[:na]), tuple(pairs[na:na + template.ny])
        rest = pairs[na + template.ny:]
        state = rest.pop(0) if template.optimize_state else None
        friend = rest.pop(0) if template.free_friend else None
        return cls(alice, bob, state, friend)

    def to_dict(self) -> dict:
        return {
            "alice": [list(p) for p in self.alice],
            "bob": [list(p) for p in self.bob],
            "state": None if self.state is None else list(self.state),
            "friend": None if self.friend is None else list(self.friend),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MeasurementParams":
        pair = lambda p: None if p is None else (float(p[0]), float(p[1]))  # noqa: E731
        return cls(tuple(pair(p) for p in d["alice"]), tuple(pair(p) for p in d["bob"]),
                   pair(d.get("state")), pair(d.get("friend")))


def _state_amps(params: MeasurementParams) -> np.ndarray:
    if params.state is None:
        return np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
    th, ph = params.state
    return np.array([math.cos(th / 2), 0, 0, np.exp(1j * ph) * math.sin(th / 2)], dtype=complex)


def _friend_rows(params: MeasurementParams) -> np.ndarray:
    return np.eye(2, dtype=complex) if params.friend is None else qubit_basis(*params.friend)


def instantiate(params: MeasurementParams, template: ViolationTemplate) -> BubbleScenario:
    if len(params.alice) != template.nx - 1 or len(params.bob) != template.ny:
        raise ValueError("parameters do not match the template's setting counts")
    if (params.state is not None) != template.optimize_state or (params.friend is not None) != template.free_friend:
        raise ValueError("parameters do not match the template's free-state / free-friend flags")
    alice = [PointerAsk()] + [("reverse", qubit_basis(*ang)) for ang in params.alice]
    bob = [qubit_basis(*ang) for ang in params.bob]
    return make_scenario(_state_amps(params), _friend_rows(params), alice, bob)


def objective(params: MeasurementParams, iq: Inequality, template: ViolationTemplate) -> float:
    """Inequality value on the unitary-model EWFS table of the instantiated scenario."""
    table = run_correlations(instantiate(params, template))
    return polytope.evaluate_inequality(table, iq)["value"]


def _fast_table(params: MeasurementParams) -> np.ndarray:
    # Unitary model: asking the friend reproduces a friend-basis measurement of S_A,
    # and reversal restores the initial state, so the table is a plain Bell table.
    psi = _state_amps(params).reshape(2, 2)
    alice = np.stack([_friend_rows(params)] + [qubit_basis(*a) for a in params.alice])  # [x, a, i]
    bob = np.stack([qubit_basis(*b) for b in params.bob])  # [y, b, j]
    amp = np.einsum("xai,ybj,ij->xyab", alice.conj(), bob.conj(), psi)
    return np.abs(amp) ** 2


@dataclass(frozen=True)
class ViolationResult:
    params: MeasurementParams
    value: float
    bound: float
    margin: float
    trace: list = field(default_factory=list, repr=False)
    table: CorrelationTable | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "value": self.value,
            "bound": self.bound,
            "margin": self.margin,
            "trace": self.trace,
        }


def _golden_max(f, lo: float, hi: float, tol: float = 1e-11, max_steps: int = 80):
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_steps):
        if hi - lo < tol:
            break
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = f(x2)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def _coordinate_ascent(f, x0: np.ndarray, max_iters: int, tol: float):
    x = x0.copy()
    best = f(x)
    sweeps = 0
    step = 2 * math.pi / SCAN_POINTS
    for sweeps in range(1, max_iters + 1):
        start = best
        for i in range(len(x)):
            def line(t, i=i):
                y = x.copy()
                y[i] = t
                return f(y)

            grid = x[i] + step * np.arange(SCAN_POINTS)
            vals = [best] + [line(t) for t in grid[1:]]
            k = int(np.argmax(vals))
            t, v = _golden_max(line, grid[k] - step, grid[k] + step)
            if v > best:
                x[i], best = t, v
        if best - start < tol:
            break
    return x, best, sweeps


def optimize(iq: Inequality, template: ViolationTemplate, config: OptimizerConfig = OptimizerConfig()) -> ViolationResult:
    """Best violation over ``config.restarts`` seeded restarts (deterministic given the seed)."""
    if iq.dims[:2] != (template.nx, template.ny) or iq.dims[2:] != (2, 2):
        raise ValueError(f"inequality dims {iq.dims} do not match template ({template.nx}, {template.ny}, 2, 2)")
    coeffs = iq.coeffs

    def f(v):
        return float(np.sum(coeffs * _fast_table(MeasurementParams.from_vector(v, template))))

    rng = np.random.default_rng(config.seed)
    best_x, best_v, trace = None, -np.inf, []
    for r in range(config.restarts):
        x0 = rng.uniform(0, 2 * math.pi, template.n_params)
        x, v, sweeps = _coordinate_ascent(f, x0, config.max_iters, config.tol)
        trace.append({"restart": r, "value": v, "sweeps": sweeps})
        if v > best_v:
            best_x, best_v = x, v
    params = MeasurementParams.from_vector(np.mod(best_x, 2 * math.pi), template)
    table = run_correlations(instantiate(params, template))
    value = polytope.evaluate_inequality(table, iq)["value"]
    if abs(value - best_v) > 1e-9:
        raise RuntimeError(f"fast evaluator disagrees with the EWFS engine ({best_v!r} vs {value!r})")
    return ViolationResult(params, value, iq.bound, value - iq.bound, trace, table)


def ns_ceiling(iq: Inequality) -> float:
    """Largest value of the inequality over the no-signalling polytope."""
    return polytope.max_over_vertices(iq, polytope.ns_vertices(*iq.dims))


def chsh_optimal_params() -> MeasurementParams:
    """Analytic CHSH-optimal angles for the Bell state with a computational-basis friend."""
    return MeasurementParams(alice=((math.pi / 2, 0.0),), bob=((math.pi / 4, 0.0), (-math.pi / 4, 0.0)))


def nontrivial_lf_facets(nx: int, ny: int) -> list[Inequality]:
    """LF facets at (nx, ny, 2, 2) that are not positivity constraints."""
    vs = polytope.lf_vertices(nx, ny, 2, 2)
    return [iq for iq in polytope.facet_inequalities("LF", nx, ny, 2, 2) if not polytope.is_positivity(iq, vs)]


def search_lf_violation(nx: int = 3, ny: int = 2, config: OptimizerConfig = OptimizerConfig(),
                        screen_restarts: int = 3) -> tuple[Inequality, ViolationResult]:
    """Screen the nontrivial LF facets, then fully optimize the most violated one."""
    template = ViolationTemplate(nx, ny, optimize_state=config.optimize_state)
    screen = OptimizerConfig(restarts=screen_restarts, seed=config.seed, max_iters=50, tol=1e-8,
                             optimize_state=config.optimize_state)
    candidates = []
    for k, iq in enumerate(nontrivial_lf_facets(nx, ny)):
        res = optimize(iq, template, screen)
        candidates.append((res.margin, -k, iq))
    candidates.sort(key=lambda c: (c[0], c[1]), reverse=True)
    iq = candidates[0][2]
    return iq, optimize(iq, template, config)
