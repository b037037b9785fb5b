"""Shared test utilities: random generators and the brute-force MiTL oracle.

The oracle decides satisfaction at a time point by direct recursion over the
semantics, sampling candidate witness times at every critical instant (jump
times and temporal-bound shifts thereof), at window endpoints, and at
midpoints between consecutive candidates.  It never touches the interval
algebra, so agreement with the interval-based monitor is meaningful.

Random trajectories and bounds live on a dyadic grid (multiples of 1/64) so
that every time arithmetic both monitors perform is exact in binary floating
point; disagreements can then never be rounding artifacts.
"""

from __future__ import annotations

import numpy as np

from smoothmc import expressions as ex
from smoothmc.mitl import (Always, And, Atomic, Eventually, Formula, Not, TrueFormula,
                           Until, horizon)
from smoothmc.simulate import Trajectory

DYADIC = 1.0 / 64.0


# ---------------------------------------------------------------------------
# pointwise brute-force monitor

def _state_at(tr: Trajectory, t: float) -> np.ndarray:
    return tr.states[int(np.searchsorted(tr.times, t, side="right"))]


def _delta_at(tr: Trajectory, t: float) -> np.ndarray:
    j = int(np.searchsorted(tr.times, t))
    if j < len(tr.times) and tr.times[j] == t:
        return tr.states[j + 1] - tr.states[j]
    return np.zeros(tr.states.shape[1], dtype=tr.states.dtype)


def _eval_expr(node, tr: Trajectory, t: float, params: dict[str, float]) -> float:
    if isinstance(node, ex.Num):
        return node.value
    if isinstance(node, ex.Ident):
        if node.name in tr.species:
            return float(_state_at(tr, t)[tr.species.index(node.name)])
        return params[node.name]
    if isinstance(node, ex.Neg):
        return -_eval_expr(node.operand, tr, t, params)
    if isinstance(node, ex.Call):
        if node.fn == "delta":
            return float(_delta_at(tr, t)[tr.species.index(node.args[0].name)])
        args = [_eval_expr(a, tr, t, params) for a in node.args]
        if node.fn == "abs":
            return abs(args[0])
        if node.fn == "min":
            return min(args)
        if node.fn == "max":
            return max(args)
        raise AssertionError(f"oracle does not support {node.fn}()")
    a = _eval_expr(node.lhs, tr, t, params)
    b = _eval_expr(node.rhs, tr, t, params)
    return {"+": a + b, "-": a - b, "*": a * b,
            "/": a / b if b != 0 else float("nan"),
            "^": a ** b}[node.op]


def _critical_points(f: Formula, base: list[float], hi: float) -> list[float]:
    """Times at which some subformula's truth signal may change."""
    if isinstance(f, (TrueFormula, Atomic)):
        pts = set(base)
    elif isinstance(f, Not):
        pts = set(_critical_points(f.operand, base, hi))
    elif isinstance(f, And):
        pts = set(_critical_points(f.left, base, hi)) \
            | set(_critical_points(f.right, base, hi))
    else:
        if isinstance(f, Until):
            inner = set(_critical_points(f.left, base, hi)) \
                | set(_critical_points(f.right, base, hi))
        else:
            inner = set(_critical_points(f.operand, base, hi))
        pts = set(inner)
        for c in inner:
            pts.add(c - f.t1)
            pts.add(c - f.t2)
    return sorted(p for p in pts if 0.0 <= p <= hi)


def _candidates(crit: list[float], lo: float, hi: float) -> list[float]:
    inside = [c for c in crit if lo < c < hi]
    pts = [lo] + inside + [hi]
    mids = [0.5 * (a + b) for a, b in zip(pts[:-1], pts[1:])]
    return sorted(set(pts + mids))


def brute_force_sat(f: Formula, tr: Trajectory, t: float,
                    params: dict[str, float] | None = None) -> bool:
    """Truth of f at time t by direct recursion over the semantics.

    Results are memoized per (subformula, time); the same candidate times
    recur across the nested exists/forall loops, so this only removes
    repeated identical work.
    """
    params = params or {}
    base = [0.0] + [float(x) for x in tr.times] + [tr.horizon]
    crit = _critical_points(f, sorted(set(base)), tr.horizon)
    memo: dict[tuple[int, float], bool] = {}

    def sat(node: Formula, at: float) -> bool:
        key = (id(node), at)
        if key in memo:
            return memo[key]
        memo[key] = value = compute(node, at)
        return value

    def compute(node: Formula, at: float) -> bool:
        if isinstance(node, TrueFormula):
            return True
        if isinstance(node, Atomic):
            lhs = _eval_expr(node.lhs, tr, at, params)
            rhs = _eval_expr(node.rhs, tr, at, params)
            if lhs != lhs or rhs != rhs:
                return False
            return {"<": lhs < rhs, "<=": lhs <= rhs, ">": lhs > rhs,
                    ">=": lhs >= rhs, "=": lhs == rhs}[node.op]
        if isinstance(node, Not):
            return not sat(node.operand, at)
        if isinstance(node, And):
            return sat(node.left, at) and sat(node.right, at)
        if isinstance(node, Eventually):
            return any(sat(node.operand, t1)
                       for t1 in _candidates(crit, at + node.t1, at + node.t2))
        if isinstance(node, Always):
            return all(sat(node.operand, t1)
                       for t1 in _candidates(crit, at + node.t1, at + node.t2))
        assert isinstance(node, Until)
        for t1 in _candidates(crit, at + node.t1, at + node.t2):
            if not sat(node.right, t1):
                continue
            if all(sat(node.left, t0) for t0 in _candidates(crit, at, t1)):
                return True
        return False

    return sat(f, t)


# ---------------------------------------------------------------------------
# random generators (dyadic times, integer states)

def random_trajectory(rng: np.random.Generator, species=("N", "M"),
                      max_jumps: int = 20, horizon_units: int = 16 * 64) -> Trajectory:
    horizon = horizon_units * DYADIC
    k = int(rng.integers(0, max_jumps + 1))
    ticks = rng.choice(np.arange(1, horizon_units + 1), size=min(k, horizon_units),
                       replace=False)
    times = np.sort(ticks).astype(float) * DYADIC
    n = len(species)
    states = [rng.integers(0, 5, size=n)]
    for _ in range(len(times)):
        step = states[-1] + rng.integers(-2, 3, size=n)
        states.append(np.maximum(step, 0))
    return Trajectory(tuple(species), times, np.array(states, dtype=np.int64), horizon)


def _random_atom(rng: np.random.Generator, species) -> Atomic:
    name = str(rng.choice(list(species)))
    kind = rng.integers(0, 4)
    if kind == 0:
        lhs = ex.Ident(name)
    elif kind == 1:
        lhs = ex.Call("delta", (ex.Ident(name),))
    elif kind == 2:
        lhs = ex.BinOp("+", ex.Ident(name), ex.Ident(str(rng.choice(list(species)))))
    else:
        lhs = ex.BinOp("-", ex.Ident(name), ex.Num(float(rng.integers(0, 3))))
    op = str(rng.choice(["<", "<=", ">", ">=", "="]))
    rhs = ex.Num(float(rng.integers(-1, 6)))
    return Atomic(lhs, op, rhs)


def _random_bounds(rng: np.random.Generator, budget: float) -> tuple[float, float]:
    max_ticks = max(int(budget / DYADIC), 1)
    t1 = int(rng.integers(0, max_ticks // 2 + 1))
    t2 = int(rng.integers(t1, max_ticks + 1))
    return t1 * DYADIC, t2 * DYADIC


def random_formula(rng: np.random.Generator, species, depth: int, budget: float) -> Formula:
    """Random formula with horizon at most ``budget`` (dyadic bounds)."""
    if depth <= 0 or budget < DYADIC or rng.random() < 0.25:
        if rng.random() < 0.08:
            return TrueFormula()
        return _random_atom(rng, species)
    kind = rng.integers(0, 5)
    if kind == 0:
        return Not(random_formula(rng, species, depth - 1, budget))
    if kind == 1:
        return And(random_formula(rng, species, depth - 1, budget),
                   random_formula(rng, species, depth - 1, budget))
    t1, t2 = _random_bounds(rng, budget / 2)
    rest = budget - t2
    if kind == 2:
        return Eventually(t1, t2, random_formula(rng, species, depth - 1, rest))
    if kind == 3:
        return Always(t1, t2, random_formula(rng, species, depth - 1, rest))
    return Until(t1, t2, random_formula(rng, species, depth - 1, rest),
                 random_formula(rng, species, depth - 1, rest))


def check_trajectory_invariants(tr: Trajectory, model=None) -> None:
    assert np.all(np.diff(tr.times) > 0), "jump times not strictly increasing"
    if len(tr.times):
        assert tr.times[0] > 0 and tr.times[-1] <= tr.horizon
    assert tr.states.shape == (len(tr.times) + 1, len(tr.species))
    assert np.all(tr.states >= 0), "negative count"
    if model is not None:
        allowed = {rx.net_change for rx in model.reactions}
        for before, after in zip(tr.states[:-1], tr.states[1:]):
            assert tuple(int(x) for x in (after - before)) in allowed
