"""Numerical checking of built transition systems.

Reachability on DTMCs (bounded and unbounded), unbounded reachability on
CTMCs via the embedded chain, min/max bounded reachability and bounded
expected cumulative reward on MDPs.  All iteration is by plain value
sweeps with absolute sup-norm convergence; the cumulative-reward
semantics counts the state reward at every time step (one state plus one
action reward per step), so a single absorbing state of reward 1 yields
exactly k after k steps.

The query syntax accepted by `parse_query` is the tiny PCTL fragment the
command line exposes:

    P=? [ F label ]          unbounded reachability (DTMC or CTMC)
    P=? [ F<=N label ]       bounded reachability (DTMC)
    Pmin=? [ F<=N label ]    MDP bounded reachability, minimizing
    Pmax=? [ F<=N label ]    MDP bounded reachability, maximizing
    Rmin=? [ C<=K ]          MDP bounded cumulative reward, minimizing
    Rmax=? [ C<=K ]          MDP bounded cumulative reward, maximizing
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .bigraph import BigraphError
from .system import TransitionSystem


class AnalysisError(BigraphError):
    pass


class ConvergenceError(AnalysisError):
    def __init__(self, msg: str, last_vector):
        super().__init__(msg)
        self.last_vector = last_vector


@dataclass(frozen=True)
class Query:
    kind: str  # boundedReach | reach | mdpReachMin | mdpReachMax | mdpCostMin | mdpCostMax
    label: str | None = None
    horizon: int | None = None
    tolerance: float = 1e-9
    max_iterations: int = 10**6


class ReachValue(NamedTuple):
    value: float
    iterations: int


_QUERY_RES = [
    (re.compile(r"^P=\?\s*\[\s*F\s*<=\s*(\d+)\s+(\S+)\s*\]$"), "boundedReach"),
    (re.compile(r"^P=\?\s*\[\s*F\s+(\S+)\s*\]$"), "reach"),
    (re.compile(r"^Pmin=\?\s*\[\s*F\s*<=\s*(\d+)\s+(\S+)\s*\]$"), "mdpReachMin"),
    (re.compile(r"^Pmax=\?\s*\[\s*F\s*<=\s*(\d+)\s+(\S+)\s*\]$"), "mdpReachMax"),
    (re.compile(r"^Rmin=\?\s*\[\s*C\s*<=\s*(\d+)\s*\]$"), "mdpCostMin"),
    (re.compile(r"^Rmax=\?\s*\[\s*C\s*<=\s*(\d+)\s*\]$"), "mdpCostMax"),
]


def parse_query(text: str) -> Query:
    s = text.strip()
    for rx, kind in _QUERY_RES:
        m = rx.match(s)
        if not m:
            continue
        if kind == "reach":
            return Query(kind, label=m.group(1))
        if kind in ("mdpCostMin", "mdpCostMax"):
            return Query(kind, horizon=int(m.group(1)))
        return Query(kind, label=m.group(2), horizon=int(m.group(1)))
    raise AnalysisError(f"cannot parse query {text!r}")


def run_query(ts: TransitionSystem, query: Query) -> float:
    if query.kind == "boundedReach":
        _need(ts, "dtmc", query)
        return dtmc_bounded_reach(ts, query.label, query.horizon)
    if query.kind == "reach":
        if ts.kind == "pbrs":
            return dtmc_reach(ts, query.label, query.tolerance,
                              query.max_iterations).value
        if ts.kind == "sbrs":
            return ctmc_reach(ts, query.label, query.tolerance,
                              query.max_iterations).value
        raise AnalysisError(f"F queries need a DTMC or CTMC, not {ts.kind}")
    if query.kind in ("mdpReachMin", "mdpReachMax"):
        _need(ts, "mdp", query)
        mode = "min" if query.kind.endswith("Min") else "max"
        return mdp_bounded_reach(ts, query.label, query.horizon, mode)
    _need(ts, "mdp", query)
    mode = "min" if query.kind.endswith("Min") else "max"
    return mdp_expected_cost(ts, query.horizon, mode)


def _need(ts: TransitionSystem, shape: str, query: Query) -> None:
    ok = {"dtmc": ts.kind == "pbrs", "mdp": ts.kind == "abrs"}[shape]
    if not ok:
        raise AnalysisError(
            f"query {query.kind} needs a {shape} transition system, "
            f"got kind {ts.kind}"
        )


# ---------------------------------------------------------------------------
# DTMC / CTMC
# ---------------------------------------------------------------------------


def _goal_states(ts: TransitionSystem, label: str) -> list[int]:
    if not ts.labels:
        raise AnalysisError("transition system has no labels")
    goals = ts.states_with_label(label)
    known = set(ts.label_names) | {l for ls in ts.labels for l in ls}
    if not goals and label not in known:
        raise AnalysisError(
            f"unknown label {label!r}; declared labels: "
            f"{', '.join(sorted(known)) or 'none'}"
        )
    return goals


def _dtmc_arrays(rows):
    srcs, dsts, probs = [], [], []
    for i, dist in enumerate(rows):
        for j, p in dist.items():
            srcs.append(i)
            dsts.append(j)
            probs.append(float(p))
    return (
        np.asarray(srcs, dtype=np.int64),
        np.asarray(dsts, dtype=np.int64),
        np.asarray(probs, dtype=np.float64),
    )


def dtmc_bounded_reach(
    ts: TransitionSystem, goal_label: str, horizon: int, exact: bool = False
):
    """Probability of hitting the goal label within `horizon` steps, by the
    backward recursion x_{k+1}(s) = 1 on goal else sum P(s,.) x_k."""
    if ts.kind != "pbrs":
        raise AnalysisError(f"bounded reachability needs a DTMC, got {ts.kind}")
    if horizon < 0:
        raise AnalysisError("horizon must be >= 0")
    goals = _goal_states(ts, goal_label)
    n = ts.n_states
    if exact:
        x = [Fraction(int(i in goals)) for i in range(n)]
        gset = set(goals)
        for _ in range(horizon):
            x = [
                Fraction(1)
                if i in gset
                else sum((p * x[j] for j, p in ts.rows[i].items()), Fraction(0))
                for i in range(n)
            ]
        return x[0]
    srcs, dsts, probs = _dtmc_arrays(ts.rows)
    x = np.zeros(n)
    x[goals] = 1.0
    for _ in range(horizon):
        nxt = np.zeros(n)
        np.add.at(nxt, srcs, probs * x[dsts])
        nxt[goals] = 1.0
        x = nxt
    return float(x[0])


def dtmc_reach(
    ts: TransitionSystem,
    goal_label: str,
    tol: float = 1e-9,
    max_iterations: int = 10**6,
) -> ReachValue:
    """Least fixed point of the reachability equations by value iteration
    to sup-norm `tol`; also reports the iteration count."""
    if ts.kind != "pbrs":
        raise AnalysisError(f"unbounded reachability needs a DTMC, got {ts.kind}")
    goals = _goal_states(ts, goal_label)
    return _reach_fixpoint(ts.rows, ts.n_states, goals, tol, max_iterations)


def _reach_fixpoint(rows, n, goals, tol, max_iterations) -> ReachValue:
    srcs, dsts, probs = _dtmc_arrays(rows)
    x = np.zeros(n)
    x[goals] = 1.0
    for it in range(1, max_iterations + 1):
        nxt = np.zeros(n)
        np.add.at(nxt, srcs, probs * x[dsts])
        nxt[goals] = 1.0
        delta = float(np.max(np.abs(nxt - x))) if n else 0.0
        x = nxt
        if delta < tol:
            return ReachValue(float(x[0]), it)
    raise ConvergenceError(
        f"no convergence within {max_iterations} iterations", x
    )


def embedded_chain(ts: TransitionSystem) -> list[dict]:
    """Jump-chain rows of a CTMC: each row divided by its exit rate;
    rate-0 states become absorbing self-loops."""
    if ts.kind != "sbrs":
        raise AnalysisError(f"embedded chain needs a CTMC, got {ts.kind}")
    rows = []
    for i, rates in enumerate(ts.rows):
        total = sum(rates.values(), Fraction(0))
        if total == 0:
            rows.append({i: Fraction(1)})
        else:
            rows.append({j: r / total for j, r in rates.items()})
    return rows


def ctmc_reach(
    ts: TransitionSystem,
    goal_label: str,
    tol: float = 1e-9,
    max_iterations: int = 10**6,
) -> ReachValue:
    """Unbounded reachability on the embedded (jump) chain; invariant under
    uniform scaling of all rates."""
    goals = _goal_states(ts, goal_label)
    from .system import Distribution

    rows = [Distribution(r) for r in embedded_chain(ts)]
    return _reach_fixpoint(rows, ts.n_states, goals, tol, max_iterations)


# ---------------------------------------------------------------------------
# MDP
# ---------------------------------------------------------------------------


def mdp_bounded_reach(
    ts: TransitionSystem, goal_label: str, horizon: int, mode: str
) -> float:
    """Optimal probability of hitting the goal within `horizon` steps;
    states with an empty action row are absorbing."""
    if ts.kind != "abrs":
        raise AnalysisError(f"MDP reachability needs an MDP, got {ts.kind}")
    if mode not in ("min", "max"):
        raise AnalysisError(f"mode must be 'min' or 'max', not {mode!r}")
    if horizon < 0:
        raise AnalysisError("horizon must be >= 0")
    goals = set(_goal_states(ts, goal_label))
    opt = min if mode == "min" else max
    n = ts.n_states
    rows = [
        [[(j, float(p)) for j, p in dist.items()] for _, dist in row]
        for row in ts.rows
    ]
    x = [1.0 if i in goals else 0.0 for i in range(n)]
    for _ in range(horizon):
        nxt = [0.0] * n
        for i in range(n):
            if i in goals:
                nxt[i] = 1.0
            elif not rows[i]:
                nxt[i] = x[i]
            else:
                nxt[i] = opt(
                    sum(p * x[j] for j, p in choice) for choice in rows[i]
                )
        x = nxt
    return x[0]


def mdp_expected_cost(ts: TransitionSystem, horizon: int, mode: str) -> float:
    """Optimal expected cumulative reward over `horizon` steps:
    v_{j+1}(s) = r(s) + opt_a [ r(s,a) + sum mu_a(s') v_j(s') ], with
    absorbing states accumulating their state reward each step."""
    if ts.kind != "abrs":
        raise AnalysisError(f"expected cost needs an MDP, got {ts.kind}")
    if mode not in ("min", "max"):
        raise AnalysisError(f"mode must be 'min' or 'max', not {mode!r}")
    if horizon < 0:
        raise AnalysisError("horizon must be >= 0")
    opt = min if mode == "min" else max
    n = ts.n_states
    srew = [float(r) for r in ts.state_reward] if ts.state_reward else [0.0] * n
    rows = []
    for i, row in enumerate(ts.rows):
        arew = ts.action_reward[i] if ts.action_reward else {}
        rows.append(
            [
                (float(arew.get(name, 0)), [(j, float(p)) for j, p in dist.items()])
                for name, dist in row
            ]
        )
    v = [0.0] * n
    for _ in range(horizon):
        nxt = [0.0] * n
        for i in range(n):
            if not rows[i]:
                nxt[i] = srew[i] + v[i]
            else:
                nxt[i] = srew[i] + opt(
                    ar + sum(p * v[j] for j, p in choice)
                    for ar, choice in rows[i]
                )
        v = nxt
    return v[0]
