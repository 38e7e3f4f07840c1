"""Transition systems over ground bigraph states.

Builds the reachable state space of a declared system by breadth-first
closure from the initial state, deduplicating states by canonical key:

* kind ``brs``   -- plain successor sets,
* kind ``pbrs``  -- a DTMC row per state (weight-normalized distribution),
* kind ``sbrs``  -- a CTMC row per state (rate * occurrence count),
* kind ``abrs``  -- an MDP row per state (one distribution per applicable
  action, normalized within the action).

Probabilities are exact rationals end to end; they become floats only at
export time.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction

from .bigraph import Bigraph, BigraphError, require_solid
from .canon import canonical_key
from .matching import apply_rule_all, has_occurrence

KINDS = ("brs", "pbrs", "sbrs", "abrs")


class SystemError_(BigraphError):
    pass


class StateCapError(SystemError_):
    """Raised when the closure hits the state cap; carries the truncated
    system (rows of unexpanded states are filled with terminal rows and
    ``complete`` is False)."""

    def __init__(self, msg: str, partial: "TransitionSystem"):
        super().__init__(msg)
        self.partial = partial


@dataclass(frozen=True)
class WeightedRule:
    """A reaction rule with a nonnegative weight (pbrs/abrs) or rate (sbrs).

    The redex must be solid and both sides must share one interface; rules
    with weight 0 are never applied.
    """

    name: str
    redex: Bigraph
    reactum: Bigraph
    weight: Fraction

    def __post_init__(self):
        require_solid(self.redex, f"redex of rule {self.name}")
        if (
            self.redex.inner.width != self.reactum.inner.width
            or self.redex.inner.names != self.reactum.inner.names
            or self.redex.outer.width != self.reactum.outer.width
            or self.redex.outer.names != self.reactum.outer.names
        ):
            raise SystemError_(
                f"rule {self.name}: redex {self.redex.inner}->{self.redex.outer} "
                f"and reactum {self.reactum.inner}->{self.reactum.outer} "
                "must have the same interface"
            )
        if self.weight < 0:
            raise SystemError_(f"rule {self.name}: negative weight")


@dataclass(frozen=True)
class ActionDecl:
    """A named non-empty set of weighted rules; choosing the action enables
    exactly those rewrites.  The same rule may appear in several actions."""

    name: str
    rules: tuple
    reward: Fraction = Fraction(0)

    def __post_init__(self):
        if not self.rules:
            raise SystemError_(f"action {self.name}: empty rule set")
        if self.reward < 0:
            raise SystemError_(f"action {self.name}: negative reward")


@dataclass(frozen=True)
class PredicateDecl:
    """A solid pattern labelling every state it occurs in, with an optional
    state reward contribution."""

    name: str
    pattern: Bigraph
    reward: Fraction = Fraction(0)

    def __post_init__(self):
        require_solid(self.pattern, f"predicate {self.name}")
        if self.reward < 0:
            raise SystemError_(f"predicate {self.name}: negative reward")


@dataclass(frozen=True)
class SystemSpec:
    """A fully elaborated system: the engine-facing contract of a model."""

    kind: str
    signature: dict
    initial: Bigraph
    rules: tuple
    actions: tuple = ()
    predicates: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SystemError_(f"unknown system kind {self.kind!r}")
        if not self.initial.is_ground():
            raise SystemError_("initial bigraph must be ground")
        if self.kind == "abrs":
            if not self.actions:
                raise SystemError_("an abrs needs at least one action")
            in_actions = {r.name for a in self.actions for r in a.rules}
            loose = [r.name for r in self.rules if r.name not in in_actions]
            if loose:
                raise SystemError_(
                    f"abrs rules outside every action: {', '.join(loose)}"
                )
        elif self.actions:
            raise SystemError_(f"kind {self.kind} does not take actions")


class Distribution:
    """Finite probability distribution over state indices; entries are
    strictly positive and sum to one (exactly for rationals, within 1e-12
    for floats)."""

    __slots__ = ("entries",)

    def __init__(self, entries: dict):
        self.entries = dict(entries)
        total = sum(self.entries.values())
        if any(p <= 0 for p in self.entries.values()):
            raise SystemError_("distribution entries must be positive")
        if isinstance(total, Fraction):
            ok = total == 1
        else:
            ok = abs(total - 1) <= 1e-12
        if not self.entries or not ok:
            raise SystemError_(f"distribution mass is {total}, not 1")

    def __getitem__(self, state: int):
        return self.entries.get(state, Fraction(0))

    def __eq__(self, other):
        return isinstance(other, Distribution) and self.entries == other.entries

    def __repr__(self):
        inner = ", ".join(f"{s}: {p}" for s, p in sorted(self.entries.items()))
        return f"[{inner}]"

    def items(self):
        return sorted(self.entries.items())


@dataclass
class TransitionSystem:
    """Canonical states, indexed rows, labels and rewards of a built system.

    ``rows`` is per-state and kind-shaped: a :class:`Distribution` for a
    DTMC, a dict state->rate for a CTMC, a list of (action name,
    Distribution) pairs for an MDP, and a tuple of successor indices for a
    plain brs.  State 0 is the initial state's class.
    """

    kind: str
    states: list  # (canonical key, Bigraph | None)
    rows: list
    labels: list = field(default_factory=list)
    label_names: tuple = ()  # the declared label universe
    state_reward: list = field(default_factory=list)
    action_reward: list = field(default_factory=list)
    complete: bool = True

    @property
    def n_states(self) -> int:
        return len(self.states)

    def key_index(self) -> dict:
        return {key: i for i, (key, _) in enumerate(self.states)}

    def states_with_label(self, label: str) -> list:
        return [i for i, ls in enumerate(self.labels) if label in ls]


# ---------------------------------------------------------------------------
# per-state step functions
# ---------------------------------------------------------------------------


def _successor_masses(g: Bigraph, rules) -> dict:
    """key -> [bigraph, mass] with mass = sum of weight * occurrence count."""
    masses: dict = {}
    for rule in rules:
        if rule.weight == 0:
            continue
        for out in apply_rule_all(g, rule):
            if out.key in masses:
                masses[out.key][1] += rule.weight * out.count
            else:
                masses[out.key] = [out.result, rule.weight * out.count]
    return masses


def total_weight(g: Bigraph, g2: Bigraph, rules) -> Fraction:
    """Sum over rules of weight times occurrence count from g to g2."""
    key = canonical_key(g2)
    total = Fraction(0)
    for rule in rules:
        for out in apply_rule_all(g, rule):
            if out.key == key:
                total += rule.weight * out.count
    return total


def total_weight_from(g: Bigraph, rules) -> Fraction:
    return sum((m for _, m in _successor_masses(g, rules).values()), Fraction(0))


def next_distribution(g: Bigraph, rules) -> dict:
    """The reaction probability distribution from g as key -> (state, prob);
    the delta on g itself when nothing (with positive weight) applies."""
    masses = _successor_masses(g, rules)
    total = sum((m for _, m in masses.values()), Fraction(0))
    if total == 0:
        return {canonical_key(g): (g, Fraction(1))}
    return {k: (b, m / total) for k, (b, m) in masses.items()}


def next_rates(g: Bigraph, rules) -> dict:
    """Aggregate exit rates from g as key -> (state, rate); zero-rate
    targets are omitted and the map may be empty (CTMC terminal state)."""
    return {
        k: (b, m) for k, (b, m) in _successor_masses(g, rules).items() if m > 0
    }


def action_step(g: Bigraph, actions) -> list:
    """One (action, distribution) entry per applicable action, normalized
    within the action; empty when no action applies."""
    out = []
    for action in sorted(actions, key=lambda a: a.name):
        applies = any(
            apply_rule_all(g, rule) for rule in action.rules
        )
        if applies:
            out.append((action, next_distribution(g, action.rules)))
    return out


# ---------------------------------------------------------------------------
# closure
# ---------------------------------------------------------------------------


def build_transition_system(
    spec: SystemSpec,
    max_states: int = 1_000_000,
    expansion_cache: dict | None = None,
) -> TransitionSystem:
    """Breadth-first fixed-point closure from the initial state.

    States are deduplicated by canonical key and numbered in discovery
    order with each BFS level sorted by key, so indexing is deterministic.
    ``expansion_cache`` (key -> per-rule outcome lists) may be shared
    between builds of models that differ only in weights.
    """
    if max_states <= 0:
        raise SystemError_("state cap must be positive")
    from .bigraph import lean

    init = lean(spec.initial)
    key0 = canonical_key(init)
    states = [(key0, init)]
    index = {key0: 0}
    raw_rows: list = [None]
    truncated = False

    if spec.kind == "abrs":
        step_rules = [
            (a.name, a.rules) for a in sorted(spec.actions, key=lambda a: a.name)
        ]
    else:
        step_rules = [(None, spec.rules)]

    def expand(i: int) -> list:
        """Returns new (key, bigraph) pairs discovered from state i."""
        nonlocal truncated
        g = states[i][1]
        per_rule = _expand_state(states[i][0], g, spec, expansion_cache)
        row, new = _assemble_row(i, per_rule, spec, states, index)
        raw_rows[i] = row
        return new

    frontier = [0]
    while frontier:
        discovered: list = []
        for i in frontier:
            for key, b in expand(i):
                if key not in index:
                    discovered.append((key, b))
                    index[key] = -1  # reserve; numbered below
        discovered = [
            (k, b) for k, b in sorted(discovered, key=lambda kb: kb[0])
        ]
        frontier = []
        for key, b in discovered:
            if len(states) >= max_states:
                truncated = True
                break
            index[key] = len(states)
            states.append((key, b))
            raw_rows.append(None)
            frontier.append(index[key])
        for key, b in discovered:
            if index.get(key) == -1:
                del index[key]
        if truncated:
            break

    ts = _finalize(spec, states, raw_rows, index, complete=not truncated)
    ts = label_and_reward(ts, spec.predicates, spec.actions)
    if truncated:
        raise StateCapError(
            f"state cap of {max_states} states exceeded; result truncated",
            ts,
        )
    return ts


def _expand_state(key: bytes, g: Bigraph, spec: SystemSpec, cache) -> dict:
    """rule name -> list of (succ key, succ bigraph, count)."""
    if cache is not None and key in cache:
        return cache[key]
    per_rule = {}
    for rule in spec.rules:
        outs = apply_rule_all(g, rule)
        if outs:
            per_rule[rule.name] = [(o.key, o.result, o.count) for o in outs]
    if cache is not None:
        cache[key] = per_rule
    return per_rule


def _assemble_row(i, per_rule, spec, states, index):
    """Builds the raw row for state i and lists newly seen states."""
    new = {}

    def masses(rules) -> dict:
        out: dict = {}
        for rule in rules:
            if rule.weight == 0:
                continue
            for key, b, count in per_rule.get(rule.name, ()):
                if key not in index and key not in new:
                    new[key] = b
                out[key] = out.get(key, Fraction(0)) + rule.weight * count
        return {k: m for k, m in out.items() if m > 0}

    if spec.kind == "brs":
        succs = sorted(
            {key for outs in per_rule.values() for key, _, _ in outs}
        )
        for outs in per_rule.values():
            for key, b, _ in outs:
                if key not in index and key not in new:
                    new[key] = b
        row = ("brs", succs)
    elif spec.kind == "pbrs":
        m = masses(spec.rules)
        total = sum(m.values(), Fraction(0))
        if total == 0:
            row = ("delta", states[i][0])
        else:
            row = ("dist", {k: v / total for k, v in m.items()})
    elif spec.kind == "sbrs":
        row = ("rates", masses(spec.rules))
    else:  # abrs
        entries = []
        for action in sorted(spec.actions, key=lambda a: a.name):
            applicable = any(
                per_rule.get(rule.name) for rule in action.rules
            )
            if not applicable:
                continue
            m = masses(action.rules)
            total = sum(m.values(), Fraction(0))
            if total == 0:
                entries.append((action.name, ("delta", states[i][0])))
            else:
                entries.append(
                    (action.name, ("dist", {k: v / total for k, v in m.items()}))
                )
        row = ("mdp", entries)
    return row, sorted(new.items())


def _finalize(spec, states, raw_rows, index, complete) -> TransitionSystem:
    def dist(tagged) -> Distribution:
        tag, payload = tagged
        if tag == "delta":
            return Distribution({index[payload]: Fraction(1)})
        return Distribution({index[k]: p for k, p in payload.items()})

    def reaches_dropped(raw) -> bool:
        tag, payload = raw
        if tag == "delta":
            return index.get(payload, -1) < 0
        if tag == "brs":
            return any(index.get(k, -1) < 0 for k in payload)
        if tag == "mdp":
            return any(reaches_dropped(t) for _, t in payload)
        return any(index.get(k, -1) < 0 for k in payload)

    fillers = {
        "brs": ("brs", []),
        "sbrs": ("rates", {}),
        "abrs": ("mdp", []),
    }
    rows = []
    for i, raw in enumerate(raw_rows):
        if raw is None or (not complete and reaches_dropped(raw)):
            # unexpanded, or expanded into states beyond the cap: replaced
            # by a terminal row so the truncated system stays well-formed
            raw = fillers.get(spec.kind, ("delta", states[i][0]))
        tag, payload = raw
        if tag == "brs":
            rows.append(tuple(index[k] if isinstance(k, bytes) else k
                              for k in payload))
        elif tag == "rates":
            rows.append({index[k]: r for k, r in sorted(payload.items())})
        elif tag == "mdp":
            rows.append([(name, dist(t)) for name, t in payload])
        else:
            rows.append(dist(raw))
    return TransitionSystem(
        kind=spec.kind,
        states=states,
        rows=rows,
        complete=complete,
    )


def label_and_reward(
    ts: TransitionSystem, predicates, actions=()
) -> TransitionSystem:
    """Label every state with the predicates occurring in it; state reward
    is the sum of matching predicate rewards, action rewards come from the
    declarations of the applicable actions."""
    labels = []
    state_reward = []
    for key, b in ts.states:
        if b is None:
            labels.append(frozenset())
            state_reward.append(Fraction(0))
            continue
        sat = [p for p in predicates if has_occurrence(p.pattern, b)]
        labels.append(frozenset(p.name for p in sat))
        state_reward.append(sum((p.reward for p in sat), Fraction(0)))
    reward_of = {a.name: a.reward for a in actions}
    action_reward = []
    if ts.kind == "abrs":
        for row in ts.rows:
            action_reward.append(
                {name: reward_of.get(name, Fraction(0)) for name, _ in row}
            )
    else:
        action_reward = [{} for _ in ts.rows]
    return replace(
        ts,
        labels=labels,
        label_names=tuple(p.name for p in predicates),
        state_reward=state_reward,
        action_reward=action_reward,
    )
