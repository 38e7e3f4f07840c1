"""Occurrence enumeration and rewriting.

An occurrence of a solid pattern L in a ground state g is an embedding
that induces a decomposition ``g = C . (L x id_X) . d`` with context C and
ground parameter d.  Embeddings that differ only by an automorphism of L
denote the same occurrence and are reported once.

The searcher is plain backtracking over pattern nodes in a
most-constrained-first order (rarest control in the target first, then
nodes adjacent to already-placed ones), with place- and link-feasibility
pruning at every assignment.  Matching restricted to existence checks
(`has_occurrence`) stops at the first embedding and skips deduplication.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

from .bigraph import (
    Bigraph,
    BigraphError,
    Edge,
    Interface,
    Link,
    NODE,
    NotGroundError,
    REGION,
    compose,
    identity,
    lean,
    require_solid,
    tensor,
)
from .canon import canonical_key


class MatchError(BigraphError):
    pass


@dataclass
class Match:
    """One occurrence: injective node map, induced link map, and the place
    each pattern region is grafted into."""

    redex: Bigraph
    target: Bigraph
    node_map: dict
    link_map: dict
    region_place: tuple

    def decompose(self):
        """Materialize the witness (context, parameter, identity names) with
        ``target = context . (redex x id_names) . parameter``."""
        return _decompose(self)


class _Embedder:
    """Backtracking search for embeddings of `pattern` into `target`.

    mode "occur": occurrence semantics (sites absorb spare children, outer
    names may map to any target link, distinct names to distinct links).
    mode "auto": automorphisms of `pattern` (target is the pattern itself;
    everything must correspond bijectively, names to names, regions to
    regions).
    """

    def __init__(self, pattern: Bigraph, target: Bigraph, mode: str = "occur"):
        self.r = pattern
        self.g = target
        self.auto = mode == "auto"
        self.by_ctrl: dict = {}
        for w in sorted(target.nodes):
            self.by_ctrl.setdefault(target.nodes[w], []).append(w)
        self.has_site = {
            p[1] for p in pattern.site_parent.values() if p[0] == NODE
        }
        self.g_has_site = {
            p[1] for p in target.site_parent.values() if p[0] == NODE
        }
        self.order = self._order()
        self.matches: list[Match] = []

    def _order(self) -> list[int]:
        r = self.r
        neigh: dict = {v: set() for v in r.nodes}
        for v, p in r.parent.items():
            if p[0] == NODE:
                neigh[v].add(p[1])
                neigh[p[1]].add(v)
        for link in r.links.values():
            on_link = sorted({v for v, _ in link.ports})
            for v in on_link:
                neigh[v].update(on_link)
        n_cands = {
            v: len(self.by_ctrl.get(r.nodes[v], ())) for v in r.nodes
        }
        order: list[int] = []
        remaining = set(r.nodes)
        while remaining:
            pool = (
                {v for v in remaining if any(u in order for u in neigh[v])}
                if order
                else remaining
            ) or remaining
            v = min(pool, key=lambda v: (n_cands[v], v))
            order.append(v)
            remaining.remove(v)
        return order

    def run(self, first_only: bool = False):
        self.first_only = first_only
        self._dfs(0, {}, set(), {}, set(), set(), {})
        return self.matches

    # -- search ------------------------------------------------------------

    def _candidates(self, v, node_map):
        r, g = self.r, self.g
        rp = r.parent[v]
        if rp[0] == NODE and rp[1] in node_map:
            return [
                w
                for w in g.children((NODE, node_map[rp[1]]))
                if g.nodes[w] == r.nodes[v]
            ]
        for i in range(r.arity(v)):
            key = r.port_link(v, i)
            for rv, ri in r.links[key].ports:
                if rv in node_map:
                    tkey = g.port_link(node_map[rv], ri)
                    return [
                        w
                        for w, j in sorted(g.links[tkey].ports)
                        if j == i and g.nodes[w] == r.nodes[v]
                    ]
        return self.by_ctrl.get(r.nodes[v], [])

    def _dfs(self, idx, node_map, used, link_map, edge_claimed, name_claimed,
             region_place):
        if self.first_only and self.matches:
            return
        r, g = self.r, self.g
        if idx == len(self.order):
            if self._complete_ok(node_map, link_map, region_place, used):
                self.matches.append(
                    Match(
                        r,
                        g,
                        dict(node_map),
                        dict(link_map),
                        tuple(
                            region_place[i] for i in range(r.outer.width)
                        ),
                    )
                )
            return
        v = self.order[idx]
        for w in self._candidates(v, node_map):
            if w in used:
                continue
            if not self._place_ok(v, w, node_map):
                continue
            new_links = self._links_ok(v, w, link_map, edge_claimed, name_claimed)
            if new_links is None:
                continue
            added_lm, added_edges, added_names = new_links
            rp = r.parent[v]
            region_added = None
            if rp[0] == REGION:
                gp = g.parent[w]
                bound = region_place.get(rp[1])
                if bound is None:
                    if self.auto and gp[0] != REGION:
                        ok = False
                    else:
                        region_place[rp[1]] = gp
                        region_added = rp[1]
                        ok = True
                else:
                    ok = bound == gp
                if not ok:
                    self._undo(link_map, edge_claimed, name_claimed,
                               added_lm, added_edges, added_names)
                    continue
            node_map[v] = w
            used.add(w)
            self._dfs(idx + 1, node_map, used, link_map, edge_claimed,
                      name_claimed, region_place)
            del node_map[v]
            used.remove(w)
            if region_added is not None:
                del region_place[region_added]
            self._undo(link_map, edge_claimed, name_claimed,
                       added_lm, added_edges, added_names)
            if self.first_only and self.matches:
                return

    @staticmethod
    def _undo(link_map, edge_claimed, name_claimed, lm, edges, names):
        for k in lm:
            del link_map[k]
        edge_claimed.difference_update(edges)
        name_claimed.difference_update(names)

    def _place_ok(self, v, w, node_map) -> bool:
        r, g = self.r, self.g
        rp = r.parent[v]
        gp = g.parent[w]
        if rp[0] == NODE:
            u = rp[1]
            if u in node_map:
                if gp != (NODE, node_map[u]):
                    return False
            else:
                if gp[0] != NODE or g.nodes[gp[1]] != r.nodes[u]:
                    return False
        for c in r.children((NODE, v)):
            if c in node_map and g.parent[node_map[c]] != (NODE, w):
                return False
        rk = len(r.children((NODE, v)))
        gk = len(g.children((NODE, w)))
        if v in self.has_site:
            if self.auto:
                if w not in self.g_has_site or gk != rk:
                    return False
            elif gk < rk:
                return False
        else:
            if gk != rk:
                return False
            if self.auto and w in self.g_has_site:
                return False
        return True

    def _links_ok(self, v, w, link_map, edge_claimed, name_claimed):
        r, g = self.r, self.g
        added_lm, added_edges, added_names = [], [], []
        for i in range(r.arity(v)):
            rk = r.port_link(v, i)
            tk = g.port_link(w, i)
            if rk in link_map:
                if link_map[rk] != tk:
                    self._undo(link_map, edge_claimed, name_claimed,
                               added_lm, added_edges, added_names)
                    return None
                continue
            if isinstance(rk, Edge):
                rl = r.links[rk]
                ok = (
                    isinstance(tk, Edge)
                    and tk not in edge_claimed
                    and (
                        len(g.links[tk].ports) >= len(rl.ports)
                        if rl.inner
                        else len(g.links[tk].ports) == len(rl.ports)
                    )
                )
                if not ok:
                    self._undo(link_map, edge_claimed, name_claimed,
                               added_lm, added_edges, added_names)
                    return None
                edge_claimed.add(tk)
                added_edges.append(tk)
            else:
                ok = tk not in name_claimed and (
                    isinstance(tk, str) if self.auto else True
                )
                if not ok:
                    self._undo(link_map, edge_claimed, name_claimed,
                               added_lm, added_edges, added_names)
                    return None
                name_claimed.add(tk)
                added_names.append(tk)
            link_map[rk] = tk
            added_lm.append(rk)
        return added_lm, added_edges, added_names

    def _complete_ok(self, node_map, link_map, region_place, used) -> bool:
        r, g = self.r, self.g
        places = []
        for i in range(r.outer.width):
            p = region_place[i]
            # the grafting place must lie in the context: not in the image,
            # and not below it (nothing of the redex may sit inside an
            # absorbed parameter subtree)
            while p[0] == NODE:
                if p[1] in used:
                    return False
                p = g.parent[p[1]]
            places.append(region_place[i])
        if len(set(places)) != len(places):
            return False
        if self.auto and sorted(p[1] for p in places) != list(range(r.outer.width)):
            return False
        for rk, tk in link_map.items():
            if isinstance(rk, Edge):
                rl = r.links[rk]
                img = {(node_map[v], i) for v, i in rl.ports}
                tports = g.links[tk].ports
                if rl.inner:
                    if not img <= tports:
                        return False
                elif img != tports:
                    return False
        return True


# Two embeddings that differ only by a symmetry of the redex count as one
# occurrence.  Kept behind one switch: flip it to count raw embeddings
# instead (every aggregate weight then scales by the automorphism count).
QUOTIENT_REDEX_SYMMETRY = True

_aut_cache: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def automorphisms(b: Bigraph) -> list[dict]:
    """Structure-preserving self-bijections (controls, place, links, with
    regions, sites and outer names permuted consistently)."""
    cached = _aut_cache.get(b)
    if cached is None:
        cached = [m.node_map for m in _Embedder(b, b, mode="auto").run()]
        _aut_cache[b] = cached
    return cached


def occurrences(redex: Bigraph, target: Bigraph) -> list[Match]:
    """All distinct occurrences of the solid redex in the ground target,
    deduplicated modulo redex automorphisms, in deterministic order."""
    require_solid(redex, "redex")
    if redex.inner.names:
        raise MatchError("redexes with inner names are not supported")
    if not target.is_ground():
        raise NotGroundError("occurrence targets must be ground")
    if _short_of_controls(redex, target):
        return []
    raw = _Embedder(redex, target).run()
    if not raw:
        return []
    fixed = sorted(redex.nodes)
    raw.sort(key=lambda m: tuple(m.node_map[v] for v in fixed))
    if not QUOTIENT_REDEX_SYMMETRY:
        return raw
    auts = automorphisms(redex)
    seen = set()
    out = []
    for m in raw:
        rep = min(
            tuple(m.node_map[a[v]] for v in fixed) for a in auts
        )
        if rep not in seen:
            seen.add(rep)
            out.append(m)
    return out


def count_occurrences(redex: Bigraph, target: Bigraph) -> int:
    return len(occurrences(redex, target))


def has_occurrence(pattern: Bigraph, target: Bigraph) -> bool:
    """Existence only: first embedding wins, no dedup (used for predicates)."""
    require_solid(pattern, "predicate pattern")
    if not target.is_ground():
        raise NotGroundError("occurrence targets must be ground")
    if _short_of_controls(pattern, target):
        return False
    return bool(_Embedder(pattern, target).run(first_only=True))


def _short_of_controls(pattern: Bigraph, target: Bigraph) -> bool:
    """True when the target lacks enough nodes of some concrete control,
    so no embedding can exist (O(pattern) prune before any search)."""
    have = target.control_counts()
    return any(
        have.get(c, 0) < n for c, n in pattern.control_counts().items()
    )


# ---------------------------------------------------------------------------
# decomposition and rewriting
# ---------------------------------------------------------------------------


def _fresh_names(count: int, taken) -> list[str]:
    prefix = "~x"
    while any(n.startswith(prefix) for n in taken):
        prefix = "~" + prefix
    return [f"{prefix}{i}" for i in range(count)]


def _decompose(m: Match):
    r, g = m.redex, m.target
    images = set(m.node_map.values())

    # parameter: one region per redex site, carrying the absorbed subtrees
    site_owner = {
        s: p[1] for s, p in r.site_parent.items()
    }  # solid: every site sits under a node
    absorbed_top: dict = {}
    for s in range(r.inner.width):
        holder = m.node_map[site_owner[s]]
        mapped = {m.node_map[c] for c in r.children((NODE, site_owner[s]))}
        absorbed_top[s] = [
            c for c in g.children((NODE, holder)) if c not in mapped
        ]
    prm_nodes: set = set()
    prm_parent: dict = {}
    stack = []
    for s, tops in sorted(absorbed_top.items()):
        for c in tops:
            prm_parent[c] = (REGION, s)
            stack.append(c)
    while stack:
        c = stack.pop()
        prm_nodes.add(c)
        for k in g.children((NODE, c)):
            prm_parent[k] = (NODE, c)
            stack.append(k)

    # links reaching out of the parameter get one identity name each
    port_groups: dict = {}
    for c in sorted(prm_nodes):
        for i in range(g.arity(c)):
            key = g.port_link(c, i)
            port_groups.setdefault(key, set()).add((c, i))
    group_keys = sorted(
        port_groups, key=lambda k: (1, k.ident) if isinstance(k, Edge) else (0, k)
    )
    taken = g.outer.names | r.outer.names
    xnames = _fresh_names(len(group_keys), taken)
    prm_links = {
        x: Link(frozenset(port_groups[k])) for x, k in zip(xnames, group_keys)
    }
    prm = Bigraph(
        g.signature,
        {c: g.nodes[c] for c in prm_nodes},
        {c: prm_parent[c] for c in prm_nodes},
        {},
        prm_links,
        Interface(0),
        Interface(r.inner.width, frozenset(xnames)),
    )

    # context: everything else, with one site per redex region
    consumed = {
        m.link_map[k] for k in m.link_map if isinstance(k, Edge)
    }
    ctx_nodes = {
        v: g.nodes[v] for v in g.nodes if v not in images and v not in prm_nodes
    }
    ctx_links: dict = {}
    for key, link in g.links.items():
        if key in consumed:
            continue
        ctx_links[key] = Link(
            frozenset(p for p in link.ports if p[0] in ctx_nodes), link.inner
        )
    inner_on: dict = {}
    for y in sorted(r.outer.names):
        inner_on.setdefault(m.link_map[y], set()).add(y)
    for x, k in zip(xnames, group_keys):
        inner_on.setdefault(k, set()).add(x)
    for key, names in inner_on.items():
        link = ctx_links[key]
        ctx_links[key] = Link(link.ports, link.inner | frozenset(names))
    ctx = Bigraph(
        g.signature,
        ctx_nodes,
        {v: g.parent[v] for v in ctx_nodes},
        {i: m.region_place[i] for i in range(r.outer.width)},
        ctx_links,
        Interface(r.outer.width, r.outer.names | frozenset(xnames)),
        g.outer,
    )
    return ctx, prm, tuple(xnames)


@dataclass
class RewriteOutcome:
    """One abstract result of applying a rule everywhere it occurs."""

    result: Bigraph
    count: int
    key: bytes


def rewrite(g: Bigraph, rule, m: Match) -> Bigraph:
    """Replace the matched redex image by the reactum over the same
    parameter (identity instantiation); result is lean-normalized."""
    redex, reactum = _rule_pair(rule)
    if m.target is not g or m.redex is not redex:
        raise MatchError("stale match: it does not witness this state and rule")
    _check_rule_interfaces(redex, reactum)
    ctx, prm, xnames = _decompose(m)
    mid = reactum
    if xnames:
        mid = tensor(mid, identity(xnames, signature=g.signature))
    if prm.nodes or prm.links or mid.inner.width or mid.inner.names:
        mid = compose(mid, prm)
    return lean(compose(ctx, mid))


def apply_rule_all(g: Bigraph, rule) -> list[RewriteOutcome]:
    """Rewrite at every occurrence and partition the results by
    support-equivalence; counts sum to the occurrence count and outcomes
    come in canonical-key order."""
    redex, _ = _rule_pair(rule)
    groups: dict = {}
    for m in occurrences(redex, g):
        res = rewrite(g, rule, m)
        key = canonical_key(res)
        if key in groups:
            groups[key][1] += 1
        else:
            groups[key] = [res, 1]
    return [
        RewriteOutcome(groups[k][0], groups[k][1], k) for k in sorted(groups)
    ]


def _rule_pair(rule):
    if hasattr(rule, "redex"):
        return rule.redex, rule.reactum
    redex, reactum = rule
    return redex, reactum


def _check_rule_interfaces(redex: Bigraph, reactum: Bigraph) -> None:
    if (
        redex.inner.width != reactum.inner.width
        or redex.inner.names != reactum.inner.names
        or redex.outer.width != reactum.outer.width
        or redex.outer.names != reactum.outer.names
    ):
        raise MatchError(
            f"redex {redex.inner}->{redex.outer} and reactum "
            f"{reactum.inner}->{reactum.outer} must have the same interface"
        )
