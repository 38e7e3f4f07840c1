"""Seeded random bigraph generators for the test corpus."""

from __future__ import annotations

import random

from bigrs.bigraph import (
    Bigraph,
    ControlDecl,
    Edge,
    Interface,
    Link,
    NODE,
    REGION,
    compose,
    identity,
    is_solid,
    tensor,
)

SIG = {
    "A": ControlDecl("A", 0),
    "B": ControlDecl("B", 1),
    "C": ControlDecl("C", 2),
    "K": ControlDecl("K", 0, atomic=True),
    "L": ControlDecl("L", 1, atomic=True),
    "P": ControlDecl("P", 1, param_count=1),
}
_CTRLS = sorted(SIG)


def _random_control(rng: random.Random):
    name = rng.choice(_CTRLS)
    params = (rng.randrange(3),) if SIG[name].param_count else ()
    return name, params


def random_ground(
    rng: random.Random,
    max_nodes: int = 8,
    max_regions: int = 2,
    name_pool: tuple = ("u", "w"),
    allow_idle_edge: bool = False,
) -> Bigraph:
    """A random ground bigraph: forest over 1..max_nodes nodes, ports wired
    to closed edges or a small outer-name pool."""
    n = rng.randint(1, max_nodes)
    m = rng.randint(1, max_regions)
    names = [x for x in name_pool if rng.random() < 0.5]
    nodes = {}
    parent = {}
    non_atomic = []
    for v in range(n):
        ctrl, params = _random_control(rng)
        nodes[v] = (ctrl, params)
        if non_atomic and rng.random() < 0.6:
            parent[v] = (NODE, rng.choice(non_atomic))
        else:
            parent[v] = (REGION, rng.randrange(m))
        if not SIG[ctrl].atomic:
            non_atomic.append(v)
    links: dict = {x: set() for x in names}
    edges: list = []
    for v in range(n):
        for i in range(SIG[nodes[v][0]].arity):
            roll = rng.random()
            if names and roll < 0.3:
                links[rng.choice(names)].add((v, i))
            elif edges and roll < 0.65:
                links[rng.choice(edges)].add((v, i))
            else:
                e = Edge(len(edges))
                edges.append(e)
                links[e] = {(v, i)}
    if allow_idle_edge and rng.random() < 0.3:
        links[Edge(len(edges))] = set()
    return Bigraph(
        SIG,
        nodes,
        parent,
        {},
        {k: Link(frozenset(pts)) for k, pts in links.items()},
        Interface(0),
        Interface(m, frozenset(names)),
    )


def random_solid(
    rng: random.Random,
    max_nodes: int = 5,
    max_regions: int = 2,
    max_sites: int = 2,
    name_pool: tuple = ("x", "y", "z"),
) -> Bigraph:
    """A random solid bigraph (redex shaped): every region inhabited, at
    most one site per parent node, no idle names, no inner names."""
    while True:
        n = rng.randint(1, max_nodes)
        m = rng.randint(1, min(max_regions, n))
        nodes = {}
        parent = {}
        non_atomic = []
        for v in range(n):
            ctrl, params = _random_control(rng)
            nodes[v] = (ctrl, params)
            if v < m:
                parent[v] = (REGION, v)  # regions all inhabited
            elif non_atomic and rng.random() < 0.5:
                parent[v] = (NODE, rng.choice(non_atomic))
            else:
                parent[v] = (REGION, rng.randrange(m))
            if not SIG[ctrl].atomic:
                non_atomic.append(v)
        site_parent = {}
        hosts = [v for v in non_atomic]
        rng.shuffle(hosts)
        for s in range(min(rng.randrange(max_sites + 1), len(hosts))):
            site_parent[s] = (NODE, hosts[s])
        site_parent = {i: p for i, (_, p) in enumerate(sorted(site_parent.items()))}
        links: dict = {}
        edges: list = []
        used_names: list = []
        for v in range(n):
            for i in range(SIG[nodes[v][0]].arity):
                roll = rng.random()
                pool = [x for x in name_pool]
                if pool and roll < 0.4:
                    x = rng.choice(pool)
                    links.setdefault(x, set()).add((v, i))
                    if x not in used_names:
                        used_names.append(x)
                elif edges and roll < 0.6:
                    links[rng.choice(edges)].add((v, i))
                else:
                    e = Edge(len(edges))
                    edges.append(e)
                    links[e] = {(v, i)}
        b = Bigraph(
            SIG,
            nodes,
            parent,
            site_parent,
            {k: Link(frozenset(pts)) for k, pts in links.items()},
            Interface(len(site_parent)),
            Interface(m, frozenset(used_names)),
        )
        if is_solid(b):
            return b


def shuffled_copy(rng: random.Random, b: Bigraph) -> Bigraph:
    """The same bigraph under a random renaming of nodes and edges (a
    support-equivalent concrete variant)."""
    node_ids = sorted(b.nodes)
    perm = list(node_ids)
    rng.shuffle(perm)
    nmap = dict(zip(node_ids, perm))
    edge_ids = [k for k in b.links if isinstance(k, Edge)]
    eperm = list(range(len(edge_ids)))
    rng.shuffle(eperm)
    emap = {e: Edge(j) for e, j in zip(edge_ids, eperm)}

    def mp(p):
        return (NODE, nmap[p[1]]) if p[0] == NODE else p

    return Bigraph(
        b.signature,
        {nmap[v]: c for v, c in b.nodes.items()},
        {nmap[v]: mp(p) for v, p in b.parent.items()},
        {s: mp(p) for s, p in b.site_parent.items()},
        {
            emap.get(k, k): Link(
                frozenset((nmap[v], i) for v, i in l.ports), l.inner
            )
            for k, l in b.links.items()
        },
        b.inner,
        b.outer,
    )


def plant(rng: random.Random, redex: Bigraph) -> Bigraph:
    """A ground bigraph that contains the redex by construction:
    context . (redex x id_X) . parameters with random context and ground
    parameters."""
    k = redex.inner.width
    params = random_ground(rng, max_nodes=2, max_regions=1, name_pool=())
    prm = params
    for _ in range(k - 1):
        prm = tensor(prm, random_ground(rng, max_nodes=2, max_regions=1,
                                        name_pool=()))
    if k == 0:
        prm = Bigraph(SIG, {}, {}, {}, {}, Interface(0), Interface(0))
    # context: one region holding `m` sites (one per redex region) plus junk
    m = redex.outer.width
    junk = rng.randrange(3)
    nodes = {}
    parent = {}
    non_atomic = []
    for v in range(junk):
        ctrl, params_ = _random_control(rng)
        while SIG[ctrl].arity:  # keep context links simple: arity-0 junk
            ctrl, params_ = _random_control(rng)
        nodes[v] = (ctrl, params_)
        parent[v] = (REGION, 0) if not non_atomic else (NODE, rng.choice(non_atomic))
        if not SIG[ctrl].atomic:
            non_atomic.append(v)
    site_parent = {}
    for s in range(m):
        if non_atomic and rng.random() < 0.5:
            site_parent[s] = (NODE, rng.choice(non_atomic))
        else:
            site_parent[s] = (REGION, 0)
    # each redex outer name becomes a closed edge of the context
    links = {
        Edge(i): Link(frozenset(), frozenset([x]))
        for i, x in enumerate(sorted(redex.outer.names))
    }
    ctx = Bigraph(
        SIG,
        nodes,
        parent,
        site_parent,
        links,
        Interface(m, redex.outer.names),
        Interface(1),
    )
    return compose(ctx, compose(tensor(redex, identity(())), prm))
