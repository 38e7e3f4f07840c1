"""Occurrence enumeration, rewriting, and the exhaustive-search oracle."""

import random

import pytest

from bigrs.bigraph import (
    Bigraph,
    ControlDecl,
    Edge,
    Interface,
    Link,
    NODE,
    REGION,
    NotGroundError,
    SolidityError,
    close_name,
    compose,
    hole,
    identity,
    ion,
    merge_parallel,
    support_equivalent,
    tensor,
)
from bigrs.canon import canonical_key
from bigrs.matching import (
    MatchError,
    apply_rule_all,
    automorphisms,
    count_occurrences,
    has_occurrence,
    occurrences,
    rewrite,
)

from genutil import SIG, plant, random_ground, random_solid
from oracles import brute_occurrence_count


def wsn_parts():
    sig = {
        "BS": ControlDecl("BS", 1, atomic=True),
        "S": ControlDecl("S", 1, atomic=True),
    }

    def state(n_ok, n_failed):
        b = ion(sig, "BS", (), ["b"])
        for _ in range(n_ok):
            b = merge_parallel(b, ion(sig, "S", (), ["b"]))
        b = close_name(b, "b")
        for _ in range(n_failed):
            b = merge_parallel(b, close_name(ion(sig, "S", (), ["y"]), "y"))
        return b

    fail_redex = merge_parallel(ion(sig, "BS", (), ["x"]), ion(sig, "S", (), ["x"]))
    fail_reactum = merge_parallel(
        ion(sig, "BS", (), ["x"]), close_name(ion(sig, "S", (), ["y"]), "y")
    )
    return sig, state, (fail_redex, fail_reactum), (fail_reactum, fail_redex)


# ---------------------------------------------------------------------------
# the two-linked-nodes pattern in its three-node host (three occurrences,
# one per way of placing the pattern's inner node and outgoing links)
# ---------------------------------------------------------------------------


def fig1_host_and_pattern():
    """Host: two B nodes; the left B holds one A (on a shared edge), the
    right B holds two As (one on the shared edge, one privately closed).
    Pattern: B{x} containing A{y} and a site.  The pattern occurs three
    times in the host."""
    sig = {"A": ControlDecl("A", 1), "B": ControlDecl("B", 1)}
    host = Bigraph(
        sig,
        {0: ("B", ()), 1: ("A", ()), 2: ("B", ()), 3: ("A", ()), 4: ("A", ())},
        {
            0: (REGION, 0),
            1: (NODE, 0),
            2: (REGION, 1),
            3: (NODE, 2),
            4: (NODE, 2),
        },
        {},
        {
            "x": Link(frozenset([(0, 0)])),
            "y": Link(frozenset([(2, 0)])),
            Edge(0): Link(frozenset([(1, 0), (3, 0)])),  # shared hyperlink
            Edge(1): Link(frozenset([(4, 0)])),  # closed on the lone A
        },
        Interface(0),
        Interface(2, frozenset(["x", "y"])),
    )
    pattern = ion(
        sig, "B", (), ["x"], child=merge_parallel(hole(sig), ion(sig, "A", (), ["y"]))
    )
    return sig, host, pattern


def test_pattern_occurs_three_times():
    _, host, pattern = fig1_host_and_pattern()
    assert count_occurrences(pattern, host) == 3


def test_occurrence_witness_reconstructs_host():
    sig, host, pattern = fig1_host_and_pattern()
    for m in occurrences(pattern, host):
        ctx, prm, xnames = m.decompose()
        rebuilt = compose(
            ctx, compose(tensor(pattern, identity(xnames, signature=sig)), prm)
        )
        assert canonical_key(rebuilt) == canonical_key(host)


# ---------------------------------------------------------------------------
# occurrence基本 behaviour on the sensor model
# ---------------------------------------------------------------------------


def test_fail_occurrences_and_counts():
    _, state, fail, recover = wsn_parts()
    g0, g1, g3 = state(3, 0), state(2, 1), state(0, 3)
    assert len(occurrences(fail[0], g0)) == 3
    assert len(occurrences(fail[0], g3)) == 0
    outs = apply_rule_all(g0, fail)
    assert len(outs) == 1 and outs[0].count == 3
    assert support_equivalent(outs[0].result, g1)
    # counts partition occurrences
    assert sum(o.count for o in apply_rule_all(g1, fail)) == len(
        occurrences(fail[0], g1)
    )


def test_fail_then_recover_round_trip():
    _, state, fail, recover = wsn_parts()
    g0 = state(3, 0)
    g1 = rewrite(g0, fail, occurrences(fail[0], g0)[0])
    back = rewrite(g1, recover, occurrences(recover[0], g1)[0])
    assert support_equivalent(back, g0)


def test_identity_rule_self_loop():
    _, state, fail, _ = wsn_parts()
    g0 = state(3, 0)
    wait = (fail[0], fail[0])  # L = R
    outs = apply_rule_all(g0, wait)
    assert len(outs) == 1 and outs[0].count == 3
    assert support_equivalent(outs[0].result, g0)


def test_non_solid_redex_reports_clause():
    with pytest.raises(SolidityError) as err:
        occurrences(hole(SIG), random_ground(random.Random(0)))
    assert any("region" in v for v in err.value.violations)


def test_target_must_be_ground():
    redex = ion(SIG, "A", (), [])
    with pytest.raises(NotGroundError):
        occurrences(redex, hole(SIG))


def test_stale_match_rejected():
    _, state, fail, _ = wsn_parts()
    g0, g1 = state(3, 0), state(2, 1)
    m = occurrences(fail[0], g0)[0]
    with pytest.raises(MatchError):
        rewrite(g1, fail, m)


def test_rule_interface_mismatch():
    _, state, fail, _ = wsn_parts()
    g0 = state(3, 0)
    m = occurrences(fail[0], g0)[0]
    bad_reactum = ion(SIG, "A", (), [])  # <0,{}> -> <1,{}>: wrong names
    with pytest.raises(MatchError):
        rewrite(g0, (fail[0], bad_reactum), m)


def test_no_occurrences_empty_outcome():
    _, state, _, recover = wsn_parts()
    assert apply_rule_all(state(3, 0), recover) == []


def test_symmetric_redex_quotient():
    # A | A in a three-A host: C(3,2) decompositions, not 3*2 embeddings
    a = ion(SIG, "A", (), [])
    redex = merge_parallel(a, a)
    host = merge_parallel(merge_parallel(a, a), a)
    assert len(automorphisms(redex)) == 2
    assert count_occurrences(redex, host) == 3


def test_groundness_and_interface_preserved_by_rewrite():
    _, state, fail, _ = wsn_parts()
    g0 = state(3, 0)
    for m in occurrences(fail[0], g0):
        res = rewrite(g0, fail, m)
        assert res.is_ground()
        assert res.outer == g0.outer


def test_sites_absorb_spare_children():
    # pattern B{x}.(A{y} | site) also matches when B holds extra children
    sig, host, pattern = fig1_host_and_pattern()
    exact = ion(sig, "B", (), ["x"], child=ion(sig, "A", (), ["y"]))
    # without the site, only the left B (exactly one child) matches
    assert count_occurrences(exact, host) == 1
    assert count_occurrences(pattern, host) == 3


def test_closed_redex_edge_needs_exact_endpoints():
    sig, host, pattern = fig1_host_and_pattern()
    # /y A{y}: an A on a private closed link; only the lone A qualifies
    closed_a = close_name(ion(sig, "A", (), ["y"]), "y")
    assert count_occurrences(closed_a, host) == 1


def test_distinct_names_map_to_distinct_links():
    sig = {"A": ControlDecl("A", 1)}
    host = close_name(
        merge_parallel(ion(sig, "A", (), ["x"]), ion(sig, "A", (), ["x"])), "x"
    )
    same = merge_parallel(ion(sig, "A", (), ["x"]), ion(sig, "A", (), ["x"]))
    diff = merge_parallel(ion(sig, "A", (), ["x"]), ion(sig, "A", (), ["y"]))
    assert count_occurrences(same, host) == 1
    assert count_occurrences(diff, host) == 0


def test_has_occurrence_matches_enumeration():
    rng = random.Random(17)
    for _ in range(40):
        redex = random_solid(rng, max_nodes=4)
        target = random_ground(rng, max_nodes=6)
        assert has_occurrence(redex, target) == bool(occurrences(redex, target))


# ---------------------------------------------------------------------------
# oracle agreement (the acceptance criterion runs this at full volume)
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("seed", [11, 23, 47])
def test_occurrence_counts_match_oracle(seed):
    rng = random.Random(seed)
    for i in range(60):
        redex = random_solid(rng, max_nodes=4)
        if i % 2 == 0:
            target = plant(rng, redex)
        else:
            target = random_ground(rng, max_nodes=6)
        assert count_occurrences(redex, target) == brute_occurrence_count(
            redex, target
        ), f"disagreement at iteration {i}"


def test_identity_rule_fixes_random_states():
    # with reactum = redex, rewriting anywhere returns the same class:
    # decompose/compose/lean agree on arbitrary planted structures
    rng = random.Random(53)
    checked = 0
    for _ in range(40):
        redex = random_solid(rng, max_nodes=4)
        target = plant(rng, redex)
        for m in occurrences(redex, target)[:3]:
            res = rewrite(target, (redex, redex), m)
            assert canonical_key(res) == canonical_key(target)
            checked += 1
    assert checked >= 20


def test_witness_reconstruction_random():
    rng = random.Random(31)
    checked = 0
    for _ in range(40):
        redex = random_solid(rng, max_nodes=4)
        target = plant(rng, redex)
        for m in occurrences(redex, target)[:3]:
            ctx, prm, xnames = m.decompose()
            rebuilt = compose(
                ctx,
                compose(tensor(redex, identity(xnames, signature=SIG)), prm),
            )
            assert canonical_key(rebuilt) == canonical_key(target)
            checked += 1
    assert checked >= 20
