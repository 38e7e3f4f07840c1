"""PRISM bundles, DOT, JSON, re-import, and trace simulation."""

import json
from fractions import Fraction

import numpy as np
import pytest

from bigrs.analysis import dtmc_bounded_reach, dtmc_reach
from bigrs.export import (
    ExportError,
    export_prism,
    load_prism_dtmc,
    render_dot,
    render_lab,
    render_srew,
    render_tra,
    render_trew,
    rewards_to_states,
    system_to_json,
)
from bigrs.language import load_model
from bigrs.simulate import simulate
from bigrs.system import Distribution, TransitionSystem, build_transition_system

WSN_TRA = """4 6
0 1 1
1 0 0.20000000000000001
1 2 0.80000000000000004
2 1 0.5
2 3 0.5
3 2 1
"""

WSN_LAB = """0="init" 1="all_failed"
0: 0
3: 1
"""

MDP_TRA = """3 4 5
0 0 1 0.16666666666666666 a_send
0 0 2 0.83333333333333337 a_send
0 1 0 1 a_wait
1 0 0 1 a_reset
2 0 2 1 tau
"""


def test_wsn_tra_and_lab_exact(wsn_ts):
    assert render_tra(wsn_ts) == WSN_TRA
    assert render_lab(wsn_ts) == WSN_LAB


def test_mdp_tra_exact(send_mdp_ts):
    assert render_tra(send_mdp_ts) == MDP_TRA


def test_tra_rows_sum_to_one_after_printing(wsn_ts, send_mdp_ts):
    sums = {}
    for line in render_tra(wsn_ts).splitlines()[1:]:
        src, _, p = line.split()
        sums[src] = sums.get(src, 0.0) + float(p)
    assert all(abs(s - 1) <= 1e-9 for s in sums.values())
    sums = {}
    for line in render_tra(send_mdp_ts).splitlines()[1:]:
        src, choice, _, p, _ = line.split()
        sums[(src, choice)] = sums.get((src, choice), 0.0) + float(p)
    assert all(abs(s - 1) <= 1e-9 for s in sums.values())


def test_lab_contains_only_init_when_unlabelled():
    ts = TransitionSystem(
        kind="pbrs",
        states=[(b"s0", None)],
        rows=[Distribution({0: Fraction(1)})],
        labels=[frozenset()],
        state_reward=[Fraction(0)],
        action_reward=[{}],
    )
    assert render_lab(ts) == '0="init"\n0: 0\n'


def test_srew_nonzero_rows(wsn_ts, models_dir):
    # wsn has no rewards: header only
    assert render_srew(wsn_ts) == "4 0\n"


def test_brs_has_no_prism_format():
    ts = TransitionSystem(kind="brs", states=[(b"s", None)], rows=[()])
    with pytest.raises(ExportError):
        render_tra(ts)


def test_bundle_writing_and_reimport(tmp_path, wsn_ts):
    bundle = export_prism(wsn_ts, tmp_path, "wsn")
    assert bundle.manifest.keys() == {"tra", "lab"}
    back = load_prism_dtmc(bundle.tra_file, bundle.lab_file)
    for n in (0, 3, 17):
        a = dtmc_bounded_reach(wsn_ts, "all_failed", n)
        b = dtmc_bounded_reach(back, "all_failed", n)
        assert abs(a - b) <= 1e-9
    assert (
        abs(
            dtmc_reach(wsn_ts, "all_failed").value
            - dtmc_reach(back, "all_failed").value
        )
        <= 1e-9
    )


def test_exports_byte_identical_across_builds(models_dir, tmp_path):
    model = models_dir / "wsn.big"
    outs = []
    for run in ("a", "b"):
        ts = build_transition_system(load_model(model))
        bundle = export_prism(ts, tmp_path / run, "wsn")
        outs.append(
            {role: path.read_bytes() for role, path in bundle.manifest.items()}
        )
    assert outs[0] == outs[1]


def test_trew_rows(send_mdp_ts, models_dir):
    spec = load_model(models_dir / "mobile_sink.big")
    ts = build_transition_system(spec)
    text = render_trew(ts)
    header = text.splitlines()[0].split()
    assert int(header[0]) == ts.n_states
    assert int(header[1]) == len(text.splitlines()) - 1
    assert len(text.splitlines()) > 1  # rewarded actions exist


def test_rewards_to_states_folding():
    # two actions from s0 to an absorbing s1; costs 0 and 2
    ts = TransitionSystem(
        kind="abrs",
        states=[(b"s0", None), (b"s1", None)],
        rows=[
            [
                ("free", Distribution({1: Fraction(1)})),
                ("paid", Distribution({1: Fraction(1)})),
            ],
            [],
        ],
        labels=[frozenset(), frozenset({"done"})],
        state_reward=[Fraction(0), Fraction(0)],
        action_reward=[{"free": Fraction(0), "paid": Fraction(2)}, {}],
    )
    folded = rewards_to_states(ts)
    assert folded.n_states == 3  # s1 split into charged and uncharged copies
    assert all(all(r == 0 for r in per.values()) for per in folded.action_reward)
    charged = [i for i, ls in enumerate(folded.labels) if "charged(2)" in ls]
    assert len(charged) == 1
    assert folded.state_reward[charged[0]] == 2
    assert {"done"} <= set(folded.labels[charged[0]])


def test_dot_output(wsn_ts, send_mdp_ts):
    single = TransitionSystem(
        kind="pbrs",
        states=[(b"s0", None)],
        rows=[Distribution({0: Fraction(1)})],
        labels=[frozenset()],
    )
    dot = render_dot(single)
    assert dot.count("->") == 1 and 's0 -> s0 [label="1"]' in dot
    dot = render_dot(wsn_ts)
    assert dot.count("->") == 6
    assert len([l for l in dot.splitlines() if "[label=" in l and "->" not in l]) == 4
    dot = render_dot(send_mdp_ts)
    assert "a_send:0.833333" in dot


def test_system_json(wsn_ts):
    doc = system_to_json(wsn_ts)
    assert doc["states"] == 4
    assert len(doc["transitions"]) == 6
    assert doc["labels"]["3"] == ["all_failed"]
    assert len(doc["state_bigraphs"]) == 4
    json.dumps(doc)  # serializable


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------


def test_sim_deterministic_under_seed(models_dir):
    spec = load_model(models_dir / "wsn.big")
    a = simulate(spec, 40, seed=7)
    b = simulate(spec, 40, seed=7)
    assert len(a) == 40
    assert [(s.step, s.state_digest, s.rule) for s in a] == [
        (s.step, s.state_digest, s.rule) for s in b
    ]
    c = simulate(spec, 40, seed=8)
    assert [s.state_digest for s in a] != [s.state_digest for s in c]


def test_sim_zero_steps_and_delta(models_dir):
    spec = load_model(models_dir / "wsn.big")
    assert simulate(spec, 0, seed=1) == []  # zero budget: empty trace
    # a pbrs state nothing applies to loops in place forever
    from bigrs.language import elaborate, parse

    stuck = elaborate(
        parse(
            "ctrl A = 0;\nctrl B = 0;\nbig b = A;\n"
            "react r = B -[1.0]-> A;\n"
            "begin pbrs init = b; rules = [r]; end"
        )
    )
    trace = simulate(stuck, 5, seed=2)
    assert len(trace) == 5
    assert len({s.state_digest for s in trace}) == 1
    assert all(s.rule is None for s in trace)


def test_sim_ctmc_times_increase(models_dir):
    spec = load_model(models_dir / "budding.big")
    trace = simulate(spec, 25, seed=3)
    times = [s.time for s in trace]
    assert len(times) == 25 and times[0] > 0.0
    assert all(a < b for a, b in zip(times, times[1:]))


def test_sim_mdp_records_actions(models_dir):
    spec = load_model(models_dir / "mobile_sink.big")
    trace = simulate(spec, 30, seed=5)
    assert any(s.action == "a_move" for s in trace)


def test_sim_occupancy_tracks_stationary_distribution(models_dir, tmp_path):
    # w_con >> w_fail keeps the chain near the healthy state; compare the
    # empirical occupancy of a long run against the exact stationary
    # distribution of the four-state chain
    src = (models_dir / "wsn.big").read_text()
    src = src.replace("float w_fail = 2.0;", "float w_fail = 1.0;").replace(
        "float w_con = 1.0;", "float w_con = 10.0;"
    )
    from bigrs.language import elaborate, parse

    spec = elaborate(parse(src))
    ts = build_transition_system(spec)
    P = np.zeros((4, 4))
    for i, row in enumerate(ts.rows):
        for j, p in row.items():
            P[i, j] = float(p)
    # stationary distribution: left eigenvector for eigenvalue 1
    A = np.vstack([P.T - np.eye(4), np.ones(4)])
    b = np.array([0.0, 0, 0, 0, 1])
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)

    trace = simulate(spec, 4000, seed=11)
    digests = [s.state_digest for s in trace]
    import hashlib

    key_digest = [
        hashlib.sha256(key).hexdigest()[:16] for key, _ in ts.states
    ]
    counts = {d: digests.count(d) for d in set(digests)}
    emp = np.array([counts.get(d, 0) / len(digests) for d in key_digest])
    assert emp[0] > emp[3]
    assert pi[0] > pi[3]
    assert np.max(np.abs(emp - pi)) < 0.05
