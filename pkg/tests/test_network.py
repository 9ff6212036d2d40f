import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmultihop.channels import NoiseKind
from qmultihop.network import (
    NodeKind,
    RouteNotFound,
    Topology,
    TopologyParseError,
    discover_route,
    expected_rate,
    load_topology,
    parse_topology,
    simulate_multihop,
    simulate_trial,
    single_hop_prob,
    total_fidelity,
    total_success_prob,
    two_hop_success_prob,
)
from qmultihop.states import ClusterParams, InputParams
from qmultihop.teleport import PovmParams


class TestParse:
    def test_mesh_fixture(self, fixtures):
        t = load_topology(fixtures / "mesh.topo")
        assert t.nodes["S"] is NodeKind.SOURCE and t.nodes["I1"] is NodeKind.EDGE_ROUTE
        assert t.link("R1", "R4").flags == "c" and not t.link("R1", "R4").dual
        assert t.neighbors("I2") == ["R3", "S"]
        assert t.neighbors("I2", dual_only=False) == ["R2", "R3", "S"]

    @pytest.mark.parametrize("text,line", [
        ("node A\nnode A\n", 2),
        ("node A\nedge A B qc\n", 2),
        ("node A\nnode B\nedge A B x\n", 3),
        ("node A bogus\n", 1),
        ("link A B\n", 1),
        ("node A\nedge A A qc\n", 2),
    ])
    def test_errors_carry_line(self, text, line):
        with pytest.raises(TopologyParseError) as e:
            parse_topology(text)
        assert e.value.lineno == line

    def test_chain(self):
        t = Topology.chain(12)
        assert len(t.nodes) == 13 and list(t.nodes)[0] == "N00"
        assert discover_route(t, "N00", "N12").hop_count == 12


class TestRoute:
    def test_mesh_route(self, fixtures):
        r = discover_route(load_topology(fixtures / "mesh.topo"), "S", "D")
        assert r.hops == ("S", "I1", "R1", "R2", "D")
        assert r.rreq_messages > 0

    def test_missing_channel_blocks_route(self):
        t = parse_topology("node A\nnode B\nnode C\nedge A B qc\nedge B C c\n")
        with pytest.raises(RouteNotFound):
            discover_route(t, "A", "C")

    def test_bad_endpoints(self):
        t = Topology.chain(2)
        with pytest.raises(ValueError):
            discover_route(t, "N0", "nope")
        with pytest.raises(ValueError):
            discover_route(t, "N0", "N0")

    @settings(max_examples=60, deadline=None)
    @given(st.integers(3, 12), st.data())
    def test_against_networkx(self, n, data):
        names = [f"v{i:02d}" for i in range(n)]
        pairs = [(a, b) for i, a in enumerate(names) for b in names[i + 1:]]
        chosen = data.draw(st.lists(st.sampled_from(pairs), unique=True, max_size=3 * n))
        flags = data.draw(st.lists(st.sampled_from(["q", "c", "qc"]), min_size=len(chosen), max_size=len(chosen)))
        t = Topology()
        g = nx.Graph()
        for v in names:
            t.add_node(v)
            g.add_node(v)
        for (a, b), f in zip(chosen, flags):
            t.add_link(a, b, classical="c" in f, quantum="q" in f)
            if f == "qc":
                g.add_edge(a, b)
        src, dst = names[0], names[-1]
        if not nx.has_path(g, src, dst):
            with pytest.raises(RouteNotFound):
                discover_route(t, src, dst)
            return
        r = discover_route(t, src, dst)
        assert r.hop_count == nx.shortest_path_length(g, src, dst)
        assert list(r.hops) == min(nx.all_shortest_paths(g, src, dst))


class TestClosedForms:
    def test_single_hop_matches_n1(self, balanced, noiseless):
        assert total_success_prob(noiseless, balanced, 1.0, 1) == single_hop_prob(noiseless, balanced) == 1 / 16

    def test_n75(self, balanced, noiseless):
        assert total_success_prob(noiseless, balanced, 1.0, 75) == pytest.approx(1 - (15 / 16) ** 75, abs=1e-14)

    def test_phase_example(self, balanced):
        got = total_success_prob(NoiseKind.phase(0.2), balanced, 1.0, 10)
        assert got == pytest.approx(1 - 0.9744**10, abs=1e-14)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0, 0.95), st.sampled_from(["amp", "phase"]), st.floats(0.1, 1), st.floats(0.1, 1),
           st.floats(0.5, 4))
    def test_two_hop_identity(self, xi, kind, t1, t2, rho):
        c = ClusterParams((0.3, t1, t2, 0.3))
        n = NoiseKind(kind, xi)
        assert abs(two_hop_success_prob(PovmParams.from_noise(n, c, rho)) - total_success_prob(n, c, rho, 2)) < 1e-12

    def test_fidelity_ends(self, balanced, noiseless):
        inp = InputParams(0.6, 0.8)
        assert all(total_fidelity(noiseless, inp, balanced, n) == 1.0 for n in (1, 7, 120))
        assert all(total_fidelity(NoiseKind.amplitude(1.0), inp, balanced, n) == 0.0 for n in (1, 7, 120))
        assert total_fidelity(NoiseKind.amplitude(0.5), inp, balanced, 2) == pytest.approx(0.28125**4)

    def test_invalid_hops(self, balanced, noiseless):
        with pytest.raises(ValueError):
            total_success_prob(noiseless, balanced, 1.0, 0)
        with pytest.raises(ValueError):
            total_fidelity(noiseless, InputParams(1, 0), balanced, 0)

    def test_expected_rate(self):
        assert expected_rate("sequential", 0.5, 3) == 0.125
        assert expected_rate("any", 0.5, 3) == 0.875


class TestSimulate:
    @pytest.mark.parametrize("semantics", ["sequential", "any"])
    def test_noiseless_chain_matches_law(self, semantics, balanced, noiseless):
        t = Topology.chain(2)
        res = simulate_multihop(t, "N0", "N2", InputParams(0.6, 0.8), balanced, noiseless, semantics,
                                seed=5, trials=40_000)
        p = expected_rate(semantics, 1 / 16, 2)
        sigma = math.sqrt(p * (1 - p) / 40_000)
        assert abs(res.rate - p) < 4 * sigma
        assert res.mean_fidelity == pytest.approx(1, abs=1e-10)
        assert res.route.hop_count == 2

    def test_unknown_semantics(self, balanced, noiseless):
        with pytest.raises(ValueError):
            simulate_multihop(Topology.chain(1), "N0", "N1", InputParams(1, 0), balanced, noiseless, "every")

    def test_trial_records(self, balanced, noiseless):
        t = Topology.chain(3)
        route = discover_route(t, "N0", "N3")
        res = simulate_trial(route, InputParams(0.6, 0.8), balanced, noiseless, np.random.default_rng(1),
                             policy="all")
        assert res.success and res.hops_attempted == 3 and len(res.per_hop_records) == 3
        assert res.empirical_fidelity == pytest.approx(1, abs=1e-10)
