"""Mesh topology, route discovery, N-hop closed forms and the multihop simulation.

Topology files are line based; ``#`` starts a comment::

    node S source
    node E
    edge S E qc      # q = quantum, c = classical, qc = both
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .channels import Channel, NoiseKind, amplitude_bracket, phase_bracket
from .oracle import TRANSMITTED, TrialStats, build_instrument, run_trials
from .states import ClusterParams, InputParams
from .teleport import PovmParams, hop_success_prob

SEMANTICS = ("sequential", "any")


class NodeKind(str, enum.Enum):
    SOURCE = "source"
    DESTINATION = "destination"
    ROUTE = "route"
    EDGE_ROUTE = "edge-route"


class TopologyParseError(ValueError):
    def __init__(self, msg: str, lineno: int | None = None):
        super().__init__(f"line {lineno}: {msg}" if lineno else msg)
        self.lineno = lineno


class RouteNotFound(LookupError):
    pass


@dataclass(frozen=True)
class Link:
    a: str
    b: str
    classical: bool
    quantum: bool

    @property
    def dual(self) -> bool:
        return self.classical and self.quantum

    @property
    def flags(self) -> str:
        return ("q" if self.quantum else "") + ("c" if self.classical else "")


@dataclass
class Topology:
    nodes: dict[str, NodeKind] = field(default_factory=dict)
    links: list[Link] = field(default_factory=list)

    def add_node(self, node_id: str, kind: NodeKind = NodeKind.ROUTE):
        if node_id in self.nodes:
            raise ValueError(f"duplicate node {node_id!r}")
        self.nodes[node_id] = NodeKind(kind)

    def add_link(self, a: str, b: str, classical: bool = True, quantum: bool = True):
        for n in (a, b):
            if n not in self.nodes:
                raise ValueError(f"unknown node {n!r}")
        if a == b:
            raise ValueError(f"self-loop on {a!r}")
        if self.link(a, b) is not None:
            raise ValueError(f"duplicate link {a}-{b}")
        self.links.append(Link(a, b, classical, quantum))

    def link(self, a: str, b: str) -> Link | None:
        for l in self.links:
            if {l.a, l.b} == {a, b}:
                return l
        return None

    def neighbors(self, n: str, dual_only: bool = True) -> list[str]:
        out = []
        for l in self.links:
            if dual_only and not l.dual:
                continue
            if l.a == n:
                out.append(l.b)
            elif l.b == n:
                out.append(l.a)
        return sorted(out)

    @classmethod
    def chain(cls, n_hops: int, prefix: str = "N") -> "Topology":
        """Linear chain N0 - N1 - ... with dual links; N0 is the source."""
        t = cls()
        width = len(str(n_hops))
        ids = [f"{prefix}{i:0{width}d}" for i in range(n_hops + 1)]
        for i, n in enumerate(ids):
            kind = NodeKind.SOURCE if i == 0 else NodeKind.DESTINATION if i == n_hops else NodeKind.ROUTE
            t.add_node(n, kind)
        for a, b in zip(ids, ids[1:]):
            t.add_link(a, b)
        return t


_FLAGS = {"q": (False, True), "c": (True, False), "qc": (True, True), "cq": (True, True)}


def parse_topology(text: str) -> Topology:
    t = Topology()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "node":
                if len(parts) not in (2, 3):
                    raise TopologyParseError("expected 'node <id> [kind]'", lineno)
                kind = parts[2] if len(parts) == 3 else NodeKind.ROUTE
                try:
                    kind = NodeKind(kind)
                except ValueError:
                    raise TopologyParseError(f"unknown node kind {parts[2]!r}", lineno) from None
                t.add_node(parts[1], kind)
            elif parts[0] == "edge":
                if len(parts) != 4 or parts[3] not in _FLAGS:
                    raise TopologyParseError("expected 'edge <id> <id> <q|c|qc>'", lineno)
                c, q = _FLAGS[parts[3]]
                t.add_link(parts[1], parts[2], classical=c, quantum=q)
            else:
                raise TopologyParseError(f"unknown directive {parts[0]!r}", lineno)
        except TopologyParseError:
            raise
        except ValueError as e:
            raise TopologyParseError(str(e), lineno) from None
    return t


def load_topology(path) -> Topology:
    with open(path, encoding="utf-8") as f:
        return parse_topology(f.read())


@dataclass(frozen=True)
class Route:
    hops: tuple[str, ...]
    rreq_messages: int = 0  # flood transmissions until the request reached dst

    @property
    def hop_count(self) -> int:
        return len(self.hops) - 1


def discover_route(t: Topology, src: str, dst: str) -> Route:
    """Shortest route over links with both a classical and a quantum channel.

    The route request is flooded breadth-first, each node forwarding once to
    its neighbours in id order and remembering who it first heard from; the
    reply walks those pointers back from ``dst``. Among shortest routes this
    yields the lexicographically smallest id sequence.
    """
    for n in (src, dst):
        if n not in t.nodes:
            raise ValueError(f"unknown node {n!r}")
    if src == dst:
        raise ValueError("source and destination coincide")
    parent = {src: None}
    queue = deque([src])
    sent = 0
    while queue:
        cur = queue.popleft()
        if cur == dst:
            break
        for nb in t.neighbors(cur):
            sent += 1
            if nb not in parent:
                parent[nb] = cur
                queue.append(nb)
    if dst not in parent:
        raise RouteNotFound(f"no route with co-existing quantum and classical links from {src} to {dst}")
    path = [dst]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    return Route(tuple(reversed(path)), sent)


def single_hop_prob(noise: NoiseKind, cluster: ClusterParams, rho_param: float = 1.0) -> float:
    return hop_success_prob(PovmParams.from_noise(noise, cluster, rho_param))


def total_success_prob(noise: NoiseKind, cluster: ClusterParams, rho_param: float, n_hops: int) -> float:
    """1 - (1 - 1/(2 rho gamma))^N."""
    if n_hops < 1:
        raise ValueError("hop count must be >= 1")
    p = single_hop_prob(noise, cluster, rho_param)
    if n_hops == 1 or p >= 1:
        return p
    return -math.expm1(n_hops * math.log1p(-p))


def two_hop_success_prob(p: PovmParams) -> float:
    """(1/(rho gamma)) (1 - 1/(4 rho gamma))."""
    x = 2 * hop_success_prob(p)  # 1/(rho gamma)
    return x * (1 - x / 4)


def fidelity_bracket(noise: NoiseKind, cluster: ClusterParams) -> float:
    if noise.kind is Channel.AMPLITUDE:
        return amplitude_bracket(noise.xi, cluster.tau)
    return phase_bracket(noise.xi, cluster.tau)


def total_fidelity(noise: NoiseKind, inp: InputParams, cluster: ClusterParams, n_hops: int) -> float:
    """bracket^(2N) (|a0|^2 + |d0|^2)^2."""
    if n_hops < 1:
        raise ValueError("hop count must be >= 1")
    return fidelity_bracket(noise, cluster) ** (2 * n_hops) * inp.norm_sq**2


@dataclass
class MultihopResult:
    success: bool
    hops_attempted: int
    per_hop_records: list[tuple[str, int]]
    empirical_fidelity: float | None


@dataclass
class MultihopSummary:
    route: Route
    semantics: str
    stats: TrialStats

    @property
    def rate(self) -> float:
        return self.stats.rate

    @property
    def sigma(self) -> float:
        p = self.rate
        return math.sqrt(p * (1 - p) / self.stats.trials)

    @property
    def ci(self) -> tuple[float, float]:
        return self.rate - 3 * self.sigma, self.rate + 3 * self.sigma

    @property
    def mean_fidelity(self) -> float | None:
        return self.stats.mean_fidelity


def expected_rate(semantics: str, p: float, n_hops: int) -> float:
    """Success law of a simulation semantics for per-hop probability p."""
    if semantics == "sequential":
        return p**n_hops
    return 1 - (1 - p) ** n_hops


def simulate_multihop(
    t: Topology,
    src: str,
    dst: str,
    inp: InputParams,
    cluster: ClusterParams,
    noise: NoiseKind,
    semantics: str = "any",
    seed: int = 0,
    trials: int = 100_000,
    rho_param: float = 1.0,
    policy: str = "designated",
    noisy_qubits=TRANSMITTED,
    workers: int = 1,
) -> MultihopSummary:
    """Monte Carlo over the discovered route.

    ``sequential``: the state is relayed hop by hop and the trial succeeds
    only if every hop's POVM succeeds; fidelity is that of the final state.
    ``any``: each hop is an independent attempt on the source state and the
    trial succeeds if at least one does; fidelity is that of the first
    successful attempt.
    """
    if semantics not in SEMANTICS:
        raise ValueError(f"unknown semantics {semantics!r}")
    route = discover_route(t, src, dst)
    inst = build_instrument(cluster, noise, noisy_qubits, rho_param, policy)
    st = run_trials(inst, inp, route.hop_count, semantics, trials, seed, workers)
    return MultihopSummary(route, semantics, st)


def simulate_trial(route: Route, inp: InputParams, cluster: ClusterParams, noise: NoiseKind,
                   rng: np.random.Generator, rho_param: float = 1.0,
                   policy: str = "designated") -> MultihopResult:
    """One relayed trial with its per-hop (Bell outcome, POVM outcome) record."""
    from .qmath import fidelity_pure
    from .states import make_input

    inst = build_instrument(cluster, noise, TRANSMITTED, rho_param, policy)
    psi, rho = make_input(inp.normalized())
    records = []
    for h in range(route.hop_count):
        p = np.clip(inst.probabilities(rho), 0, None)
        o = int(rng.choice(len(p), p=p / p.sum()))
        oc, k = inst.labels[o]
        records.append((oc.label, k))
        if not inst.success[o]:
            return MultihopResult(False, h + 1, records, None)
        rho = inst.apply(o, rho)
        rho = rho / np.trace(rho).real
    return MultihopResult(True, route.hop_count, records, fidelity_pure(rho, psi))
