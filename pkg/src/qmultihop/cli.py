"""Command line front end: ``sweep``, ``simulate``, ``route`` and ``verify``.

Exit codes: 0 ok, 1 invariant or configuration failure, 2 route not found.
Outputs go to ``$QMULTIHOP_OUTPUT_DIR`` (default: current directory) unless
a path is given.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path


from . import __version__
from .channels import NoiseKind
from .network import (
    RouteNotFound,
    Topology,
    TopologyParseError,
    discover_route,
    expected_rate,
    load_topology,
    simulate_multihop,
    single_hop_prob,
    total_fidelity,
    total_success_prob,
)
from .oracle import build_instrument, exact_route
from .states import ClusterParams, InputParams
from .verify import run_verify

OUTPUT_ENV = "QMULTIHOP_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


def fmt(x) -> str:
    if x is None:
        return "nan"
    return format(float(x), ".12g")


def parse_floats(spec: str) -> list[float]:
    """``0.2``, ``0,0.5,1`` or ``start..stop:step`` (inclusive)."""
    spec = spec.strip()
    if ".." in spec:
        rng, _, step = spec.partition(":")
        lo, hi = (float(v) for v in rng.split(".."))
        step = float(step) if step else 1.0
        if step <= 0:
            raise ConfigError(f"step must be positive in {spec!r}")
        if hi < lo:
            raise ConfigError(f"empty range {spec!r}")
        n = int(round((hi - lo) / step))
        vals = [round(lo + k * step, 12) for k in range(n + 1)]
        return [v for v in vals if v <= hi + 1e-12]
    try:
        vals = [float(v) for v in spec.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse number list {spec!r}") from None
    if not vals:
        raise ConfigError("empty value list")
    return vals


def parse_ints(spec: str) -> list[int]:
    vals = parse_floats(spec)
    if any(v != int(v) for v in vals):
        raise ConfigError(f"hop counts must be integers: {spec!r}")
    vals = [int(v) for v in vals]
    if min(vals) < 1:
        raise ConfigError("hop counts must be >= 1")
    return vals


def parse_tau(spec: str) -> ClusterParams:
    try:
        vals = [float(v) for v in spec.split(",")]
        return ClusterParams(tuple(vals)).require_normalized()
    except ValueError as e:
        raise ConfigError(str(e)) from None


def _noise(channel: str, xi: float) -> NoiseKind:
    try:
        return NoiseKind(channel, xi)
    except ValueError as e:
        raise ConfigError(str(e)) from None


@dataclass
class RunManifest:
    seed: int | None
    trials: int | None
    semantics: str
    topology: str
    version: str = __version__

    def comment_lines(self, extra: dict | None = None) -> list[str]:
        items = {"tool": f"qmultihop {self.version}", "seed": self.seed, "trials": self.trials,
                 "semantics": self.semantics, "topology": self.topology}
        items.update(extra or {})
        return [f"# {k}: {'none' if v is None else v}" for k, v in items.items()]


def _out_path(path: str | None, default_name: str) -> Path:
    if path:
        return Path(path)
    return Path(os.environ.get(OUTPUT_ENV, ".")) / default_name


def _write(path: Path, text: str):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    except OSError as e:
        raise ConfigError(f"cannot write {path}: {e}") from None


def sweep_csv(channel: str, quantity: str, xis: list[float], ns: list[int], cluster: ClusterParams,
              rho: float, inp: InputParams, workers: int = 1) -> str:
    grid = sorted({(xi, n) for xi in xis for n in ns})

    def value(pt):
        xi, n = pt
        noise = _noise(channel, xi)
        if quantity == "psuc":
            return total_success_prob(noise, cluster, rho, n)
        return total_fidelity(noise, inp, cluster, n)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            vals = list(ex.map(value, grid))
    else:
        vals = [value(pt) for pt in grid]
    manifest = RunManifest(None, None, "closed-form", "none")
    buf = io.StringIO()
    extra = {"a0": fmt(inp.a0.real if isinstance(inp.a0, complex) else inp.a0),
             "d0": fmt(inp.d0.real if isinstance(inp.d0, complex) else inp.d0)}
    for line in manifest.comment_lines(extra):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["channel", "quantity", "xi", "N", "tau0", "tau1", "tau2", "tau3", "rho", "value"])
    for (xi, n), v in zip(grid, vals):
        w.writerow([channel, quantity, fmt(xi), n, *map(fmt, cluster.tau), fmt(rho), fmt(v)])
    return buf.getvalue()


def cmd_sweep(args) -> int:
    cluster = parse_tau(args.tau)
    xis = parse_floats(args.xi)
    for xi in xis:
        _noise(args.channel, xi)
    ns = parse_ints(args.N)
    if args.rho <= 0:
        raise ConfigError("rho must be positive")
    inp = InputParams(args.a0, args.d0)
    text = sweep_csv(args.channel, args.quantity, xis, ns, cluster, args.rho, inp, args.workers)
    path = _out_path(args.output, f"sweep_{args.channel}_{args.quantity}.csv")
    if args.output == "-":
        sys.stdout.write(text)
    else:
        _write(path, text)
        print(f"wrote {len(xis) * len(ns)} rows to {path}")
    return 0


def _topology(args) -> tuple[Topology, str, str, str]:
    if args.topology:
        try:
            t = load_topology(args.topology)
        except OSError as e:
            raise ConfigError(f"cannot read topology: {e}") from None
        src, dst = args.src, args.dst
        if src is None or dst is None:
            kinds = {k.value: n for n, k in t.nodes.items()}
            src = src or kinds.get("source")
            dst = dst or kinds.get("destination")
        if src is None or dst is None:
            raise ConfigError("give --src/--dst or mark nodes as source/destination")
        return t, src, dst, args.topology
    t = Topology.chain(args.chain)
    ids = list(t.nodes)
    return t, ids[0], ids[-1], f"chain:{args.chain}"


def simulate_summary(args) -> tuple[str, str]:
    t, src, dst, topo_name = _topology(args)
    cluster = parse_tau(args.tau)
    noise = _noise(args.channel, args.xi)
    inp = InputParams(args.a0, args.d0)
    if inp.norm_sq == 0:
        raise ConfigError("input state is zero")
    route = discover_route(t, src, dst)
    n = route.hop_count
    p = single_hop_prob(noise, cluster, args.rho)
    law = total_success_prob(noise, cluster, args.rho, n)
    f_cf = total_fidelity(noise, inp.normalized(), cluster, n)
    inst = build_instrument(cluster, noise, rho_param=args.rho, policy=args.policy)
    exact = {sem: exact_route(inst, inp, n, sem) for sem in ("sequential", "any")}
    results = {sem: simulate_multihop(t, src, dst, inp, cluster, noise, sem, args.seed, args.trials,
                                      args.rho, args.policy, workers=args.workers)
               for sem in ("sequential", "any")}

    manifest = RunManifest(args.seed, args.trials, "sequential,any", topo_name)
    extra = {"channel": args.channel, "xi": fmt(args.xi), "tau": ",".join(map(fmt, cluster.tau)),
             "rho": fmt(args.rho), "a0": fmt(args.a0), "d0": fmt(args.d0), "policy": args.policy}
    head = manifest.comment_lines(extra)

    out = io.StringIO()
    out.write("\n".join(head) + "\n")
    out.write(f"route: {' -> '.join(route.hops)} (N = {n}, RREQ transmissions = {route.rreq_messages})\n")
    out.write(f"per-hop success 1/(2ϱγ) = {fmt(p)}\n")
    out.write(f"closed-form total P_suc 1-(1-p)^N = {fmt(law)}\n")
    out.write(f"closed-form total fidelity = {fmt(f_cf)}\n\n")
    for sem, r in results.items():
        st = r.stats
        lo, hi = r.ci
        out.write(f"[{sem}] empirical P_suc = {fmt(r.rate)}  3σ interval [{fmt(lo)}, {fmt(hi)}]  "
                  f"closed-form law {fmt(expected_rate(sem, p, n))}  exact density-matrix {fmt(exact[sem][0])}\n")
        out.write(f"[{sem}] mean fidelity of successful trials = {fmt(r.mean_fidelity)}  "
                  f"exact density-matrix {fmt(exact[sem][1])}\n")
        for h in range(n):
            a, s = int(st.hop_attempts[h]), int(st.hop_successes[h])
            out.write(f"[{sem}]   hop {h + 1}: attempts {a} successes {s}\n")

    buf = io.StringIO()
    buf.write("\n".join(head) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["semantics", "N", "trials", "successes", "empirical", "sigma", "closed_form_law",
                "exact_psuc", "closed_form_total", "mean_fidelity", "exact_fidelity", "closed_form_fidelity"])
    for sem, r in results.items():
        w.writerow([sem, n, r.stats.trials, r.stats.successes, fmt(r.rate), fmt(r.sigma),
                    fmt(expected_rate(sem, p, n)), fmt(exact[sem][0]), fmt(law), fmt(r.mean_fidelity),
                    fmt(exact[sem][1]), fmt(f_cf)])
    return out.getvalue(), buf.getvalue()


def cmd_simulate(args) -> int:
    if args.trials < 1:
        raise ConfigError("trials must be >= 1")
    text, table = simulate_summary(args)
    sys.stdout.write(text)
    if args.output != "-":
        path = _out_path(args.output, "simulate_summary.csv")
        _write(path, table)
        print(f"wrote summary to {path}")
    return 0


def cmd_route(args) -> int:
    t, src, dst, _ = _topology(args)
    r = discover_route(t, src, dst)
    print(" ".join(r.hops))
    print(f"N = {r.hop_count}")
    return 0


def cmd_verify(args) -> int:
    rep = run_verify(inject_xi=args.inject_xi)
    text = rep.text()
    sys.stdout.write(text)
    if args.report != "-":
        _write(_out_path(args.report, "verify_report.txt"), text)
    return 0 if rep.ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qmultihop", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common_state(p):
        p.add_argument("--tau", default="0.5,0.5,0.5,0.5", help="cluster coefficients t0,t1,t2,t3")
        p.add_argument("--rho", type=float, default=1.0, help="POVM positivity parameter")
        p.add_argument("--a0", type=float, default=2**-0.5)
        p.add_argument("--d0", type=float, default=2**-0.5)
        p.add_argument("--workers", type=int, default=1)

    sw = sub.add_parser("sweep", help="closed-form success probability / fidelity grid as CSV")
    sw.add_argument("--channel", choices=["amp", "phase"], default="amp")
    sw.add_argument("--quantity", choices=["psuc", "fidelity"], default="psuc")
    sw.add_argument("--xi", default="0..1:0.02", help="value, list a,b,c or range lo..hi:step")
    sw.add_argument("--N", default="1..120", help="hop counts: value, list or range lo..hi")
    sw.add_argument("--output", "-o", help="CSV path ('-' for stdout)")
    common_state(sw)
    sw.set_defaults(func=cmd_sweep)

    def topo(p):
        g = p.add_mutually_exclusive_group(required=True)
        g.add_argument("--topology", help="topology file")
        g.add_argument("--chain", type=int, help="use a linear chain with this many hops")
        p.add_argument("--src")
        p.add_argument("--dst")

    sm = sub.add_parser("simulate", help="Monte Carlo multihop teleportation")
    topo(sm)
    sm.add_argument("--channel", choices=["amp", "phase"], default="amp")
    sm.add_argument("--xi", type=float, default=0.0)
    sm.add_argument("--trials", type=int, default=100_000)
    sm.add_argument("--seed", type=int, default=42)
    sm.add_argument("--policy", choices=["designated", "all"], default="designated",
                    help="which Bell outcomes the receiver recovers")
    sm.add_argument("--output", "-o", help="summary CSV path ('-' to skip)")
    common_state(sm)
    sm.set_defaults(func=cmd_simulate)

    rt = sub.add_parser("route", help="discover a route with co-existing quantum and classical links")
    topo(rt)
    rt.set_defaults(func=cmd_route)

    vf = sub.add_parser("verify", help="run the invariant suite and write a report")
    vf.add_argument("--report", help="report path ('-' for stdout only)")
    vf.add_argument("--inject-xi", type=float, default=None,
                    help="also check an unvalidated amplitude Kraus set at this rate (negative control)")
    vf.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RouteNotFound as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ConfigError, TopologyParseError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
