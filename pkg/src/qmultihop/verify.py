"""Invariant suite behind ``qmultihop verify``.

Hard checks produce PASS/FAIL lines. Known disagreements between the
closed-form model and the brute-force CPTP model are listed as WARN; they
never fail the run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channels import NoiseKind, amplitude_kraus, kraus_set
from .network import expected_rate, single_hop_prob, total_fidelity, total_success_prob, two_hop_success_prob
from .oracle import build_instrument, coherent_vs_cptp, exact_hop
from .qmath import min_eigenvalue
from .states import ClusterParams, InputParams
from .swap import correction_table, swap_branches
from .teleport import PovmParams, branch, hop_branches, povm_set, povm_weights, recovery_pipeline

XI_GRID = [round(0.1 * i, 10) for i in range(11)]


@dataclass
class Report:
    lines: list[str] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def check(self, name: str, ok: bool, detail: str = ""):
        tag = "PASS" if ok else "FAIL"
        self.lines.append(f"[{tag}] {name}" + (f": {detail}" if detail else ""))
        if not ok:
            self.failures.append(name)

    def warn(self, name: str, detail: str):
        self.lines.append(f"[WARN] {name}: {detail}")
        self.warnings.append(name)

    def info(self, text: str):
        self.lines.append("       " + text)

    @property
    def ok(self) -> bool:
        return not self.failures

    def text(self) -> str:
        tail = (f"\n{len(self.failures)} failed, {len(self.warnings)} warnings\n"
                if self.failures else f"\nall hard invariants passed, {len(self.warnings)} warnings\n")
        return "\n".join(self.lines) + tail


def run_verify(inject_xi: float | None = None) -> Report:
    rep = Report()
    cl = ClusterParams.balanced()
    s = 1 / math.sqrt(2)
    inp = InputParams(s, s)

    worst = max(kraus_set(NoiseKind(kind, xi)).completeness_error()
                for kind in ("amp", "phase") for xi in XI_GRID)
    rep.check("Kraus completeness (amp, phase; xi = 0..1 step 0.1)", worst < 1e-12, f"max error {worst:.2e}")
    if inject_xi is not None:
        err = amplitude_kraus(inject_xi).completeness_error()
        rep.check(f"Kraus completeness (injected amplitude set, xi = {inject_xi})", err < 1e-12,
                  f"max error {err:.2e}")

    worst_id, worst_eig = 0.0, math.inf
    for xi in [0.1 * i for i in range(10)]:
        for kind in ("amp", "phase"):
            pov = povm_set(PovmParams.from_noise(NoiseKind(kind, xi), cl, 1.0))
            worst_id = max(worst_id, float(np.abs(pov.P1 + pov.P2 + pov.P3 - np.eye(4)).max()))
            worst_eig = min(worst_eig, *(min_eigenvalue(p) for p in pov.elements))
    rep.check("POVM resolves identity", worst_id < 1e-10, f"max error {worst_id:.2e}")
    rep.check("POVM elements positive", worst_eig >= -1e-9, f"min eigenvalue {worst_eig:.2e}")

    for xi in (0.0, 0.25, 0.5):
        noise = NoiseKind.amplitude(xi)
        p = PovmParams.from_noise(noise, cl, 1.0)
        rec = recovery_pipeline(branch(inp, cl, noise))
        w1 = povm_weights(rec.G1, povm_set(p))
        exp = 1 / (4 * p.rho_param * p.gamma)
        ok = abs(w1[0] - exp) < 1e-10 and abs(w1[1] - exp) < 1e-10
        rep.check(f"<G1|P1|G1> at xi_a = {xi}", ok,
                  f"⟨G1|P1|G1⟩ = {w1[0]:.6f} expected 1/(4ϱγₐ) = {exp:.6f}; ⟨G1|P2|G1⟩ = {w1[1]:.6f}")

    wsum = sum(b.weight for b in hop_branches(inp, cl, NoiseKind.amplitude(0.0)))
    rep.check("hop branch weights sum to 1 at xi = 0", abs(wsum - 1) < 1e-8, f"{wsum:.12f}")
    ssum = sum(w for _, _, w in swap_branches(cl))
    rep.check("swap branch weights sum to 1", abs(ssum - 1) < 1e-8, f"{ssum:.12f}")

    table = correction_table(cl)
    n_good = sum(e.achieved_fidelity >= 1 - 1e-10 for e in table)
    rep.check("swap corrections", n_good == 16, f"{n_good}/16 swap corrections at fidelity 1")
    for e in table:
        rep.info(f"{e.outcome.label:<10} {e.pauli_label:<12} fidelity {e.achieved_fidelity:.12f}")

    amp0 = NoiseKind.amplitude(0.0)
    p75 = total_success_prob(amp0, cl, 1.0, 75)
    rep.check("P_suc(N=75, xi=0)", abs(p75 - (1 - (15 / 16) ** 75)) < 1e-12 and abs(p75 - 0.9921) < 1e-4,
              f"{p75:.6f}")
    exact = InputParams(0.6, 0.8)  # norm is exactly 1 in binary floating point
    f0 = [total_fidelity(amp0, exact, cl, n) for n in (1, 10, 120)]
    rep.check("fidelity at xi = 0 is 1", all(f == 1.0 for f in f0), str(f0))
    f1 = [total_fidelity(NoiseKind.amplitude(1.0), exact, cl, n) for n in (1, 10, 120)]
    rep.check("fidelity at xi_a = 1 is 0", all(f == 0.0 for f in f1), str(f1))
    worst2 = 0.0
    for xi in (0.0, 0.3, 0.6):
        for kind in ("amp", "phase"):
            n = NoiseKind(kind, xi)
            for rho in (1.0, 2.0):
                worst2 = max(worst2, abs(two_hop_success_prob(PovmParams.from_noise(n, cl, rho))
                                         - total_success_prob(n, cl, rho, 2)))
    rep.check("two-hop law equals N-hop law at N = 2", worst2 < 1e-12, f"max diff {worst2:.2e}")

    inst = build_instrument(cl, amp0)
    p_ex, f_ex = exact_hop(inst, inp)
    rep.check("CPTP hop at xi = 0 reproduces 1/(2ϱγ) and unit fidelity",
              abs(p_ex - 1 / 16) < 1e-10 and abs(f_ex - 1) < 1e-10, f"P = {p_ex:.12f}, F = {f_ex:.12f}")

    noise = NoiseKind.amplitude(0.3)
    cmp = coherent_vs_cptp(inp, cl, noise)
    rep.warn("coherent branch coefficients vs CPTP at xi_a = 0.3",
             f"branch weight {cmp['coherent_weight']:.6f} (coherent) vs {cmp['cptp_weight']:.6f} (CPTP), "
             f"normalized overlap {cmp['state_overlap']:.6f}")
    p_cf = single_hop_prob(noise, cl)
    p_cp, f_cp = exact_hop(build_instrument(cl, noise), inp)
    rep.warn("single hop at xi_a = 0.3",
             f"closed form P = {p_cf:.6f}, F = {total_fidelity(noise, inp, cl, 1) ** 0.5:.6f}; "
             f"CPTP (E-side qubits noisy) P = {p_cp:.6f}, F = {f_cp:.6f}")
    p = single_hop_prob(amp0, cl)
    rep.warn("N-hop success law semantics at N = 2",
             f"1-(1-p)^N = {expected_rate('any', p, 2):.8f} (at-least-one) vs "
             f"p^N = {expected_rate('sequential', p, 2):.8f} (relay every hop)")
    return rep
