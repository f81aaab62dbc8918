"""Self-contained verification suites.

Each suite returns a list of CheckResult rows (name, residual, tolerance,
pass/fail) so the command line can print a report and exit nonzero on any
failure.  The same suites back the acceptance tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cluster import (
    attach_attempt,
    make_linear_cluster,
    monte_carlo_growth,
    recover_failure,
    split_measure,
    state_fidelity,
)
from .core import CavityParams, default_time_grid, make_sech_pulse
from .gate import BranchReflectivities, circuit_oracle, two_cavity_gate, two_sided_effective_params
from .reflection import reflect_bare, reflect_coupled

__all__ = ["CheckResult", "SUITES", "run_suite"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    residual: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.residual < self.tolerance

    def line(self) -> str:
        status = "pass" if self.ok else "FAIL"
        return f"[{status}] {self.name}: residual {self.residual:.3e} (tol {self.tolerance:.0e})"


def verify_flux(dt: float | None = None) -> list[CheckResult]:
    """Flux-balance residuals on a fixed battery of bare and coupled runs."""
    results = []
    battery = [
        ("bare kl=0 Tf=10", CavityParams(), 10.0, False),
        ("bare kl=0.2 Tf=10", CavityParams(kappa_l=0.2), 10.0, False),
        ("bare kl=0.3 Tf=20", CavityParams(kappa_l=0.3), 20.0, False),
        ("coupled g0=2 Tf=10", CavityParams(g0=2.0, gamma=1.0, T_g=50.0), 10.0, True),
        ("coupled g0=5 kl=0.2 Tf=10",
         CavityParams(g0=5.0, gamma=1.0, kappa_l=0.2, T_g=125.0), 10.0, True),
    ]
    for name, p, tf, coupled in battery:
        grid = default_time_grid(tf, p, dt=dt)
        f_in = make_sech_pulse(tf, grid)
        rec = (reflect_coupled if coupled else reflect_bare)(p, f_in)
        results.append(CheckResult(f"flux balance {name}", rec.flux_residual, 1e-6))
    return results


def verify_oracle(n_samples: int = 100, seed: int = 20240) -> list[CheckResult]:
    """Closed forms vs the polarization-path circuit oracle on random points."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_samples):
        b = BranchReflectivities(P0=rng.uniform(0.05, 1.0), r=rng.uniform(0.0, 4.0))
        cf, oc = two_cavity_gate(b), circuit_oracle(b)
        worst = max(
            worst,
            abs(cf.P_L - oc.P_L),
            abs(cf.P_R - oc.P_R),
            float(np.max(np.abs(cf.psi_L.coefficients - oc.psi_L.coefficients))),
            float(np.max(np.abs(cf.psi_R.coefficients - oc.psi_R.coefficients))),
            abs(cf.F_avg - oc.F_avg),
        )
    results = [CheckResult(f"gate closed forms vs oracle ({n_samples} draws)", worst, 1e-10)]
    ideal = two_cavity_gate(BranchReflectivities(P0=0.7, r=1.0))
    results.append(CheckResult("P_total = P0^2 at r=1", abs(ideal.P_total - 0.49), 1e-12))
    results.append(CheckResult("F_avg = 1 at r=1", abs(ideal.F_avg - 1.0), 1e-12))
    return results


def verify_recovery(
    n_range=range(4, 11), bases_per_n: int = 20, seed: int = 99
) -> list[CheckResult]:
    """Failure recovery and chain splitting at unit fidelity."""
    rng = np.random.default_rng(seed)
    results = []
    for n in n_range:
        chain = make_linear_cluster(n)
        target = make_linear_cluster(n - 2)
        worst = 0.0
        for _ in range(bases_per_n):
            recovered = recover_failure(attach_attempt(chain, False, rng=rng), rng=rng)
            worst = max(worst, 1.0 - state_fidelity(recovered, target))
        results.append(
            CheckResult(f"recover_failure n={n} ({bases_per_n} random bases)", worst, 1e-10)
        )
    for n in n_range:
        if n < 5:
            continue
        chain = make_linear_cluster(n)
        worst = 0.0
        for i in range(3, n - 1):
            left, right = split_measure(chain, i, rng=rng)
            worst = max(
                worst,
                1.0 - state_fidelity(left, make_linear_cluster(i - 2)),
                1.0 - state_fidelity(right, make_linear_cluster(n - i - 1)),
            )
        results.append(CheckResult(f"split_measure n={n} all interior i", worst, 1e-10))
    return results


def verify_growth(seed: int = 777) -> list[CheckResult]:
    """Monte Carlo growth mean within 3 standard errors of (3P-2)m."""
    results = []
    m, trials = 10_000, 200
    for P in (0.5, 0.7, 0.75, 0.9):
        stats = monte_carlo_growth(P, m, trials, seed=seed)
        target = (3.0 * P - 2.0) * m
        sigma = abs(stats.mean_delta - target) / stats.std_err
        results.append(
            CheckResult(f"growth law P={P} (|mean - (3P-2)m| / std_err)", sigma, 3.0)
        )
    return results


def verify_twosided(dt: float | None = None) -> list[CheckResult]:
    """Two-sided-cavity substitution reproduces one-sided metrics."""
    results = []
    for kcp, base in (
        (0.5, CavityParams()),
        (0.5, CavityParams(g0=2.0, gamma=1.0, kappa_l=0.1, T_g=50.0)),
        (1.0, CavityParams(kappa_l=0.2)),
    ):
        eff = two_sided_effective_params(kcp, base)
        manual = CavityParams(
            g0=base.g0, kappa_c=2.0 * kcp, kappa_l=base.kappa_l,
            gamma=base.gamma, T_g=base.T_g, phi=base.phi,
        )
        grid = default_time_grid(10.0, manual, dt=dt)
        f_in = make_sech_pulse(10.0, grid)
        solve = reflect_coupled if base.g0 > 0 else reflect_bare
        ra, rb = solve(eff, f_in), solve(manual, f_in)
        res = max(abs(ra.P - rb.P), abs(ra.F - rb.F), abs(ra.phase - rb.phase))
        results.append(
            CheckResult(f"two-sided substitution kappa_c'={kcp} g0={base.g0}", res, 1e-8)
        )
    return results


SUITES = {
    "flux": verify_flux,
    "oracle": verify_oracle,
    "recovery": verify_recovery,
    "growth": verify_growth,
    "twosided": verify_twosided,
}


def run_suite(name: str) -> list[CheckResult]:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return SUITES[name]()
