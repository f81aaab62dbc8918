"""Single-excitation input-output solver for photon reflection off a bare
or atom-coupled one-sided cavity.

The one-photon sector reduces the operator equations to linear ODEs for the
cavity amplitude c(t) and the excited-state amplitude e(t) driven by the
input envelope f_in(t):

    dc/dt = -((kappa_c + kappa_l)/2) c - i g(t) e - sqrt(kappa_c) f_in(t)
    de/dt = -(gamma/2) e - i g(t) c
    f_out(t) = f_in(t) + sqrt(kappa_c) c(t)

Sign conventions are fixed by the flux-balance identity

    int |f_in|^2 - int |f_out|^2 = gamma int |e|^2 + kappa_l int |c|^2

and by the bare-cavity pi phase shift in the adiabatic limit.

Integration uses a classical fixed-step 4th-order Runge-Kutta scheme with
the input envelope interpolated linearly at half steps.  Because the system
is linear, each step is precomputed as an affine update
y_{n+1} = A_n y_n + b_n (vectorized over time and over a batch of motion
phases), and only the cheap recursion runs sequentially.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    CavityParams,
    PulseEnvelope,
    TimeGrid,
    TWO_PI,
    coupling_at,
    default_time_grid,
    make_sech_pulse,
)

__all__ = [
    "ReflectionRecord",
    "AveragedReflection",
    "SolverError",
    "reflect_bare",
    "reflect_coupled",
    "reflect_coupled_motion_averaged",
    "SweepRow",
    "sweep",
    "write_sweep_csv",
    "SWEEP_CSV_HEADER",
]

_CHUNK = 4096


class SolverError(RuntimeError):
    """Raised when the integrator produces a non-finite state."""


@dataclass(frozen=True)
class ReflectionRecord:
    """Output envelope and derived metrics of one reflection run.

    ``f_out_raw`` is the output envelope exactly as computed;
    ``f_out`` is its unit-norm copy (post-selection renormalization).
    """

    f_out_raw: PulseEnvelope
    f_out: PulseEnvelope
    P: float
    F: float
    phase: float
    loss_atom: float
    loss_cavity: float
    #: diagnostic int |c(t)|^2 dt (the cavity photon is "hardly created"
    #: in the coupled case; reported, not enforced)
    cavity_occupancy: float
    input_norm2: float = 1.0

    @property
    def flux_residual(self) -> float:
        """|int|f_in|^2 - int|f_out|^2 - gamma int|e|^2 - kappa_l int|c|^2|."""
        return abs(self.input_norm2 - self.P - self.loss_atom - self.loss_cavity)


@dataclass(frozen=True)
class AveragedReflection:
    """Arithmetic means of the reflection metrics over the motion phase."""

    P: float
    F: float
    phase: float
    loss_atom: float
    loss_cavity: float
    cavity_occupancy: float
    n_phi: int
    per_phi: tuple[ReflectionRecord, ...] = ()

    @property
    def flux_residual(self) -> float:
        return abs(1.0 - self.P - self.loss_atom - self.loss_cavity)


def _coupling_batch(p: CavityParams, t: np.ndarray, phis: np.ndarray) -> np.ndarray:
    """g(t) for each motion phase; shape (len(t), len(phis))."""
    arg = TWO_PI * t[:, None] / p.T_g + phis[None, :]
    return p.g0 * np.cos((np.pi / 3.0) * np.sin(arg))


def _integrate(p: CavityParams, f: np.ndarray, grid: TimeGrid, phis: np.ndarray):
    """Integrate the driven two-amplitude system for a batch of phases.

    Returns (c, e) trajectories of shape (n_steps, len(phis)).
    """
    n = grid.n_steps
    k = len(phis)
    h = grid.dt
    t = grid.times()
    kt = 0.5 * (p.kappa_c + p.kappa_l)
    gh = 0.5 * p.gamma
    sq = math.sqrt(p.kappa_c)

    c = np.zeros((n, k), dtype=complex)
    e = np.zeros((n, k), dtype=complex)
    yc = np.zeros(k, dtype=complex)
    ye = np.zeros(k, dtype=complex)

    f_half = 0.5 * (f[:-1] + f[1:])

    for start in range(0, n - 1, _CHUNK):
        stop = min(start + _CHUNK, n - 1)
        sl = slice(start, stop)
        m = stop - start

        if p.g0 != 0.0:
            ga = _coupling_batch(p, t[sl], phis)
            gb = _coupling_batch(p, t[start + 1 : stop + 1], phis)
            gm = _coupling_batch(p, t[sl] + 0.5 * h, phis)
        else:
            ga = gb = gm = np.zeros((m, k))

        def mat(g):
            M = np.empty(g.shape + (2, 2), dtype=complex)
            M[..., 0, 0] = -kt
            M[..., 0, 1] = -1j * g
            M[..., 1, 0] = -1j * g
            M[..., 1, 1] = -gh
            return M

        Ma, Mm, Mb = mat(ga), mat(gm), mat(gb)
        eye = np.eye(2, dtype=complex)

        # k_i = P_i y + q_i for the four RK4 stages of a linear system
        P1 = Ma
        P2 = Mm @ (eye + 0.5 * h * P1)
        P3 = Mm @ (eye + 0.5 * h * P2)
        P4 = Mb @ (eye + h * P3)
        A = eye + (h / 6.0) * (P1 + 2.0 * P2 + 2.0 * P3 + P4)

        def src(fv):
            s = np.zeros((m, k, 2), dtype=complex)
            s[..., 0] = -sq * fv[:, None]
            return s

        q1 = src(f[sl])
        sm = src(f_half[sl])
        q2 = 0.5 * h * np.einsum("...ij,...j->...i", Mm, q1) + sm
        q3 = 0.5 * h * np.einsum("...ij,...j->...i", Mm, q2) + sm
        q4 = h * np.einsum("...ij,...j->...i", Mb, q3) + src(f[start + 1 : stop + 1])
        b = (h / 6.0) * (q1 + 2.0 * q2 + 2.0 * q3 + q4)

        a00 = A[..., 0, 0]
        a01 = A[..., 0, 1]
        a10 = A[..., 1, 0]
        a11 = A[..., 1, 1]
        b0 = b[..., 0]
        b1 = b[..., 1]

        # a divergent step produces inf/nan here; that is detected below, so
        # silence the intermediate overflow warnings
        with np.errstate(invalid="ignore", over="ignore"):
            for j in range(m):
                yc, ye = (
                    a00[j] * yc + a01[j] * ye + b0[j],
                    a10[j] * yc + a11[j] * ye + b1[j],
                )
                c[start + j + 1] = yc
                e[start + j + 1] = ye

    if not (np.all(np.isfinite(c.view(float))) and np.all(np.isfinite(e.view(float)))):
        raise SolverError(
            "integrator produced a non-finite state; the time step is too "
            "large for the given rates"
        )
    return c, e


def _record_from_trajectory(
    p: CavityParams, f_in: PulseEnvelope, c: np.ndarray, e: np.ndarray
) -> ReflectionRecord:
    dt = f_in.grid.dt
    f = f_in.samples
    f_out = f + math.sqrt(p.kappa_c) * c

    P = float(np.trapezoid(np.abs(f_out) ** 2, dx=dt))
    occ = float(np.trapezoid(np.abs(c) ** 2, dx=dt))
    loss_atom = float(p.gamma * np.trapezoid(np.abs(e) ** 2, dx=dt))
    loss_cavity = float(p.kappa_l * occ)
    input_norm2 = f_in.squared_norm()

    ov = complex(np.trapezoid(np.conj(f) * f_out, dx=dt))
    phase = math.atan2(ov.imag, ov.real)
    F = abs(ov) / math.sqrt(input_norm2 * P) if P > 0 else 0.0

    raw = PulseEnvelope(f_in.grid, f_out)
    return ReflectionRecord(
        f_out_raw=raw,
        f_out=raw.normalized() if P > 0 else raw,
        P=P,
        F=F,
        phase=phase,
        loss_atom=loss_atom,
        loss_cavity=loss_cavity,
        cavity_occupancy=occ,
        input_norm2=input_norm2,
    )


def reflect_envelope(
    p: CavityParams, f_in: PulseEnvelope, coupled: bool
) -> ReflectionRecord:
    """Reflect an arbitrary (not necessarily normalized) envelope.

    Linear in f_in; used by the full gate simulation where branch envelopes
    carry their own amplitudes.
    """
    pp = p if coupled else CavityParams(
        g0=0.0, kappa_c=p.kappa_c, kappa_l=p.kappa_l, gamma=p.gamma,
        T_g=p.T_g, phi=p.phi,
    )
    c, e = _integrate(pp, f_in.samples, f_in.grid, np.array([pp.phi]))
    return _record_from_trajectory(pp, f_in, c[:, 0], e[:, 0])


def reflect_bare(p: CavityParams, f_in: PulseEnvelope) -> ReflectionRecord:
    """Reflection off the bare cavity (atom decoupled): the P0/F0 case."""
    return reflect_envelope(p, f_in, coupled=False)


def reflect_coupled(p: CavityParams, f_in: PulseEnvelope) -> ReflectionRecord:
    """Reflection with the atom in the coupled state: the P1/F1 case at
    the fixed motion phase p.phi."""
    return reflect_envelope(p, f_in, coupled=True)


def reflect_coupled_motion_averaged(
    p: CavityParams,
    f_in: PulseEnvelope,
    n_phi: int = 16,
    keep_envelopes: bool = True,
) -> AveragedReflection:
    """Coupled reflection averaged over n_phi equally spaced motion phases.

    Returns arithmetic means of P, F, phase and the loss terms; the per-phase
    records (with envelopes) are retained unless keep_envelopes is False.
    """
    if n_phi < 1:
        raise ValueError("n_phi must be at least 1")
    phis = TWO_PI * np.arange(n_phi) / n_phi
    try:
        c, e = _integrate(p, f_in.samples, f_in.grid, phis)
    except SolverError as exc:
        raise SolverError(f"{exc} (while batching phi={list(phis)})") from exc

    records = []
    for i, phi in enumerate(phis):
        pi_params = CavityParams(
            g0=p.g0, kappa_c=p.kappa_c, kappa_l=p.kappa_l, gamma=p.gamma,
            T_g=p.T_g, phi=float(phi),
        )
        try:
            records.append(_record_from_trajectory(pi_params, f_in, c[:, i], e[:, i]))
        except (SolverError, ValueError) as exc:
            raise SolverError(f"{exc} (at phi={phi})") from exc

    mean = lambda attr: float(np.mean([getattr(r, attr) for r in records]))
    return AveragedReflection(
        P=mean("P"),
        F=mean("F"),
        phase=mean("phase"),
        loss_atom=mean("loss_atom"),
        loss_cavity=mean("loss_cavity"),
        cavity_occupancy=mean("cavity_occupancy"),
        n_phi=n_phi,
        per_phi=tuple(records) if keep_envelopes else (),
    )


SWEEP_CSV_HEADER = (
    "g0,kappa_l,gamma,T_f,T_g,n_phi,case,P,F,phase,loss_atom,loss_cavity,error"
)


@dataclass(frozen=True)
class SweepRow:
    g0: float
    kappa_l: float
    gamma: float
    T_f: float
    T_g: float
    n_phi: int
    case: str
    P: float | None = None
    F: float | None = None
    phase: float | None = None
    loss_atom: float | None = None
    loss_cavity: float | None = None
    error: str = ""


def _fmt(x) -> str:
    return "" if x is None else f"{x:.12g}"


def sweep(
    case: str,
    g0_values=(0.0,),
    kappa_l_values=(0.0,),
    gamma_values=(0.0,),
    T_f_values=(10.0,),
    T_g_values=(50.0,),
    n_phi: int = 1,
    kappa_c: float = 1.0,
    dt: float | None = None,
) -> list[SweepRow]:
    """Evaluate the Cartesian product of the parameter ranges.

    Rows come out in lexicographic order of (g0, kappa_l, gamma, T_f, T_g).
    Per-row failures are recorded in the error column and the run continues.
    ``case`` is "bare" or "coupled"; the coupled case is phi-averaged when
    n_phi > 1.
    """
    if case not in ("bare", "coupled"):
        raise ValueError(f"unknown case {case!r}")
    for name, vals in (
        ("g0", g0_values), ("kappa_l", kappa_l_values), ("gamma", gamma_values),
        ("T_f", T_f_values), ("T_g", T_g_values),
    ):
        vals = list(vals)
        if not vals or not all(math.isfinite(v) for v in vals):
            raise ValueError(f"range {name} must be non-empty and finite")

    rows: list[SweepRow] = []
    for g0 in g0_values:
        for kl in kappa_l_values:
            for gam in gamma_values:
                for tf in T_f_values:
                    for tg in T_g_values:
                        base = dict(
                            g0=g0, kappa_l=kl, gamma=gam, T_f=tf, T_g=tg,
                            n_phi=n_phi if case == "coupled" else 1, case=case,
                        )
                        try:
                            p = CavityParams(
                                g0=g0, kappa_c=kappa_c, kappa_l=kl, gamma=gam, T_g=tg
                            )
                            grid = default_time_grid(tf, p, dt=dt)
                            f_in = make_sech_pulse(tf, grid)
                            if case == "bare":
                                rec = reflect_bare(p, f_in)
                            elif n_phi > 1:
                                rec = reflect_coupled_motion_averaged(
                                    p, f_in, n_phi, keep_envelopes=False
                                )
                            else:
                                rec = reflect_coupled(p, f_in)
                            rows.append(SweepRow(
                                **base, P=rec.P, F=rec.F, phase=rec.phase,
                                loss_atom=rec.loss_atom, loss_cavity=rec.loss_cavity,
                            ))
                        except (ValueError, SolverError) as exc:
                            rows.append(SweepRow(**base, error=str(exc)))
    return rows


def write_sweep_csv(rows, path, header_comment: str | None = None) -> None:
    """Write sweep rows in the fixed CSV schema (12 significant digits)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write(SWEEP_CSV_HEADER + "\n")
        for r in rows:
            fh.write(",".join([
                _fmt(r.g0), _fmt(r.kappa_l), _fmt(r.gamma), _fmt(r.T_f),
                _fmt(r.T_g), str(r.n_phi), r.case, _fmt(r.P), _fmt(r.F),
                _fmt(r.phase), _fmt(r.loss_atom), _fmt(r.loss_cavity),
                r.error.replace(",", ";").replace("\n", " "),
            ]) + "\n")
