"""Propagation solvers: full three-level dynamics and the reduced
(adiabatically eliminated) model, plus the end-to-end storage/retrieval
pipeline and the closed-form spectral echo solution.

Frames and conventions (group velocity 1, local time tau = t - z):

full model, write stage (stage 1, forward field A):
    dR13/dtau = -(i*(delta01 + delta1) + gamma31) R13 + i W(tau) R12 + i A
    dR12/dtau = -(i*Delta1 + gamma21) R12 + i W(tau) R13
    dA/dZ     = i (beta/2) sum_nodes w R13
Read stage (stage 2) propagates the field backward: dA/dZ flips sign and the
boundary moves to Z = L.

reduced model, stage mu with coupling r = W_mu/delta0_mu:
    dM/dtau = -(i*Dt + gamma21) M + i r E
    dE/dZ   = (-1)^(mu+1) i (beta r / 2) sum_nodes w M
where Dt is the light-shift-corrected two-photon detuning and E, M carry the
refractive background phase stripped off:
    stage 1: E = A exp(-i beta Z / (2 delta01)),  M = R12 exp(-i beta Z / (2 delta01))
    stage 2: A = E exp(-i beta Z / (2 delta02)),  M = R12 exp(+i beta Z / (2 delta02))
The node grid `d` always means the stage-1 shifted detuning; a time-rescaled
read stage sees each node at -eta*d.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from . import efficiency, switching
from .params import (BroadeningSpec, DomainError, FieldEnvelope,
                     PhysicalParams, SimulationGrid, quadrature_nodes,
                     stark_shifted_detuning)

__all__ = [
    "ControlSegment",
    "PropagationProblem",
    "StageResult",
    "PipelineResult",
    "spectral_ensemble",
    "graded_z_grid",
    "gaussian_input",
    "simulate_storage_reduced",
    "simulate_retrieval_reduced",
    "simulate_storage_full",
    "simulate_retrieval_full",
    "echo_spectral_solution",
    "stage_handoff_multipliers",
    "run_pipeline",
    "stored_excitation_reduced",
    "stored_excitation_full",
]


# ===================== control schedules =====================

@dataclass(frozen=True)
class ControlSegment:
    """One piece of a control timeline.  kinds:
    constant  -> level
    ramp_down -> level * exp(-rate * (tau - t0))
    ramp_up   -> level * exp(+rate * (tau - t1))   (reaches level at t1)
    off       -> 0
    """

    t0: float
    t1: float
    kind: str = "constant"
    level: float = 1.0
    rate: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("constant", "ramp_down", "ramp_up", "off"):
            raise DomainError(f"unknown control segment kind {self.kind!r}")
        if self.t1 <= self.t0:
            raise DomainError("control segment needs t1 > t0")
        if self.kind in ("ramp_down", "ramp_up") and self.rate <= 0:
            raise DomainError("ramp segments need a positive rate")

    def value(self, tau: float) -> float:
        if self.kind == "constant":
            return self.level
        if self.kind == "off":
            return 0.0
        if self.kind == "ramp_down":
            return self.level * math.exp(-self.rate * (tau - self.t0))
        return self.level * math.exp(self.rate * (tau - self.t1))


def control_value(schedule, tau: float) -> float:
    for seg in schedule:
        if seg.t0 <= tau <= seg.t1:
            return seg.value(tau)
    return 0.0


def write_schedule(params: PhysicalParams, t_end: float):
    """Constant write control until tau0, then exponential ramp-down."""
    segs = [ControlSegment(0.0, params.tau0, "constant",
                           params.omega1_rabi)]
    if t_end > params.tau0:
        segs.append(ControlSegment(params.tau0, t_end, "ramp_down",
                                   params.omega1_rabi, params.k_off))
    return tuple(segs)


def read_schedule(params: PhysicalParams, t_on: float, t_end: float):
    """Exponential ramp-up reaching the read level at t_on, then constant."""
    segs = []
    if t_on > 0.0:
        segs.append(ControlSegment(0.0, t_on, "ramp_up",
                                   params.omega2_rabi, params.k_on))
    segs.append(ControlSegment(t_on, t_end, "constant", params.omega2_rabi))
    return tuple(segs)


# ===================== problem / result records =====================

@dataclass(frozen=True)
class PropagationProblem:
    """Bundle of everything one stage run needs."""

    params: PhysicalParams
    broadening: BroadeningSpec
    grid: SimulationGrid
    input_field: FieldEnvelope | None = None
    stage: int = 1
    model: str = "reduced"              # "reduced" | "full"
    direction: str = "forward"
    control_schedule: tuple = ()

    def __post_init__(self) -> None:
        if self.stage not in (1, 2):
            raise DomainError("stage must be 1 or 2")
        if self.model not in ("reduced", "full"):
            raise DomainError("model must be 'reduced' or 'full'")
        if self.direction not in ("forward", "backward"):
            raise DomainError("direction must be forward/backward")


@dataclass
class StageResult:
    """One stage of propagation on the (tau, z, node) grid."""

    tau: np.ndarray
    z: np.ndarray
    d_nodes: np.ndarray
    weights: np.ndarray
    field_out: FieldEnvelope
    m_final: np.ndarray                  # (nz, nd) spin amplitudes at tau[-1]
    e_history: np.ndarray                # (nt, nz)
    s_history: np.ndarray                # (nt, nz): weighted node sum of M
    m_history: np.ndarray | None = None  # (nt, nz_sub, nd_sub) optional
    m_hist_z_idx: np.ndarray | None = None
    m_hist_d_idx: np.ndarray | None = None
    energy_in: float = 0.0
    energy_out: float = 0.0
    stored: float = 0.0

    @property
    def dtau(self) -> float:
        return float(self.tau[1] - self.tau[0])


# ===================== grids & inputs =====================

def spectral_ensemble(params: PhysicalParams, broadening: BroadeningSpec,
                      n_nodes: int | None = None):
    """Two-photon node/weight sets in the stage-1 shifted-detuning variable."""
    return quadrature_nodes(broadening, n_nodes, line="raman")


def graded_z_grid(length: float, depth: float, n_uniform: int = 48,
                  growth: float = 1.15, max_frac: float = 1.0 / 40.0):
    """Spatial grid refined toward the entrance face when the medium is
    optically thick; uniform otherwise.  First spacing ~ 1/(8*depth)
    absorption lengths, growing geometrically to length*max_frac."""
    if depth <= 8.0:
        return np.linspace(0.0, length, n_uniform + 1)
    dz = length / (8.0 * depth)
    dz_max = length * max_frac
    pts = [0.0]
    while pts[-1] < length:
        pts.append(pts[-1] + dz)
        dz = min(dz * growth, dz_max)
    pts[-1] = length
    if pts[-1] - pts[-2] < 0.25 * dz_max:
        del pts[-2]
    return np.asarray(pts)


def gaussian_input(t_peak: float, sigma_t: float, axis: np.ndarray,
                   amplitude: complex = 1.0) -> FieldEnvelope:
    samples = amplitude * np.exp(-0.5 * ((axis - t_peak) / sigma_t) ** 2)
    return FieldEnvelope(samples=samples.astype(complex), axis=axis,
                         z=0.0, direction="forward", kind="time")


def _input_callable(env):
    if callable(env):
        return env
    axis, samples = env.axis, env.samples

    def fn(tau):
        return (np.interp(tau, axis, samples.real, left=0.0, right=0.0)
                + 1j * np.interp(tau, axis, samples.imag, left=0.0,
                                 right=0.0))
    return fn


def _cumtrapz0(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    return cumulative_trapezoid(y, x, axis=0, initial=0.0)


# ===================== reduced solver =====================

def _reduced_march(params, tau, z, d_nodes, weights, input_fn, stage,
                   sign, m_init, m_subset):
    """RK4 method-of-lines for the reduced model.  The field is algebraic in
    M (single cumulative integral per evaluation), so the marching state is
    just the (nz, nd) spin array."""
    r = params.omega(stage) / params.delta0(stage)
    coupl = 0.5 * params.beta * r
    if stage == 1:
        dt_nodes = d_nodes
    else:
        dt_nodes = -params.eta * d_nodes
    lam = -(1j * dt_nodes + params.gamma21)          # (nd,)
    nt, nz, nd = len(tau), len(z), len(d_nodes)
    m = m_init.astype(complex).copy()
    e_hist = np.empty((nt, nz), dtype=complex)
    s_hist = np.empty((nt, nz), dtype=complex)
    m_hist = None
    if m_subset is not None:
        z_idx, d_idx = m_subset
        m_hist = np.empty((nt, len(z_idx), len(d_idx)), dtype=complex)

    def field_of(mm, t):
        s = mm @ weights
        if sign > 0:
            e = input_fn(t) + 1j * coupl * _cumtrapz0(s, z)
        else:
            # dE/dZ = -i c S with E(L) = 0 gives E(Z) = +i c Int_Z^L S; the
            # reversed cumulative integral below is -Int_Z^L, hence the sign
            tail = _cumtrapz0(s[::-1], z[::-1])[::-1]
            e = -1j * coupl * tail
        return e, s

    def rhs(mm, t):
        e, _ = field_of(mm, t)
        return lam[None, :] * mm + 1j * r * e[:, None]

    dt = tau[1] - tau[0]
    for it, t in enumerate(tau):
        e, s = field_of(m, t)
        e_hist[it] = e
        s_hist[it] = s
        if m_hist is not None:
            m_hist[it] = m[np.ix_(z_idx, d_idx)]
        if it == nt - 1:
            break
        k1 = rhs(m, t)
        k2 = rhs(m + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = rhs(m + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = rhs(m + dt * k3, t + dt)
        m = m + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return m, e_hist, s_hist, m_hist


def simulate_storage_reduced(params: PhysicalParams,
                             broadening: BroadeningSpec,
                             input_field, *,
                             t_end: float | None = None,
                             dtau: float = 0.125,
                             n_nodes: int | None = None,
                             nz: int = 48,
                             m_subset=None) -> StageResult:
    """Write-stage run of the reduced model with constant write control.

    Returns the transmitted field at Z = L, the final spin array and the
    field / collective-spin histories."""
    if params.beta <= 0:
        raise DomainError("params.beta must be resolved (> 0) before a run; "
                          "see efficiency.resolve_coupling")
    if not _offres_ok(params, broadening, stage=1):
        raise DomainError("reduced model outside its validity range: "
                          "|delta01| must exceed the Rabi frequency and "
                          "broadening widths")
    if t_end is None:
        t_end = params.tau0 if params.tau0 > 0 else float(input_field.axis[-1])
    d_nodes, weights = spectral_ensemble(params, broadening, n_nodes)
    _check_reduced_step(dtau, d_nodes, params)
    nt = int(round(t_end / dtau)) + 1
    tau = np.linspace(0.0, t_end, nt)
    depth = efficiency.line_center_depth(params, broadening)
    z = graded_z_grid(params.medium_length, depth, n_uniform=nz)
    input_fn = _input_callable(input_field)
    m0 = np.zeros((len(z), len(d_nodes)), dtype=complex)
    m, e_hist, s_hist, m_hist = _reduced_march(
        params, tau, z, d_nodes, weights, input_fn, 1, +1, m0, m_subset)
    e_in = np.array([input_fn(t) for t in tau])
    out = FieldEnvelope(samples=e_hist[:, -1], axis=tau,
                        z=params.medium_length, direction="forward",
                        kind="time")
    res = StageResult(tau=tau, z=z, d_nodes=d_nodes, weights=weights,
                      field_out=out, m_final=m, e_history=e_hist,
                      s_history=s_hist,
                      energy_in=float(np.trapezoid(np.abs(e_in) ** 2, tau)),
                      energy_out=out.energy(),
                      stored=stored_excitation_reduced(params, z, weights, m))
    if m_subset is not None:
        res.m_history = m_hist
        res.m_hist_z_idx = np.asarray(m_subset[0])
        res.m_hist_d_idx = np.asarray(m_subset[1])
    return res


def simulate_retrieval_reduced(params: PhysicalParams,
                               broadening: BroadeningSpec,
                               m_initial: np.ndarray,
                               z: np.ndarray,
                               d_nodes: np.ndarray,
                               weights: np.ndarray, *,
                               t_end: float,
                               dtau: float,
                               direction: str = "backward",
                               m_subset=None) -> StageResult:
    """Read-stage run of the reduced model from a prepared spin array.

    The node grid is still the stage-1 shifted detuning; each node evolves at
    -eta*d.  direction='backward' (the echo direction) integrates the field
    from Z = L toward 0; 'forward' keeps the write-stage geometry to expose
    the reabsorption penalty."""
    if params.beta <= 0:
        raise DomainError("params.beta must be resolved (> 0) before a run")
    _check_reduced_step(dtau, params.eta * d_nodes, params)
    nt = int(round(t_end / dtau)) + 1
    tau = np.linspace(0.0, t_end, nt)
    sign = -1 if direction == "backward" else +1
    m, e_hist, s_hist, m_hist = _reduced_march(
        params, tau, z, d_nodes, weights, lambda t: 0.0, 2, sign,
        m_initial, m_subset)
    exit_idx = 0 if direction == "backward" else -1
    out = FieldEnvelope(samples=e_hist[:, exit_idx], axis=tau,
                        z=float(z[exit_idx]), direction=direction,
                        kind="time")
    res = StageResult(tau=tau, z=z, d_nodes=d_nodes, weights=weights,
                      field_out=out, m_final=m, e_history=e_hist,
                      s_history=s_hist, energy_in=0.0,
                      energy_out=out.energy(),
                      stored=stored_excitation_reduced(params, z, weights, m))
    if m_subset is not None:
        res.m_history = m_hist
        res.m_hist_z_idx = np.asarray(m_subset[0])
        res.m_hist_d_idx = np.asarray(m_subset[1])
    return res


def _offres_ok(params, broadening, stage):
    widths = [broadening.optical_width]
    if broadening.is_gradient:
        widths.append(abs(broadening.chi) * params.medium_length / 2)
    else:
        widths.append(broadening.raman_width)
    return abs(params.delta0(stage)) > max(params.omega(stage), *widths)


def _check_reduced_step(dtau, dt_nodes, params):
    fastest = np.max(np.abs(dt_nodes)) + params.gamma21
    if fastest > 0 and dtau * fastest > 0.5:
        raise DomainError(
            f"time step {dtau:g} too coarse for detuning span "
            f"{fastest:g} (need dtau * span <= 0.5)")


def stored_excitation_reduced(params, z, weights, m) -> float:
    """(beta/2) integral over Z of the weighted node sum of |M|^2."""
    dens = (np.abs(m) ** 2) @ weights
    return float(0.5 * params.beta * np.trapezoid(dens, z))


# ===================== full solver =====================

def _full_ensemble(params, broadening, n_nodes, n_optical):
    d_nodes, d_w = quadrature_nodes(broadening, n_nodes, line="raman")
    o_nodes, o_w = quadrature_nodes(broadening, n_optical, line="optical")
    dd, oo = np.meshgrid(d_nodes, o_nodes, indexing="ij")
    ww = np.outer(d_w, o_w)
    return dd.ravel(), oo.ravel(), ww.ravel(), d_nodes


def _raw_two_photon(params, d_nodes, stage):
    """Raw two-photon detuning that puts the stage's shifted detuning at the
    requested node value: stage 1 at +d, a time-rescaled stage 2 at -eta*d."""
    if stage == 1:
        return np.array([stark_shifted_detuning(params, d, 1, inverse=True)
                         for d in np.atleast_1d(d_nodes)])
    return np.array([stark_shifted_detuning(params, -params.eta * d, 2,
                                            inverse=True)
                     for d in np.atleast_1d(d_nodes)])


def _full_march(params, tau, z, Delta1, delta1, weights, input_fn,
                schedule, stage, sign, r13_0, r12_0, keep_history):
    d0 = params.delta0(stage)
    lam13 = -(1j * (d0 + delta1) + params.gamma31)       # (nodes,)
    lam12 = -(1j * Delta1 + params.gamma21)
    half_beta = 0.5 * params.beta
    r13 = r13_0.astype(complex).copy()
    r12 = r12_0.astype(complex).copy()
    nt, nz = len(tau), len(z)
    a_exit = np.empty(nt, dtype=complex)
    a_hist = np.empty((nt, nz), dtype=complex) if keep_history else None
    exit_idx = -1 if sign > 0 else 0

    def field_of(y13, t):
        s = y13 @ weights
        if sign > 0:
            return input_fn(t) + 1j * half_beta * _cumtrapz0(s, z)
        # backward branch: reversed cumulative integral is -Int_Z^L, so
        # A(Z) = +i (beta/2) Int_Z^L needs the extra minus
        tail = _cumtrapz0(s[::-1], z[::-1])[::-1]
        return -1j * half_beta * tail

    def rhs(y13, y12, t):
        a = field_of(y13, t)
        w = control_value(schedule, t)
        d13 = lam13[None, :] * y13 + 1j * w * y12 + 1j * a[:, None]
        d12 = lam12[None, :] * y12 + 1j * w * y13
        return d13, d12

    dt = tau[1] - tau[0]
    for it, t in enumerate(tau):
        a = field_of(r13, t)
        a_exit[it] = a[exit_idx]
        if keep_history:
            a_hist[it] = a
        if it == nt - 1:
            break
        k1a, k1b = rhs(r13, r12, t)
        k2a, k2b = rhs(r13 + 0.5 * dt * k1a, r12 + 0.5 * dt * k1b,
                       t + 0.5 * dt)
        k3a, k3b = rhs(r13 + 0.5 * dt * k2a, r12 + 0.5 * dt * k2b,
                       t + 0.5 * dt)
        k4a, k4b = rhs(r13 + dt * k3a, r12 + dt * k3b, t + dt)
        r13 = r13 + (dt / 6.0) * (k1a + 2 * k2a + 2 * k3a + k4a)
        r12 = r12 + (dt / 6.0) * (k1b + 2 * k2b + 2 * k3b + k4b)
    return r13, r12, a_exit, a_hist


@dataclass
class FullStageResult:
    tau: np.ndarray
    z: np.ndarray
    Delta1: np.ndarray
    delta1: np.ndarray
    weights: np.ndarray
    field_out: FieldEnvelope
    r13: np.ndarray
    r12: np.ndarray
    a_history: np.ndarray | None = None
    energy_in: float = 0.0
    energy_out: float = 0.0
    stored: float = 0.0


def simulate_storage_full(params: PhysicalParams,
                          broadening: BroadeningSpec,
                          input_field, *,
                          t_end: float,
                          dtau: float | None = None,
                          n_nodes: int | None = None,
                          n_optical: int = 1,
                          nz: int = 48,
                          control_schedule=None,
                          keep_history: bool = False) -> FullStageResult:
    """Write-stage run of the full three-level model (no adiabatic
    elimination).  The optical phase rotates at ~delta01, so the default time
    step resolves it with ~200 points per period."""
    if params.beta <= 0:
        raise DomainError("params.beta must be resolved (> 0) before a run")
    Dg, og, wg, d_nodes = _full_ensemble(params, broadening, n_nodes,
                                         n_optical)
    Delta1 = _raw_two_photon(params, Dg, 1)
    if dtau is None:
        dtau = 0.03 / abs(params.delta01)
    fastest = np.max(np.abs(params.delta01 + og)) + params.omega1_rabi
    if dtau * fastest > 0.2:
        raise DomainError(f"time step {dtau:g} too coarse for optical "
                          f"frequency {fastest:g}")
    nt = int(round(t_end / dtau)) + 1
    tau = np.linspace(0.0, t_end, nt)
    depth = efficiency.line_center_depth(params, broadening)
    z = graded_z_grid(params.medium_length, depth, n_uniform=nz)
    if control_schedule is None:
        control_schedule = (ControlSegment(0.0, t_end, "constant",
                                           params.omega1_rabi),)
    input_fn = _input_callable(input_field)
    shape = (len(z), len(Delta1))
    r13, r12, a_exit, a_hist = _full_march(
        params, tau, z, Delta1, og, wg, input_fn, control_schedule, 1, +1,
        np.zeros(shape, complex), np.zeros(shape, complex), keep_history)
    e_in = np.array([input_fn(t) for t in tau])
    out = FieldEnvelope(samples=a_exit, axis=tau, z=params.medium_length,
                        direction="forward", kind="time")
    return FullStageResult(
        tau=tau, z=z, Delta1=Delta1, delta1=og, weights=wg, field_out=out,
        r13=r13, r12=r12, a_history=a_hist,
        energy_in=float(np.trapezoid(np.abs(e_in) ** 2, tau)),
        energy_out=out.energy(),
        stored=stored_excitation_full(params, z, wg, r13, r12))


def simulate_retrieval_full(params: PhysicalParams,
                            broadening: BroadeningSpec,
                            r13_init: np.ndarray, r12_init: np.ndarray,
                            z: np.ndarray, Delta1_grid: np.ndarray,
                            delta1_grid: np.ndarray, weights: np.ndarray, *,
                            t_end: float,
                            dtau: float | None = None,
                            control_schedule=None,
                            direction: str = "backward",
                            keep_history: bool = False) -> FullStageResult:
    """Read-stage run of the full model from prepared coherence arrays.
    Delta1_grid must already be the stage-2 raw two-photon detunings."""
    if params.beta <= 0:
        raise DomainError("params.beta must be resolved (> 0) before a run")
    if dtau is None:
        dtau = 0.03 / abs(params.delta02)
    nt = int(round(t_end / dtau)) + 1
    tau = np.linspace(0.0, t_end, nt)
    if control_schedule is None:
        control_schedule = (ControlSegment(0.0, t_end, "constant",
                                           params.omega2_rabi),)
    sign = -1 if direction == "backward" else +1
    r13, r12, a_exit, a_hist = _full_march(
        params, tau, z, Delta1_grid, delta1_grid, weights, lambda t: 0.0,
        control_schedule, 2, sign, r13_init, r12_init, keep_history)
    exit_z = float(z[0] if direction == "backward" else z[-1])
    out = FieldEnvelope(samples=a_exit, axis=tau, z=exit_z,
                        direction=direction, kind="time")
    return FullStageResult(
        tau=tau, z=z, Delta1=Delta1_grid, delta1=delta1_grid, weights=weights,
        field_out=out, r13=r13, r12=r12, a_history=a_hist,
        energy_in=0.0, energy_out=out.energy(),
        stored=stored_excitation_full(params, z, weights, r13, r12))


def stored_excitation_full(params, z, weights, r13, r12) -> float:
    dens = (np.abs(r13) ** 2 + np.abs(r12) ** 2) @ weights
    return float(0.5 * params.beta * np.trapezoid(dens, z))


# ===================== closed-form spectral echo =====================

def echo_spectral_solution(params: PhysicalParams,
                           broadening: BroadeningSpec,
                           input_spectrum: FieldEnvelope,
                           nu_out: np.ndarray | None = None) -> FieldEnvelope:
    """Frequency-domain echo prediction for the time-rescaled read-out:

        E2(nu) = sqrt(eps~ / eta) E1(-nu/eta) (1 - exp(-kappa_c(-nu/eta)))

    with eps~ the switching/decay part of the efficiency budget and kappa_c
    the complex line depth of the write stage.  Output times are measured
    from the arrival of the image of the input's time origin (apply an extra
    exp(i nu T) for a different epoch).  Only eta_prime == eta admits this
    closed form.
    """
    if params.eta_prime != params.eta:
        raise DomainError("closed-form echo requires eta_prime == eta")
    if input_spectrum.kind != "freq":
        raise DomainError("input_spectrum must be a frequency-domain envelope")
    eta = params.eta
    if nu_out is None:
        nu_out = -eta * input_spectrum.axis[::-1]
    nu_src = -nu_out / eta
    e1 = (np.interp(nu_src, input_spectrum.axis, input_spectrum.samples.real,
                    left=0.0, right=0.0)
          + 1j * np.interp(nu_src, input_spectrum.axis,
                           input_spectrum.samples.imag, left=0.0, right=0.0))
    kap = np.array([efficiency.complex_line_depth(params, broadening, nu)
                    for nu in nu_src])
    amp = math.sqrt(efficiency.eps_tilde(params, broadening) / eta)
    samples = amp * e1 * (1.0 - np.exp(-kap))
    return FieldEnvelope(samples=samples, axis=np.asarray(nu_out, float),
                         z=0.0, direction="backward", kind="freq")


# ===================== pipeline =====================

def stage_handoff_multipliers(params: PhysicalParams, d_nodes: np.ndarray):
    """Per-node factor applied to the stored spin wave between the write and
    read runs: exact switch-off transfer, free precession over the storage
    interval at the raw (unshifted) detuning, then the read-ramp partition
    with the optical component entering at its adiabatic weight."""
    on = switching.switch_on_coefficients(params)
    w2 = params.omega2_rabi / params.delta02
    on_factor = on.c12 + 1j * w2 * on.c13
    shift1 = params.omega1_rabi ** 2 / params.delta01
    mult = np.empty(len(d_nodes), dtype=complex)
    for i, d in enumerate(d_nodes):
        raw = stark_shifted_detuning(params, d, 1, inverse=True)
        pre = switching.init_coherence_after_storage(params, 0.0, raw, 1.0)
        pair = switching.CoherencePair(r12=1.0 + 0.0j,
                                       r13=pre.r13 / pre.r12)
        off = switching.switch_off_asymptotic(params, pair, 0.0, raw)
        interval = np.exp(-(1j * (d + shift1) + params.gamma21)
                          * params.tau_st)
        mult[i] = off.r12 * interval * on_factor
    return mult


def background_phase_mismatch(params: PhysicalParams,
                              z: np.ndarray) -> np.ndarray:
    """Refractive-background phase ramp between the write-stage and
    read-stage frames, exp(i beta Z (1/delta01 + 1/delta02) / 2).

    The model treats this as compensated (the phase-matching assumption
    baked into the staged reduced equations); the pipeline therefore does
    NOT apply it.  It is exposed so the penalty of an uncompensated
    background can be studied deliberately."""
    return np.exp(1j * 0.5 * params.beta * z
                  * (1.0 / params.delta01 + 1.0 / params.delta02))


@dataclass
class PipelineResult:
    params: PhysicalParams
    broadening: BroadeningSpec
    input_env: FieldEnvelope
    echo_env: FieldEnvelope
    storage: StageResult
    retrieval: StageResult
    eps_sim: float
    t_peak_in: float
    tau2_peak: float
    delay: float
    tau_echo_origin: float
    model: "efficiency.EfficiencyBreakdown"


def run_pipeline(params: PhysicalParams, broadening: BroadeningSpec, *,
                 t_peak: float = 35.0, sigma_t: float = 10.0,
                 dtau: float = 0.125, n_nodes: int | None = None,
                 nz: int = 48, direction: str = "backward",
                 retrieval_margin: float = 12.0,
                 m_subset=None) -> PipelineResult:
    """Full storage -> switch maps -> read-out chain on the reduced model.

    The switch transients are applied as instantaneous per-node maps at the
    write/read boundaries; tau_st is the control-off interval between them.
    """
    if params.tau0 <= t_peak:
        raise DomainError("tau0 must lie beyond the input peak")
    p = params
    if p.beta <= 0:
        p = efficiency.resolve_coupling(p, broadening)
    nt_in = max(int(round(p.tau0 / dtau)) + 1, 2)
    t_axis = np.linspace(0.0, p.tau0, nt_in)
    env_in = gaussian_input(t_peak, sigma_t, t_axis)
    storage = simulate_storage_reduced(p, broadening, env_in, t_end=p.tau0,
                                       dtau=dtau, n_nodes=n_nodes, nz=nz,
                                       m_subset=m_subset)
    mult = stage_handoff_multipliers(p, storage.d_nodes)
    m2 = storage.m_final * mult[None, :]
    eta = p.eta
    t_end2 = (p.tau0 + p.tau_st) / eta + retrieval_margin * sigma_t / eta \
        + 8.0 * dtau
    dtau2 = dtau / eta if eta > 1 else dtau
    retrieval = simulate_retrieval_reduced(
        p, broadening, m2, storage.z, storage.d_nodes, storage.weights,
        t_end=t_end2, dtau=dtau2, direction=direction, m_subset=m_subset)
    echo = retrieval.field_out
    eps_sim = echo.energy() / storage.energy_in if storage.energy_in else 0.0
    ip = int(np.argmax(np.abs(env_in.samples)))
    ie = int(np.argmax(np.abs(echo.samples)))
    t_peak_meas = float(env_in.axis[ip])
    tau2_peak = float(echo.axis[ie])
    delay = (p.tau0 - t_peak_meas) + p.tau_st + tau2_peak
    breakdown = efficiency.overall_efficiency(p, broadening)
    return PipelineResult(
        params=p, broadening=broadening, input_env=env_in, echo_env=echo,
        storage=storage, retrieval=retrieval, eps_sim=eps_sim,
        t_peak_in=t_peak_meas, tau2_peak=tau2_peak, delay=delay,
        tau_echo_origin=(p.tau0 + p.tau_st) / eta, model=breakdown)
