"""Time evolution: TDSE for pure states and the thermal Lindblad master equation.

Both integrators work in the dimensionless units of the circuit module
(hbar = 1, time in 1/omega_s). Hamiltonians are passed as callables t -> H;
objects exposing `breakpoints` and `static_on(a, b)` (see circuit.RampHamiltonian)
let the integrators split at drive discontinuities and reuse work on
constant-H stretches. The integration scheme itself is fixed-step RK4 or an
embedded adaptive RK45 (scipy); on constant-H stretches the RK4 path applies
the identical one-step RK4 map through a precomputed step matrix.

Internally H is shifted by its mean diagonal (a pure global phase for the
TDSE, exactly nothing for the master equation) to reduce the spectral radius
seen by the integrator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .circuit import HBAR, KB
from .linalg import PositivityError, hermitize

NORM_ABORT = 1e-6
TRACE_ABORT = 1e-6
POSITIVITY_ABORT = 1e-6


class IntegrationError(RuntimeError):
    """The integrator failed (step-size underflow, solver breakdown)."""


class NormDriftError(IntegrationError):
    """State norm (or trace) drifted beyond the abort threshold."""


def thermal_occupation(Tb: float, omega_b: float) -> float:
    """Bose-Einstein mean photon number 1/(exp(hbar w / kB T) - 1)."""
    if Tb <= 0 or omega_b <= 0:
        raise ValueError("temperature and frequency must be positive")
    return 1.0 / math.expm1(HBAR * omega_b / (KB * Tb))


@dataclass(frozen=True)
class BathParams:
    """Two independent thermal baths, one per component.

    gamma_e / gamma_s are damping rates in omega_s units; omega_b in rad/s.
    """

    gamma_e: float = 0.0
    gamma_s: float = 0.0
    Tb: float = 4.2
    omega_b: float | None = None

    def __post_init__(self):
        if self.gamma_e < 0 or self.gamma_s < 0:
            raise ValueError("damping rates must be nonnegative")

    @property
    def mean_occupation(self) -> float:
        if self.omega_b is None:
            raise ValueError("BathParams.omega_b is unset")
        return thermal_occupation(self.Tb, self.omega_b)

    # both baths share Tb and omega_b
    @property
    def Me(self) -> float:
        return self.mean_occupation

    @property
    def Ms(self) -> float:
        return self.mean_occupation


@dataclass
class QuantumState:
    """Pure state vector or density matrix on the field (x) ring product space."""

    data: np.ndarray
    dims: tuple[int, int]
    t: float = 0.0

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    @classmethod
    def pure(cls, vector: np.ndarray, dims: tuple[int, int], t: float = 0.0) -> "QuantumState":
        v = np.asarray(vector, dtype=complex)
        if abs(np.linalg.norm(v) - 1.0) > 1e-8:
            raise ValueError("pure state vector is not normalized")
        return cls(v, dims, t)

    @classmethod
    def mixed(cls, rho: np.ndarray, dims: tuple[int, int], t: float = 0.0) -> "QuantumState":
        r = np.asarray(rho, dtype=complex)
        if abs(np.trace(r).real - 1.0) > 1e-8:
            raise ValueError("density matrix trace differs from 1")
        if np.max(np.abs(r - r.conj().T)) > 1e-8:
            raise ValueError("density matrix is not Hermitian")
        return cls(r, dims, t)

    def density(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return self.data

    def purity(self) -> float:
        if self.is_pure:
            return 1.0
        return float(np.trace(self.data @ self.data).real)


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4"       # "rk4" | "adaptive"
    dt: float = 0.005         # omega_s^-1, fixed-step size
    rtol: float = 1e-9
    atol: float = 1e-12

    def __post_init__(self):
        if self.method not in ("rk4", "adaptive"):
            raise ValueError(f"unknown integrator method {self.method!r}")
        if self.dt <= 0:
            raise ValueError("IntegratorConfig.dt must be positive")


@dataclass
class Trajectory:
    times: np.ndarray
    states: list[QuantumState]
    max_norm_drift: float = 0.0
    max_trace_drift: float = 0.0
    min_eigenvalue: float = 0.0

    def __iter__(self):
        return iter(self.states)


def _knots(t_start: float, t_end: float, sample_times, breakpoints):
    """Sorted integration knots = sample grid plus drive breakpoints."""
    samples = np.asarray(sample_times, dtype=float)
    if samples[0] != t_start or samples[-1] != t_end:
        raise ValueError("sample_times must start at t_start and end at t_end")
    extra = [b for b in breakpoints if t_start < b < t_end]
    knots = np.unique(np.concatenate([samples, np.asarray(extra)]))
    sample_set = set(np.round(samples, 12))
    flags = [round(k, 12) in sample_set for k in knots]
    return knots, flags


def _sample_grid(t_start, t_end, sample_dt, sample_times):
    if sample_times is not None:
        return np.asarray(sample_times, dtype=float)
    n = max(1, int(round((t_end - t_start) / sample_dt)))
    return np.linspace(t_start, t_end, n + 1)


def _static_on(hamiltonian, a, b):
    probe = getattr(hamiltonian, "static_on", None)
    return probe(a, b) if probe is not None else False


def evolve_tdse(
    state: QuantumState,
    hamiltonian,
    t_end: float,
    config: IntegratorConfig | None = None,
    sample_dt: float = 0.5,
    sample_times=None,
    breakpoints=None,
) -> Trajectory:
    """Integrate i dpsi/dt = H(t) psi from state.t to t_end.

    Samples are emitted on the requested output grid; the integrator never
    steps across a drive breakpoint. Aborts when |norm - 1| exceeds 1e-6.
    """
    if not state.is_pure:
        raise ValueError("evolve_tdse expects a pure state")
    cfg = config or IntegratorConfig()
    if breakpoints is None:
        breakpoints = getattr(hamiltonian, "breakpoints", ())
    t_start = state.t
    samples = _sample_grid(t_start, t_end, sample_dt, sample_times)
    knots, is_sample = _knots(t_start, t_end, samples, breakpoints)

    dim = state.data.shape[0]
    eye = np.eye(dim)
    psi = state.data.astype(complex).copy()
    phase = 0.0
    out_t, out_states = [t_start], [QuantumState(psi.copy(), state.dims, t_start)]
    max_drift = 0.0

    for a, b, sample in zip(knots[:-1], knots[1:], is_sample[1:]):
        span = b - a
        # midpoint evaluation: drive rate is discontinuous exactly at breakpoints
        h_a = hamiltonian(0.5 * (a + b))
        shift = np.trace(h_a).real / dim
        if cfg.method == "rk4":
            n = max(1, int(math.ceil(span / cfg.dt)))
            h = span / n
            if _static_on(hamiltonian, a, b):
                hs = h_a - shift * eye
                t = a
                for _ in range(n):
                    k1 = -1j * (hs @ psi)
                    k2 = -1j * (hs @ (psi + 0.5 * h * k1))
                    k3 = -1j * (hs @ (psi + 0.5 * h * k2))
                    k4 = -1j * (hs @ (psi + h * k3))
                    psi += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
                    t += h
            else:
                t = a
                for _ in range(n):
                    def f(tt, y):
                        return -1j * ((hamiltonian(tt) - shift * eye) @ y)
                    k1 = f(t, psi)
                    k2 = f(t + 0.5 * h, psi + 0.5 * h * k1)
                    k3 = f(t + 0.5 * h, psi + 0.5 * h * k2)
                    k4 = f(t + h, psi + h * k3)
                    psi += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
                    t += h
        else:
            def f(tt, y):
                return -1j * ((hamiltonian(tt) - shift * eye) @ y)
            sol = solve_ivp(f, (a, b), psi, method="RK45",
                            rtol=cfg.rtol, atol=cfg.atol, t_eval=[b])
            if not sol.success:
                raise IntegrationError(f"adaptive TDSE step failed on [{a}, {b}]: {sol.message}")
            psi = sol.y[:, -1]
        phase += shift * span
        drift = abs(np.linalg.norm(psi) - 1.0)
        max_drift = max(max_drift, drift)
        if drift > NORM_ABORT:
            raise NormDriftError(f"TDSE norm drift {drift:.3e} at t = {b:.3f}")
        if sample:
            out_t.append(b)
            out_states.append(QuantumState(np.exp(-1j * phase) * psi, state.dims, b))

    return Trajectory(np.asarray(out_t), out_states, max_norm_drift=max_drift)


def _collapse_set(baths: BathParams, a_e: np.ndarray, a_s: np.ndarray):
    """Weighted collapse operators for the two-bath thermal dissipator."""
    ops = []
    m = baths.mean_occupation
    for gamma, a in ((baths.gamma_e, a_e), (baths.gamma_s, a_s)):
        if gamma > 0:
            ops.append(math.sqrt(gamma * (m + 1.0)) * a)
            if m > 0:
                ops.append(math.sqrt(gamma * m) * a.conj().T)
    return ops


def _lindblad_rhs_factory(hamiltonian, shift_eye, cops, nops):
    def rhs(t, rho):
        h = hamiltonian(t) - shift_eye
        out = -1j * (h @ rho - rho @ h)
        for c, n in zip(cops, nops):
            out += c @ rho @ c.conj().T - 0.5 * (n @ rho + rho @ n)
        return out
    return rhs


def _liouvillian(h: np.ndarray, cops, nops) -> np.ndarray:
    """Dense superoperator for row-major vec(rho)."""
    d = h.shape[0]
    eye = np.eye(d)
    sup = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for c, n in zip(cops, nops):
        sup += np.kron(c, c.conj())
        sup -= 0.5 * (np.kron(n, eye) + np.kron(eye, n.T))
    return sup


def _rk4_step_matrix(sup: np.ndarray, h: float) -> np.ndarray:
    """One fixed-step RK4 update as a linear map: the degree-4 Taylor polynomial."""
    d2 = sup.shape[0]
    m = np.eye(d2, dtype=complex)
    term = np.eye(d2, dtype=complex)
    for k in range(1, 5):
        term = (h / k) * (term @ sup)
        m += term
    return m


def evolve_lindblad(
    state: QuantumState,
    hamiltonian,
    baths: BathParams,
    collapse_ops: tuple[np.ndarray, np.ndarray],
    t_end: float,
    config: IntegratorConfig | None = None,
    sample_dt: float = 0.5,
    sample_times=None,
    breakpoints=None,
) -> Trajectory:
    """Integrate the two-bath thermal master equation

        drho/dt = -i [H, rho]
                  + sum_i gamma_i/2 (M_i+1)(2 a_i rho a_i† - a_i†a_i rho - rho a_i†a_i)
                  + sum_i gamma_i/2  M_i  (2 a_i† rho a_i - a_i a_i† rho - rho a_i a_i†)

    with collapse operators a_e, a_s supplied on the product space. The state
    is symmetrized at every emitted sample; trace and positivity are checked
    there and abort beyond 1e-6.
    """
    cfg = config or IntegratorConfig()
    if breakpoints is None:
        breakpoints = getattr(hamiltonian, "breakpoints", ())
    t_start = state.t
    samples = _sample_grid(t_start, t_end, sample_dt, sample_times)
    knots, is_sample = _knots(t_start, t_end, samples, breakpoints)

    rho = state.density().astype(complex).copy()
    dim = rho.shape[0]
    eye = np.eye(dim)
    cops = _collapse_set(baths, *collapse_ops)
    nops = [c.conj().T @ c for c in cops]

    out_t, out_states = [t_start], [QuantumState(rho.copy(), state.dims, t_start)]
    max_tr, min_eig = 0.0, 1.0
    cached = {"h": None, "n": None, "span": None, "map": None}

    for a, b, sample in zip(knots[:-1], knots[1:], is_sample[1:]):
        span = b - a
        static = _static_on(hamiltonian, a, b)
        h_probe = hamiltonian(0.5 * (a + b))
        shift = np.trace(h_probe).real / dim

        if cfg.method == "rk4":
            n = max(1, int(math.ceil(span / cfg.dt)))
            h = span / n
            if static:
                hs = h_probe - shift * eye
                if (
                    cached["map"] is None
                    or cached["n"] != n
                    or abs(cached["span"] - span) > 1e-12
                    or not np.array_equal(cached["h"], hs)
                ):
                    step = _rk4_step_matrix(_liouvillian(hs, cops, nops), h)
                    cached.update(h=hs, n=n, span=span,
                                  map=np.linalg.matrix_power(step, n))
                rho = (cached["map"] @ rho.reshape(-1)).reshape(dim, dim)
            else:
                rhs = _lindblad_rhs_factory(hamiltonian, shift * eye, cops, nops)
                t = a
                for _ in range(n):
                    k1 = rhs(t, rho)
                    k2 = rhs(t + 0.5 * h, rho + 0.5 * h * k1)
                    k3 = rhs(t + 0.5 * h, rho + 0.5 * h * k2)
                    k4 = rhs(t + h, rho + h * k3)
                    rho = rho + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
                    rho = hermitize(rho)
                    t += h
        else:
            rhs = _lindblad_rhs_factory(hamiltonian, shift * eye, cops, nops)
            def f(tt, y):
                return rhs(tt, y.reshape(dim, dim)).reshape(-1)
            sol = solve_ivp(f, (a, b), rho.reshape(-1), method="RK45",
                            rtol=cfg.rtol, atol=cfg.atol, t_eval=[b])
            if not sol.success:
                raise IntegrationError(f"adaptive Lindblad step failed on [{a}, {b}]: {sol.message}")
            rho = sol.y[:, -1].reshape(dim, dim)

        rho = hermitize(rho)
        tr_drift = abs(np.trace(rho).real - 1.0)
        max_tr = max(max_tr, tr_drift)
        if tr_drift > TRACE_ABORT:
            raise NormDriftError(f"Lindblad trace drift {tr_drift:.3e} at t = {b:.3f}")
        if sample:
            w_min = float(np.linalg.eigvalsh(rho).min())
            min_eig = min(min_eig, w_min)
            if w_min < -POSITIVITY_ABORT:
                raise PositivityError(
                    f"density matrix eigenvalue {w_min:.3e} at t = {b:.3f}"
                )
            out_t.append(b)
            out_states.append(QuantumState(rho.copy(), state.dims, b))

    return Trajectory(np.asarray(out_t), out_states,
                      max_trace_drift=max_tr, min_eigenvalue=min_eig)
