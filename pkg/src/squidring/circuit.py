"""Physical model: a SQUID ring inductively coupled to one quantized em field mode.

Nondimensionalization used throughout the package: hbar = 1, time in units of
1/omega_s, energy in hbar*omega_s, flux in units of the superconducting flux
quantum Phi0 = h/2e. All Hamiltonians handed to the integrators are in these
units; CircuitParams keeps the SI values and the conversion factors.

The ring potential is

    Hs = Qs^2/2Cs + Phis^2/2Lambda_s
         - hbar*nu * cos(2 pi (Phis + Phix(t)) / Phi0)
         - Qs * dPhix/dt

(the last term comes from working in the frame translated by the bias flux),
the field mode is a plain LC oscillator, and the interaction is
Hes = (mu_es/Lambda_s) * Phis * Phie, entering the total as H = He + Hs - Hes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import constants as _const

from .linalg import herm_func, hermitize

HBAR = _const.hbar
KB = _const.k
PHI0 = _const.h / (2 * _const.e)

# Cosine-well energy as a multiple of Phi0^2/Lambda_s. Calibrated so that with
# the default circuit the ring's first transition is resonant with one field
# quantum at the 0.42864 Phi0 operating bias (which also reproduces the
# ~326 omega_s^-1 half-exchange time there).
JOSEPHSON_ENERGY_FACTOR = 0.074291666753732

DEFAULT_CS = 1e-16       # F
DEFAULT_LAMBDA_S = 3e-10  # H
DEFAULT_MU_ES = 0.01


class ConvergenceError(RuntimeError):
    """Basis truncation did not converge against a doubled pre-truncation basis."""


@dataclass(frozen=True)
class CircuitParams:
    """SI circuit values. Derived frequencies/groups are exposed as properties."""

    Cs: float = DEFAULT_CS
    Lambda_s: float = DEFAULT_LAMBDA_S
    Ce: float | None = None
    Lambda_e: float | None = None
    hbar_nu: float | None = None  # J; default JOSEPHSON_ENERGY_FACTOR * Phi0^2/Lambda_s
    mu_es: float = DEFAULT_MU_ES

    def __post_init__(self):
        if self.Ce is None:
            object.__setattr__(self, "Ce", self.Cs)
        if self.Lambda_e is None:
            object.__setattr__(self, "Lambda_e", self.Lambda_s)
        if self.hbar_nu is None:
            object.__setattr__(
                self, "hbar_nu", JOSEPHSON_ENERGY_FACTOR * PHI0**2 / self.Lambda_s
            )
        for name in ("Cs", "Lambda_s", "Ce", "Lambda_e"):
            if getattr(self, name) <= 0:
                raise ValueError(f"CircuitParams.{name} must be positive")
        if not 0 <= self.mu_es < 1:
            raise ValueError("CircuitParams.mu_es must lie in [0, 1)")

    @property
    def omega_s(self) -> float:
        return 1.0 / math.sqrt(self.Lambda_s * self.Cs)

    @property
    def omega_e(self) -> float:
        return 1.0 / math.sqrt(self.Lambda_e * self.Ce)

    @property
    def nu(self) -> float:
        """Josephson angular frequency nu = hbar_nu / hbar (rad/s)."""
        return self.hbar_nu / HBAR


@dataclass(frozen=True)
class DimensionlessGroups:
    """Dimensionless combinations entering the hbar*omega_s-unit Hamiltonians.

    lambda_i : zero-point flux angle, (2 pi/Phi0) sqrt(hbar/(2 omega_i C_i))
    nu_tilde : nu/omega_s, weight of the cosine term
    kappa    : coupling prefactor multiplying (ae+ae†)(as+as†)
    eta_s    : ring charge zero point sqrt(hbar omega_s Cs / 2), in C
    drive_scale : multiplies the flux ramp rate (Phi0*omega_s units) to give
                  the -Qs dPhix/dt term in hbar*omega_s per unit charge quadrature
    """

    lambda_s: float
    lambda_e: float
    nu_tilde: float
    kappa: float
    eta_s: float
    drive_scale: float
    omega_ratio: float  # omega_e / omega_s

    @classmethod
    def from_params(cls, p: CircuitParams) -> "DimensionlessGroups":
        lam_s = (2 * math.pi / PHI0) * math.sqrt(HBAR / (2 * p.omega_s * p.Cs))
        lam_e = (2 * math.pi / PHI0) * math.sqrt(HBAR / (2 * p.omega_e * p.Ce))
        eta_s = math.sqrt(HBAR * p.omega_s * p.Cs / 2)
        # (mu_es/Lambda_s) <Phis><Phie> zero-point product over hbar omega_s
        kappa = (
            p.mu_es
            / (2 * p.Lambda_s * p.omega_s)
            / math.sqrt(p.omega_s * p.Cs * p.omega_e * p.Ce)
        )
        drive_scale = eta_s * PHI0 / HBAR  # equals pi/lambda_s
        return cls(
            lambda_s=lam_s,
            lambda_e=lam_e,
            nu_tilde=p.nu / p.omega_s,
            kappa=kappa,
            eta_s=eta_s,
            drive_scale=drive_scale,
            omega_ratio=p.omega_e / p.omega_s,
        )


@dataclass(frozen=True)
class FluxDrive:
    """Piecewise-linear external flux schedule, Phi0 / omega_s^-1 units.

    value(t): A for t <= t0, linear ramp to B over (t0, t0+tr], B afterwards.
    rate(t):  (B-A)/tr inside the ramp window, 0 outside.
    """

    A: float = 0.42864
    B: float = 0.38
    t0: float = 326.0
    tr: float = 16.6

    def __post_init__(self):
        if self.tr <= 0:
            raise ValueError("FluxDrive.tr must be positive")
        if self.t0 < 0:
            raise ValueError("FluxDrive.t0 must be nonnegative")

    def value(self, t: float) -> float:
        if t <= self.t0:
            return self.A
        if t <= self.t0 + self.tr:
            return self.A + (self.B - self.A) * (t - self.t0) / self.tr
        return self.B

    def rate(self, t: float) -> float:
        if self.t0 < t <= self.t0 + self.tr:
            return (self.B - self.A) / self.tr
        return 0.0

    @property
    def breakpoints(self) -> tuple[float, float]:
        return (self.t0, self.t0 + self.tr)


def ladder(n: int) -> np.ndarray:
    """Fock-basis annihilation operator, a[k-1, k] = sqrt(k)."""
    if n < 2:
        raise ValueError(f"ladder dimension must be >= 2, got {n}")
    return np.diag(np.sqrt(np.arange(1, n)), 1).astype(complex)


def quadratures(n: int, omega: float, C: float) -> tuple[np.ndarray, np.ndarray]:
    """SI flux/charge quadrature pair for an LC mode, [Phi, Q] = i hbar.

    Phi = sqrt(hbar/(2 omega C)) (a + a†), Q = i sqrt(hbar omega C / 2) (a† - a).
    """
    if omega <= 0 or C <= 0:
        raise ValueError("omega and C must be positive")
    a = ladder(n)
    phi = math.sqrt(HBAR / (2 * omega * C)) * (a + a.conj().T)
    q = 1j * math.sqrt(HBAR * omega * C / 2) * (a.conj().T - a)
    return phi, q


@dataclass(frozen=True)
class RingOperators:
    """Ring operators in some basis, all dimensionless (hbar*omega_s units).

    harmonic : a†a + 1/2 (the LC part of Hs)
    cos_phi / sin_phi : cos / sin of the flux angle lambda_s (a + a†)
    flux : a + a†        charge : i (a† - a)        a : bare LC ladder operator
    """

    harmonic: np.ndarray
    cos_phi: np.ndarray
    sin_phi: np.ndarray
    flux: np.ndarray
    charge: np.ndarray
    a: np.ndarray

    @property
    def dim(self) -> int:
        return self.harmonic.shape[0]

    def transformed(self, t: np.ndarray) -> "RingOperators":
        """Project every operator with a (dim x k) isometry of basis columns."""
        td = t.conj().T
        return RingOperators(
            harmonic=hermitize(td @ self.harmonic @ t),
            cos_phi=hermitize(td @ self.cos_phi @ t),
            sin_phi=hermitize(td @ self.sin_phi @ t),
            flux=hermitize(td @ self.flux @ t),
            charge=hermitize(td @ self.charge @ t),
            a=td @ self.a @ t,
        )


def fock_ring_ops(pre_dim: int, lambda_s: float) -> RingOperators:
    """Ring operators in the bare LC Fock basis of dimension pre_dim."""
    a = ladder(pre_dim)
    x = a + a.conj().T
    return RingOperators(
        harmonic=(a.conj().T @ a + 0.5 * np.eye(pre_dim)),
        cos_phi=herm_func(lambda_s * x, np.cos),
        sin_phi=herm_func(lambda_s * x, np.sin),
        flux=x,
        charge=1j * (a.conj().T - a),
        a=a,
    )


def build_hs(ops: RingOperators, groups: DimensionlessGroups,
             phi_x: float, phi_rate: float = 0.0) -> np.ndarray:
    """Ring Hamiltonian in hbar*omega_s units, in whatever basis `ops` uses.

    The cosine of the shifted flux is expanded so that the operator-valued
    trig functions are the precomputed cos_phi/sin_phi.
    """
    h = ops.harmonic - groups.nu_tilde * (
        math.cos(2 * math.pi * phi_x) * ops.cos_phi
        - math.sin(2 * math.pi * phi_x) * ops.sin_phi
    )
    if phi_rate != 0.0:
        h = h - groups.drive_scale * phi_rate * ops.charge
    return h


def build_he(de: int, groups: DimensionlessGroups) -> np.ndarray:
    """Field Hamiltonian (hbar*omega_s units): (omega_e/omega_s)(n + 1/2)."""
    return groups.omega_ratio * np.diag(np.arange(de) + 0.5).astype(complex)


@dataclass(frozen=True)
class TruncatedModel:
    """Both components reduced to their lowest energy eigenstates.

    Field: lowest `de` Fock states (exact eigenstates of He). Ring: lowest `ds`
    eigenstates of Hs at the reference flux, computed in a pre_dim-dimensional
    Fock basis; `ring_transform` holds the eigenvector columns used.
    The product-space ordering is field (x) ring.
    """

    params: CircuitParams
    groups: DimensionlessGroups
    de: int
    ds: int
    pre_dim: int
    ring_ref_flux: float
    ring: RingOperators
    ring_energies: np.ndarray          # lowest ds eigenvalues at the ref flux
    ring_transform: np.ndarray         # pre_dim x ds isometry
    field_a: np.ndarray = field(repr=False, default=None)
    field_h: np.ndarray = field(repr=False, default=None)

    @property
    def dim(self) -> int:
        return self.de * self.ds

    def ring_hamiltonian(self, phi_x: float, phi_rate: float = 0.0) -> np.ndarray:
        return build_hs(self.ring, self.groups, phi_x, phi_rate)

    def ring_eigenbasis(self, phi_x: float) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues/vectors of the truncated ring Hamiltonian at phi_x."""
        return np.linalg.eigh(self.ring_hamiltonian(phi_x))

    def collapse_operators(self) -> tuple[np.ndarray, np.ndarray]:
        """Bare LC ladder operators on the product space: (a_e, a_s)."""
        return (
            np.kron(self.field_a, np.eye(self.ds)),
            np.kron(np.eye(self.de), self.ring.a),
        )


def truncate_to_eigenbasis(
    params: CircuitParams,
    ring_ref_flux: float = 0.42864,
    pre_dim: int = 40,
    de: int = 4,
    ds: int = 4,
    check_convergence: bool = True,
    convergence_tol: float = 1e-6,
) -> TruncatedModel:
    """Project the ring onto its `ds` lowest eigenstates at the reference flux.

    With check_convergence the retained ring eigenvalues are compared against a
    doubled pre-truncation basis and must agree to convergence_tol (hbar*omega_s).
    """
    groups = DimensionlessGroups.from_params(params)
    ops = fock_ring_ops(pre_dim, groups.lambda_s)
    w, v = np.linalg.eigh(build_hs(ops, groups, ring_ref_flux))
    if check_convergence:
        ops2 = fock_ring_ops(2 * pre_dim, groups.lambda_s)
        w2 = np.linalg.eigvalsh(build_hs(ops2, groups, ring_ref_flux))
        shift = np.max(np.abs(w[:ds] - w2[:ds]))
        if shift > convergence_tol:
            raise ConvergenceError(
                f"ring eigenvalues move by {shift:.2e} hbar*omega_s when pre_dim "
                f"doubles from {pre_dim}; increase pre_dim"
            )
    t = v[:, :ds]
    return TruncatedModel(
        params=params,
        groups=groups,
        de=de,
        ds=ds,
        pre_dim=pre_dim,
        ring_ref_flux=ring_ref_flux,
        ring=ops.transformed(t),
        ring_energies=w[:ds].copy(),
        ring_transform=t,
        field_a=ladder(de),
        field_h=build_he(de, groups),
    )


def build_total(model: TruncatedModel, phi_x: float, phi_rate: float = 0.0) -> np.ndarray:
    """Total H = He + Hs - Hes on the product space, hbar*omega_s units."""
    ie, isr = np.eye(model.de), np.eye(model.ds)
    xe = model.field_a + model.field_a.conj().T
    h = (
        np.kron(model.field_h, isr)
        + np.kron(ie, model.ring_hamiltonian(phi_x, phi_rate))
        - model.groups.kappa * np.kron(xe, model.ring.flux)
    )
    return h


class RampHamiltonian:
    """H(t) along a FluxDrive schedule, with the kron pieces precomputed.

    Callable t -> dense Hamiltonian. `static_on(a, b)` reports whether the
    drive is frozen on an interval, which the integrators exploit.
    """

    def __init__(self, model: TruncatedModel, drive: FluxDrive):
        self.model = model
        self.drive = drive
        ie, isr = np.eye(model.de), np.eye(model.ds)
        xe = model.field_a + model.field_a.conj().T
        g = model.groups
        self._base = (
            np.kron(model.field_h, isr)
            + np.kron(ie, model.ring.harmonic)
            - g.kappa * np.kron(xe, model.ring.flux)
        )
        self._cos = np.kron(ie, model.ring.cos_phi)
        self._sin = np.kron(ie, model.ring.sin_phi)
        self._charge = np.kron(ie, model.ring.charge)
        self._nu = g.nu_tilde
        self._drive_scale = g.drive_scale

    @property
    def dim(self) -> int:
        return self.model.dim

    @property
    def breakpoints(self) -> tuple[float, float]:
        return self.drive.breakpoints

    def __call__(self, t: float) -> np.ndarray:
        phi = self.drive.value(t)
        h = self._base - self._nu * (
            math.cos(2 * math.pi * phi) * self._cos
            - math.sin(2 * math.pi * phi) * self._sin
        )
        rate = self.drive.rate(t)
        if rate != 0.0:
            h = h - self._drive_scale * rate * self._charge
        return h

    def static_on(self, a: float, b: float) -> bool:
        t0, t1 = self.drive.breakpoints
        return b <= t0 or a >= t1


class StaticHamiltonian:
    """Constant H wrapped in the same interface as RampHamiltonian."""

    def __init__(self, h: np.ndarray):
        self._h = np.asarray(h, dtype=complex)

    @property
    def dim(self) -> int:
        return self._h.shape[0]

    breakpoints: tuple = ()

    def __call__(self, t: float) -> np.ndarray:
        return self._h

    def static_on(self, a: float, b: float) -> bool:
        return True
