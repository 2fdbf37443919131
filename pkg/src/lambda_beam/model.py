"""Static model layer: medium parameters, control-field profiles, mixing angles.

Internal units put the probe phase velocity and the cell length at 1, so times
are cell transits, Rabi frequencies and detunings are inverse transits, and the
beam injection speed ``v0`` is a fraction of the probe speed.  Everything
downstream (transport solver, closed-form polariton propagation, loss
integrals) reads geometry and couplings from the objects defined here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np


class ModelError(ValueError):
    """Raised for parameter sets or profiles outside the model's domain."""


@dataclass(frozen=True)
class SystemParams:
    """Medium and beam constants.

    Attributes
    ----------
    g1, g2 : float
        Probe-transition coupling constants for the two probe fields.
    gamma2, gamma4 : float
        Decay rates of the two electronically excited levels.
    n : float
        Atom number density feeding the collective coupling ``g1*g2*sqrt(n)``.
    v0 : float
        Injection speed of the incoming matter-wave beam, in units of c.
    c : float
        Probe phase velocity (1 in internal units).
    kp1, kp2, ks1, ks2 : float
        Axial wavevectors of the probe (p) and control (s) carriers; only the
        differences enter the class-resolved detunings and transport speeds.
    Delta : float
        Common one-photon detuning of the central velocity class.
    delta : float
        Common two-photon detuning of the central velocity class.
    L : float
        Cell length (1 in internal units).
    """

    g1: float = 1.0
    g2: float = 1.0
    gamma2: float = 0.0
    gamma4: float = 0.0
    n: float = 4.0e5
    v0: float = 0.1
    c: float = 1.0
    kp1: float = 0.0
    kp2: float = 0.0
    ks1: float = 0.0
    ks2: float = 0.0
    Delta: float = 0.0
    delta: float = 0.0
    L: float = 1.0

    def __post_init__(self) -> None:
        if not (self.g1 > 0 and self.g2 > 0):
            raise ModelError("params.g1/params.g2: couplings must be positive")
        if self.n <= 0:
            raise ModelError("params.n: density must be positive")
        if self.gamma2 < 0 or self.gamma4 < 0:
            raise ModelError("params.gamma2/params.gamma4: decay rates must be >= 0")
        if self.c <= 0 or self.L <= 0:
            raise ModelError("params.c/params.L: scales must be positive")
        if not (0.0 < self.v0 < self.c):
            raise ModelError(
                f"params.v0: beam speed must satisfy 0 < v0 < c, got {self.v0}"
            )

    @property
    def collective_coupling(self) -> float:
        """g1*g2*sqrt(n), the two-probe collective coupling rate."""
        return self.g1 * self.g2 * math.sqrt(self.n)

    @property
    def is_lossless_resonant(self) -> bool:
        return self.gamma2 == 0.0 and self.gamma4 == 0.0 \
            and self.Delta == 0.0 and self.delta == 0.0


@dataclass(frozen=True)
class ProfileConfig:
    """Recipe for the two control-field envelopes along z.

    ``family`` selects the spatial shape:

    - ``constant``: both envelopes flat at their ``*_in`` values.
    - ``linear``: straight ramp between ``*_in`` and ``*_out`` per envelope.
    - ``tanh``: geometric (log-space) tanh ramp between ``*_in`` and ``*_out``,
      suited to envelopes that sweep several decades.
    - ``transfer``: tanh ramp whose endpoints are calibrated from the system
      parameters so the conversion angle runs from ~0 at the entrance to ~pi/2
      at the exit within ``theta_tol``; the two envelopes keep the fixed ratio
      ``stokes_ratio``.
    """

    family: str = "transfer"
    npoints: int = 512
    omega01_in: float = 40.0
    omega01_out: float = 2.0
    omega02_in: float = 40.0
    omega02_out: float = 2.0
    center: float = 0.5        # tanh ramp midpoint, units of L
    width: float = 0.12        # tanh ramp width, units of L
    theta_tol: float = 0.01    # rad; endpoint tolerance for the transfer family
    stokes_ratio: float = 1.0  # omega02/omega01 for the transfer family

    _FAMILIES = ("constant", "linear", "tanh", "transfer")

    def __post_init__(self) -> None:
        if self.family not in self._FAMILIES:
            raise ModelError(
                f"profile.family: unknown family {self.family!r}, "
                f"expected one of {self._FAMILIES}"
            )
        if self.npoints < 16:
            raise ModelError(
                f"profile.npoints: need at least 16 grid points, got {self.npoints}"
            )
        for name in ("omega01_in", "omega01_out", "omega02_in", "omega02_out"):
            if getattr(self, name) < 0:
                raise ModelError(f"profile.{name}: envelopes must be >= 0")
        if self.width <= 0:
            raise ModelError("profile.width: ramp width must be positive")
        if not (0.0 < self.theta_tol < math.pi / 4):
            raise ModelError("profile.theta_tol: need 0 < theta_tol < pi/4")
        if self.stokes_ratio < 0:
            raise ModelError("profile.stokes_ratio: ratio must be >= 0")


@dataclass(frozen=True)
class StokesProfile:
    """Control-field envelopes sampled on the shared z grid.

    ``z`` spans [0, L] inclusive; ``om01``/``om02`` hold the two envelope
    amplitudes at the nodes.  Off-node queries interpolate the envelopes
    linearly, which keeps every integral drawn from this profile consistent
    with composite trapezoid quadrature on the same nodes.
    """

    z: np.ndarray
    om01: np.ndarray
    om02: np.ndarray

    def __post_init__(self) -> None:
        z, a, b = self.z, self.om01, self.om02
        if not (z.shape == a.shape == b.shape) or z.ndim != 1 or z.size < 16:
            raise ModelError("profile grid and envelopes must be 1-d, matched, >= 16 points")
        if np.any(np.diff(z) <= 0):
            raise ModelError("profile z grid must be strictly increasing")
        if np.any(a < 0) or np.any(b < 0):
            raise ModelError("control envelopes must be non-negative")
        # Both envelopes vanishing inside the cell would open an uncoupled gap;
        # a simultaneous zero is tolerated only at the exit node.
        both_zero = (a == 0) & (b == 0)
        if np.any(both_zero[:-1]):
            j = int(np.argmax(both_zero[:-1]))
            raise ModelError(f"both envelopes vanish at interior z={z[j]:.6g}")

    @property
    def nz(self) -> int:
        return self.z.size

    @property
    def length(self) -> float:
        return float(self.z[-1])

    def omega01(self, zq) -> np.ndarray:
        return np.interp(zq, self.z, self.om01)

    def omega02(self, zq) -> np.ndarray:
        return np.interp(zq, self.z, self.om02)

    def omega(self, params: SystemParams, zq=None) -> np.ndarray:
        """Quadrature coupling Omega(z) = sqrt(g1^2 Om02^2 + g2^2 Om01^2)."""
        if zq is None:
            a, b = self.om01, self.om02
        else:
            a, b = self.omega01(zq), self.omega02(zq)
        return np.hypot(params.g1 * b, params.g2 * a)


def build_profiles(config: ProfileConfig, params: SystemParams | None = None) -> StokesProfile:
    """Construct a :class:`StokesProfile` from a :class:`ProfileConfig`.

    The ``transfer`` family needs ``params`` to calibrate its endpoints: the
    conversion angle obeys tan(theta) = g1*g2*sqrt(n*v0/c)/Omega, so endpoint
    couplings are chosen to land theta(0) just below ``theta_tol`` and
    theta(L) just above pi/2 - ``theta_tol``.
    """
    L = params.L if params is not None else 1.0
    z = np.linspace(0.0, L, config.npoints)

    if config.family == "constant":
        om01 = np.full_like(z, config.omega01_in)
        om02 = np.full_like(z, config.omega02_in)
    elif config.family == "linear":
        om01 = np.linspace(config.omega01_in, config.omega01_out, config.npoints)
        om02 = np.linspace(config.omega02_in, config.omega02_out, config.npoints)
    elif config.family == "tanh":
        om01 = _tanh_ramp(z, config.omega01_in, config.omega01_out, config.center,
                          config.width, L)
        om02 = _tanh_ramp(z, config.omega02_in, config.omega02_out, config.center,
                          config.width, L)
    else:  # transfer
        if params is None:
            raise ModelError("profile.family='transfer' requires system parameters")
        # Leave a 2% margin inside theta_tol so the endpoint check is strict.
        th_in = 0.98 * config.theta_tol
        th_out = math.pi / 2 - 0.98 * config.theta_tol
        scale = params.collective_coupling * math.sqrt(params.v0 / params.c)
        omega_in = scale / math.tan(th_in)
        omega_out = scale / math.tan(th_out)
        # Split Omega between the two envelopes at the configured ratio.
        r = config.stokes_ratio
        denom = math.hypot(params.g2, params.g1 * r)
        om1_in, om1_out = omega_in / denom, omega_out / denom
        om01 = _tanh_ramp(z, om1_in, om1_out, config.center, config.width, L)
        om02 = r * om01

    profile = StokesProfile(z=z, om01=om01, om02=om02)

    if config.family == "transfer":
        angles = mixing_angles(profile, params)
        th0, thL = angles.theta[0], angles.theta[-1]
        if not (th0 < config.theta_tol and thL > math.pi / 2 - config.theta_tol):
            raise ModelError(
                f"transfer calibration failed: theta(0)={th0:.4g}, theta(L)={thL:.4g} "
                f"vs tolerance {config.theta_tol:.4g}"
            )
    return profile


def _tanh_ramp(z, start, stop, center, width, L):
    """Smooth ramp from start to stop; geometric in amplitude when both ends
    are positive (handles multi-decade sweeps), otherwise linear in amplitude."""
    s = np.tanh((z - center * L) / width)
    s0, s1 = s[0], s[-1]
    if s1 == s0:
        raise ModelError("tanh ramp degenerate: widen the ramp or move its center")
    u = (s - s0) / (s1 - s0)  # exactly 0 at z=0 and 1 at z=L
    if start > 0 and stop > 0:
        return start * np.exp(u * math.log(stop / start))
    return start + (stop - start) * u


@dataclass(frozen=True)
class MixingAngles:
    """Probe-composition angle vartheta(z) and conversion angle theta(z).

    tan(vartheta) = g1*Om02/(g2*Om01) fixes which probe superposition couples
    to the uncoupled (dark) channel; tan(theta)^2 = (g1 g2)^2 n v0 / (Omega^2 c)
    fixes the photon/matter content of that channel.  Both angles live in
    [0, pi/2]; vartheta := pi/2 where Om01 = 0.
    """

    z: np.ndarray
    vartheta: np.ndarray
    theta: np.ndarray

    @property
    def vartheta0(self) -> float:
        """Entrance composition angle; sets the matched-input condition."""
        return float(self.vartheta[0])

    def vartheta_at(self, zq) -> np.ndarray:
        return np.interp(zq, self.z, self.vartheta)

    def theta_at(self, zq) -> np.ndarray:
        return np.interp(zq, self.z, self.theta)


def mixing_angles(profile: StokesProfile, params: SystemParams) -> MixingAngles:
    """Evaluate both mixing angles on the profile's grid."""
    vartheta = np.arctan2(params.g1 * profile.om02, params.g2 * profile.om01)
    strength = params.collective_coupling * math.sqrt(params.v0 / params.c)
    theta = np.arctan2(strength, profile.omega(params))
    return MixingAngles(z=profile.z, vartheta=vartheta, theta=theta)


def group_velocity(z, profile: StokesProfile, params: SystemParams) -> np.ndarray:
    """Propagation speed of the coupled photon/matter excitation at z.

    Evaluated in the algebraically equivalent form
    Vg = (c*Omega^2 + G^2*v0) / (Omega^2 + G^2), G^2 = g1^2 g2^2 n,
    which is exact in both limits: Vg -> c for strong coupling fields and
    Vg -> v0 (the bare beam speed) as Omega -> 0.
    """
    om_sq = np.asarray(profile.omega(params, z)) ** 2
    G2 = params.g1 ** 2 * params.g2 ** 2 * params.n
    return (params.c * om_sq + G2 * params.v0) / (om_sq + G2)


def propagation_delay(z_from: float, z_to: float, profile: StokesProfile,
                      params: SystemParams) -> float:
    """Arrival-time delay accumulated between two stations.

    Composite trapezoid of 1/Vg over the profile nodes that fall inside
    [z_from, z_to], with the interval endpoints inserted by linear
    interpolation of 1/Vg.  Because the integrand is treated as piecewise
    linear, the delay is additive over subintervals to rounding accuracy.
    """
    if z_to < z_from:
        raise ModelError(f"reversed interval: z_from={z_from} > z_to={z_to}")
    if not (0.0 <= z_from and z_to <= profile.length):
        raise ModelError("delay interval must lie inside [0, L]")
    if z_to == z_from:
        return 0.0
    inv_vg = 1.0 / group_velocity(profile.z, profile, params)
    inside = (profile.z > z_from) & (profile.z < z_to)
    zs = np.concatenate(([z_from], profile.z[inside], [z_to]))
    fs = np.concatenate((
        [np.interp(z_from, profile.z, inv_vg)],
        inv_vg[inside],
        [np.interp(z_to, profile.z, inv_vg)],
    ))
    return float(np.trapezoid(fs, zs))


@dataclass(frozen=True)
class EnsembleConfig:
    """Recipe for the longitudinal velocity-class ensemble."""

    nclasses: int = 1
    k0: float = 200.0       # central class wavevector, units of 1/L
    width: float = 0.0      # fractional velocity spread per unit deviate
    nsigma: float = 3.0     # half-extent of the class grid, in spread units
    max_spread: float = 0.2  # validation bound on max |v_l - v0| / v0

    def __post_init__(self) -> None:
        if self.nclasses < 1 or self.nclasses % 2 == 0:
            raise ModelError("ensemble.nclasses: need an odd count >= 1")
        if self.k0 <= 0:
            raise ModelError("ensemble.k0: central wavevector must be positive")
        if self.width < 0:
            raise ModelError("ensemble.width: spread must be >= 0")
        if self.nsigma <= 0:
            raise ModelError("ensemble.nsigma: extent must be positive")


@dataclass(frozen=True)
class VelocityEnsemble:
    """Discrete velocity classes of the incoming beam.

    Class l carries wavevector ``k[l]`` and population weight ``xi[l]``; the
    kinematic map is v_l = hbar_over_2m * k_l with hbar_over_2m = v0/k0, so the
    central class moves at exactly v0.  Weights are normalized to sum to 1 and
    the grid is mirror-symmetric about k0, which makes the weighted mean
    velocity equal v0 to rounding.
    """

    k: np.ndarray
    xi: np.ndarray
    k0: float
    hbar_over_2m: float
    max_spread: float = 0.2

    def __post_init__(self) -> None:
        if self.k.shape != self.xi.shape or self.k.ndim != 1:
            raise ModelError("ensemble arrays must be matched 1-d")
        if np.any(self.xi < 0):
            raise ModelError("class weights must be >= 0")
        total = float(np.sum(self.xi))
        if abs(total - 1.0) > 1e-12:
            raise ModelError(f"class weights must sum to 1, got {total!r}")
        v = self.velocities()
        v0 = self.v0
        spread = float(np.max(np.abs(v - v0))) / v0 if v.size else 0.0
        if spread > self.max_spread:
            raise ModelError(
                f"velocity spread {spread:.3g} exceeds narrow-beam bound {self.max_spread}"
            )

    @property
    def nclasses(self) -> int:
        return self.k.size

    @property
    def v0(self) -> float:
        return self.hbar_over_2m * self.k0

    def velocities(self) -> np.ndarray:
        """Transport speed of the ground and transferred components, per class."""
        return self.hbar_over_2m * self.k

    def kinetic_omega(self) -> np.ndarray:
        """Free-evolution phase rate hbar k^2 / 2m, per class."""
        return self.hbar_over_2m * self.k ** 2

    def mean_velocity(self) -> float:
        return float(np.sum(self.xi * self.velocities()))

    def phase(self, l: int, z, t):
        """Carrier phase k_l z - omega_l t of class l (stripped from the
        envelopes everywhere in the solver; exposed for reconstruction)."""
        return self.k[l] * np.asarray(z) - self.kinetic_omega()[l] * np.asarray(t)


def build_ensemble(config: EnsembleConfig, params: SystemParams) -> VelocityEnsemble:
    """Gaussian-weighted symmetric class grid around k0 (single class if
    nclasses == 1 or width == 0)."""
    hbar_over_2m = params.v0 / config.k0
    if config.nclasses == 1 or config.width == 0.0:
        k = np.array([config.k0])
        xi = np.array([1.0])
        return VelocityEnsemble(k=k, xi=xi, k0=config.k0,
                                hbar_over_2m=hbar_over_2m,
                                max_spread=config.max_spread)
    m = config.nclasses // 2
    x = np.arange(-m, m + 1) / m * config.nsigma
    w = np.exp(-0.5 * x ** 2)
    w = 0.5 * (w + w[::-1])      # enforce bitwise mirror symmetry
    xi = w / np.sum(w)
    k = config.k0 * (1.0 + config.width * x)
    if np.any(k <= 0):
        raise ModelError("ensemble spread too wide: non-positive wavevectors")
    return VelocityEnsemble(k=k, xi=xi, k0=config.k0,
                            hbar_over_2m=hbar_over_2m,
                            max_spread=config.max_spread)
