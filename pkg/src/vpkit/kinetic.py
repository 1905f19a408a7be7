"""Spectral solver for the weakly collisional Vlasov model on the torus.

The state is carried in mixed representation: Fourier modes in x (rows
k = -k_max .. k_max) against a uniform velocity grid. In this picture free
transport and the velocity kick are exact phase multiplications, and the
relaxation toward rho(t,x) f0(v) has a closed-form update, so a time step
is three exact maps composed in Strang order: half transport, field solve
plus kick, collision, half transport.

Module contents:

  * PhaseState / equilibrium_state / perturb_density -- state construction,
  * step / collision_substep / poisson_field -- the integrator pieces,
  * run -- a full simulation with field history and scalar diagnostics,
  * echo_experiment -- impulsive two-mode probe locating the plasma echo,
  * FieldHistory / characteristics_deflect -- recorded fields and test
    particles pushed through them.

The discrete equilibrium rows are renormalized to unit grid mass, so the
collision substep conserves every density mode to rounding instead of to
the (tiny, but visible at 1e-14) quadrature defect of the raw samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .echo import echo_time
from .errors import (
    ConstraintViolation,
    EchoBeyondRecurrence,
    OutOfHistory,
    ResolutionExceeded,
    StepTooCoarse,
)
from .hybridnorms import NormParams, SpectralDistribution, f_norm, y_norm
from .profiles import (
    Interaction,
    VelocityProfile,
    interaction_hat,
    profile_sample,
)

# Charge-to-mass ratio of the kick. With the 2*pi Fourier convention the
# field multiplier is 2*pi*i*k*W_hat(k), and the linearized density response
# reproduces the closed Volterra kernel exactly when q/m = -1/(4*pi^2).
Q_OVER_M = -1.0 / (4.0 * math.pi**2)

# A single step may rotate the fastest transport phase k_max * v_max by at
# most this many turns; beyond that the splitting error is no longer small
# at the tolerances the diagnostics work to.
PHASE_BUDGET = 2.0

# Recurrence guard: the fraction of the |eta| axis watched at the grid edge
# and the per-row energy fraction tolerated there.
RESOLUTION_BAND = 0.02
RESOLUTION_TOL = 1e-3

# Fraction of the velocity-grid recurrence time 1/(|k| dv) that echo
# predictions may use before the grid can no longer represent the echo.
RECURRENCE_SAFETY = 0.8


def velocity_grid(n_v: int, v_max: float) -> np.ndarray:
    """Uniform grid v_j = -v_max + j * dv, right endpoint excluded."""
    return -v_max + (2.0 * v_max / n_v) * np.arange(n_v)


@lru_cache(maxsize=32)
def _equilibrium_rows(profile: VelocityProfile, n_v: int, v_max: float):
    samples = profile_sample(profile, velocity_grid(n_v, v_max))
    dv = 2.0 * v_max / n_v
    samples = samples / (samples.sum() * dv)
    samples.setflags(write=False)
    return samples


@dataclass(frozen=True)
class PhaseState:
    """Mixed-representation state fhat(k, v_j) at one instant.

    f has shape (2*k_max + 1, n_v); row i holds x-mode k = i - k_max on the
    velocity grid of velocity_grid(n_v, v_max). Physical reality of f is the
    row symmetry fhat(-k, v) = conj(fhat(k, v)), checked at construction.
    """

    f: np.ndarray
    time: float
    k_max: int
    v_max: float

    def __post_init__(self):
        if int(self.k_max) != self.k_max or self.k_max < 1:
            raise ConstraintViolation("k_max must be a positive integer")
        if not (self.v_max > 0.0):
            raise ConstraintViolation("v_max must be positive")
        f = np.asarray(self.f, dtype=complex)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "k_max", int(self.k_max))
        object.__setattr__(self, "time", float(self.time))
        if f.ndim != 2 or f.shape[0] != 2 * self.k_max + 1:
            raise ConstraintViolation(
                f"f must have 2*k_max+1 = {2 * self.k_max + 1} rows, got shape {f.shape}"
            )
        if f.shape[1] < 8 or f.shape[1] % 2:
            raise ConstraintViolation("velocity grid needs an even count >= 8")
        if not np.all(np.isfinite(f.view(float))):
            raise ConstraintViolation("state contains non-finite entries")
        scale = float(np.abs(f).max())
        if scale > 0.0:
            defect = float(np.abs(f - np.conj(f[::-1])).max())
            if defect > 1e-10 * scale:
                raise ConstraintViolation(
                    f"rows break the Hermitian symmetry fhat(-k) = conj(fhat(k)) "
                    f"(defect {defect:.3e} at scale {scale:.3e})"
                )

    @property
    def n_v(self) -> int:
        return self.f.shape[1]

    @property
    def dv(self) -> float:
        return 2.0 * self.v_max / self.n_v

    @property
    def v(self) -> np.ndarray:
        return velocity_grid(self.n_v, self.v_max)

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.k_max, self.k_max + 1)


def equilibrium_state(
    profile: VelocityProfile, k_max: int, n_v: int = 512, v_max: float | None = None
) -> PhaseState:
    """Spatially homogeneous state f = f0(v) at time 0.

    v_max defaults to six thermal speeds, wide enough that the grid tail of
    a Maxwellian sits below 2e-8 and the renormalization of the discrete
    equilibrium is invisible to the physics.
    """
    if profile.dimension != 1:
        raise ConstraintViolation("the direct solver is implemented for dimension 1")
    if v_max is None:
        v_max = 6.0 * profile.thermal_speed
    f = np.zeros((2 * k_max + 1, n_v), dtype=complex)
    f[k_max] = _equilibrium_rows(profile, n_v, float(v_max))
    return PhaseState(f=f, time=0.0, k_max=k_max, v_max=float(v_max))


def perturb_density(
    state: PhaseState,
    profile: VelocityProfile,
    k: int,
    amplitude: complex,
    shape: str = "density",
) -> PhaseState:
    """Add amplitude * cos-type content g(v) at modes +-k.

    shape "density" uses g = f0 (a pure density modulation) and "velocity"
    uses g = v f0 (an odd current-type modulation). For real amplitude eps
    the physical perturbation is eps * g(v) * cos(2 pi k x).
    """
    k = int(k)
    if not (1 <= k <= state.k_max):
        raise ConstraintViolation(f"perturbation mode k={k} outside 1..{state.k_max}")
    base = _equilibrium_rows(profile, state.n_v, state.v_max)
    if shape == "density":
        g = base
    elif shape == "velocity":
        g = state.v * base
    else:
        raise ConstraintViolation(f"unknown perturbation shape {shape!r}")
    f = state.f.copy()
    f[state.k_max + k] += 0.5 * complex(amplitude) * g
    f[state.k_max - k] += 0.5 * np.conj(complex(amplitude)) * g
    return PhaseState(f=f, time=state.time, k_max=state.k_max, v_max=state.v_max)


def rho_hat(state: PhaseState) -> np.ndarray:
    """Density modes rho_hat(k) = dv * sum_j fhat(k, v_j)."""
    return state.dv * state.f.sum(axis=1)


def poisson_field(rho_hat_values, W: Interaction, modes) -> np.ndarray:
    """Field modes E_hat(k) = 2 pi i k W_hat(k) rho_hat(k); E_hat(0) = 0.

    The k = 0 entry is zeroed explicitly: the mean of the force vanishes on
    the torus no matter what the zero mode of rho carries.
    """
    rho = np.asarray(rho_hat_values, dtype=complex)
    modes = np.asarray(modes, dtype=int)
    if rho.shape != modes.shape:
        raise ConstraintViolation("rho_hat and mode arrays must align")
    e_hat = 2j * np.pi * modes * interaction_hat(W, modes) * rho
    e_hat[modes == 0] = 0.0
    return e_hat


def _synthesize(e_hat: np.ndarray, modes: np.ndarray, n_x: int) -> np.ndarray:
    """Real field values on the uniform x grid j/n_x from Hermitian modes."""
    spec = np.zeros(n_x, dtype=complex)
    spec[modes % n_x] = e_hat
    return np.fft.ifft(spec).real * n_x


def _sup_field(e_hat: np.ndarray, modes: np.ndarray, k_max: int) -> float:
    n_x = max(16 * k_max, 64)
    return float(np.abs(_synthesize(e_hat, modes, n_x)).max())


@lru_cache(maxsize=16)
def _transport_phase(k_max: int, n_v: int, v_max: float, h: float):
    modes = np.arange(-k_max, k_max + 1)
    phase = np.exp(-2j * np.pi * h * np.outer(modes, velocity_grid(n_v, v_max)))
    phase.setflags(write=False)
    return phase


def collision_substep(
    f_slice: np.ndarray,
    rho_slice: np.ndarray,
    dt: float,
    nu: float,
    profile: VelocityProfile,
    *,
    v_max: float,
) -> np.ndarray:
    """Exact relaxation f <- e^{-nu dt} f + (1 - e^{-nu dt}) rho f0.

    rho_slice must hold the density modes of f_slice. The discrete
    equilibrium carries unit grid mass, so each density mode is exactly
    invariant; nu = 0 (or dt = 0) returns the input unchanged, dt -> +inf
    lands on rho f0.
    """
    if nu < 0.0:
        raise ConstraintViolation("collision frequency nu must be >= 0")
    f = np.asarray(f_slice, dtype=complex)
    rho = np.asarray(rho_slice, dtype=complex)
    if f.ndim != 2 or rho.shape != (f.shape[0],):
        raise ConstraintViolation("rho_slice must hold one density mode per row")
    if math.isnan(dt):
        raise ConstraintViolation("dt must not be NaN")
    if nu == 0.0 or dt == 0.0:
        return f.copy()
    decay = math.exp(-nu * dt)
    f0 = _equilibrium_rows(profile, f.shape[1], float(v_max))
    return decay * f + (1.0 - decay) * np.outer(rho, f0)


def resolution_guard(state: PhaseState) -> float:
    """Edge-band energy fraction of the sheared part of the spectrum.

    The k = 0 row never shears, so the guard pools the velocity spectra of
    all rows k != 0 and measures what fraction of that energy sits in the
    outer RESOLUTION_BAND of |eta| bins. Raises ResolutionExceeded past
    RESOLUTION_TOL: at that point the grid is about to alias the dominant
    filamentation back as a spurious recurrence. (A per-row test would trip
    on dynamically empty harmonics whose infinitesimal content recurs long
    before anything observable does.)
    """
    sheared = np.concatenate(
        [state.f[: state.k_max], state.f[state.k_max + 1 :]], axis=0
    )
    power = np.abs(np.fft.fft(sheared, axis=1)) ** 2
    total = float(power.sum())
    if total <= 0.0:
        return 0.0
    eta = np.fft.fftfreq(state.n_v, d=state.dv)
    band = np.abs(eta) >= (1.0 - RESOLUTION_BAND) / (2.0 * state.dv)
    fraction = float(power[:, band].sum() / total)
    if fraction > RESOLUTION_TOL:
        row_frac = power[:, band].sum(axis=1) / total
        worst = int(np.argmax(row_frac))
        k_bad = worst if worst < state.k_max else worst + 1
        raise ResolutionExceeded(
            f"the sheared spectrum holds {fraction:.3e} of its energy in the top "
            f"{RESOLUTION_BAND:.0%} of |eta| bins at t={state.time:g} "
            f"(tolerance {RESOLUTION_TOL:g}, led by mode k={k_bad - state.k_max}); "
            f"refine the velocity grid"
        )
    return fraction


def step(
    state: PhaseState,
    dt: float,
    W: Interaction,
    profile: VelocityProfile,
    nu: float,
    external_field_hat: np.ndarray | None = None,
    check_resolution: bool = False,
) -> PhaseState:
    """One Strang step: half transport, field solve + kick, collision, half transport.

    Transport multiplies row k by exp(-2 pi i k v dt/2), exact at any dt.
    The kick solves the field from the mid-step density, synthesizes the
    acceleration on a dealiased x grid, and shifts each column in v through
    the spectral phase exp(-2 pi i eta a(x) dt), exact for a frozen field.
    The collision substep is the closed-form relaxation. Negative dt steps
    backward; dt = 0 is the identity.

    external_field_hat, when given, is added to the self-consistent field
    for this step only (mode amplitudes aligned with state.modes); this is
    how an impulsive probe enters the dynamics.
    """
    if not math.isfinite(dt):
        raise ConstraintViolation("dt must be finite")
    if nu < 0.0:
        raise ConstraintViolation("collision frequency nu must be >= 0")
    if dt == 0.0:
        return state
    if abs(dt) * state.k_max * state.v_max > PHASE_BUDGET:
        raise StepTooCoarse(
            f"|dt|={abs(dt):g} turns the corner phase k_max*v_max="
            f"{state.k_max * state.v_max:g} by more than {PHASE_BUDGET:g}; "
            f"shrink the step below {PHASE_BUDGET / (state.k_max * state.v_max):.3g}"
        )
    modes = state.modes
    half = _transport_phase(state.k_max, state.n_v, state.v_max, 0.5 * dt)
    f = state.f * half

    rho_mid = state.dv * f.sum(axis=1)
    e_hat = poisson_field(rho_mid, W, modes)
    if external_field_hat is not None:
        ext = np.asarray(external_field_hat, dtype=complex)
        if ext.shape != modes.shape:
            raise ConstraintViolation("external field modes must align with state.modes")
        e_hat = e_hat + ext
    if np.any(e_hat):
        n_x = max(4 * state.k_max, 8)
        accel = Q_OVER_M * _synthesize(e_hat, modes, n_x)
        grid_spec = np.zeros((n_x, state.n_v), dtype=complex)
        grid_spec[modes % n_x] = f
        f_x = np.fft.ifft(grid_spec, axis=0) * n_x
        eta = np.fft.fftfreq(state.n_v, d=state.dv)
        f_eta = np.fft.fft(f_x, axis=1)
        f_eta *= np.exp(-2j * np.pi * dt * np.outer(accel, eta))
        f_x = np.fft.ifft(f_eta, axis=1)
        grid_spec = np.fft.fft(f_x, axis=0) / n_x
        f = grid_spec[modes % n_x]

    if nu > 0.0:
        rho_post = state.dv * f.sum(axis=1)
        f = collision_substep(f, rho_post, dt, nu, profile, v_max=state.v_max)

    f = f * half
    # Rows +-k traverse different floating-point paths through the kick FFTs,
    # so their independent roundoff slowly breaks the Hermitian pairing;
    # project back onto the real-field manifold once per step.
    f = 0.5 * (f + np.conj(f[::-1]))
    out = PhaseState(f=f, time=state.time + dt, k_max=state.k_max, v_max=state.v_max)
    if check_resolution:
        resolution_guard(out)
    return out


def spectral_snapshot(state: PhaseState, subtract: np.ndarray | None = None) -> SpectralDistribution:
    """Double-Fourier table fhat(k, eta) of the state (optionally minus a k=0 row).

    The velocity FFT is phased for the grid origin at -v_max and shifted so
    eta = 0 sits at the center index, matching the layout the analytic norms
    expect."""
    g = state.f.copy()
    if subtract is not None:
        g[state.k_max] -= subtract
    eta = np.fft.fftfreq(state.n_v, d=state.dv)
    coeffs = np.fft.fft(g, axis=1) * state.dv
    coeffs *= np.exp(2j * np.pi * eta * state.v_max)[None, :]
    return SpectralDistribution(
        k_max=state.k_max,
        eta_grid=np.fft.fftshift(eta),
        coeffs=np.fft.fftshift(coeffs, axes=1),
    )


@dataclass(frozen=True)
class FieldHistory:
    """Recorded density and field modes of a run on its output cadence.

    rho_hat and e_hat have shape (n_times, 2*k_max+1), column i holding mode
    k = i - k_max; sup_e holds the sampled sup-norm of the physical field.
    Construction verifies E_hat = 2 pi i k W_hat(k) rho_hat at every stored
    time, so a history cannot silently carry an inconsistent field.
    """

    times: np.ndarray
    modes: np.ndarray
    rho_hat: np.ndarray
    e_hat: np.ndarray
    sup_e: np.ndarray
    interaction: Interaction

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        modes = np.asarray(self.modes, dtype=int)
        rho = np.asarray(self.rho_hat, dtype=complex)
        e = np.asarray(self.e_hat, dtype=complex)
        sup_e = np.asarray(self.sup_e, dtype=float)
        for name, val in (("times", times), ("modes", modes), ("rho_hat", rho),
                          ("e_hat", e), ("sup_e", sup_e)):
            object.__setattr__(self, name, val)
        if times.ndim != 1 or times.size < 1:
            raise ConstraintViolation("times must be a nonempty 1-d array")
        if times.size > 1 and np.any(np.diff(times) <= 0.0):
            raise ConstraintViolation("record times must be strictly increasing")
        if modes.ndim != 1 or modes.size % 2 == 0 or np.any(np.diff(modes) != 1):
            raise ConstraintViolation("modes must be consecutive integers -k_max..k_max")
        shape = (times.size, modes.size)
        if rho.shape != shape or e.shape != shape or sup_e.shape != (times.size,):
            raise ConstraintViolation(f"field tables must have shape {shape}")
        expected = 2j * np.pi * modes * interaction_hat(self.interaction, modes) * rho
        expected[:, modes == 0] = 0.0
        scale = max(float(np.abs(e).max()), float(np.abs(expected).max()), 1e-300)
        defect = float(np.abs(e - expected).max())
        if defect > 1e-12 * scale:
            raise ConstraintViolation(
                f"stored field breaks E_hat = 2 pi i k W_hat rho_hat "
                f"(defect {defect:.3e} at scale {scale:.3e})"
            )

    @classmethod
    def from_density(cls, times, modes, rho_hat_table, W: Interaction) -> "FieldHistory":
        """Build a consistent history from density modes alone."""
        times = np.asarray(times, dtype=float)
        modes = np.asarray(modes, dtype=int)
        rho = np.asarray(rho_hat_table, dtype=complex)
        e = 2j * np.pi * modes * interaction_hat(W, modes) * rho
        e[:, modes == 0] = 0.0
        k_max = int(modes.max())
        sup_e = np.array([_sup_field(row, modes, k_max) for row in e])
        return cls(times=times, modes=modes, rho_hat=rho, e_hat=e,
                   sup_e=sup_e, interaction=W)

    @property
    def k_max(self) -> int:
        return int(self.modes.max())

    def _bracket(self, t: float) -> tuple[int, float]:
        t0, t1 = float(self.times[0]), float(self.times[-1])
        span = max(t1 - t0, 1.0)
        if t < t0 - 1e-9 * span or t > t1 + 1e-9 * span:
            raise OutOfHistory(f"time {t:g} outside the recorded range [{t0:g}, {t1:g}]")
        t = min(max(t, t0), t1)
        i = int(np.searchsorted(self.times, t, side="right"))
        i = min(max(i, 1), self.times.size - 1)
        w = (t - self.times[i - 1]) / (self.times[i] - self.times[i - 1])
        return i, float(w)

    def field_at(self, t: float, x: float) -> float:
        """Physical field E(t, x), linear in t between records, spectral in x."""
        if self.times.size == 1:
            row = self.e_hat[0]
            t0 = float(self.times[0])
            if abs(t - t0) > 1e-9:
                raise OutOfHistory(f"time {t:g} outside the single-record history at {t0:g}")
        else:
            i, w = self._bracket(t)
            row = (1.0 - w) * self.e_hat[i - 1] + w * self.e_hat[i]
        return float(np.real(np.dot(row, np.exp(2j * np.pi * self.modes * x))))

    def sup_at(self, t: float) -> float:
        """Linear interpolant of the recorded sup norms (an upper bound for
        the sup of the interpolated field, by convexity)."""
        if self.times.size == 1:
            return float(self.sup_e[0])
        i, w = self._bracket(t)
        return float((1.0 - w) * self.sup_e[i - 1] + w * self.sup_e[i])


@dataclass(frozen=True)
class Trajectory:
    """Sampled test-particle path through a recorded field."""

    times: np.ndarray
    x_path: np.ndarray
    v_path: np.ndarray
    x0: float
    v0: float
    start: float


def _deflection_rhs(field: FieldHistory, x0: float, v0: float, s: float):
    def accel(tau: float, dx: float) -> float:
        return Q_OVER_M * field.field_at(tau, x0 + v0 * (tau - s) + dx)

    return accel


def _integrate_deflection(
    field: FieldHistory, x: float, v: float, s: float, t: float, max_step: float
):
    """RK4 on the deflection system dX' = dV, dV' = (q/m) E(tau, X0 + dX).

    Steps are aligned to the record knots (the field is only C^0 there), so
    the integrand is smooth inside every RK4 step. Working on the deflection
    directly keeps E = 0 histories at exactly (0.0, 0.0)."""
    accel = _deflection_rhs(field, x, v, s)
    knots = [s]
    for tk in field.times:
        if s < tk < t:
            knots.append(float(tk))
    knots.append(t)
    dx = 0.0
    dv = 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        seg = b - a
        n = max(1, int(math.ceil(seg / max_step)))
        h = seg / n
        tau = a
        for _ in range(n):
            k1x, k1v = dv, accel(tau, dx)
            k2x = dv + 0.5 * h * k1v
            k2v = accel(tau + 0.5 * h, dx + 0.5 * h * k1x)
            k3x = dv + 0.5 * h * k2v
            k3v = accel(tau + 0.5 * h, dx + 0.5 * h * k2x)
            k4x = dv + h * k3v
            k4v = accel(tau + h, dx + h * k3x)
            dx += (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            dv += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
            tau += h
    return dx, dv


def characteristics_deflect(
    field: FieldHistory, x: float, v: float, s: float, t: float, max_step: float = 0.02
):
    """Deflection (X - x - v(t-s), V - v) of the characteristic through (x, v, s).

    The characteristic solves dX/dt = V, dV/dt = (q/m) E(t, X) with the
    recorded field (linear in t between records, spectral in x). A history
    whose field vanishes identically returns exactly (0.0, 0.0)."""
    s = float(s)
    t = float(t)
    if t < s:
        raise ConstraintViolation("need t >= s")
    t0, t1 = float(field.times[0]), float(field.times[-1])
    span = max(t1 - t0, 1.0)
    if s < t0 - 1e-9 * span or t > t1 + 1e-9 * span:
        raise OutOfHistory(
            f"window [{s:g}, {t:g}] outside the recorded range [{t0:g}, {t1:g}]"
        )
    if t == s:
        return 0.0, 0.0
    return _integrate_deflection(field, float(x), float(v), s, t, max_step)


def characteristic_path(
    field: FieldHistory,
    x: float,
    v: float,
    s: float,
    t: float,
    n_samples: int = 33,
    max_step: float = 0.02,
) -> Trajectory:
    """Sampled trajectory (X, V) from s to t through the recorded field."""
    if n_samples < 2:
        raise ConstraintViolation("need at least two samples")
    times = np.linspace(float(s), float(t), int(n_samples))
    xs = np.empty(times.size)
    vs = np.empty(times.size)
    for i, tau in enumerate(times):
        dx, dv = characteristics_deflect(field, x, v, s, float(tau), max_step=max_step)
        xs[i] = x + v * (tau - s) + dx
        vs[i] = v + dv
    return Trajectory(times=times, x_path=xs, v_path=vs, x0=float(x), v0=float(v), start=float(s))


@dataclass(frozen=True)
class KineticRun:
    """Parameters of a direct simulation.

    norms lists analytic-norm diagnostics as ("f"|"y", lam, mu) triples,
    evaluated on f - f0 at every record time. v_max = None defaults to six
    thermal speeds. t_end must sit on the step grid.
    """

    profile: VelocityProfile
    interaction: Interaction
    nu: float
    dt: float
    t_end: float
    k_pert: int = 1
    amplitude: float = 0.0
    pert_shape: str = "density"
    k_max: int = 8
    n_v: int = 512
    v_max: float | None = None
    record_every: int = 1
    norms: tuple = ()

    def __post_init__(self):
        if self.nu < 0.0:
            raise ConstraintViolation("collision frequency nu must be >= 0")
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ConstraintViolation("dt must be positive and finite")
        if not (self.t_end >= self.dt):
            raise ConstraintViolation("t_end must cover at least one step")
        n = round(self.t_end / self.dt)
        if abs(n * self.dt - self.t_end) > 1e-9 * max(1.0, self.t_end):
            raise ConstraintViolation("t_end must be an integer number of steps")
        if int(self.k_max) != self.k_max or self.k_max < 1:
            raise ConstraintViolation("k_max must be a positive integer")
        if int(self.n_v) != self.n_v or self.n_v < 8 or self.n_v % 2:
            raise ConstraintViolation("n_v must be an even integer >= 8")
        if self.amplitude != 0.0 and not (1 <= int(self.k_pert) <= self.k_max):
            raise ConstraintViolation("perturbation mode must lie in 1..k_max")
        if self.pert_shape not in ("density", "velocity"):
            raise ConstraintViolation(f"unknown perturbation shape {self.pert_shape!r}")
        if self.v_max is not None and not (self.v_max > 0.0):
            raise ConstraintViolation("v_max must be positive")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ConstraintViolation("record_every must be a positive integer")
        for entry in self.norms:
            kind, lam, mu = entry
            if kind not in ("f", "y"):
                raise ConstraintViolation(f"unknown norm kind {kind!r}")
            NormParams(lam=float(lam), mu=float(mu))

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def resolved_v_max(self) -> float:
        if self.v_max is not None:
            return float(self.v_max)
        return 6.0 * self.profile.thermal_speed


def _norm_column(kind: str, lam: float, mu: float) -> str:
    return f"{kind}norm_{lam:g}_{mu:g}"


def run(config: KineticRun) -> tuple[FieldHistory, dict]:
    """March the full model and record fields plus scalar diagnostics.

    Returns (FieldHistory, diagnostics). The diagnostics dict carries arrays
    "t", "mass", "momentum", "l2", one column per configured analytic norm
    of f - f0, and "stop_reason" ("t_end", or "resolution_exceeded" when the
    recurrence guard trips at a record time, in which case the tables end at
    the last resolved record)."""
    v_max = config.resolved_v_max()
    state = equilibrium_state(config.profile, config.k_max, config.n_v, v_max)
    if config.amplitude != 0.0:
        state = perturb_density(
            state, config.profile, config.k_pert, config.amplitude, config.pert_shape
        )
    f0 = _equilibrium_rows(config.profile, config.n_v, v_max)
    modes = state.modes
    norm_params = [
        (_norm_column(kind, lam, mu), kind, NormParams(lam=float(lam), mu=float(mu)))
        for kind, lam, mu in config.norms
    ]

    times, rho_rows, e_rows, sup_rows = [], [], [], []
    mass, momentum, l2 = [], [], []
    norm_series: dict = {name: [] for name, _, _ in norm_params}
    stop_reason = "t_end"

    def record(st: PhaseState):
        resolution_guard(st)
        rho = st.dv * st.f.sum(axis=1)
        e_hat = poisson_field(rho, config.interaction, modes)
        times.append(st.time)
        rho_rows.append(rho)
        e_rows.append(e_hat)
        sup_rows.append(_sup_field(e_hat, modes, st.k_max))
        mass.append(float(rho[st.k_max].real))
        momentum.append(float((st.dv * np.dot(st.f[st.k_max], st.v)).real))
        l2.append(float(np.sqrt(st.dv * np.sum(np.abs(st.f) ** 2))))
        if norm_params:
            table = spectral_snapshot(st, subtract=f0)
            for name, kind, params in norm_params:
                value = f_norm(table, params) if kind == "f" else y_norm(table, params)
                norm_series[name].append(value)

    try:
        record(state)
        for n in range(1, config.n_steps + 1):
            state = step(state, config.dt, config.interaction, config.profile, config.nu)
            if n % config.record_every == 0 or n == config.n_steps:
                record(state)
    except ResolutionExceeded:
        stop_reason = "resolution_exceeded"

    history = FieldHistory(
        times=np.array(times),
        modes=modes,
        rho_hat=np.array(rho_rows),
        e_hat=np.array(e_rows),
        sup_e=np.array(sup_rows),
        interaction=config.interaction,
    )
    diagnostics = {
        "t": np.array(times),
        "mass": np.array(mass),
        "momentum": np.array(momentum),
        "l2": np.array(l2),
        "stop_reason": stop_reason,
    }
    for name in norm_series:
        diagnostics[name] = np.array(norm_series[name])
    return history, diagnostics


@dataclass(frozen=True)
class EchoReport:
    """Outcome of an impulsive echo probe."""

    l: int
    k: int
    s_force: float
    t_predicted: float
    t_measured: float
    peak_amp: float
    baseline_amp: float

    @property
    def rel_offset(self) -> float:
        return (self.t_measured - self.t_predicted) / self.t_predicted

    def as_dict(self) -> dict:
        return {
            "l": self.l,
            "k": self.k,
            "s_force": self.s_force,
            "t_predicted": self.t_predicted,
            "t_measured": self.t_measured,
            "peak_amp": self.peak_amp,
            "baseline_amp": self.baseline_amp,
        }


def _march_mode_trace(
    config: KineticRun, l: int, m: int, s_force: float, eps1: float, eps2: float
):
    """March the echo run and return (times, |rho_hat(t, k)|) for k = l + m.

    The probe enters as an external field eps2/dt * cos(2 pi m x) held for
    the single step that starts at s_force, an impulse of total strength
    eps2 independent of dt."""
    v_max = config.resolved_v_max()
    state = equilibrium_state(config.profile, config.k_max, config.n_v, v_max)
    state = perturb_density(state, config.profile, l, eps1)
    modes = state.modes
    k = l + m
    col = config.k_max + k
    j_kick = int(round(s_force / config.dt))
    external = None
    if eps2 != 0.0:
        external = np.zeros(modes.size, dtype=complex)
        external[config.k_max + m] = 0.5 * eps2 / config.dt
        external[config.k_max - m] = 0.5 * eps2 / config.dt
    times = [0.0]
    trace = [abs(state.dv * state.f[col].sum())]
    for n in range(config.n_steps):
        kick = external if (external is not None and n == j_kick) else None
        state = step(
            state, config.dt, config.interaction, config.profile, config.nu,
            external_field_hat=kick,
        )
        if (n + 1) % config.record_every == 0:
            resolution_guard(state)
        times.append(state.time)
        trace.append(abs(state.dv * state.f[col].sum()))
    return np.array(times), np.array(trace)


def _refine_peak(times: np.ndarray, values: np.ndarray) -> tuple[float, float]:
    i = int(np.argmax(values))
    if 0 < i < times.size - 1:
        y0, y1, y2 = values[i - 1], values[i], values[i + 1]
        denom = y0 - 2.0 * y1 + y2
        if denom < 0.0:
            off = 0.5 * (y0 - y2) / denom
            h = 0.5 * (times[i + 1] - times[i - 1])
            return float(times[i] + off * h), float(y1 - 0.25 * (y0 - y2) * off)
    return float(times[i]), float(values[i])


def echo_experiment(
    config: KineticRun, l: int, k_minus_l: int, s_force: float, eps1: float, eps2: float
) -> EchoReport:
    """Kick a streaming mode-l perturbation at mode k-l and locate the echo.

    An initial density perturbation of size eps1 at mode l free-streams to
    time s_force, where an impulsive external field of strength eps2 at
    mode k - l transfers its phase-mixed content to mode k = l + k_minus_l.
    The mode-k density trace then rises out of nothing at the predicted
    t* = s_force (k - l)/k; the report carries the predicted and measured
    peak times and the peak against an unkicked baseline."""
    l = int(l)
    m = int(k_minus_l)
    k = l + m
    if l == 0 or m == 0 or k == 0:
        raise ConstraintViolation("echo probe needs nonzero modes l, k-l and k")
    if max(abs(l), abs(m), abs(k)) > config.k_max:
        raise ConstraintViolation("echo modes must fit inside the retained band")
    if not (s_force > 0.0):
        raise ConstraintViolation("the kick time must be positive")
    if not (eps1 > 0.0) or eps2 < 0.0:
        raise ConstraintViolation("need eps1 > 0 and eps2 >= 0")
    t_star = echo_time(l, k, s_force)
    if t_star is None:
        raise ConstraintViolation(
            f"modes l={l}, k={k} launch no future echo from s={s_force:g}"
        )
    dv = 2.0 * config.resolved_v_max() / config.n_v
    t_rec = 1.0 / (abs(k) * dv)
    if t_star > RECURRENCE_SAFETY * t_rec:
        raise EchoBeyondRecurrence(
            f"predicted echo at t*={t_star:g} lies beyond {RECURRENCE_SAFETY:g} of "
            f"the velocity-grid recurrence time {t_rec:g}; refine the grid"
        )
    if t_star > config.t_end:
        raise ConstraintViolation(
            f"horizon t_end={config.t_end:g} ends before the predicted echo at {t_star:g}"
        )
    if abs(round(s_force / config.dt) * config.dt - s_force) > 1e-9:
        raise ConstraintViolation("s_force must sit on the step grid")

    times, kicked = _march_mode_trace(config, l, m, s_force, eps1, eps2)
    _, quiet = _march_mode_trace(config, l, m, s_force, eps1, 0.0)
    window = times >= s_force + max(3.0 * config.dt, 0.15 * (t_star - s_force))
    t_measured, peak_amp = _refine_peak(times[window], kicked[window])
    baseline_amp = float(quiet[window].max())
    return EchoReport(
        l=l,
        k=k,
        s_force=float(s_force),
        t_predicted=float(t_star),
        t_measured=t_measured,
        peak_amp=peak_amp,
        baseline_amp=baseline_amp,
    )
