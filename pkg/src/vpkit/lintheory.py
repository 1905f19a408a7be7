"""Linear response of the collisional transport model.

The density mode rho_hat(t, k) of the linearized dynamics obeys a scalar
Volterra equation with memory kernel

    K_nu(t, k) = exp(-nu*t) * f0_hat(k*t) * (nu - W_hat(k) * k^2 * t),

and the Laplace-side dispersion function of that kernel decides stability: a
margin |1 - L| >= kappa > 0 over the closed lower frequency half-plane rules
out growing modes, while the root of 1 - L in the upper half-plane gives the
decay rate 2*pi*|k|*Im(eta0) and oscillation frequency 2*pi*|k|*Re(eta0) of
the density. This module houses the kernel, the marching solver for the
density history, mode reconstruction from the density, the closed k=0 forms,
the dispersion function (quadrature and Faddeeva-function routes), the
stability scan, the single-particle free-streaming response forms, and a
peak-envelope decay-rate fitter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize
from scipy.special import wofz

from .errors import (
    ConstraintViolation,
    IntegralDiverges,
    MarginNonPositive,
    StepTooCoarse,
    TooFewPeaks,
)
from .profiles import (
    AnalyticityCertificate,
    Interaction,
    VelocityProfile,
    interaction_hat,
    profile_fourier,
    profile_sample_dv,
)

__all__ = [
    "VolterraKernel",
    "DensityHistory",
    "StabilityReport",
    "ScanSpec",
    "kernel_eval",
    "volterra_solve",
    "mode_reconstruct",
    "zero_mode",
    "dispersion_L",
    "stability_scan",
    "free_streaming_response",
    "damping_rate_fit",
]


def _kernel_values(nu, k, profile, interaction, times):
    """Closed-form kernel samples exp(-nu t) f0_hat(kt) (nu - W_hat(k) k^2 t)."""
    times = np.asarray(times, dtype=float)
    what = interaction_hat(interaction, k)
    fh = profile_fourier(profile, k * times)
    return np.exp(-nu * times) * fh * (nu - what * k * k * times)


@dataclass(frozen=True, eq=False)
class VolterraKernel:
    """Memory kernel of the closed density equation, cached on a time grid.

    The cache holds closed-form samples at times 0, dt, ..., horizon; the
    marching solver reuses them when its grid matches. kernel_eval always
    recomputes from the closed form, so cache and direct evaluation agree to
    rounding.
    """

    nu: float
    k: int
    profile: VelocityProfile
    interaction: Interaction
    dt: float = 0.02
    horizon: float = 60.0
    times: np.ndarray = field(init=False, repr=False)
    samples: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.nu < 0:
            raise ConstraintViolation("collision frequency must be >= 0")
        if int(self.k) != self.k:
            raise ConstraintViolation("mode k must be an integer")
        if self.dt <= 0 or self.horizon <= 0:
            raise ConstraintViolation("kernel sampling needs dt > 0 and horizon > 0")
        if self.profile.dimension != 1:
            raise ConstraintViolation("density-mode theory is one-dimensional")
        object.__setattr__(self, "nu", float(self.nu))
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "horizon", float(self.horizon))
        n = int(round(self.horizon / self.dt))
        times = np.arange(n + 1) * self.dt
        object.__setattr__(self, "times", times)
        object.__setattr__(
            self,
            "samples",
            _kernel_values(self.nu, self.k, self.profile, self.interaction, times),
        )

    @property
    def velocity_scale(self) -> float:
        """Phase scale of the kernel oscillation: RMS spread plus drift."""
        drift = max(abs(c) for _, c, _ in self.profile.components)
        return self.profile.thermal_speed + drift


def kernel_eval(kern: VolterraKernel, t):
    """Evaluate the memory kernel at time(s) t >= 0 from the closed form."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ConstraintViolation("kernel time must be >= 0")
    vals = _kernel_values(kern.nu, kern.k, kern.profile, kern.interaction, t)
    if vals.ndim == 0:
        return complex(vals)
    return vals


@dataclass(frozen=True, eq=False)
class DensityHistory:
    """Density mode rho_hat(t, k) on a uniform time grid."""

    k: int
    times: np.ndarray
    rho_hat: np.ndarray
    method: dict

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        rho = np.asarray(self.rho_hat, dtype=complex)
        if times.ndim != 1 or times.shape != rho.shape or times.size < 1:
            raise ConstraintViolation("times and rho_hat must be matching 1-d arrays")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "rho_hat", rho)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0

    def index_of(self, t: float) -> int:
        """Grid index of time t; raises if t is not a grid point."""
        if self.times.size == 1:
            i = 0
        else:
            i = int(round((float(t) - float(self.times[0])) / self.dt))
        if i < 0 or i >= self.times.size or abs(self.times[i] - t) > 1e-9 * max(1.0, self.dt):
            raise ConstraintViolation(f"time {t!r} is not on the history grid")
        return i


def volterra_solve(k: int, f0_trace, kern: VolterraKernel, T: float, dt: float) -> DensityHistory:
    """March the closed density equation to time T with step dt.

    f0_trace(t) must return the initial-data trace fhat_0(k, k*t). The update
    is the implicit product-trapezoid rule

        rho_n = (a_n + sum_{j<n} w_j K(t_n - t_j) rho_j) / (1 - dt/2 * K(0)),

    with a_n = exp(-nu t_n) f0_trace(t_n) and end weights dt/2: second order
    and deterministic given (T, dt).
    """
    k = int(k)
    if k != kern.k:
        raise ConstraintViolation(f"kernel is for mode {kern.k}, solve requested k={k}")
    if dt <= 0 or T <= 0:
        raise ConstraintViolation("need dt > 0 and T > 0")
    if dt * abs(k) * kern.velocity_scale >= 0.25:
        raise StepTooCoarse(
            f"dt={dt:g} does not resolve the kernel phase at k={k} "
            f"(velocity scale {kern.velocity_scale:.3g}): need dt*|k|*scale < 0.25"
        )
    n = int(round(T / dt))
    times = np.arange(n + 1) * dt
    if abs(kern.dt - dt) <= 1e-12 * dt and kern.samples.size >= n + 1:
        kvals = kern.samples[: n + 1]
    else:
        kvals = _kernel_values(kern.nu, kern.k, kern.profile, kern.interaction, times)
    a = np.fromiter((complex(f0_trace(t)) for t in times), dtype=complex, count=n + 1)
    a *= np.exp(-kern.nu * times)
    rho = np.zeros(n + 1, dtype=complex)
    rho[0] = a[0]
    denom = 1.0 - 0.5 * dt * kvals[0]
    for m in range(1, n + 1):
        conv = dt * np.dot(kvals[m:0:-1], rho[:m]) - 0.5 * dt * kvals[m] * rho[0]
        rho[m] = (a[m] + conv) / denom
    return DensityHistory(
        k=k,
        times=times,
        rho_hat=rho,
        method={"scheme": "product-trapezoid", "order": 2, "dt": float(dt), "nu": kern.nu},
    )


def mode_reconstruct(hist: DensityHistory, xi: float, t: float, kern: VolterraKernel, f0_hat):
    """Reconstruct fhat(t, k, xi) from the density history.

    f0_hat(eta) must return the initial-data transform fhat_0(k, eta) for the
    history's mode k. The time integral uses the same trapezoid weights as the
    solver, so xi = 0 reproduces the density history itself to rounding.
    """
    i = hist.index_of(t)
    k = hist.k
    nu = kern.nu
    what = interaction_hat(kern.interaction, k)
    free = np.exp(-nu * float(t)) * complex(f0_hat(xi + k * float(t)))
    if i == 0:
        return complex(free)
    s = hist.times[: i + 1]
    u = float(t) - s
    eta = xi + k * u
    w = np.full(i + 1, hist.dt)
    w[0] = w[-1] = 0.5 * hist.dt
    integrand = (
        np.exp(-nu * u)
        * (nu - k * eta * what)
        * profile_fourier(kern.profile, eta)
        * hist.rho_hat[: i + 1]
    )
    return complex(free + np.dot(w, integrand))


def zero_mode(f0_hat_at_k0, nu: float, t: float, profile: VelocityProfile):
    """Spatial-mean mode: frozen density, shape relaxing to the equilibrium.

    Returns (rho0, fhat0). The density of the mean mode is constant in time,
    rho0 = fhat_0(0, 0); mean-zero data gives rho0 = 0 identically. fhat0(xi)
    evaluates the mode at time t:

        fhat(t, 0, xi) = exp(-nu t) fhat_0(0, xi)
                         + (1 - exp(-nu t)) rho0 f0_hat(xi).
    """
    if t < 0:
        raise ConstraintViolation("time must be >= 0")
    if nu < 0:
        raise ConstraintViolation("collision frequency must be >= 0")
    rho0 = complex(f0_hat_at_k0(0.0))
    decay = float(np.exp(-nu * float(t)))

    def fhat0(xi):
        relaxed = rho0 * complex(profile_fourier(profile, xi))
        return decay * complex(f0_hat_at_k0(xi)) + (1.0 - decay) * relaxed

    return rho0, fhat0


def _laplace_terms(eta, k, nu, lambda_weight, profile):
    """Per-component (weight, a, b) of the transformed kernel exp(at - bt^2)."""
    base = (
        2j * np.pi * np.conj(eta) * abs(k)
        + 2.0 * np.pi * lambda_weight * abs(k)
        - nu
    )
    return [
        (w, base - 2j * np.pi * c * k, 2.0 * np.pi**2 * s * s * k * k)
        for w, c, s in profile.components
    ]


def _L_closed(eta, k, nu, lambda_weight, profile, what):
    """Faddeeva-function evaluation of the dispersion function (vectorized)."""
    eta = np.asarray(eta, dtype=complex)
    total = np.zeros(eta.shape, dtype=complex)
    for w, a, b in _laplace_terms(eta, k, nu, lambda_weight, profile):
        rb = np.sqrt(b)
        i0 = np.sqrt(np.pi) / (2.0 * rb) * wofz(-1j * a / (2.0 * rb))
        i1 = 1.0 / (2.0 * b) + (a / (2.0 * b)) * i0
        total += w * (nu * i0 - what * k * k * i1)
    return total


def dispersion_L(
    eta,
    k: int,
    nu: float,
    lambda_weight: float = 0.0,
    *,
    kern: VolterraKernel,
    method: str = "wofz",
    certificate: AnalyticityCertificate | None = None,
):
    """Laplace-side dispersion function of the memory kernel.

    Evaluates

        L(eta, k) = int_0^inf exp(2 pi i conj(eta) |k| t)
                    exp(2 pi lambda_weight |k| t) K_nu(t, k) dt.

    kern supplies the profile and interaction; k and nu are explicit so scans
    can vary them. method "wofz" uses the closed Gaussian forms through the
    Faddeeva function; method "quad" integrates adaptively to relative error
    1e-9. Both routes stay available and are cross-checked in the tests. When
    a certificate is given, the linear growth of the integrand is checked
    against the certified transform decay and IntegralDiverges is raised if
    the certificate cannot vouch for convergence.
    """
    k = int(k)
    if nu < 0:
        raise ConstraintViolation("collision frequency must be >= 0")
    what = interaction_hat(kern.interaction, k)
    if k == 0:
        # no phase and no field: the kernel is nu*exp(-nu t)
        return complex(1.0) if nu > 0 else complex(0.0)
    growth = (
        2.0 * np.pi * abs(k) * float(np.imag(eta))
        + 2.0 * np.pi * lambda_weight * abs(k)
        - nu
    )
    if certificate is not None:
        allowed = 2.0 * np.pi * certificate.lambda0 * abs(k)
        if growth >= allowed:
            raise IntegralDiverges(
                f"certificate decay 2*pi*lambda0*|k|={allowed:.4g} cannot absorb "
                f"integrand growth {growth:.4g} at eta={eta}"
            )
    if method == "wofz":
        return complex(_L_closed(eta, k, nu, lambda_weight, kern.profile, what))
    if method == "quad":
        terms = _laplace_terms(eta, k, nu, lambda_weight, kern.profile)
        T = 0.0
        for _, a, b in terms:
            ra = float(np.real(a))
            T = max(T, (ra + np.sqrt(ra * ra + 160.0 * b)) / (2.0 * b))
        T = 1.25 * T + 1.0
        phase = 2j * np.pi * np.conj(eta) * abs(k) + 2.0 * np.pi * lambda_weight * abs(k)

        def g(t):
            return complex(
                np.exp(phase * t)
                * _kernel_values(nu, k, kern.profile, kern.interaction, t)
            )

        re = quad(lambda t: g(t).real, 0.0, T, limit=400, epsabs=1e-13, epsrel=1e-10)[0]
        im = quad(lambda t: g(t).imag, 0.0, T, limit=400, epsabs=1e-13, epsrel=1e-10)[0]
        return complex(re, im)
    raise ConstraintViolation(f"unknown dispersion method {method!r}")


@dataclass(frozen=True)
class ScanSpec:
    """Grid specification for the stability-margin scan.

    eta_re_max / eta_im_max default to None, meaning they are sized from the
    profile's velocity scale (resonances sit near the drift speeds). Modes
    with |k| > k_cutoff whose analytic majorant keeps |L| small are bounded
    without scanning.
    """

    eta_re_max: float | None = None
    eta_im_max: float | None = None
    n_re: int = 121
    n_im: int = 25
    refine: bool = True
    k_cutoff: int = 8
    speed_ratio_threshold: float = 3.0


def _margin_majorant(k, nu, profile, interaction):
    """Bound for |L| on the closed lower half-plane (all phases dropped)."""
    what = abs(interaction_hat(interaction, k))
    tot = 0.0
    for w, _, s in profile.components:
        b = 2.0 * np.pi**2 * s * s * k * k
        tot += w * (nu * np.sqrt(np.pi) / (2.0 * np.sqrt(b)) + what * k * k / (2.0 * b))
    return tot


@dataclass(frozen=True, eq=False)
class StabilityReport:
    """Measured stability margin kappa = inf |1 - L| and where it occurs."""

    kappa: float
    worst_mode: int
    worst_frequency: complex
    scan: dict

    def __post_init__(self):
        if self.kappa < 0:
            raise ConstraintViolation("stability margin must be >= 0")


def stability_scan(k_range, nu: float, kern_family, scan: ScanSpec | None = None) -> StabilityReport:
    """Measure kappa = inf over modes and the closed lower half-plane of |1 - L|.

    k_range is an inclusive (k_min, k_max) interval of integer modes; k = 0
    carries no field and is skipped. kern_family is a callable k -> kernel
    supplying the profile and interaction per mode. Minima found on the coarse
    grid are refined by Nelder-Mead (clamped to Im eta <= 0). A margin below
    root tolerance means 1 - L has a zero in the closed lower half-plane and
    MarginNonPositive is raised: the configuration supports a non-decaying
    mode and downstream growth control must refuse it.
    """
    if scan is None:
        scan = ScanSpec()
    kmin, kmax = int(k_range[0]), int(k_range[1])
    modes = [k for k in range(kmin, kmax + 1) if k != 0]
    if not modes:
        raise ConstraintViolation("k_range contains no nonzero modes")

    margins: dict[int, tuple[float, complex]] = {}
    skipped: dict[int, float] = {}
    best = (np.inf, 0, 0j)
    for k in modes:
        kern = kern_family(k)
        re_max = scan.eta_re_max
        if re_max is None:
            re_max = 1.0 + 4.0 * kern.velocity_scale
        im_max = scan.eta_im_max
        if im_max is None:
            im_max = 0.5 + 2.0 * kern.velocity_scale
        majorant = _margin_majorant(k, nu, kern.profile, kern.interaction)
        if abs(k) > scan.k_cutoff and majorant <= 0.5:
            skipped[k] = 1.0 - majorant
            continue
        grid = (
            np.linspace(-re_max, re_max, scan.n_re)[None, :]
            + 1j * np.linspace(-im_max, 0.0, scan.n_im)[:, None]
        )
        what = interaction_hat(kern.interaction, k)
        mvals = np.abs(1.0 - _L_closed(grid, k, nu, 0.0, kern.profile, what))
        flat = int(np.argmin(mvals))
        m0 = float(mvals.flat[flat])
        e0 = complex(grid.flat[flat])
        if scan.refine and m0 < 1.0:

            def objective(xy):
                x, y = xy
                eta = complex(x, min(y, 0.0))
                val = abs(1.0 - complex(_L_closed(eta, k, nu, 0.0, kern.profile, what)))
                return val + max(y, 0.0)

            res = minimize(
                objective,
                [e0.real, e0.imag],
                method="Nelder-Mead",
                options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 800},
            )
            if res.fun < m0:
                m0 = float(res.fun)
                e0 = complex(res.x[0], min(res.x[1], 0.0))
        margins[k] = (m0, e0)
        if m0 < best[0]:
            best = (m0, k, e0)
        if m0 < 1e-7:
            raise MarginNonPositive(
                f"root of 1 - L at eta = {e0:.6g} for mode k = {k} (margin {m0:.3e}): "
                "configuration supports a non-decaying mode"
            )

    kappa = best[0]
    worst_mode = best[1]
    worst_eta = best[2]
    tail_bound = min(skipped.values()) if skipped else None
    if tail_bound is not None and tail_bound < kappa:
        kappa = tail_bound
        worst_mode = min(skipped, key=skipped.get)
        worst_eta = 0j
    ref_kern = kern_family(worst_mode if worst_mode != 0 else modes[0])
    v_te = ref_kern.profile.thermal_speed
    ratio = abs(worst_eta.real + 1j * nu / (2.0 * np.pi * max(1, abs(worst_mode)))) / v_te
    return StabilityReport(
        kappa=float(kappa),
        worst_mode=int(worst_mode),
        worst_frequency=worst_eta,
        scan={
            "n_re": scan.n_re,
            "n_im": scan.n_im,
            "refined": scan.refine,
            "k_cutoff": scan.k_cutoff,
            "margins": {k: (m, e.real, e.imag) for k, (m, e) in margins.items()},
            "skipped_lower_bounds": dict(skipped),
            "phase_speed_ratio": float(ratio),
            "phase_speed_threshold": float(scan.speed_ratio_threshold),
            "phase_speed_ok": bool(ratio >= scan.speed_ratio_threshold),
        },
    )


def free_streaming_response(omega, k, v, nu, t0, t, profile: VelocityProfile, form: str = "averaged"):
    """Single-particle response of free streaming to an oscillating field.

    All forms share the prefactor -i f0'(v) and differ in the resonance
    factor built from delta = omega - k*v and s = t - t0:

    - "transient": (1 - exp(i delta s)) / delta, the finite-time response
      launched at t0; at the resonance delta = 0 it grows linearly in s.
    - "collisional": the transient damped by the survival factor exp(-nu s).
    - "averaged": 1 / (delta + i nu), the collision-time average of the
      collisional form with density nu exp(-nu s); the resonance is broadened
      to modulus 1/nu.

    Inputs broadcast; scalars in, scalar out.
    """
    if k == 0:
        raise ConstraintViolation("free-streaming response needs k != 0")
    omega_arr = np.asarray(omega, dtype=float)
    v_arr = np.asarray(v, dtype=float)
    delta = omega_arr - k * v_arr
    s = float(t) - float(t0)
    pref = -1j * profile_sample_dv(profile, v_arr)
    if form in ("transient", "collisional"):
        half = 0.5 * delta * s
        # (1 - exp(i delta s))/delta = -i s exp(i delta s / 2) sinc(delta s / 2)
        factor = -1j * s * np.exp(1j * half) * np.sinc(half / np.pi)
        if form == "collisional":
            factor = np.exp(-nu * s) * factor
    elif form == "averaged":
        with np.errstate(divide="ignore", invalid="ignore"):
            factor = 1.0 / (delta + 1j * nu)
    else:
        raise ConstraintViolation(f"unknown response form {form!r}")
    out = pref * factor
    if out.ndim == 0:
        return complex(out)
    return out


def damping_rate_fit(series, window):
    """Fit an exponential envelope through the peaks of |series|.

    series is a DensityHistory or a (times, values) pair; window = (t_lo, t_hi)
    restricts which samples are used. Local maxima of log|value| are refined
    by a three-point parabola and a least-squares line through the refined
    peaks gives (rate, intercept, rms_residual), with rate the slope (negative
    means decay). Fewer than 8 peaks inside the window raises TooFewPeaks; a
    large residual flags an envelope that is not exponential.
    """
    if isinstance(series, DensityHistory):
        times, values = series.times, series.rho_hat
    else:
        times, values = series
        times = np.asarray(times, dtype=float)
        values = np.asarray(values)
    t_lo, t_hi = float(window[0]), float(window[1])
    with np.errstate(divide="ignore"):
        lv = np.log(np.abs(values))
    peak_t = []
    peak_l = []
    for i in range(1, len(times) - 1):
        if times[i] < t_lo or times[i] > t_hi:
            continue
        window_vals = lv[i - 1 : i + 2]
        if not np.all(np.isfinite(window_vals)):
            continue
        if not (lv[i] >= lv[i - 1] and lv[i] > lv[i + 1]):
            continue
        d2 = lv[i - 1] - 2.0 * lv[i] + lv[i + 1]
        h = 0.5 * (times[i + 1] - times[i - 1])
        if d2 < 0.0:
            off = 0.5 * (lv[i - 1] - lv[i + 1]) / d2
            peak_t.append(times[i] + off * h)
            peak_l.append(lv[i] - 0.25 * (lv[i - 1] - lv[i + 1]) * off)
        else:
            peak_t.append(times[i])
            peak_l.append(lv[i])
    if len(peak_t) < 8:
        raise TooFewPeaks(
            f"found {len(peak_t)} envelope peaks in [{t_lo:g}, {t_hi:g}], need >= 8"
        )
    coeffs, residuals, *_ = np.polyfit(peak_t, peak_l, 1, full=True)
    ssr = float(residuals[0]) if len(residuals) else 0.0
    rms = float(np.sqrt(ssr / len(peak_t)))
    return float(coeffs[0]), float(coeffs[1]), rms
