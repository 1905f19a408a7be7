"""Numbered acceptance battery: twelve end-to-end checks of the toolkit.

Each criterion_* function runs one self-contained numerical check and returns
a CriterionResult holding the measured numbers next to the tolerances they
were held to, plus its wall time (criteria with a time budget fail when they
blow it). Expensive products (Landau runs, Volterra marches, dispersion
roots) are built once per battery through a shared cache, and the
conservation audit inspects the same histories the physics checks used.

run_battery executes a named suite and never raises on a failed check: a
failure, including an unexpected exception inside a criterion, becomes
report content with passed = False.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import root as scipy_root

from .echo import (
    BACKWARD_MOMENT_CONSTANT,
    FORWARD_MOMENT_CONSTANT,
    EchoKernelSpec,
    echo_moment_backward,
    echo_moment_forward,
    piecewise_integral_check,
)
from .errors import ConstraintViolation
from .hybridnorms import (
    NormParams,
    prop13_battery,
    pure_v_field,
    pure_x_field,
    random_field,
)
from .kinetic import (
    FieldHistory,
    KineticRun,
    collision_substep,
    echo_experiment,
    equilibrium_state,
    perturb_density,
    rho_hat,
    run,
    spectral_snapshot,
    step,
)
from .lintheory import (
    VolterraKernel,
    damping_rate_fit,
    dispersion_L,
    free_streaming_response,
    kernel_eval,
    volterra_solve,
)
from .profiles import Interaction, VelocityProfile, profile_fourier

# Shipped stable scenario shared across the linear-theory criteria.
VTH_SHIPPED = 0.05
PROFILE_SHIPPED = VelocityProfile.maxwellian(VTH_SHIPPED)
PROFILE_UNIT = VelocityProfile.maxwellian(1.0)
REPULSIVE = Interaction.power_law(2.0, amplitude=1.0, sign=1)
FIT_WINDOW = (4.0, 42.0)


def _g(x) -> str:
    return format(float(x), ".6g")


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, float):
        return _g(v)
    return str(v)


@dataclass(frozen=True)
class CriterionResult:
    """One acceptance check: measured values next to their tolerances."""

    index: int
    name: str
    passed: bool
    measured: dict
    tolerances: dict
    wall_seconds: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        body = "  ".join(f"{k}={_fmt_value(v)}" for k, v in self.measured.items())
        return f"{status} {self.index:2d} {self.name}: {body}"

    def as_dict(self) -> dict:
        return {
            "index": self.index,
            "name": self.name,
            "passed": self.passed,
            "measured": dict(self.measured),
            "tolerances": dict(self.tolerances),
            "wall_seconds": self.wall_seconds,
        }


def _result(index, name, t0, ok, measured, tolerances) -> CriterionResult:
    wall = time.perf_counter() - t0
    measured = dict(measured)
    measured["wall_seconds"] = wall
    return CriterionResult(index, name, bool(ok), measured, dict(tolerances), wall)


def _cache(cache) -> dict:
    return {} if cache is None else cache


def _audit_history(cache, label, hist: FieldHistory, masses) -> None:
    """Record mass drift and Poisson residual of a finished run for criterion 3."""
    masses = np.asarray(masses, dtype=float)
    m0 = masses[0]
    drift = float(np.max(np.abs(masses - m0)) / abs(m0))
    what = np.array(
        [0.0 if k == 0 else _interaction_hat_cached(hist.interaction, k) for k in hist.modes]
    )
    expected = 2j * np.pi * np.asarray(hist.modes) * what * hist.rho_hat
    residual = float(np.max(np.abs(hist.e_hat - expected)))
    cache.setdefault("audit", {})[label] = {
        "mass_drift": drift,
        "poisson_residual": residual,
    }


def _interaction_hat_cached(interaction, k):
    from .profiles import interaction_hat

    return interaction_hat(interaction, k)


def _shipped_trace(t):
    """fhat_0(1, t) of the shipped cold Gaussian, unit perturbation amplitude."""
    return np.exp(-2.0 * np.pi**2 * VTH_SHIPPED * VTH_SHIPPED * np.asarray(t) ** 2)


def _landau_products(cache, nu):
    key = ("landau", float(nu))
    if key not in cache:
        cfg = KineticRun(
            profile=PROFILE_SHIPPED, interaction=REPULSIVE, nu=float(nu),
            dt=0.05, t_end=45.0, k_pert=1, amplitude=1e-5,
            k_max=4, n_v=512, record_every=1,
        )
        hist, diag = run(cfg)
        cache[key] = (hist, diag)
        _audit_history(cache, f"landau nu={nu:g}", hist, diag["mass"])
    return cache[key]


def _nonlinear_products(cache):
    key = ("nonlinear",)
    if key not in cache:
        cfg = KineticRun(
            profile=PROFILE_UNIT, interaction=REPULSIVE, nu=0.01,
            dt=0.02, t_end=2.0, k_pert=1, amplitude=0.1,
            k_max=4, n_v=256, v_max=6.0, record_every=5,
        )
        hist, diag = run(cfg)
        cache[key] = (hist, diag)
        _audit_history(cache, "nonlinear amp=0.1", hist, diag["mass"])
    return cache[key]


def _free_transport_products(cache):
    """March the interaction-free model and compare against the exact shift.

    Cold Gaussian, single mode k = 1 at amplitude 1e-3, velocity box of six
    thermal speeds. The density trace is checked against
    (eps/2) fhat_0(t) on every record up to 80 percent of the velocity-grid
    recurrence time 1/dv, and the full velocity spectrum of the k = -1 row is
    checked at 40 percent of it (past that the shifted transform center
    leaves the representable eta window and only the trace identity is
    meaningful).
    """
    key = ("free",)
    if key not in cache:
        k_max, n_v, v_max = 2, 512, 0.3
        dt, amp = 0.5, 1e-3
        dv = 2.0 * v_max / n_v
        t_rec = 1.0 / dv                      # 853.33 at this grid
        n_steps = 1360                        # t_end = 680 < 0.8 * t_rec
        spectrum_step = 680                   # t = 340 < 0.4 * t_rec
        state = equilibrium_state(PROFILE_SHIPPED, k_max, n_v, v_max)
        state = perturb_density(state, PROFILE_SHIPPED, 1, amp)
        w_zero = Interaction.zero()

        times, rho_rows, masses = [0.0], [rho_hat(state)], []
        masses.append(float(rho_rows[0][k_max].real))
        trace_err = 0.0
        spectrum_err = None
        for j in range(1, n_steps + 1):
            state = step(state, dt, w_zero, PROFILE_SHIPPED, 0.0)
            if j % 4 == 0 or j == n_steps:
                r = rho_hat(state)
                times.append(state.time)
                rho_rows.append(r)
                masses.append(float(r[k_max].real))
                want = 0.5 * amp * profile_fourier(PROFILE_SHIPPED, state.time)
                trace_err = max(trace_err, abs(r[k_max + 1] - want))
            if j == spectrum_step:
                snap = spectral_snapshot(state)
                want_row = 0.5 * amp * profile_fourier(
                    PROFILE_SHIPPED, snap.eta_grid - state.time
                )
                got_row = snap.coeffs[k_max - 1]
                spectrum_err = float(np.max(np.abs(got_row - want_row)))
        hist = FieldHistory.from_density(
            np.array(times), state.modes, np.array(rho_rows), w_zero
        )
        cache[key] = {
            "trace_error": float(trace_err),
            "spectrum_error": float(spectrum_err),
            "t_end": n_steps * dt,
            "recurrence_fraction": n_steps * dt / t_rec,
        }
        _audit_history(cache, "free transport", hist, masses)
    return cache[key]


def _dispersion_rate(cache, nu):
    """Decay rate from the root of 1 - L nearest the thermal resonance."""
    key = ("root", float(nu))
    if key not in cache:
        kern = VolterraKernel(
            nu=float(nu), k=1, profile=PROFILE_SHIPPED, interaction=REPULSIVE,
            dt=0.02, horizon=60.0,
        )
        vth = PROFILE_SHIPPED.thermal_speed

        def F(xy):
            val = 1.0 - dispersion_L(complex(xy[0], xy[1]), 1, float(nu), kern=kern)
            return [val.real, val.imag]

        # start near the thermal resonance: Re eta ~ 3 v_th, Im eta ~ v_th / 4
        sol = scipy_root(F, [3.0 * vth, 0.25 * vth], tol=1e-13)
        if not sol.success:
            raise ConstraintViolation(f"dispersion root search failed: {sol.message}")
        cache[key] = complex(sol.x[0], sol.x[1])
    return 2.0 * np.pi * cache[key].imag


def _volterra_rate(cache, nu):
    key = ("volterra_rate", float(nu))
    if key not in cache:
        kern = VolterraKernel(
            nu=float(nu), k=1, profile=PROFILE_SHIPPED, interaction=REPULSIVE,
            dt=0.02, horizon=60.0,
        )
        hist = volterra_solve(1, _shipped_trace, kern, T=60.0, dt=0.02)
        rate, _, _ = damping_rate_fit(hist, FIT_WINDOW)
        cache[key] = -rate
    return cache[key]


def _kinetic_rate(cache, nu):
    hist, _ = _landau_products(cache, nu)
    rate, _, _ = damping_rate_fit(
        (hist.times, hist.rho_hat[:, hist.k_max + 1]), FIT_WINDOW
    )
    return -rate


def criterion_1(cache=None) -> CriterionResult:
    """Free transport reproduces the exact spectral shift."""
    cache = _cache(cache)
    t0 = time.perf_counter()
    prod = _free_transport_products(cache)
    ok = (
        prod["trace_error"] < 1e-10
        and prod["spectrum_error"] < 1e-10
        and time.perf_counter() - t0 < 10.0
    )
    return _result(
        1, "free_transport_exactness", t0, ok,
        {
            "trace_error": prod["trace_error"],
            "spectrum_error": prod["spectrum_error"],
            "t_end": prod["t_end"],
            "recurrence_fraction": prod["recurrence_fraction"],
        },
        {"trace_error": "< 1e-10", "spectrum_error": "< 1e-10",
         "wall_seconds": "< 10"},
    )


def criterion_2(cache=None) -> CriterionResult:
    """Closed-form collision substep against a high-order ODE reference."""
    t0 = time.perf_counter()
    nu, dt = 0.7, 0.8
    v_max = 6.0
    state = equilibrium_state(PROFILE_UNIT, k_max=2, n_v=128, v_max=v_max)
    state = perturb_density(state, PROFILE_UNIT, 1, 3e-2)
    f = state.f
    rho = rho_hat(state)
    exact = collision_substep(f, rho, dt, nu, PROFILE_UNIT, v_max=v_max)

    from .kinetic import _equilibrium_rows

    dv = state.dv
    f0 = _equilibrium_rows(PROFILE_UNIT, state.n_v, v_max)
    target = np.outer(rho, f0)
    shape = f.shape

    def rhs(_t, y):
        g = y[: y.size // 2].reshape(shape) + 1j * y[y.size // 2 :].reshape(shape)
        d = nu * (target - g)
        return np.concatenate([d.real.ravel(), d.imag.ravel()])

    y0 = np.concatenate([f.real.ravel(), f.imag.ravel()])
    sol = solve_ivp(rhs, (0.0, dt), y0, method="DOP853", rtol=1e-13, atol=1e-16)
    ref = sol.y[: y0.size // 2, -1].reshape(shape) + 1j * sol.y[y0.size // 2 :, -1].reshape(shape)

    ode_error = float(np.max(np.abs(exact - ref)))
    rho_after = dv * exact.sum(axis=1)
    rho_error = float(np.max(np.abs(rho_after - rho)))
    wall_ok = time.perf_counter() - t0 < 1.0
    ok = ode_error < 1e-12 and rho_error < 1e-14 and wall_ok
    return _result(
        2, "collision_closed_form", t0, ok,
        {"ode_error": ode_error, "rho_invariance_error": rho_error},
        {"ode_error": "< 1e-12", "rho_invariance_error": "< 1e-14",
         "wall_seconds": "< 1"},
    )


def criterion_3(cache=None) -> CriterionResult:
    """Mass and field-consistency audit over every marched history."""
    cache = _cache(cache)
    t0 = time.perf_counter()
    _free_transport_products(cache)
    _landau_products(cache, 0.0)
    _landau_products(cache, 1e-2)
    _nonlinear_products(cache)
    audit = cache["audit"]
    worst_mass = max(entry["mass_drift"] for entry in audit.values())
    worst_poisson = max(entry["poisson_residual"] for entry in audit.values())
    ok = worst_mass < 1e-10 and worst_poisson < 1e-12 and len(audit) >= 4
    return _result(
        3, "conservation_audit", t0, ok,
        {
            "runs_audited": len(audit),
            "max_mass_drift": worst_mass,
            "max_poisson_residual": worst_poisson,
        },
        {"max_mass_drift": "< 1e-10 relative",
         "max_poisson_residual": "< 1e-12"},
    )


def criterion_4(cache=None) -> CriterionResult:
    """Damping rate three ways: dispersion root, Volterra march, direct run."""
    cache = _cache(cache)
    t0 = time.perf_counter()
    measured = {}
    worst_gap = 0.0
    for nu in (0.0, 1e-2):
        rates = {
            "dispersion": _dispersion_rate(cache, nu),
            "volterra": _volterra_rate(cache, nu),
            "kinetic": _kinetic_rate(cache, nu),
        }
        names = list(rates)
        for i in range(len(names)):
            for j in range(i + 1, len(names)):
                a, b = rates[names[i]], rates[names[j]]
                worst_gap = max(worst_gap, abs(a - b) / min(a, b))
        for label, value in rates.items():
            measured[f"{label}_nu{nu:g}"] = value
    measured["worst_pairwise_gap"] = worst_gap
    wall_ok = time.perf_counter() - t0 < 120.0
    ok = worst_gap <= 0.05 and wall_ok
    return _result(
        4, "damping_rate_three_routes", t0, ok, measured,
        {"worst_pairwise_gap": "<= 0.05", "wall_seconds": "< 120"},
    )


def criterion_5(cache=None) -> CriterionResult:
    """Volterra solutions converge to the collisionless one as nu -> 0."""
    t0 = time.perf_counter()
    T, dt = 40.0, 0.04

    def solve(nu):
        kern = VolterraKernel(
            nu=nu, k=1, profile=PROFILE_SHIPPED, interaction=REPULSIVE,
            dt=dt, horizon=T,
        )
        return np.asarray(volterra_solve(1, _shipped_trace, kern, T=T, dt=dt).rho_hat)

    base = solve(0.0)
    sups = {nu: float(np.max(np.abs(solve(nu) - base))) for nu in (1e-2, 1e-3, 1e-4)}
    ratio_21 = sups[1e-2] / sups[1e-3]
    ratio_32 = sups[1e-3] / sups[1e-4]
    ok = ratio_21 >= 8.0 and ratio_32 >= 8.0 and sups[1e-4] < sups[1e-3] < sups[1e-2]
    return _result(
        5, "collision_continuity", t0, ok,
        {
            "sup_diff_nu1e-2": sups[1e-2],
            "sup_diff_nu1e-3": sups[1e-3],
            "sup_diff_nu1e-4": sups[1e-4],
            "decade_ratio_2_3": ratio_21,
            "decade_ratio_3_4": ratio_32,
        },
        {"decade_ratios": ">= 8 per decade"},
    )


def criterion_6(cache=None) -> CriterionResult:
    """Collision-averaged response: quadrature vs closed form, 100 points."""
    t0 = time.perf_counter()
    omegas = (0.0, 0.7, 1.4, 2.1, 2.8)
    ks = (1.0, 2.0)
    vs = (-1.2, -0.4, 0.3, 0.8, 1.5)
    nus = (0.2, 0.35)
    worst = 0.0
    cases = 0
    for omega in omegas:
        for k in ks:
            for v in vs:
                for nu in nus:
                    cases += 1
                    closed = free_streaming_response(
                        omega, k, v, nu, 0.0, 1.0, PROFILE_UNIT, form="averaged"
                    )

                    def integrand(s, part):
                        val = nu * np.exp(-nu * s) * free_streaming_response(
                            omega, k, v, 0.0, 0.0, s, PROFILE_UNIT, form="transient"
                        )
                        return val.real if part == 0 else val.imag

                    hi = 50.0 / nu
                    re = quad(integrand, 0, hi, args=(0,), limit=800, epsabs=1e-12)[0]
                    im = quad(integrand, 0, hi, args=(1,), limit=800, epsabs=1e-12)[0]
                    err = abs(complex(re, im) - closed) / max(1.0, abs(closed))
                    worst = max(worst, err)
    res_dev = 0.0
    for k, v in ((1.0, 0.5), (2.0, -0.8)):
        for nu in (0.3, 0.12):
            r1 = free_streaming_response(k * v, k, v, nu, 0.0, 1.0, PROFILE_UNIT)
            r2 = free_streaming_response(k * v, k, v, 0.5 * nu, 0.0, 1.0, PROFILE_UNIT)
            res_dev = max(res_dev, abs(abs(r2) / abs(r1) - 2.0))
    ok = worst <= 1e-8 and res_dev <= 1e-12 and cases == 100
    return _result(
        6, "free_streaming_identities", t0, ok,
        {"grid_points": cases, "worst_quadrature_error": worst,
         "resonance_scaling_deviation": res_dev},
        {"worst_quadrature_error": "<= 1e-8",
         "resonance_scaling_deviation": "<= 1e-12 (modulus doubles when nu halves)"},
    )


def criterion_7(cache=None) -> CriterionResult:
    """Random phase-integral battery never exceeds its case bound."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(7031)
    n_cases = 200
    worst_ratio = 0.0
    violations = 0
    for _ in range(n_cases):
        k = int(rng.integers(1, 9))
        l = int(rng.integers(-12, 13))
        alpha = float(rng.uniform(0.1, 0.9))
        t = float(rng.uniform(0.5, 30.0))
        numeric, bound = piecewise_integral_check(k, l, alpha, t)
        worst_ratio = max(worst_ratio, numeric / bound)
        if numeric > bound * (1.0 + 1e-12):
            violations += 1
    wall_ok = time.perf_counter() - t0 < 30.0
    ok = violations == 0 and wall_ok
    return _result(
        7, "phase_integral_table", t0, ok,
        {"cases": n_cases, "violations": violations, "worst_ratio": worst_ratio},
        {"violations": "= 0 (ratio <= 1 + 1e-12)", "wall_seconds": "< 30"},
    )


def criterion_8(cache=None) -> CriterionResult:
    """Kernel moments: dyadic decay exponent and frozen-constant bounds."""
    t0 = time.perf_counter()
    spec_half = EchoKernelSpec(alpha=0.5, gamma=2.0)
    ts = [30.0 * 2**j for j in range(5)]
    vals = [echo_moment_forward(spec_half, 0.2, t)[0] for t in ts]
    slope = float(np.polyfit(np.log(ts), np.log(vals), 1)[0])
    exponent = -slope
    floor = spec_half.gamma - 1.0 - 0.2

    # verification grid: alpha = 0.6 is disjoint from the calibration grid
    # recorded next to the frozen constants
    fwd_worst = 0.0
    bwd_worst = 0.0
    for gamma in (1.7, 2.5):
        for nu in (0.18, 0.42):
            spec = EchoKernelSpec(alpha=0.6, gamma=gamma)
            for t in (3.0, 24.0):
                numeric, shape = echo_moment_forward(spec, nu, t)
                fwd_worst = max(fwd_worst, numeric / (FORWARD_MOMENT_CONSTANT * shape))
            for s in (0.0, 4.0):
                numeric, shape = echo_moment_backward(spec, nu, s, s + 80.0 / nu)
                bwd_worst = max(bwd_worst, numeric / (BACKWARD_MOMENT_CONSTANT * shape))
    ok = exponent >= floor and fwd_worst <= 1.0 and bwd_worst <= 1.0
    return _result(
        8, "moment_decay_shapes", t0, ok,
        {
            "dyadic_exponent": exponent,
            "exponent_floor": floor,
            "forward_constant_ratio": fwd_worst,
            "backward_constant_ratio": bwd_worst,
        },
        {"dyadic_exponent": ">= gamma - 1 - 0.2",
         "constant_ratios": "<= 1 against the frozen constants"},
    )


ECHO_CONFIG = KineticRun(
    profile=PROFILE_UNIT, interaction=REPULSIVE, nu=0.0,
    dt=0.02, t_end=12.5, k_max=8, n_v=512, v_max=6.0, record_every=25,
)


def criterion_9(cache=None) -> CriterionResult:
    """Seeded echo arrives on time, bilinearly, and only when forced."""
    cache = _cache(cache)
    t0 = time.perf_counter()
    key = ("echo",)
    if key not in cache:
        base = echo_experiment(ECHO_CONFIG, 1, -2, 5.0, 1e-3, 1e-3)
        quiet = echo_experiment(ECHO_CONFIG, 1, -2, 5.0, 1e-3, 0.0)
        dbl_seed = echo_experiment(ECHO_CONFIG, 1, -2, 5.0, 2e-3, 1e-3)
        dbl_force = echo_experiment(ECHO_CONFIG, 1, -2, 5.0, 1e-3, 2e-3)
        cache[key] = (base, quiet, dbl_seed, dbl_force)
    base, quiet, dbl_seed, dbl_force = cache[key]
    offset = abs(base.rel_offset)
    contrast = base.peak_amp / base.baseline_amp
    seed_ratio = dbl_seed.peak_amp / base.peak_amp
    force_ratio = dbl_force.peak_amp / base.peak_amp
    wall_ok = time.perf_counter() - t0 < 120.0
    ok = (
        offset <= 0.05
        and contrast >= 100.0
        and quiet.peak_amp < 1e-10
        and abs(seed_ratio - 2.0) <= 0.2
        and abs(force_ratio - 2.0) <= 0.2
        and wall_ok
    )
    return _result(
        9, "plasma_echo_arrival", t0, ok,
        {
            "t_predicted": base.t_predicted,
            "t_measured": base.t_measured,
            "arrival_offset": offset,
            "peak_to_baseline": contrast,
            "quiet_peak": quiet.peak_amp,
            "seed_doubling_ratio": seed_ratio,
            "force_doubling_ratio": force_ratio,
        },
        {"arrival_offset": "<= 0.05", "doubling_ratios": "within 0.2 of 2",
         "quiet_peak": "< 1e-10", "wall_seconds": "< 120"},
    )


def criterion_10(cache=None) -> CriterionResult:
    """Norm battery: asserted inequality items over random mixed fields."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(20125)
    n = 128
    grid = (np.arange(n) - n // 2) * (8.0 / n)
    suite = []
    for i in range(20):
        kind = i % 3
        if kind == 0:
            amps = {k: 0.3 * (rng.normal() + 1j * rng.normal()) for k in (-2, -1, 1, 2)}
            suite.append(pure_x_field(amps, 4, grid))
        elif kind == 1:
            sigma = rng.uniform(0.3, 0.55)
            prof = rng.uniform(0.3, 1.0) * np.exp(-(grid**2) / (2 * sigma**2))
            suite.append(pure_v_field(prof, 4, grid))
        else:
            suite.append(random_field(rng, k_max=4, eta_grid=grid))
    params = [
        NormParams(0.0, 0.0, 0.0),
        NormParams(0.02, 0.1, 0.5),
        NormParams(0.05, 0.0, -1.0),
        NormParams(0.03, 0.2, 0.0, p=2.0),
        NormParams(0.02, 0.05, 1.0, p=np.inf),
    ]
    report = prop13_battery(suite, params, slack_tol=1e-9)
    measured = {"fields": report.n_fields, "param_sets": report.n_params}
    ok = True
    for item in ("i", "ii", "viii", "viiii", "iX"):
        entry = report.items.get(item)
        if entry is None or entry["cases"] == 0:
            ok = False
            measured[f"slack_{item}"] = float("nan")
            continue
        measured[f"slack_{item}"] = entry["slack"]
        ok = ok and entry["passed"] and entry["slack"] < 1e-9
    return _result(
        10, "norm_battery", t0, ok, measured,
        {"slacks": "< 1e-9 on items i, ii, viii, viiii, iX"},
    )


def criterion_11(cache=None) -> CriterionResult:
    """Weighted density obeys its integral hypothesis and certified bounds."""
    from .echo import GrowthParams, growth_verify

    t0 = time.perf_counter()
    nu_c = 0.02
    kern = VolterraKernel(
        nu=nu_c, k=1, profile=PROFILE_SHIPPED, interaction=REPULSIVE,
        dt=0.04, horizon=20.0,
    )
    hist = volterra_solve(1, _shipped_trace, kern, T=20.0, dt=0.04)
    times = np.asarray(hist.times)
    lam, mu = 0.008, 0.1
    weight = np.exp(2.0 * np.pi * (lam * times + mu))
    phi = np.asarray(hist.rho_hat) * weight
    free = _shipped_trace(times) * np.exp(-nu_c * times) * weight
    A = float(np.max(np.abs(free)))
    k0w = kernel_eval(kern, times) * np.exp(nu_c * times) * np.exp(2.0 * np.pi * lam * times)
    spec = EchoKernelSpec(alpha=0.5, gamma=2.0)
    params = GrowthParams(
        A=A, c0=0.05, m=1.5, c=0.05, kappa=0.22, nu_env=nu_c,
        lambda0=0.02, lambda_weight=lam, C0=1.1, C_W=1.0,
    )
    # 97 check points: a verification grid distinct from the calibration grid
    # the frozen envelope constant was fitted on
    rep = growth_verify((times, phi), (k0w, spec, 0.05, 1.5), A, params, n_checks=97)
    ok = (
        rep.hypothesis_ok and rep.crude_ok and rep.envelope_ok
        and rep.max_hypothesis_ratio <= 1.0 + 1e-9
        and rep.max_crude_ratio < 1.0
    )
    return _result(
        11, "weighted_growth_control", t0, ok,
        {
            "hypothesis_ratio": rep.max_hypothesis_ratio,
            "crude_bound_ratio": rep.max_crude_ratio,
            "envelope_ratio": rep.max_envelope_ratio,
            "check_points": 97,
        },
        {"hypothesis_ratio": "<= 1 + 1e-9",
         "crude_bound_ratio": "< 1", "envelope_ratio": "< 1"},
    )


def criterion_12(cache=None) -> CriterionResult:
    """Field-mode envelope decays on an affine log-line at the predicted slope."""
    cache = _cache(cache)
    t0 = time.perf_counter()
    measured = {}
    ok = True
    for nu in (0.0, 1e-2):
        hist, _ = _landau_products(cache, nu)
        rate, _, rms = damping_rate_fit(
            (hist.times, np.abs(hist.e_hat[:, hist.k_max + 1])), FIT_WINDOW
        )
        predicted = _dispersion_rate(cache, nu)
        gap = abs((-rate) - predicted) / predicted
        measured[f"slope_nu{nu:g}"] = -rate
        measured[f"predicted_nu{nu:g}"] = predicted
        measured[f"gap_nu{nu:g}"] = gap
        measured[f"fit_rms_nu{nu:g}"] = rms
        ok = ok and rate < 0.0 and gap <= 0.05 and rms < 0.05
    return _result(
        12, "field_decay_slope", t0, ok, measured,
        {"gap": "<= 0.05 of the dispersion-root prediction",
         "fit_rms": "< 0.05 (affine envelope)", "slope": "decreasing"},
    )


CRITERIA = {
    1: ("free_transport_exactness", criterion_1),
    2: ("collision_closed_form", criterion_2),
    3: ("conservation_audit", criterion_3),
    4: ("damping_rate_three_routes", criterion_4),
    5: ("collision_continuity", criterion_5),
    6: ("free_streaming_identities", criterion_6),
    7: ("phase_integral_table", criterion_7),
    8: ("moment_decay_shapes", criterion_8),
    9: ("plasma_echo_arrival", criterion_9),
    10: ("norm_battery", criterion_10),
    11: ("weighted_growth_control", criterion_11),
    12: ("field_decay_slope", criterion_12),
}

SUITES = {
    "all": tuple(range(1, 13)),
    "free_transport": (1, 3),
    "collisions": (2, 5),
    "linear_landau": (4, 12),
    "free_streaming": (6,),
    "kernel_bounds": (7, 8),
    "echo": (9,),
    "norm_battery": (10,),
    "growth": (11,),
    "conservation": (3,),
}


@dataclass(frozen=True)
class BatteryReport:
    """Aggregated acceptance outcome for one suite."""

    suite: str
    results: tuple
    wall_seconds: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def lines(self):
        out = [r.line() for r in self.results]
        status = "PASS" if self.passed else "FAIL"
        n_ok = sum(r.passed for r in self.results)
        out.append(
            f"{status} suite {self.suite}: {n_ok}/{len(self.results)} criteria"
            f" in {self.wall_seconds:.1f} s"
        )
        return out

    def as_dict(self) -> dict:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "wall_seconds": self.wall_seconds,
            "criteria": [r.as_dict() for r in self.results],
        }

    def summary_csv(self) -> str:
        """Deterministic per-criterion table (no wall times)."""
        lines = ["index,name,passed,detail"]
        for r in self.results:
            detail = ";".join(
                f"{k}={format(v, '.17g') if isinstance(v, float) else v}"
                for k, v in r.measured.items()
                if k != "wall_seconds"
            )
            lines.append(f"{r.index},{r.name},{str(r.passed).lower()},{detail}")
        return "\n".join(lines) + "\n"


def run_battery(suite: str = "all", cache: dict | None = None) -> BatteryReport:
    """Run one named acceptance suite; failures become report content."""
    if suite not in SUITES:
        known = ", ".join(sorted(SUITES))
        raise ConstraintViolation(f"unknown acceptance suite {suite!r} (known: {known})")
    cache = _cache(cache)
    t0 = time.perf_counter()
    results = []
    for index in SUITES[suite]:
        name, fn = CRITERIA[index]
        t1 = time.perf_counter()
        try:
            res = fn(cache)
        except Exception as err:  # a crashed check is a failed check, not a crash
            res = CriterionResult(
                index, name, False,
                {"error": f"{type(err).__name__}: {err}"},
                {}, time.perf_counter() - t1,
            )
        results.append(res)
    return BatteryReport(suite, tuple(results), time.perf_counter() - t0)
