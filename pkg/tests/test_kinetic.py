"""Direct-solver tests.

Oracle strategy: free flight has the closed-form transform shift, so the
marched state is compared against it literally; the collision substep is
checked against a high-order ODE integration of the relaxation law; step
accuracy is measured by dt-halving Richardson ratios; the linear regime is
compared against the closed Volterra march of the density equation and the
damping rates frozen by the linear-theory suite; echo timing is compared
against the analytic crossing time and the recurrence arithmetic of the
velocity grid."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

import vpkit.kinetic as kin
from vpkit.errors import (
    ConstraintViolation,
    EchoBeyondRecurrence,
    OutOfHistory,
    ResolutionExceeded,
    StepTooCoarse,
)
from vpkit.kinetic import (
    EchoReport,
    FieldHistory,
    KineticRun,
    PhaseState,
    characteristic_path,
    characteristics_deflect,
    collision_substep,
    echo_experiment,
    equilibrium_state,
    perturb_density,
    poisson_field,
    resolution_guard,
    rho_hat,
    run,
    spectral_snapshot,
    step,
)
from vpkit.lintheory import VolterraKernel, damping_rate_fit, volterra_solve
from vpkit.profiles import Interaction, VelocityProfile, profile_fourier

MX_COLD = VelocityProfile.maxwellian(0.05)
MX_UNIT = VelocityProfile.maxwellian(1.0)
W_POW = Interaction.power_law(2.0, amplitude=1.0, sign=1)
W_ZERO = Interaction.zero()

# Damping rates of the k=1 mode for the cold Maxwellian with the repulsive
# gamma=2 interaction, frozen by the linear-theory suite (dispersion root
# and Volterra fit agree on these to better than a part in 1e3).
RATE_NU0 = 0.0716509404
RATE_NU001 = 0.0783614432


def small_state(amp=1e-3, k_max=2, n_v=128, profile=MX_UNIT):
    state = equilibrium_state(profile, k_max, n_v)
    return perturb_density(state, profile, 1, amp)


class TestPhaseState:
    def test_equilibrium_defaults(self):
        state = equilibrium_state(MX_UNIT, 4, 256)
        assert state.v_max == pytest.approx(6.0)
        assert state.n_v == 256
        assert state.dv == pytest.approx(12.0 / 256)
        assert state.v[0] == -state.v_max
        assert state.v[-1] == pytest.approx(state.v_max - state.dv)
        assert np.array_equal(state.modes, np.arange(-4, 5))
        # discrete equilibrium carries exactly unit mass
        assert rho_hat(state)[4].real == 1.0
        assert np.abs(state.f[:4]).max() == 0.0

    def test_shape_validation(self):
        with pytest.raises(ConstraintViolation):
            PhaseState(f=np.zeros((4, 64), complex), time=0.0, k_max=2, v_max=6.0)
        with pytest.raises(ConstraintViolation):
            PhaseState(f=np.zeros((5, 63), complex), time=0.0, k_max=2, v_max=6.0)
        with pytest.raises(ConstraintViolation):
            PhaseState(f=np.zeros((5, 64), complex), time=0.0, k_max=0, v_max=6.0)
        with pytest.raises(ConstraintViolation):
            PhaseState(f=np.zeros((5, 64), complex), time=0.0, k_max=2, v_max=-1.0)

    def test_rejects_non_hermitian_rows(self):
        f = np.zeros((5, 64), complex)
        f[3] = 1.0
        with pytest.raises(ConstraintViolation, match="Hermitian"):
            PhaseState(f=f, time=0.0, k_max=2, v_max=6.0)

    def test_rejects_non_finite(self):
        f = np.zeros((5, 64), complex)
        f[2, 0] = np.nan
        with pytest.raises(ConstraintViolation, match="finite"):
            PhaseState(f=f, time=0.0, k_max=2, v_max=6.0)

    def test_perturbation_validation(self):
        state = equilibrium_state(MX_UNIT, 2, 64)
        with pytest.raises(ConstraintViolation):
            perturb_density(state, MX_UNIT, 3, 1e-3)
        with pytest.raises(ConstraintViolation):
            perturb_density(state, MX_UNIT, 0, 1e-3)
        with pytest.raises(ConstraintViolation):
            perturb_density(state, MX_UNIT, 1, 1e-3, shape="ramp")

    def test_velocity_shape_carries_no_initial_density(self):
        state = perturb_density(
            equilibrium_state(MX_UNIT, 2, 128), MX_UNIT, 1, 1e-3, shape="velocity"
        )
        # odd modulation: the density mode only appears once transport acts
        assert abs(rho_hat(state)[3]) < 1e-10
        moved = step(state, 0.05, W_POW, MX_UNIT, 0.0)
        assert abs(rho_hat(moved)[3]) > 1e-5


class TestPoissonField:
    def test_worked_single_mode(self):
        modes = np.arange(-2, 3)
        a = 0.3 - 0.4j
        rho = np.zeros(5, complex)
        rho[3], rho[1] = a, np.conj(a)
        e = poisson_field(rho, W_POW, modes)  # W_hat(1) = 1/2
        assert e[3] == pytest.approx(np.pi * 1j * a, abs=1e-15)
        assert e[1] == pytest.approx(-np.pi * 1j * np.conj(a), abs=1e-15)
        assert e[2] == 0.0

    def test_zero_density_and_zero_interaction(self):
        modes = np.arange(-3, 4)
        assert np.all(poisson_field(np.zeros(7, complex), W_POW, modes) == 0.0)
        rho = np.linspace(-1, 1, 7).astype(complex)
        assert np.all(poisson_field(rho, W_ZERO, modes) == 0.0)

    def test_mean_mode_forced_to_zero(self):
        modes = np.arange(-1, 2)
        rho = np.array([0.0, 5.0, 0.0], complex)
        assert np.all(poisson_field(rho, W_POW, modes) == 0.0)

    def test_shape_mismatch(self):
        with pytest.raises(ConstraintViolation):
            poisson_field(np.zeros(3, complex), W_POW, np.arange(-2, 3))

    @settings(max_examples=20, deadline=None)
    @given(st.integers(min_value=1, max_value=6))
    def test_field_inherits_hermitian_symmetry(self, k_max):
        rng = np.random.default_rng(k_max)
        modes = np.arange(-k_max, k_max + 1)
        rho = rng.normal(size=modes.size) + 1j * rng.normal(size=modes.size)
        rho = 0.5 * (rho + np.conj(rho[::-1]))
        e = poisson_field(rho, W_POW, modes)
        # a real density produces a real field: E(-k) = conj(E(k))
        assert np.abs(e - np.conj(e[::-1])).max() < 1e-14


class TestCollisionSubstep:
    def setup_method(self):
        rng = np.random.default_rng(7)
        self.n_v, self.v_max = 64, 6.0
        self.dv = 2.0 * self.v_max / self.n_v
        self.f = rng.normal(size=(5, self.n_v)) + 1j * rng.normal(size=(5, self.n_v))
        self.rho = self.dv * self.f.sum(axis=1)

    def test_matches_high_order_ode_reference(self):
        nu, dt = 0.7, 0.9
        out = collision_substep(self.f, self.rho, dt, nu, MX_UNIT, v_max=self.v_max)
        f0 = kin._equilibrium_rows(MX_UNIT, self.n_v, self.v_max)
        n = self.f.size

        def rhs(t, y):
            g = (y[:n] + 1j * y[n:]).reshape(self.f.shape)
            r = self.dv * g.sum(axis=1)
            d = nu * (np.outer(r, f0) - g)
            return np.concatenate([d.real.ravel(), d.imag.ravel()])

        y0 = np.concatenate([self.f.real.ravel(), self.f.imag.ravel()])
        sol = solve_ivp(rhs, (0.0, dt), y0, method="DOP853", rtol=1e-12, atol=1e-14)
        ref = (sol.y[:n, -1] + 1j * sol.y[n:, -1]).reshape(self.f.shape)
        assert np.abs(out - ref).max() < 1e-12

    def test_density_modes_exactly_invariant(self):
        out = collision_substep(self.f, self.rho, 0.37, 1.3, MX_UNIT, v_max=self.v_max)
        rho_after = self.dv * out.sum(axis=1)
        assert np.abs(rho_after - self.rho).max() < 1e-14

    def test_identity_cases(self):
        assert np.array_equal(
            collision_substep(self.f, self.rho, 0.9, 0.0, MX_UNIT, v_max=self.v_max),
            self.f,
        )
        assert np.array_equal(
            collision_substep(self.f, self.rho, 0.0, 0.7, MX_UNIT, v_max=self.v_max),
            self.f,
        )

    def test_infinite_time_lands_on_relaxed_state(self):
        out = collision_substep(self.f, self.rho, np.inf, 0.7, MX_UNIT, v_max=self.v_max)
        f0 = kin._equilibrium_rows(MX_UNIT, self.n_v, self.v_max)
        assert np.abs(out - np.outer(self.rho, f0)).max() == 0.0

    def test_preconditions(self):
        with pytest.raises(ConstraintViolation):
            collision_substep(self.f, self.rho, 0.1, -0.1, MX_UNIT, v_max=self.v_max)
        with pytest.raises(ConstraintViolation):
            collision_substep(self.f, self.rho[:3], 0.1, 0.1, MX_UNIT, v_max=self.v_max)
        with pytest.raises(ConstraintViolation):
            collision_substep(self.f, self.rho, np.nan, 0.1, MX_UNIT, v_max=self.v_max)

    @settings(max_examples=25, deadline=None)
    @given(
        st.floats(min_value=0.01, max_value=2.0),
        st.floats(min_value=0.01, max_value=1.5),
        st.floats(min_value=0.01, max_value=1.5),
    )
    def test_relaxation_semigroup(self, nu, dt1, dt2):
        a = collision_substep(self.f, self.rho, dt1, nu, MX_UNIT, v_max=self.v_max)
        rho_a = self.dv * a.sum(axis=1)
        b = collision_substep(a, rho_a, dt2, nu, MX_UNIT, v_max=self.v_max)
        c = collision_substep(self.f, self.rho, dt1 + dt2, nu, MX_UNIT, v_max=self.v_max)
        assert np.abs(b - c).max() < 1e-13 * np.abs(c).max()


class TestFreeTransport:
    def test_density_trace_matches_shifted_transform(self):
        eps = 1e-5
        state = perturb_density(
            equilibrium_state(MX_COLD, 2, 512), MX_COLD, 1, eps
        )
        # recurrence time 1/dv = 853.3; march dt=0.5 to 80% of it
        checkpoints = {10: None, 200: None, 680: None, 1360: None}
        for j in range(1, 1361):
            state = step(state, 0.5, W_ZERO, MX_COLD, 0.0)
            if j in checkpoints:
                t = 0.5 * j
                got = rho_hat(state)[state.k_max + 1]
                want = 0.5 * eps * profile_fourier(MX_COLD, t)
                assert abs(got - want) < 1e-10

    def test_full_spectrum_identity_inside_window(self):
        # the eta window represents the shifted transform up to ~40% of the
        # recurrence time; past that the comparison would alias
        eps = 1e-5
        state = perturb_density(
            equilibrium_state(MX_COLD, 2, 512), MX_COLD, 1, eps
        )
        for _ in range(680):
            state = step(state, 0.5, W_ZERO, MX_COLD, 0.0)
        table = spectral_snapshot(state)
        want = 0.5 * eps * profile_fourier(MX_COLD, table.eta_grid + state.time)
        assert np.abs(table.row(1) - want).max() < 1e-10
        want_minus = 0.5 * eps * profile_fourier(MX_COLD, table.eta_grid - state.time)
        assert np.abs(table.row(-1) - want_minus).max() < 1e-10

    def test_dt_zero_is_identity(self):
        state = small_state()
        assert step(state, 0.0, W_POW, MX_UNIT, 0.3) is state

    def test_time_reversal_restores_initial_state(self):
        initial = small_state(amp=0.3)
        state = initial
        for _ in range(40):
            state = step(state, 0.05, W_ZERO, MX_UNIT, 0.0)
        for _ in range(40):
            state = step(state, -0.05, W_ZERO, MX_UNIT, 0.0)
        assert state.time == pytest.approx(0.0, abs=1e-12)
        assert np.abs(state.f - initial.f).max() < 1e-9

    def test_phase_budget_guard(self):
        state = equilibrium_state(MX_UNIT, 8, 64)  # corner phase 48 per unit dt
        with pytest.raises(StepTooCoarse):
            step(state, 0.1, W_POW, MX_UNIT, 0.0)
        with pytest.raises(ConstraintViolation):
            step(state, np.inf, W_POW, MX_UNIT, 0.0)
        with pytest.raises(ConstraintViolation):
            step(state, 0.01, W_POW, MX_UNIT, -1.0)

    @settings(max_examples=15, deadline=None)
    @given(
        st.floats(min_value=0.01, max_value=0.08),
        st.floats(min_value=0.01, max_value=0.08),
    )
    def test_free_flight_steps_compose(self, dt1, dt2):
        state = small_state(amp=0.1)
        one = step(step(state, dt1, W_ZERO, MX_UNIT, 0.0), dt2, W_ZERO, MX_UNIT, 0.0)
        both = step(state, dt1 + dt2, W_ZERO, MX_UNIT, 0.0)
        assert np.abs(one.f - both.f).max() < 1e-12


class TestStepAccuracy:
    @staticmethod
    def _march(dt, n, amp=0.2):
        state = perturb_density(equilibrium_state(MX_COLD, 4, 256), MX_COLD, 1, amp)
        for _ in range(n):
            state = step(state, dt, W_POW, MX_COLD, 0.0)
        return state.f

    def test_richardson_order_is_second(self):
        T = 1.6
        ref = self._march(T / 256, 256)
        errs = [np.abs(self._march(T / n, n) - ref).max() for n in (32, 64, 128)]
        orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
        assert min(orders) >= 1.9

    def test_mass_conserved_through_nonlinear_run(self):
        cfg = KineticRun(
            profile=MX_COLD, interaction=W_POW, nu=0.01, dt=0.05, t_end=10.0,
            k_pert=1, amplitude=0.01, k_max=4, n_v=256, record_every=10,
        )
        _, diag = run(cfg)
        assert np.abs(diag["mass"] / diag["mass"][0] - 1.0).max() < 1e-10

    def test_equilibrium_is_a_fixed_point(self):
        state = equilibrium_state(MX_UNIT, 4, 256)
        for _ in range(20):
            state = step(state, 0.05, W_POW, MX_UNIT, 0.01)
        ref = equilibrium_state(MX_UNIT, 4, 256)
        assert np.abs(state.f - ref.f).max() < 1e-12

    def test_hermitian_symmetry_survives_strong_forcing(self):
        state = small_state(amp=0.3)
        for _ in range(60):
            state = step(state, 0.05, W_POW, MX_UNIT, 0.0)
        defect = np.abs(state.f - np.conj(state.f[::-1])).max()
        assert defect < 1e-10 * np.abs(state.f).max()


class TestResolutionGuard:
    def test_trips_on_filamentation_before_recurrence(self):
        # dv = 0.1875: recurrence at 5.33, the edge band fills around t ~ 2.3
        state = perturb_density(
            equilibrium_state(MX_UNIT, 2, 64, v_max=6.0), MX_UNIT, 1, 1e-3
        )
        with pytest.raises(ResolutionExceeded, match="eta"):
            for _ in range(80):
                state = step(state, 0.05, W_ZERO, MX_UNIT, 0.0, check_resolution=True)
        assert 1.0 < state.time < 4.3

    def test_run_truncates_and_reports_stop_reason(self):
        cfg = KineticRun(
            profile=MX_UNIT, interaction=W_ZERO, nu=0.0, dt=0.05, t_end=8.0,
            k_pert=1, amplitude=1e-3, k_max=2, n_v=64, v_max=6.0, record_every=2,
        )
        hist, diag = run(cfg)
        assert diag["stop_reason"] == "resolution_exceeded"
        assert hist.times[-1] < 4.3
        assert diag["t"].size == hist.times.size

    def test_resolved_states_pass(self):
        assert resolution_guard(equilibrium_state(MX_UNIT, 2, 128)) == 0.0
        fresh = small_state()
        assert resolution_guard(fresh) < 1e-3


class TestRunDiagnostics:
    def test_unperturbed_run_stays_quiet(self):
        cfg = KineticRun(
            profile=MX_UNIT, interaction=W_POW, nu=0.01, dt=0.05, t_end=3.0,
            amplitude=0.0, k_max=4, n_v=128, record_every=10,
        )
        hist, diag = run(cfg)
        assert np.abs(hist.e_hat).max() == 0.0
        assert np.abs(hist.sup_e).max() == 0.0
        assert np.abs(diag["mass"] - 1.0).max() < 1e-12
        assert np.abs(diag["l2"] / diag["l2"][0] - 1.0).max() < 1e-12

    def test_record_grid_and_norm_columns(self):
        cfg = KineticRun(
            profile=MX_UNIT, interaction=W_POW, nu=0.0, dt=0.05, t_end=2.0,
            k_pert=1, amplitude=1e-3, k_max=4, n_v=128, record_every=10,
            norms=(("f", 0.05, 0.1), ("y", 0.02, 0.05)),
        )
        hist, diag = run(cfg)
        assert hist.times[0] == 0.0
        assert hist.times[-1] == pytest.approx(2.0)
        assert np.allclose(np.diff(hist.times), 0.5)
        for name in ("fnorm_0.05_0.1", "ynorm_0.02_0.05"):
            col = diag[name]
            assert col.shape == hist.times.shape
            assert np.all(np.isfinite(col)) and np.all(col > 0.0)

    def test_history_rejects_inconsistent_field(self):
        times = np.arange(3.0)
        modes = np.arange(-1, 2)
        rho = np.zeros((3, 3), complex)
        rho[:, 2], rho[:, 0] = 1e-3, 1e-3
        good = FieldHistory.from_density(times, modes, rho, W_POW)
        bad = good.e_hat.copy()
        bad[1, 2] *= 1.001
        with pytest.raises(ConstraintViolation, match="Poisson|W_hat"):
            FieldHistory(
                times=times, modes=modes, rho_hat=rho, e_hat=bad,
                sup_e=good.sup_e, interaction=W_POW,
            )

    def test_config_validation(self):
        base = dict(profile=MX_UNIT, interaction=W_POW, nu=0.0, dt=0.05, t_end=1.0)
        with pytest.raises(ConstraintViolation):
            KineticRun(**{**base, "nu": -1.0})
        with pytest.raises(ConstraintViolation):
            KineticRun(**{**base, "dt": 0.0})
        with pytest.raises(ConstraintViolation):
            KineticRun(**{**base, "t_end": 1.03})  # off the step grid
        with pytest.raises(ConstraintViolation):
            KineticRun(**{**base, "amplitude": 1e-3, "k_pert": 99})
        with pytest.raises(ConstraintViolation):
            KineticRun(**{**base, "amplitude": 1e-3, "pert_shape": "ramp"})
        with pytest.raises(ConstraintViolation):
            KineticRun(**{**base, "record_every": 0})
        with pytest.raises(ConstraintViolation):
            KineticRun(**{**base, "norms": (("z", 0.1, 0.1),)})


def _landau(nu):
    cfg = KineticRun(
        profile=MX_COLD, interaction=W_POW, nu=nu, dt=0.05, t_end=45.0,
        k_pert=1, amplitude=1e-5, k_max=4, n_v=512, record_every=1,
    )
    return run(cfg)


@pytest.fixture(scope="module")
def landau_nu0():
    return _landau(0.0)


@pytest.fixture(scope="module")
def landau_nu001():
    return _landau(1e-2)


class TestLinearRegime:
    """The marched model against the closed linear theory at eps = 1e-5."""

    def test_damping_rate_collisionless(self, landau_nu0):
        hist, _ = landau_nu0
        rate, _, _ = damping_rate_fit(
            (hist.times, hist.rho_hat[:, hist.k_max + 1]), (4.0, 42.0)
        )
        assert -rate == pytest.approx(RATE_NU0, rel=0.01)

    def test_damping_rate_collisional(self, landau_nu001):
        hist, _ = landau_nu001
        rate, _, _ = damping_rate_fit(
            (hist.times, hist.rho_hat[:, hist.k_max + 1]), (4.0, 42.0)
        )
        assert -rate == pytest.approx(RATE_NU001, rel=0.01)

    def test_field_mode_decays_at_the_density_rate(self, landau_nu0):
        hist, _ = landau_nu0
        rate, _, _ = damping_rate_fit(
            (hist.times, np.abs(hist.e_hat[:, hist.k_max + 1])), (4.0, 42.0)
        )
        assert -rate == pytest.approx(RATE_NU0, rel=0.01)

    @pytest.mark.parametrize("nu", [0.0, 1e-2])
    def test_mode_trace_tracks_volterra_solution(self, nu, landau_nu0, landau_nu001):
        hist, _ = landau_nu0 if nu == 0.0 else landau_nu001
        kern = VolterraKernel(
            nu=nu, k=1, profile=MX_COLD, interaction=W_POW, dt=0.05, horizon=45.0
        )
        sol = volterra_solve(
            1, lambda t: 0.5e-5 * profile_fourier(MX_COLD, t), kern, 45.0, 0.05
        )
        mode = hist.rho_hat[:, hist.k_max + 1]
        n = min(mode.size, sol.rho_hat.size)
        diff = np.abs(mode[:n] - sol.rho_hat[:n]).max()
        assert diff < 0.01 * np.abs(sol.rho_hat[:n]).max()

    def test_mass_and_poisson_consistency(self, landau_nu001):
        hist, diag = landau_nu001
        assert np.abs(diag["mass"] / diag["mass"][0] - 1.0).max() < 1e-10
        expected = poisson_field(hist.rho_hat[-1], W_POW, hist.modes)
        assert np.abs(hist.e_hat[-1] - expected).max() < 1e-15


ECHO_CFG = KineticRun(
    profile=MX_UNIT, interaction=W_POW, nu=0.0, dt=0.02, t_end=12.5,
    k_max=8, n_v=512, v_max=6.0, record_every=25,
)


@pytest.fixture(scope="module")
def base_report():
    return echo_experiment(ECHO_CFG, l=1, k_minus_l=-2, s_force=5.0,
                           eps1=1e-3, eps2=1e-3)


class TestEchoExperiment:
    def test_echo_arrives_at_predicted_time(self, base_report):
        rep = base_report
        assert rep.k == -1
        assert rep.t_predicted == pytest.approx(10.0)
        assert abs(rep.rel_offset) < 0.05
        assert rep.peak_amp > 100.0 * rep.baseline_amp

    def test_zero_kick_shows_no_echo(self):
        rep = echo_experiment(ECHO_CFG, 1, -2, 5.0, 1e-3, 0.0)
        # without the probe the mode-k channel never rises above the
        # cubic-order background, orders of magnitude below a real echo
        assert rep.peak_amp < 1e-10
        assert rep.peak_amp < 1.1 * rep.baseline_amp

    def test_peak_scales_bilinearly(self, base_report):
        double1 = echo_experiment(ECHO_CFG, 1, -2, 5.0, 2e-3, 1e-3)
        double2 = echo_experiment(ECHO_CFG, 1, -2, 5.0, 1e-3, 2e-3)
        assert double1.peak_amp / base_report.peak_amp == pytest.approx(2.0, rel=0.10)
        assert double2.peak_amp / base_report.peak_amp == pytest.approx(2.0, rel=0.10)

    def test_report_round_trip(self, base_report):
        d = base_report.as_dict()
        assert d["t_predicted"] == 10.0
        assert set(d) == {
            "l", "k", "s_force", "t_predicted", "t_measured",
            "peak_amp", "baseline_amp",
        }
        again = EchoReport(**d)
        assert again.rel_offset == base_report.rel_offset

    def test_recurrence_guard(self):
        coarse = KineticRun(
            profile=MX_UNIT, interaction=W_POW, nu=0.0, dt=0.02, t_end=12.5,
            k_max=8, n_v=64, v_max=6.0,
        )
        with pytest.raises(EchoBeyondRecurrence):
            echo_experiment(coarse, 1, -2, 5.0, 1e-3, 1e-3)

    def test_validation(self):
        with pytest.raises(ConstraintViolation, match="no future echo"):
            echo_experiment(ECHO_CFG, 1, 2, 5.0, 1e-3, 1e-3)
        with pytest.raises(ConstraintViolation, match="step grid"):
            echo_experiment(ECHO_CFG, 1, -2, 5.007, 1e-3, 1e-3)
        with pytest.raises(ConstraintViolation, match="horizon"):
            echo_experiment(ECHO_CFG, 1, -2, 7.0, 1e-3, 1e-3)  # t* = 14 > 12.5
        with pytest.raises(ConstraintViolation, match="nonzero"):
            echo_experiment(ECHO_CFG, 1, -1, 5.0, 1e-3, 1e-3)  # k = 0
        with pytest.raises(ConstraintViolation, match="band"):
            echo_experiment(ECHO_CFG, 1, -12, 5.0, 1e-3, 1e-3)
        with pytest.raises(ConstraintViolation):
            echo_experiment(ECHO_CFG, 1, -2, 5.0, 0.0, 1e-3)


def decaying_history(delta, lam, t_end, n_rec):
    """Single-mode field with sup |E(t)| = delta * exp(-2 pi lam t)."""
    times = np.linspace(0.0, t_end, n_rec)
    modes = np.arange(-2, 3)
    r = (delta / (2.0 * np.pi)) * np.exp(-2.0 * np.pi * lam * times)
    rho = np.zeros((times.size, 5), complex)
    rho[:, 3] = r
    rho[:, 1] = r
    return FieldHistory.from_density(times, modes, rho, W_POW)


class TestCharacteristics:
    def test_zero_field_deflection_is_exact(self):
        times = np.linspace(0.0, 8.0, 81)
        modes = np.arange(-2, 3)
        field = FieldHistory.from_density(
            times, modes, np.zeros((81, 5), complex), W_POW
        )
        dx, dv = characteristics_deflect(field, 0.3, -1.2, 0.5, 7.5)
        assert dx == 0.0 and dv == 0.0
        path = characteristic_path(field, 0.3, -1.2, 0.5, 7.5, n_samples=9)
        free = 0.3 + -1.2 * (path.times - 0.5)
        assert np.abs(path.x_path - free).max() == 0.0
        assert np.all(path.v_path == -1.2)

    def test_deflection_obeys_force_line_bounds(self):
        field = decaying_history(0.4, 0.06, 8.0, 161)
        for (x, v, s, t) in ((0.1, 0.7, 0.0, 6.0), (0.9, -2.0, 1.0, 7.0),
                             (0.5, 0.0, 2.5, 4.0)):
            dx, dv = characteristics_deflect(field, x, v, s, t)
            tau = np.linspace(s, t, 801)
            sup = 0.4 * np.exp(-2.0 * np.pi * 0.06 * tau)
            assert abs(dv) <= np.trapezoid(sup, tau)
            assert abs(dx) <= np.trapezoid((t - tau) * sup, tau)
            assert abs(dx) <= sup[0] * (t - s) ** 2 / 2.0

    def test_exponential_tail_majorant(self):
        delta, lam = 0.4, 0.06
        field = decaying_history(delta, lam, 40.0, 801)
        ratios = []
        for s in (0.0, 2.0, 10.0):
            _, dv = characteristics_deflect(field, 0.2, 0.3, s, 40.0, max_step=0.05)
            bound = delta * math.exp(-2.0 * math.pi * lam * s) / (2.0 * math.pi * lam)
            assert abs(dv) <= bound
            ratios.append(abs(dv) / bound)
        # the deflection inherits the exp(-2 pi lam s) scaling of the field
        assert max(ratios) / min(ratios) == pytest.approx(1.0, rel=0.02)

    def test_window_validation(self):
        field = decaying_history(0.4, 0.06, 8.0, 81)
        with pytest.raises(OutOfHistory):
            characteristics_deflect(field, 0.0, 0.0, -1.0, 3.0)
        with pytest.raises(OutOfHistory):
            characteristics_deflect(field, 0.0, 0.0, 1.0, 9.0)
        with pytest.raises(ConstraintViolation):
            characteristics_deflect(field, 0.0, 0.0, 3.0, 1.0)
        with pytest.raises(OutOfHistory):
            field.field_at(9.0, 0.0)
        with pytest.raises(ConstraintViolation):
            characteristic_path(field, 0.0, 0.0, 0.0, 1.0, n_samples=1)

    def test_interpolated_field_values(self):
        field = decaying_history(0.4, 0.06, 8.0, 81)
        # halfway between records the field is the average of the neighbors
        t_mid = 0.5 * (field.times[3] + field.times[4])
        left = field.field_at(float(field.times[3]), 0.2)
        right = field.field_at(float(field.times[4]), 0.2)
        assert field.field_at(float(t_mid), 0.2) == pytest.approx(
            0.5 * (left + right), rel=1e-12
        )
        assert field.sup_at(float(t_mid)) == pytest.approx(
            0.5 * (field.sup_e[3] + field.sup_e[4]), rel=1e-12
        )
