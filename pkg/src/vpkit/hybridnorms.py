"""Fourier-weighted analytic norms on truncated spectral data.

Three families are computed on a (k, eta) coefficient table:

    F:  sum_k integral |f_hat(k,eta)| e^{2 pi lam |k tau + eta|} e^{2 pi mu |k|} d eta
    Z:  sum_l sum_n (lam^n / n!) e^{2 pi mu |l|} || (d_v + 2 pi i tau l)^n f_hat(l, .) ||_{L^p}
    Y:  sup_{k,eta} e^{2 pi mu |k|} e^{2 pi lam |eta + k tau|} |f_hat(k,eta)|

The shift parameter tau slides the velocity-analyticity weight along the
free-transport characteristics, which is what makes these norms stationary
under exact phase mixing (see free_transport_shift below).

Representation conventions:
  * mode rows k = -k_max..k_max over a uniform eta grid with eta=0 on-grid;
  * a function of x alone stores its k-th Fourier coefficient c_k as
    c_k / d_eta in the bin at eta=0 ("discrete delta"), so the eta integral
    of |f_hat| returns |c_k| exactly;
  * derivative words (d_v + 2 pi i tau l)^n act as multiplication by
    (2 pi i (eta + tau l))^n on coefficients, and the L^p quadrature runs on
    the conjugate v grid v_m = (m - N/2) dv, dv = 1/(N d_eta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SeriesNotConverged, TailNotResolved

__all__ = [
    "SpectralDistribution",
    "NormParams",
    "PropertyReport",
    "f_norm",
    "z_norm",
    "y_norm",
    "prop13_battery",
    "free_transport_shift",
    "density_trace",
    "pure_x_field",
    "pure_v_field",
    "random_field",
]


@dataclass(frozen=True, eq=False)
class SpectralDistribution:
    """Truncated double-Fourier table f_hat(k, eta).

    coeffs has shape (2*k_max+1, N_eta); row i holds mode k = i - k_max.
    eta_grid must be uniform with an even count and eta=0 as a grid point
    (eta_j = (j - N/2) * d_eta), so delta rows and FFT round trips are exact.
    """

    k_max: int
    eta_grid: np.ndarray
    coeffs: np.ndarray
    dimension: int = 1

    def __post_init__(self):
        grid = np.asarray(self.eta_grid, dtype=float)
        coeffs = np.asarray(self.coeffs, dtype=complex)
        object.__setattr__(self, "eta_grid", grid)
        object.__setattr__(self, "coeffs", coeffs)
        n = grid.size
        if n < 4 or n % 2:
            raise ValueError("eta grid needs an even count >= 4")
        steps = np.diff(grid)
        if not np.allclose(steps, steps[0], rtol=1e-12, atol=0):
            raise ValueError("eta grid must be uniform")
        if abs(grid[n // 2]) > 1e-12 * steps[0]:
            raise ValueError("eta grid must contain 0 at index N/2")
        if coeffs.shape != (2 * self.k_max + 1, n):
            raise ValueError(
                f"coeffs shape {coeffs.shape} != {(2 * self.k_max + 1, n)}"
            )

    @property
    def d_eta(self) -> float:
        return float(self.eta_grid[1] - self.eta_grid[0])

    @property
    def n_eta(self) -> int:
        return self.eta_grid.size

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.k_max, self.k_max + 1)

    @property
    def center_index(self) -> int:
        return self.n_eta // 2

    def row(self, k: int) -> np.ndarray:
        return self.coeffs[k + self.k_max]

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        """f real in physical space: f_hat(-k,-eta) = conj(f_hat(k,eta)).

        The leftmost eta bin has no mirror partner on an even grid and is
        ignored (constructors keep it zero for real fields).
        """
        a = self.coeffs[:, 1:]
        b = np.conj(a[::-1, ::-1])
        scale = np.abs(a).max() or 1.0
        return bool(np.abs(a - b).max() <= tol * scale)

    def delta_row_mask(self) -> np.ndarray:
        """Rows whose entire mass sits in the eta=0 bin (discrete x-only data)."""
        off = np.abs(self.coeffs).sum(axis=1) - np.abs(self.coeffs[:, self.center_index])
        return (off == 0.0) & (np.abs(self.coeffs[:, self.center_index]) > 0.0)

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralDistribution":
        return SpectralDistribution(self.k_max, self.eta_grid, coeffs, self.dimension)


@dataclass(frozen=True)
class NormParams:
    """Weights of the analytic norms.

    lam: velocity-analyticity width (lambda, spelled out since it is a keyword).
    mu: space-analyticity width. tau: time shift. p: L^p exponent in [1, inf].
    n_max: truncation of the derivative series for the Z norm.
    """

    lam: float
    mu: float
    tau: float = 0.0
    p: float = 1.0
    n_max: int = 24

    def __post_init__(self):
        if self.lam < 0 or self.mu < 0:
            raise ValueError("widths lam, mu must be nonnegative")
        if not (self.p >= 1.0):
            raise ValueError("p must be in [1, inf]")
        if self.n_max < 0:
            raise ValueError("n_max must be nonnegative")


def _kahan_sum(values) -> float:
    total = 0.0
    carry = 0.0
    for v in values:
        y = v - carry
        t = total + y
        carry = (t - total) - y
        total = t
    return total


def to_v_grid(f: SpectralDistribution):
    """Conjugate representation f_hat(l, v_m) on the uniform v grid.

    Exact inverse of the forward rule f_hat(l,eta_j) = dv * sum_m g(v_m)
    e^{-2 pi i eta_j v_m}; both directions are plain DFTs after fftshift.
    """
    n = f.n_eta
    dv = 1.0 / (n * f.d_eta)
    v = (np.arange(n) - n // 2) * dv
    spec = np.fft.ifftshift(f.coeffs, axes=1)
    g = np.fft.fftshift(np.fft.ifft(spec, axis=1), axes=1) * (n * f.d_eta)
    return v, g


def from_v_grid(f: SpectralDistribution, g: np.ndarray) -> SpectralDistribution:
    """Inverse of to_v_grid: rebuild coefficients from v-grid values."""
    n = f.n_eta
    spec = np.fft.fft(np.fft.ifftshift(g, axes=1), axis=1) / (n * f.d_eta)
    return f.with_coeffs(np.fft.fftshift(spec, axes=1))


def _lp_norm(rows: np.ndarray, dv: float, p: float) -> np.ndarray:
    mod = np.abs(rows)
    if np.isinf(p):
        return mod.max(axis=-1)
    if p == 1.0:
        return dv * mod.sum(axis=-1)
    return (dv * (mod**p).sum(axis=-1)) ** (1.0 / p)


def f_norm(f: SpectralDistribution, params: NormParams) -> float:
    """Weighted L1-in-eta, exponentially weighted sum over modes.

    Raises TailNotResolved when the weighted integrand still carries more
    than 1e-8 of the running total at the eta-grid edge: the grid is then too
    short for the requested lam and the truncated value is untrustworthy.
    """
    eta = f.eta_grid
    d_eta = f.d_eta
    ks = f.modes
    weight_k = np.exp(2.0 * np.pi * params.mu * np.abs(ks))
    contributions = []
    edge = 0.0
    for i, k in enumerate(ks):
        w = np.exp(2.0 * np.pi * params.lam * np.abs(k * params.tau + eta))
        integrand = np.abs(f.coeffs[i]) * w
        contributions.append(weight_k[i] * d_eta * _kahan_sum(integrand))
        edge = max(edge, weight_k[i] * d_eta * max(integrand[0], integrand[-1]))
    total = _kahan_sum(contributions)
    if edge > 1e-8 * total and total > 0.0:
        raise TailNotResolved(
            f"eta-grid edge carries {edge:.3e} against total {total:.3e}"
        )
    return total


def y_norm(f: SpectralDistribution, params: NormParams) -> float:
    """Grid supremum of the weighted modulus."""
    eta = f.eta_grid
    best = 0.0
    for i, k in enumerate(f.modes):
        w = np.exp(2.0 * np.pi * params.lam * np.abs(eta + k * params.tau))
        row = np.exp(2.0 * np.pi * params.mu * abs(k)) * w * np.abs(f.coeffs[i])
        best = max(best, float(row.max()))
    return best


def z_norm(f: SpectralDistribution, params: NormParams) -> float:
    """Derivative-series norm, truncated at n_max with a relative tail test.

    Delta rows (x-only content) use the coefficient convention: the stored
    c_l contributes |c_l| e^{2 pi mu |l|} e^{2 pi lam |tau l|}, the exact
    x-only limit of the series. Resolved rows are evaluated spectrally and
    measured in L^p on the conjugate v grid.
    """
    eta = f.eta_grid
    n_grid = f.n_eta
    dv = 1.0 / (n_grid * f.d_eta)
    delta_rows = f.delta_row_mask()
    ks = f.modes
    mu_w = np.exp(2.0 * np.pi * params.mu * np.abs(ks))

    contributions = np.zeros(ks.size)
    last_term_total = 0.0
    # delta rows: closed-form series sum
    for i, k in enumerate(ks):
        if delta_rows[i]:
            c = abs(f.coeffs[i, f.center_index]) * f.d_eta
            contributions[i] = mu_w[i] * c * math.exp(
                2.0 * np.pi * params.lam * abs(params.tau * k)
            )
    # resolved rows: series over n, one inverse transform per (row, n)
    live = [i for i in range(ks.size) if not delta_rows[i] and np.any(f.coeffs[i])]
    if live:
        n_range = range(params.n_max + 1) if params.lam > 0.0 else range(1)
        spec_rows = np.fft.ifftshift(f.coeffs[live], axes=1)
        mult = np.stack(
            [2j * np.pi * (eta + ks[i] * params.tau) for i in live]
        )
        mult = np.fft.ifftshift(mult, axes=1)
        scale = n_grid * f.d_eta
        powered = spec_rows.copy()
        row_totals = np.zeros(len(live))
        for n in n_range:
            if n > 0:
                powered = powered * mult
            g = np.fft.ifft(powered, axis=1) * scale
            lp = _lp_norm(g, dv, params.p)
            term = (params.lam**n / math.factorial(n)) * lp if n else lp
            row_totals += term
            last_term = term
        last_term_total = float(np.sum(last_term * mu_w[live]))
        contributions[live] += row_totals * mu_w[live]
    total = _kahan_sum(sorted(contributions, key=abs))
    if params.lam > 0.0 and live and total > 0.0:
        if last_term_total > 1e-8 * total:
            raise SeriesNotConverged(
                f"n_max={params.n_max} term still contributes "
                f"{last_term_total / total:.3e} relative"
            )
    return total


def density_trace(f: SpectralDistribution) -> np.ndarray:
    """Per-mode velocity integral: rho_hat(l) = f_hat(l, eta=0).

    Delta rows carry x-only content whose density is the coefficient itself.
    """
    rho = f.coeffs[:, f.center_index].copy()
    mask = f.delta_row_mask()
    rho[mask] *= f.d_eta
    return rho


def free_transport_shift(f: SpectralDistribution, t: float) -> SpectralDistribution:
    """Exact spectral free transport: g_hat(k,eta) = f_hat(k, eta + k t).

    Requires every row shift k*t to be a whole number of eta bins (callers
    pick t as a multiple of d_eta); vacated bins are zero-filled, mass
    shifted off the grid is dropped (it would be below the tail check anyway).
    """
    out = np.zeros_like(f.coeffs)
    n = f.n_eta
    for i, k in enumerate(f.modes):
        shift = k * t / f.d_eta
        s = round(shift)
        if abs(shift - s) > 1e-9:
            raise ValueError(f"t={t} shifts mode {k} by a fractional bin count")
        src_lo, src_hi = max(0, s), min(n, n + s)
        dst_lo, dst_hi = max(0, -s), min(n, n - s)
        if src_lo < src_hi:
            out[i, dst_lo:dst_hi] = f.coeffs[i, src_lo:src_hi]
    return f.with_coeffs(out)


def multiply_by_v(f: SpectralDistribution) -> SpectralDistribution:
    """Spectral table of v*f, via the conjugate grid (exact on the window)."""
    v, g = to_v_grid(f)
    return from_v_grid(f, g * v)


def directional_derivative(f: SpectralDistribution, tau: float) -> SpectralDistribution:
    """Spectral table of (d_v + tau d_x) f: multiplier 2 pi i (eta + tau k)."""
    out = np.empty_like(f.coeffs)
    for i, k in enumerate(f.modes):
        out[i] = f.coeffs[i] * (2j * np.pi * (f.eta_grid + tau * k))
    return f.with_coeffs(out)


def pure_x_field(amplitudes: dict, k_max: int, eta_grid: np.ndarray) -> SpectralDistribution:
    """x-only field from mode coefficients {k: c_k}, delta convention in eta."""
    eta_grid = np.asarray(eta_grid, dtype=float)
    n = eta_grid.size
    coeffs = np.zeros((2 * k_max + 1, n), dtype=complex)
    d_eta = eta_grid[1] - eta_grid[0]
    for k, c in amplitudes.items():
        coeffs[k + k_max, n // 2] = c / d_eta
    return SpectralDistribution(k_max, eta_grid, coeffs)


def pure_v_field(fhat_eta: np.ndarray, k_max: int, eta_grid: np.ndarray) -> SpectralDistribution:
    """v-only field: one populated row at k=0."""
    eta_grid = np.asarray(eta_grid, dtype=float)
    coeffs = np.zeros((2 * k_max + 1, eta_grid.size), dtype=complex)
    coeffs[k_max] = np.asarray(fhat_eta, dtype=complex)
    return SpectralDistribution(k_max, eta_grid, coeffs)


def random_field(
    rng: np.random.Generator,
    k_max: int,
    eta_grid: np.ndarray,
    eta_scale: float = 0.5,
    k_decay: float = 0.6,
    hermitian: bool = True,
) -> SpectralDistribution:
    """Smooth random mixed field: Gaussian eta envelopes, random phases.

    Coefficients decay like e^{-|eta|^2/(2 eta_scale^2)} * e^{-k_decay |k|},
    so the tail checks of f_norm pass for moderate lam. Hermitian
    symmetrization makes the field real in physical space.
    """
    eta_grid = np.asarray(eta_grid, dtype=float)
    n = eta_grid.size
    coeffs = np.zeros((2 * k_max + 1, n), dtype=complex)
    for i, k in enumerate(range(-k_max, k_max + 1)):
        center = rng.uniform(-0.5, 0.5) * eta_scale
        envelope = np.exp(-((eta_grid - center) ** 2) / (2 * eta_scale**2))
        phase = rng.uniform(0, 2 * np.pi, size=n)
        amp = rng.uniform(0.2, 1.0) * np.exp(-k_decay * abs(k))
        coeffs[i] = amp * envelope * np.exp(1j * phase)
    coeffs[:, 0] = 0.0
    if hermitian:
        sym = np.conj(coeffs[::-1, ::-1])
        sym = np.roll(sym, 1, axis=1)
        sym[:, 0] = 0.0
        coeffs = 0.5 * (coeffs + sym)
    return SpectralDistribution(k_max, eta_grid, coeffs)


@dataclass
class PropertyReport:
    """Battery outcome: asserted items with slacks, observational ratios."""

    items: dict = field(default_factory=dict)
    observed: dict = field(default_factory=dict)
    n_fields: int = 0
    n_params: int = 0

    @property
    def passed(self) -> bool:
        return all(entry["passed"] for entry in self.items.values())

    def summary_lines(self):
        lines = []
        for name in sorted(self.items):
            e = self.items[name]
            status = "pass" if e["passed"] else "FAIL"
            lines.append(
                f"item ({name}): {status}  max slack {e['slack']:.3e}  cases {e['cases']}"
            )
        for name in sorted(self.observed):
            o = self.observed[name]
            lines.append(f"item ({name}): observed  {o}")
        return lines


def _norm_scale(value: float) -> float:
    return max(1.0, abs(value))


def prop13_battery(f_suite, params_grid, slack_tol: float = 1e-9) -> PropertyReport:
    """Checkable property battery over a suite of fields and parameter sets.

    Asserted items (pass/fail with max slack):
      i      x-only data: F, Z (p=1), and the single-index weight law agree;
      ii     v-only data: F, Z, Y independent of mu and tau;
      viii   monotonicity of all three norms in (lam, mu), plus the
             tau-reshift inequality Z_tau <= Z_{tau_bar} at mu + lam|tau-tau_bar|;
      viiii  Y <= Z with p=1 on resolved (non-delta) fields;
      iX     density trace: ||rho||_{F^{lam|tau|+mu}} <= Z with p=1.

    Observational items (ratio recorded, no pass/fail): iv (gradient widening),
    v (velocity moment), vii (sheared gradient). Items iii and vi need
    composition operands outside this representation and are marked skipped.
    """
    report = PropertyReport(n_fields=len(f_suite), n_params=len(params_grid))

    def item(name):
        return report.items.setdefault(name, {"passed": True, "slack": 0.0, "cases": 0})

    def record(name, slack):
        e = item(name)
        e["cases"] += 1
        e["slack"] = max(e["slack"], slack)
        if slack > slack_tol:
            e["passed"] = False

    grad_ratios = []
    vmul_ratios = []
    shear_ratios = []

    for f in f_suite:
        delta_mask = f.delta_row_mask()
        nonzero = np.abs(f.coeffs).sum(axis=1) > 0
        all_x = bool(np.all(delta_mask[nonzero])) and nonzero.any()
        pure_v = bool(nonzero.sum() == 1 and nonzero[f.k_max] and not delta_mask[f.k_max])
        any_delta = bool(np.any(delta_mask))

        for params in params_grid:
            p1 = NormParams(params.lam, params.mu, params.tau, 1.0, params.n_max)

            if all_x:
                fv = f_norm(f, p1)
                zv = z_norm(f, p1)
                direct = _kahan_sum(
                    abs(f.coeffs[i, f.center_index]) * f.d_eta * np.exp(
                        2 * np.pi * (params.lam * abs(params.tau) + params.mu) * abs(k)
                    )
                    for i, k in enumerate(f.modes)
                )
                scale = _norm_scale(direct)
                record("i", max(abs(fv - zv), abs(fv - direct)) / scale)

            if pure_v:
                alt = NormParams(params.lam, params.mu + 0.17, params.tau + 0.9, params.p, params.n_max)
                spread = max(
                    abs(f_norm(f, params) - f_norm(f, alt)),
                    abs(z_norm(f, params) - z_norm(f, alt)),
                    abs(y_norm(f, params) - y_norm(f, alt)),
                )
                record("ii", spread / _norm_scale(f_norm(f, params)))

            # (viii) widening monotonicity + the tau-reshift clause
            wider = NormParams(params.lam + 0.01, params.mu + 0.05, params.tau, params.p, params.n_max)
            for norm in (f_norm, z_norm, y_norm):
                lo, hi = norm(f, params), norm(f, wider)
                record("viii", max(0.0, lo - hi) / _norm_scale(hi))
            tau_bar = params.tau + 0.5
            reshift = NormParams(
                params.lam,
                params.mu + params.lam * abs(params.tau - tau_bar),
                tau_bar,
                1.0,
                params.n_max,
            )
            record(
                "viii",
                max(0.0, z_norm(f, p1) - z_norm(f, reshift))
                / _norm_scale(z_norm(f, reshift)),
            )

            if not any_delta:
                yv = y_norm(f, p1)
                zv = z_norm(f, p1)
                record("viiii", max(0.0, yv - zv) / _norm_scale(zv))

            rho = density_trace(f)
            w = np.exp(2 * np.pi * (params.lam * abs(params.tau) + params.mu) * np.abs(f.modes))
            rho_norm = _kahan_sum(np.abs(rho) * w)
            record("iX", max(0.0, rho_norm - z_norm(f, p1)) / _norm_scale(rho_norm))

            # observational ratios on resolved fields
            if not any_delta and params.lam > 0:
                try:
                    lam_bar = params.lam + 0.02
                    grad = directional_derivative(f, 0.0)
                    num = f_norm(grad, NormParams(params.lam, params.mu, 0.0, 1.0, params.n_max))
                    den = f_norm(f, NormParams(lam_bar, params.mu, 0.0, 1.0, params.n_max))
                    if den > 0:
                        grad_ratios.append(num / den * (math.e * (lam_bar - params.lam)))
                    vf = multiply_by_v(f)
                    znum = z_norm(vf, p1)
                    zden = z_norm(f, NormParams(lam_bar, params.mu, params.tau, 1.0, params.n_max))
                    if zden > 0:
                        vmul_ratios.append(znum / zden)
                    sheared = directional_derivative(f, params.tau)
                    snum = z_norm(sheared, p1)
                    sden = z_norm(f, NormParams(lam_bar, params.mu, params.tau, 1.0, params.n_max))
                    if sden > 0:
                        shear_ratios.append(
                            snum / sden * params.lam * math.log(lam_bar / params.lam)
                        )
                except (TailNotResolved, SeriesNotConverged):
                    pass

    if grad_ratios:
        report.observed["iv"] = (
            f"max normalized gradient ratio {max(grad_ratios):.4f} "
            f"(<= 1 expected under this transform convention)"
        )
    if vmul_ratios:
        report.observed["v"] = f"max ||v f||_Z / ||f||_Z(lam_bar) = {max(vmul_ratios):.4f}"
    if shear_ratios:
        report.observed["vii"] = (
            f"max sheared-gradient ratio x lam log(lam_bar/lam) = {max(shear_ratios):.4f}"
        )
    report.observed["iii"] = "skipped: composition operand not representable on this grid"
    report.observed["vi"] = "skipped: two-term bound constant is non-constructive"
    return report
