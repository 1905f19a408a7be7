"""Resonance-kernel bounds and growth control for the density envelope.

Filamentation lets a mode pair (k, l) re-excite the field long after the
initial perturbation has mixed away; the strength of that interaction is
captured by a two-time kernel K(t, s) built from a supremum over integer mode
pairs. This module evaluates the kernel exactly on a truncation box, checks
the closed-form integral table that controls it piece by piece, computes its
forward and backward collision-weighted moments against their predicted
shapes, locates echo times, and assembles the growth envelope and the
integral-inequality verifier that together certify that a density history
stays below an exponential envelope.

All non-constructive constants are handled by calibrate-then-freeze: the
smallest working constant is fitted on a calibration grid, doubled, frozen
here as a module constant, and the tests verify it on a disjoint grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import (
    ConstraintViolation,
    EnvelopeExceeded,
    InequalityViolated,
    TailNotResolved,
    UnstableConfiguration,
)

__all__ = [
    "EchoKernelSpec",
    "GrowthParams",
    "EnvelopeReport",
    "VerifyReport",
    "echo_kernel",
    "piecewise_integral_check",
    "echo_moment_forward",
    "echo_moment_backward",
    "echo_time",
    "growth_envelope",
    "growth_envelope_sum",
    "envelope_report",
    "growth_verify",
    "FORWARD_MOMENT_CONSTANT",
    "BACKWARD_MOMENT_CONSTANT",
    "ENVELOPE_CONSTANT",
]

# Calibrate-then-freeze constants (smallest fitted value x2 safety margin;
# the tests verify these on parameter grids disjoint from calibration).
# Forward calibration: alpha in {0.35, 0.5, 0.75, 0.9}, gamma in {1.5, 2, 3},
# nu/alpha in {0.2, 0.5, 0.9, 0.94}, t in {2..480}; worst ratio 0.2813.
FORWARD_MOMENT_CONSTANT = 0.563
# Backward calibration: same alpha/gamma span plus gamma=1.2, s in {0, 2, 10},
# nu/alpha up to 0.94; worst ratio 0.0829.
BACKWARD_MOMENT_CONSTANT = 0.166
# Envelope/crude-bound calibration: smallest constant passing the weighted
# Volterra scenarios and the constant-source case is 1.0.
ENVELOPE_CONSTANT = 2.0


@dataclass(frozen=True)
class EchoKernelSpec:
    """Resonance kernel parameters: analyticity width alpha, potential decay
    exponent gamma, and the truncation box for the integer-pair supremum.

    The l-tail of the sup is killed by e^{-alpha*|l|}, so the truncation is
    certified by requiring e^{-alpha*trunc} < 1e-12 * e^{-alpha} (the dropped
    terms sit below 1e-12 of the generic |l| = 1 scale). The k-tail has no
    t-uniform closed-form majorant; it is covered by the doubling invariant
    (doubling trunc leaves values unchanged on the operating grids).
    """

    alpha: float
    gamma: float
    trunc: int = 64

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ConstraintViolation("alpha must lie in (0, 1)")
        if self.gamma <= 1.0:
            raise ConstraintViolation("gamma must exceed 1")
        if int(self.trunc) != self.trunc or self.trunc < 2:
            raise ConstraintViolation("trunc must be an integer >= 2")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "trunc", int(self.trunc))
        if self.alpha * (self.trunc - 1) < 12.0 * math.log(10.0):
            raise ConstraintViolation(
                f"trunc={self.trunc} leaves an l-tail above 1e-12 of the sup "
                f"at alpha={self.alpha:g}: need alpha*(trunc-1) > 12*ln(10)"
            )


@lru_cache(maxsize=8)
def _mode_tables(spec: EchoKernelSpec):
    """Cached (k, l) grids and the s-independent factors of the sup.

    The summand is invariant under (k, l) -> (-k, -l), so l ranges over the
    positive half of the box only; k keeps both signs.
    """
    kmodes = np.concatenate(
        [np.arange(-spec.trunc, 0), np.arange(1, spec.trunc + 1)]
    ).astype(float)
    lmodes = np.arange(1, spec.trunc + 1).astype(float)
    kk, ll = np.meshgrid(kmodes, lmodes, indexing="ij")
    absdiff = np.abs(kk - ll)
    log_static = -spec.alpha * ll - np.log1p(absdiff**spec.gamma)
    return kk, ll, absdiff, log_static


def echo_kernel(spec: EchoKernelSpec, t: float, s: float) -> float:
    """Exact truncated sup kernel (1+s) * sup_{k,l} of the three-factor term.

    Factors: e^{-alpha|l|} * e^{-alpha (t-s)|k-l|/t} * e^{-alpha|k(t-s)+ls|},
    divided by 1 + |k-l|^gamma, over nonzero integers |k|,|l| <= trunc.
    Deterministic; t = s = 0 is allowed as the continuous limit along s = t.
    """
    t, s = float(t), float(s)
    if s < 0 or s > t:
        raise ConstraintViolation("need 0 <= s <= t")
    if t == 0.0 and s != 0.0:
        raise ConstraintViolation("t = 0 only makes sense with s = 0")
    kk, ll, absdiff, log_static = _mode_tables(spec)
    ratio = (t - s) / t if t > 0.0 else 0.0
    expo = log_static - spec.alpha * (
        ratio * absdiff + np.abs(kk * (t - s) + ll * s)
    )
    return float((1.0 + s) * math.exp(expo.max()))


def _adaptive_simpson(f, a: float, b: float, abs_tol: float = 1e-13, rel_tol: float = 1e-9) -> float:
    """Adaptive Simpson quadrature for a scalar positive integrand.

    A 65-point composite pass fixes the tolerance scale and seeds 32 panels,
    so narrow resonance bumps cannot hide inside a single coarse interval;
    each panel is then bisected under the Lyness criterion |S2 - S1|/15 with
    the Richardson correction, halving its tolerance per split.
    """
    if b <= a:
        return 0.0
    xs = np.linspace(a, b, 65)
    fs = np.array([f(x) for x in xs])
    h = (b - a) / 64.0
    coarse = h / 3.0 * (fs[0] + fs[-1] + 4.0 * fs[1:-1:2].sum() + 2.0 * fs[2:-2:2].sum())
    tol = max(abs_tol, rel_tol * abs(coarse)) / 32.0

    def recurse(x0, x2, f0, f1, f2, whole, tol, depth):
        x1 = 0.5 * (x0 + x2)
        lm, rm = 0.5 * (x0 + x1), 0.5 * (x1 + x2)
        flm, frm = f(lm), f(rm)
        left = (x1 - x0) / 6.0 * (f0 + 4.0 * flm + f1)
        right = (x2 - x1) / 6.0 * (f1 + 4.0 * frm + f2)
        err = (left + right - whole) / 15.0
        if depth <= 0 or abs(err) <= tol:
            return left + right + err
        return recurse(x0, x1, f0, flm, f1, left, 0.5 * tol, depth - 1) + recurse(
            x1, x2, f1, frm, f2, right, 0.5 * tol, depth - 1
        )

    total = 0.0
    for i in range(0, 64, 2):
        whole = (xs[i + 2] - xs[i]) / 6.0 * (fs[i] + 4.0 * fs[i + 1] + fs[i + 2])
        total += recurse(xs[i], xs[i + 2], fs[i], fs[i + 1], fs[i + 2], whole, tol, 42)
    return total


def piecewise_integral_check(k: int, l: int, alpha: float, t: float):
    """Quadrature vs closed-form bound for the half-interval phase integral.

    Evaluates int_0^{t/2} e^{-alpha |k(t-s)+l s|} (1+s) ds numerically
    (splitting at the phase kink s* = kt/(k-l) when it falls inside) and
    returns it next to the four-case closed-form bound (split on how l
    compares with k). The reduction k > 0 is enforced; the bound is rigorous
    for every case, and exact when l = k.
    """
    k, l = int(k), int(l)
    if k <= 0:
        raise ConstraintViolation("the table is reduced to k > 0")
    if not 0.0 < alpha < 1.0:
        raise ConstraintViolation("alpha must lie in (0, 1)")
    if t <= 0:
        raise ConstraintViolation("need t > 0")

    def integrand(s):
        return math.exp(-alpha * abs(k * (t - s) + l * s)) * (1.0 + s)

    kink = k * t / (k - l) if l < k else None
    if kink is not None and 0.0 < kink < 0.5 * t:
        numeric = _adaptive_simpson(integrand, 0.0, kink) + _adaptive_simpson(
            integrand, kink, 0.5 * t
        )
    else:
        numeric = _adaptive_simpson(integrand, 0.0, 0.5 * t)
    if l > k:
        bound = 1.0 / (alpha * (l - k)) + 1.0 / (alpha * (l - k)) ** 2
    elif l == k:
        bound = math.exp(-alpha * k * t) * (0.5 * t + t * t / 8.0)
    elif l >= -k:
        bound = (
            math.exp(-alpha * (k + l) * t / 2.0)
            / (alpha * abs(k - l))
            * (1.0 + 0.5 * t)
        )
    else:
        d = abs(k - l)
        bound = 2.0 / (alpha * d) + 2.0 * k * t / (alpha * d * d) + 1.0 / (alpha * d) ** 2
    return numeric, bound


def echo_moment_forward(spec: EchoKernelSpec, nu: float, t: float,
                        rel_tol: float = 1e-9):
    """Collision-weighted forward moment of the kernel and its predicted shape.

    Returns (numeric, shape) with numeric = int_0^t K(t,s) e^{-nu (t-s)} ds
    and shape = 1 / (alpha^3 nu^{1+gamma} t^{gamma-1}), the constant-free
    decay profile the moment must stay below (up to a fitted constant) in the
    weak-collision regime nu < alpha. rel_tol loosens the quadrature for
    stability experiments; the default is the pinned production tolerance.
    """
    if not 0.0 < nu < spec.alpha:
        raise ConstraintViolation("need 0 < nu < alpha")
    if t <= 0:
        raise ConstraintViolation("need t > 0")
    numeric = _adaptive_simpson(
        lambda s: echo_kernel(spec, t, s) * math.exp(-nu * (t - s)),
        0.0, t, rel_tol=rel_tol,
    )
    shape = 1.0 / (spec.alpha**3 * nu ** (1.0 + spec.gamma) * t ** (spec.gamma - 1.0))
    return numeric, shape


def echo_moment_backward(spec: EchoKernelSpec, nu: float, s: float, T_max: float,
                         rel_tol: float = 1e-9):
    """Future-weighted moment from time s and its predicted shape.

    Returns (numeric, shape) with numeric = int_s^{T_max} e^{-nu (t-s)} K(t,s) dt
    and shape = 1/(alpha^2 nu) + 1/(alpha nu^gamma). The truncated tail beyond
    T_max is bounded by (1+s) e^{-nu (T_max - s)} / nu (the kernel never
    exceeds 1+s); TailNotResolved is raised if that majorant is not below
    1e-10 of the computed integral.
    """
    if not 0.0 < nu < spec.alpha:
        raise ConstraintViolation("need 0 < nu < alpha")
    if s < 0 or T_max <= s:
        raise ConstraintViolation("need 0 <= s < T_max")
    numeric = _adaptive_simpson(
        lambda t: math.exp(-nu * (t - s)) * echo_kernel(spec, t, s),
        s, T_max, rel_tol=rel_tol,
    )
    tail = (1.0 + s) * math.exp(-nu * (T_max - s)) / nu
    if tail >= 1e-10 * numeric:
        raise TailNotResolved(
            f"tail majorant {tail:.3e} beyond T_max={T_max:g} is not below "
            f"1e-10 of the integral {numeric:.3e}; raise T_max"
        )
    shape = 1.0 / (spec.alpha**2 * nu) + 1.0 / (spec.alpha * nu**spec.gamma)
    return numeric, shape


def echo_time(l: int, k: int, s: float):
    """Time of the strong response seeded at time s by mode l onto mode k.

    Solves k (t - s) + l s = 0; returns t* = s (k - l) / k when it lies in the
    future (t* > s), else None. Same-sign mode pairs never echo forward.
    """
    if s <= 0:
        raise ConstraintViolation("seeding time s must be > 0")
    if k == 0:
        raise ConstraintViolation("response mode k must be nonzero")
    t_star = s * (k - l) / k
    return t_star if t_star > s else None


@dataclass(frozen=True)
class GrowthParams:
    """Constants entering the density-growth envelope and its verification.

    A bounds the source; c scales the resonance kernel; c0 and m set the
    algebraic kernel c0/(1+s)^m; kappa is the measured stability margin;
    nu_env is the envelope exponent (the collision frequency the envelope is
    evaluated at); lambda0/lambda_weight/C0/C_W are the analyticity and
    potential constants entering the crude pointwise bound.
    """

    A: float
    c0: float
    m: float
    c: float
    kappa: float
    nu_env: float
    lambda0: float = 1.0
    lambda_weight: float = 0.0
    C0: float = 1.0
    C_W: float = 1.0

    def __post_init__(self):
        if self.A < 0 or self.c0 < 0 or self.c < 0:
            raise ConstraintViolation("A, c0 and c must be >= 0")
        if self.m <= 1:
            raise ConstraintViolation("algebraic kernel needs m > 1")
        if self.kappa <= 0:
            raise UnstableConfiguration(
                "growth control needs a positive stability margin"
            )
        if self.kappa > 1:
            raise ConstraintViolation("a margin above 1 is not a margin of |1 - L|")
        if self.nu_env <= 0:
            raise ConstraintViolation("envelope exponent nu_env must be > 0")
        if not 0 <= self.lambda_weight < self.lambda0:
            raise ConstraintViolation("need 0 <= lambda_weight < lambda0")
        if self.C0 <= 0 or self.C_W < 0:
            raise ConstraintViolation("need C0 > 0 and C_W >= 0")


def _switch_time(params: GrowthParams, gamma: float, alpha: float, C_fit: float) -> float:
    nu, c, c0, m = params.nu_env, params.c, params.c0, params.m
    terms = (
        (c * c * nu ** (2.0 + gamma) / alpha**5) ** (1.0 / (gamma - 1.0)),
        (c * nu ** (0.5 + gamma) / alpha**2) ** (1.0 / (gamma - 1.0)),
        (c0 * c0 / nu) ** (1.0 / (2.0 * m - 1.0)),
    )
    return C_fit * max(terms)


def growth_envelope(params: GrowthParams, gamma: float, alpha: float, t: float,
                    C_fit: float | None = None) -> float:
    """Exponential envelope for the weighted density at time t.

    The envelope is C A (1+c0^2)/sqrt(nu) e^{C c0} (1 + c/(alpha nu)) e^{C T}
    e^{C c (1+T^2)} e^{nu t}, with T the three-term switch time and C the
    frozen calibrated constant (override via C_fit). Valid for nu_env < alpha.
    """
    if C_fit is None:
        C_fit = ENVELOPE_CONSTANT
    if params.kappa <= 0:
        raise UnstableConfiguration("no stability margin: the envelope is void")
    if gamma <= 1 or not 0 < alpha < 1:
        raise ConstraintViolation("need gamma > 1 and alpha in (0, 1)")
    if not params.nu_env < alpha:
        raise ConstraintViolation("envelope exponent must satisfy nu_env < alpha")
    if t < 0:
        raise ConstraintViolation("time must be >= 0")
    nu, c, c0 = params.nu_env, params.c, params.c0
    T = _switch_time(params, gamma, alpha, C_fit)
    total_exponent = C_fit * (c0 + T + c * (1.0 + T * T)) + nu * t
    if total_exponent > 700.0:
        return math.inf  # the bound holds but carries no information
    return (
        C_fit
        * params.A
        * (1.0 + c0 * c0)
        / math.sqrt(nu)
        * math.exp(C_fit * c0)
        * (1.0 + c / (alpha * nu))
        * math.exp(C_fit * T)
        * math.exp(C_fit * c * (1.0 + T * T))
        * math.exp(nu * t)
    )


def growth_envelope_sum(params: GrowthParams, c_js, alpha_js, t: float,
                        C_fit: float | None = None) -> float:
    """Envelope variant for a sum of gamma = 1 kernels sum_j c_j K^{(alpha_j)}.

    Same envelope formula with c = sum_j c_j, alpha = min_j alpha_j and the
    two-term switch time T = max(sum_j (c_j/alpha_j^3)/nu^2, (c0^2/nu)^{1/(2m-1)}).
    Requires nu_env <= 1; the regime of validity additionally needs nu_env
    large against sum_j c_j/alpha_j^3 (a non-constructive threshold, so it is
    the caller's responsibility, not a checked precondition).
    """
    if C_fit is None:
        C_fit = ENVELOPE_CONSTANT
    c_js = [float(c) for c in c_js]
    alpha_js = [float(a) for a in alpha_js]
    if len(c_js) != len(alpha_js) or not c_js:
        raise ConstraintViolation("need matching nonempty c_j and alpha_j lists")
    if any(c < 0 for c in c_js) or any(not 0 < a < 1 for a in alpha_js):
        raise ConstraintViolation("need c_j >= 0 and alpha_j in (0, 1)")
    if params.nu_env > 1:
        raise ConstraintViolation("the summed variant needs nu_env <= 1")
    if t < 0:
        raise ConstraintViolation("time must be >= 0")
    nu, c0, m = params.nu_env, params.c0, params.m
    c = sum(c_js)
    alpha = min(alpha_js)
    stiffness = sum(cj / aj**3 for cj, aj in zip(c_js, alpha_js))
    T = max(stiffness / nu**2, (c0 * c0 / nu) ** (1.0 / (2.0 * m - 1.0)))
    total_exponent = C_fit * (c0 + T + c * (1.0 + T * T)) + nu * t
    if total_exponent > 700.0:
        return math.inf  # the bound holds but carries no information
    return (
        C_fit
        * params.A
        * (1.0 + c0 * c0)
        / math.sqrt(nu)
        * math.exp(C_fit * c0)
        * (1.0 + c / (alpha * nu))
        * math.exp(C_fit * T)
        * math.exp(C_fit * c * (1.0 + T * T))
        * math.exp(nu * t)
    )


@dataclass(frozen=True, eq=False)
class EnvelopeReport:
    """Envelope closure with its switch time and the constant that built it."""

    T_star: float
    envelope: object = field(repr=False)
    inputs: dict
    C_fit: float

    def __post_init__(self):
        if self.C_fit < 1.0:
            raise ConstraintViolation(
                "C_fit must be >= 1 so the envelope dominates its source"
            )


def envelope_report(params: GrowthParams, gamma: float, alpha: float,
                    C_fit: float | None = None) -> EnvelopeReport:
    """Bundle the envelope as a callable with its switch time and inputs."""
    if C_fit is None:
        C_fit = ENVELOPE_CONSTANT
    T = _switch_time(params, gamma, alpha, C_fit)
    growth_envelope(params, gamma, alpha, 0.0, C_fit)  # validates the inputs

    def env(t):
        return growth_envelope(params, gamma, alpha, t, C_fit)

    inputs = {
        "A": params.A, "c0": params.c0, "m": params.m, "c": params.c,
        "kappa": params.kappa, "nu_env": params.nu_env, "gamma": gamma,
        "alpha": alpha,
    }
    return EnvelopeReport(T_star=T, envelope=env, inputs=inputs, C_fit=C_fit)


@dataclass(frozen=True, eq=False)
class VerifyReport:
    """Outcome of checking a weighted density series against its bounds.

    All three checks passed if the report exists (failures raise, so the ok
    flags are True on any returned report); the ratios record how much
    headroom each check had and the worst_* fields locate the tightest time.
    """

    hypothesis_ok: bool
    crude_ok: bool
    envelope_ok: bool
    checked_indices: tuple
    max_hypothesis_ratio: float
    worst_hypothesis_time: float
    max_crude_ratio: float
    worst_crude_time: float
    max_envelope_ratio: float
    worst_envelope_time: float
    C_fit: float

    def as_dict(self) -> dict:
        """Plain-dict form for serialization."""
        return {
            "hypothesis_ok": self.hypothesis_ok,
            "crude_ok": self.crude_ok,
            "envelope_ok": self.envelope_ok,
            "checked_times": len(self.checked_indices),
            "max_hypothesis_ratio": self.max_hypothesis_ratio,
            "worst_hypothesis_time": self.worst_hypothesis_time,
            "max_crude_ratio": self.max_crude_ratio,
            "worst_crude_time": self.worst_crude_time,
            "max_envelope_ratio": self.max_envelope_ratio,
            "worst_envelope_time": self.worst_envelope_time,
            "C_fit": self.C_fit,
        }


def _echo_row(spec: EchoKernelSpec, t: float, s_values: np.ndarray) -> np.ndarray:
    """Kernel values K(t, s_j) for one t, vectorized over s in chunks."""
    out = np.empty(s_values.shape, dtype=float)
    kk, ll, absdiff, log_static = _mode_tables(spec)
    for lo in range(0, s_values.size, 64):
        s = s_values[lo : lo + 64][None, None, :]
        ratio = (t - s) / t if t > 0 else np.zeros_like(s)
        expo = log_static[:, :, None] - spec.alpha * (
            ratio * absdiff[:, :, None]
            + np.abs(kk[:, :, None] * (t - s) + ll[:, :, None] * s)
        )
        out[lo : lo + 64] = (1.0 + s_values[lo : lo + 64]) * np.exp(
            expo.max(axis=(0, 1))
        )
    return out


def growth_verify(phi, kernels, source: float, params: GrowthParams,
                  n_checks: int = 65, C_fit: float | None = None) -> VerifyReport:
    """Check a weighted density series against the integral hypothesis and
    both certified bounds.

    phi is (times, values) on a uniform grid, values complex (the weighted
    single-mode series). kernels is (k0_series, k1_spec, c0, m): k0_series
    holds the weighted convolution kernel sampled at the same grid offsets,
    k1_spec the resonance kernel parameters (None if params.c == 0), and
    (c0, m) the algebraic kernel constants, which must agree with params.
    source is the constant A bounding the free part.

    Three checks, in order, on n_checks evenly spaced grid times:
    (1) the hypothesis: |phi(t) - sum_w e^{-nu u} K0(u) phi(s)| must not
        exceed A + sum_w e^{-nu u} (c K(t,s) + c0 (1+s)^{-m}) |phi(s)|
        (trapezoid weights; violation raises InequalityViolated);
    (2) the crude pointwise bound 2A exp(C (C0 C_W t/(lambda0 - lambda)
        + c (t + t^2) + c0/(m-1)));
    (3) the calibrated envelope.
    Exceeding (2) or (3) raises EnvelopeExceeded.
    """
    if C_fit is None:
        C_fit = ENVELOPE_CONSTANT
    times, values = phi
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=complex)
    if times.ndim != 1 or times.shape != values.shape or times.size < 2:
        raise ConstraintViolation("phi must be (times, values) on a shared grid")
    dt = float(times[1] - times[0])
    if dt <= 0 or np.max(np.abs(np.diff(times) - dt)) > 1e-9 * dt:
        raise ConstraintViolation("phi must be sampled on a uniform grid")
    if abs(times[0]) > 1e-12:
        raise ConstraintViolation("the series must start at t = 0")
    k0_series, k1_spec, c0, m = kernels
    if abs(c0 - params.c0) > 1e-12 * max(1.0, abs(params.c0)) or abs(m - params.m) > 1e-12 * m:
        raise ConstraintViolation("algebraic-kernel constants disagree with params")
    if params.c > 0 and k1_spec is None:
        raise ConstraintViolation("params.c > 0 needs a resonance kernel spec")
    k0 = np.zeros(times.size, dtype=complex) if k0_series is None else np.asarray(
        k0_series, dtype=complex
    )
    if k0.shape != times.shape:
        raise ConstraintViolation("k0_series must be sampled on the phi grid")
    if source < 0:
        raise ConstraintViolation("the source bound A must be >= 0")
    nu = params.nu_env
    n = times.size
    mag = np.abs(values)
    decay = np.exp(-nu * times)  # e^{-nu u} at grid offsets u
    alg = c0 / (1.0 + times) ** m

    idx = np.unique(np.linspace(0, n - 1, min(n_checks, n)).round().astype(int))
    slack = 1e-9

    max_hyp, worst_hyp_t = 0.0, float(times[0])
    for i in idx:
        w = np.full(i + 1, dt)
        w[0] = w[-1] = 0.5 * dt
        if i == 0:
            lhs = mag[0]
            rhs = float(source)
        else:
            conv = np.dot(w * decay[i::-1] * k0[i::-1], values[: i + 1])
            lhs = abs(values[i] - conv)
            load = alg[: i + 1].copy()
            if params.c > 0:
                load = load + params.c * _echo_row(k1_spec, float(times[i]), times[: i + 1])
            rhs = float(source) + float(np.dot(w * decay[i::-1] * load, mag[: i + 1]))
        ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else np.inf)
        if ratio > max_hyp:
            max_hyp, worst_hyp_t = ratio, float(times[i])
        if lhs > rhs * (1.0 + slack) + 1e-12:
            raise InequalityViolated(
                f"hypothesis fails at t={times[i]:g}: lhs={lhs:.6e} > rhs={rhs:.6e}"
            )

    # The crude exponent can overflow exp, so compare in log space.
    rate = params.C0 * params.C_W / (params.lambda0 - params.lambda_weight)
    log_crude = C_fit * (
        rate * times + params.c * (times + times**2) + c0 / (m - 1.0)
    ) + (math.log(2.0 * source) if source > 0 else -np.inf)
    with np.errstate(divide="ignore"):
        log_mag = np.log(mag)
    crude_gap = log_mag - log_crude
    crude_gap[np.isneginf(log_mag) & np.isneginf(log_crude)] = -np.inf
    max_crude = float(np.exp(np.min([np.max(crude_gap), 50.0])))
    if max_crude > 1.0 + slack:
        i = int(np.argmax(crude_gap))
        raise EnvelopeExceeded(
            f"crude pointwise bound fails at t={times[i]:g}: "
            f"phi={mag[i]:.6e} > log-bound={log_crude[i]:.6e}"
        )

    if k1_spec is not None:
        gamma_env, alpha_env = k1_spec.gamma, k1_spec.alpha
    else:
        # c == 0 here, so gamma and alpha only enter validity checks and
        # vanishing terms; any width above nu_env works.
        if nu >= 1.0:
            raise ConstraintViolation(
                "without a kernel spec the envelope needs nu_env < 1"
            )
        gamma_env, alpha_env = 2.0, 0.5 * (1.0 + nu)
    env_params = GrowthParams(
        A=float(source), c0=params.c0, m=params.m, c=params.c, kappa=params.kappa,
        nu_env=params.nu_env, lambda0=params.lambda0,
        lambda_weight=params.lambda_weight, C0=params.C0, C_W=params.C_W,
    )
    env = np.array(
        [growth_envelope(env_params, gamma_env, alpha_env, float(t), C_fit) for t in times]
    )
    env_ratio = mag / env
    max_env = float(np.max(env_ratio))
    if max_env > 1.0 + slack:
        i = int(np.argmax(env_ratio))
        raise EnvelopeExceeded(
            f"calibrated envelope fails at t={times[i]:g}: "
            f"phi={mag[i]:.6e} > envelope={env[i]:.6e}"
        )

    return VerifyReport(
        hypothesis_ok=True,
        crude_ok=True,
        envelope_ok=True,
        checked_indices=tuple(int(i) for i in idx),
        max_hypothesis_ratio=float(max_hyp),
        worst_hypothesis_time=worst_hyp_t,
        max_crude_ratio=max_crude,
        worst_crude_time=float(times[int(np.argmax(crude_gap))]),
        max_envelope_ratio=max_env,
        worst_envelope_time=float(times[int(np.argmax(env_ratio))]),
        C_fit=float(C_fit),
    )
