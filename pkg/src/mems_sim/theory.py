"""Computable versions of the finite-time singularity argument.

Everything here is a diagnostic evaluated on numerical data: the weighted
energy E_alpha, its exponential envelope, the comparison function
F_{p,delta}, the explicit threshold lambda_star, and numerical checks of
the integral identity and inequalities relating the trace gradient to
volume integrals of the potential.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import bisect

from .elliptic import first_derivative
from .grid import DeflectionState, MappedGrid, PotentialField

MU1 = math.pi**2 / 4.0


def zeta1(x):
    """Principal Dirichlet eigenfunction on (-1, 1), normalised to unit mass."""
    return 0.25 * math.pi * np.cos(0.5 * math.pi * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Eigenpair:
    mu1: float
    zeta1: np.ndarray

    @classmethod
    def on(cls, x):
        return cls(MU1, zeta1(x))


def trapezoid(f, h):
    f = np.asarray(f, dtype=float)
    return h * (f.sum(axis=-1) - 0.5 * (f[..., 0] + f[..., -1]))


def _values(u):
    return u.u if isinstance(u, DeflectionState) else np.asarray(u, dtype=float)


def energy(u, alpha, x):
    """E_alpha = int zeta1 (u + alpha u^2 / 2) dx, trapezoid rule on the nodes ``x``."""
    u = _values(u)
    x = np.asarray(x, dtype=float)
    return float(trapezoid(zeta1(x) * (u + 0.5 * alpha * u**2), x[1] - x[0]))


def lemma2_envelope(u0):
    """Largest admissible alpha and the decay constant C0 for data with max ``u0``.

    ``u0`` may be the initial profile or its maximum.
    """
    top = max(float(np.max(_values(u0))), 0.0)
    alpha_max = min(1.0, 2.0 / (1.0 + top))
    return alpha_max, math.pi * (top + top**2)


def envelope_value(C0, t):
    return C0 * math.exp(-MU1 * t)


def F_pdelta(y, p, delta, lam, eps):
    if not y > -1.0:
        raise ValueError(f"F_pdelta is defined for y > -1, got {y}")
    pref = 4.0 * delta * lam / (p * (lam * eps**2 + 4.0 * delta**2))
    bracket = MU1 * eps**2 / p + p / (4.0 * delta) + p * MU1 * eps**2 / (p + 1.0) * y - 1.0 / (1.0 + y)
    return MU1 + pref * bracket


@dataclass(frozen=True)
class ProofParams:
    p: float
    delta: float
    alpha: float
    chi: float
    chi_eps: float
    lambda_star: float
    lam: float
    epsilon: float

    def F(self, y):
        return F_pdelta(y, self.p, self.delta, self.lam, self.epsilon)

    def to_dict(self):
        return asdict(self)


def _chi(top, eps):
    chi_eps = eps * math.sqrt(max(top - 1.0, 0.0) / 2.0)
    return max(1.0, chi_eps), chi_eps


def _top(u0):
    return max(float(np.max(_values(u0))), 0.0)


def lambda_star(u0, eps):
    """Voltage threshold above which the comparison argument forces a singularity."""
    chi, _ = _chi(_top(u0), eps)
    return ((1.0 + 2.0 * MU1 * eps**2) / chi * (1.0 + MU1 * (chi**2 + eps**2))) ** 2


def choose_parameters(u0, eps, lam):
    """p = 1 + 2 mu1 eps^2, delta = chi sqrt(lam) / 2 and the matching alpha.

    ``u0`` may be the initial profile or its maximum. ``eps = 0`` is accepted
    and yields the reduced-model values (alpha = 0, p = 1).
    """
    top = _top(u0)
    chi, chi_eps = _chi(top, eps)
    p = 1.0 + 2.0 * MU1 * eps**2
    delta = 0.5 * chi * math.sqrt(lam)
    alpha = lam * eps**2 / (lam * eps**2 + 4.0 * delta**2)
    # lambda cancels out of alpha
    assert math.isclose(alpha, eps**2 / (eps**2 + chi**2), rel_tol=1e-12, abs_tol=1e-15)
    alpha_max, _ = lemma2_envelope(top)
    assert alpha <= alpha_max * (1.0 + 1e-12)
    return ProofParams(
        p=p, delta=delta, alpha=alpha, chi=chi, chi_eps=chi_eps,
        lambda_star=lambda_star(top, eps), lam=lam, epsilon=eps,
    )


def F0_majorant(lam, eps, chi=1.0):
    """The final upper bound on F_{p,delta}(0) used to derive ``lambda_star``.

    Its sign change in ``lam`` is exactly ``lambda_star``; F_{p,delta}(0)
    itself turns negative at a smaller lambda.
    """
    k = 1.0 + 2.0 * MU1 * eps**2
    return chi / (k * (chi**2 + eps**2)) * (k / chi * (1.0 + MU1 * (chi**2 + eps**2)) - math.sqrt(lam))


def sign_change_in_lambda(fun, lo, hi, xtol=1e-6):
    """Bisection for the lambda at which ``fun(lam)`` changes sign on [lo, hi]."""
    return bisect(fun, lo, hi, xtol=xtol, maxiter=200)


def lambda_root_of_F0(u0, eps, lo=1e-6, hi=1e4, xtol=1e-6):
    """lambda at which F_{p,delta}(0) changes sign, with p, delta from choose_parameters."""

    def f(lam):
        return choose_parameters(u0, eps, lam).F(0.0)

    return sign_change_in_lambda(f, lo, hi, xtol)


def lambda_root_of_majorant(u0, eps, lo=1e-6, hi=1e4, xtol=1e-6):
    chi, _ = _chi(_top(u0), eps)
    return sign_change_in_lambda(lambda lam: F0_majorant(lam, eps, chi), lo, hi, xtol)


# ---------------------------------------------------------------------------
# volume integrals over the gap, evaluated on the mapped grid
# ---------------------------------------------------------------------------

def _cell_power_integrals(phi, deta, power):
    """Exact integral over each eta-cell of (linear interpolant of phi)^power.

    Negative phi (maximum-principle undershoot) is clipped to zero.
    """
    a = np.clip(phi[:, :-1], 0.0, None)
    b = np.clip(phi[:, 1:], 0.0, None)
    diff = b - a
    small = np.abs(diff) < 1e-7
    safe = np.where(small, 1.0, diff)
    exact = deta * (b ** (power + 1.0) - a ** (power + 1.0)) / ((power + 1.0) * safe)
    mid = deta * (0.5 * (a + b)) ** power
    return np.where(small, mid, exact)


@dataclass
class GapIntegrals:
    """Pieces shared by the identity and inequality checks."""

    zeta_mass: float
    trace_term: float  # int zeta1 (1 + eps^2 u_x^2) gamma_m dx
    inv_gap: float  # int zeta1 / (1 + u) dx
    zeta_u: float  # int zeta1 u dx
    dz_term: float  # p int_Omega zeta1 psi^(p-1) |psi_z|^2
    dx_term: float  # p eps^2 int_Omega zeta1 psi^(p-1) |psi_x|^2
    power_term: float  # int_Omega zeta1 psi^(p+1)


def gap_integrals(u, phi, grid: MappedGrid, p, eps):
    u = _values(u)
    gamma = phi.gamma_m if isinstance(phi, PotentialField) else None
    phi_arr = phi.phi if isinstance(phi, PotentialField) else np.asarray(phi)
    h, deta = grid.base.h, grid.deta
    x, eta = grid.base.x, grid.eta
    z1 = zeta1(x)
    gap = 1.0 + u
    ux = first_derivative(u, h)
    if gamma is None:
        gamma = (3.0 * phi_arr[:, -1] - 4.0 * phi_arr[:, -2] + phi_arr[:, -3]) / (2.0 * deta) / gap

    phi_x = np.gradient(phi_arr, h, axis=0, edge_order=2)
    phi_e = np.gradient(phi_arr, deta, axis=1, edge_order=2)
    psi_x = phi_x - phi_e * eta[None, :] * (ux / gap)[:, None]
    psi_x2_cell = 0.5 * (psi_x[:, :-1] ** 2 + psi_x[:, 1:] ** 2)
    slope = np.diff(phi_arr, axis=1) / deta

    w_pm1 = _cell_power_integrals(phi_arr, deta, p - 1.0)
    w_pp1 = _cell_power_integrals(phi_arr, deta, p + 1.0)
    # psi_z = phi_eta / (1 + u); Jacobian (1 + u)
    dz_col = (slope**2 * w_pm1).sum(axis=1) / gap
    dx_col = (psi_x2_cell * w_pm1).sum(axis=1) * gap
    pw_col = w_pp1.sum(axis=1) * gap

    return GapIntegrals(
        zeta_mass=float(trapezoid(z1, h)),
        trace_term=float(trapezoid(z1 * (1.0 + eps**2 * ux**2) * gamma, h)),
        inv_gap=float(trapezoid(z1 / gap, h)),
        zeta_u=float(trapezoid(z1 * u, h)),
        dz_term=float(p * trapezoid(z1 * dz_col, h)),
        dx_term=float(p * eps**2 * trapezoid(z1 * dx_col, h)),
        power_term=float(trapezoid(z1 * pw_col, h)),
    )


@dataclass
class CheckResult:
    lhs: float
    rhs: float
    value: float  # residual for identities, margin for inequalities
    tolerance: float = 0.0
    violated: bool = False


def check_identity_p9(u, phi, grid: MappedGrid, p, eps):
    """Integration-by-parts identity linking the trace gradient to the gap.

    ``value`` is |LHS - RHS|. The constant term is weighted by the discrete
    mass of zeta1 so that the flat-plate cancellation is exact.
    """
    gi = gap_integrals(u, phi, grid, p, eps)
    c = MU1 * eps**2 / (p + 1.0)
    rhs = (
        gi.dz_term + gi.dx_term
        + c * gi.power_term
        - c / (p + 2.0) * gi.zeta_mass
        - c * gi.zeta_u
    )
    lhs = gi.trace_term
    return CheckResult(lhs=lhs, rhs=rhs, value=abs(lhs - rhs))


def check_lower_bound_p8(u, phi, grid: MappedGrid, p, rel_tol=1e-4):
    gi = gap_integrals(u, phi, grid, p, 0.0)
    lhs = 4.0 * p / (p + 1.0) ** 2 * gi.inv_gap
    rhs = gi.dz_term
    tol = rel_tol * abs(rhs)
    margin = rhs - lhs
    return CheckResult(lhs=lhs, rhs=rhs, value=margin, tolerance=tol, violated=margin < -tol)


def jensen_bound(E, p, eps):
    return 1.0 / (p * (1.0 + E)) - MU1 * eps**2 / p**2 - MU1 * eps**2 / (p + 1.0) * E


def check_jensen_bound_p10(u, phi, grid: MappedGrid, p, eps, alpha, rel_tol=1e-4):
    gi = gap_integrals(u, phi, grid, p, eps)
    E = energy(u, alpha, grid.base.x)
    lhs = gi.trace_term
    rhs = jensen_bound(E, p, eps)
    tol = rel_tol * max(abs(lhs), abs(rhs))
    margin = lhs - rhs
    return CheckResult(lhs=lhs, rhs=rhs, value=margin, tolerance=tol, violated=margin < -tol)


# ---------------------------------------------------------------------------
# trajectory-level diagnostics
# ---------------------------------------------------------------------------

TRAJECTORY_COLUMNS = (
    "t", "dt", "min_u", "max_u", "E_alpha", "dE_dt", "F_of_E", "envelope", "sobolev_proxy",
)


@dataclass
class DiagnosticsRecord:
    t: float
    dt: float
    min_u: float
    max_u: float
    E_alpha: float
    dE_dt: float
    F_of_E: float
    envelope: float
    sobolev_proxy: float
    flags: tuple = field(default_factory=tuple)

    def row(self):
        return [getattr(self, name) for name in TRAJECTORY_COLUMNS]


def dissipation_tolerance(F, h, dt, c1=1.0, c2=1.0):
    return c1 * h**2 + c2 * dt + 1e-3 * (1.0 + abs(F))


def make_record(state, prev, dt, proof: ProofParams, C0, h, sobolev):
    """Diagnostics for ``state``; ``prev`` is the previous record or None."""
    u = state.u
    x = np.linspace(-1.0, 1.0, u.size)
    E = energy(u, proof.alpha, x)
    F = proof.F(E) if E > -1.0 else float("-inf")
    env = envelope_value(C0, state.t)
    flags = []
    if prev is None:
        dE = float("nan")
    else:
        dE = (E - prev.E_alpha) / (state.t - prev.t)
        if math.isfinite(prev.F_of_E) and dE > prev.F_of_E + dissipation_tolerance(prev.F_of_E, h, dt):
            flags.append("dissipation")
    if E > env + 1e-3:
        flags.append("envelope")
    if state.min_u > -1.0 and E <= -1.0:
        flags.append("energy_floor")
    return DiagnosticsRecord(
        t=state.t, dt=dt, min_u=float(u.min()), max_u=float(u.max()), E_alpha=E,
        dE_dt=dE, F_of_E=F, envelope=env, sobolev_proxy=sobolev, flags=tuple(flags),
    )


@dataclass
class DissipationViolation:
    t1: float
    t2: float
    slope: float
    bound: float
    tolerance: float


def check_dissipation(records, proof: ProofParams, h, c1=1.0, c2=1.0):
    """Intervals where the discrete slope of E_alpha exceeds F_{p,delta}(E_alpha) + tol."""
    out = []
    for r1, r2 in zip(records[:-1], records[1:]):
        dt = r2.t - r1.t
        if not dt > 0:
            continue
        slope = (r2.E_alpha - r1.E_alpha) / dt
        if r1.E_alpha <= -1.0:
            continue
        F = proof.F(r1.E_alpha)
        tol = dissipation_tolerance(F, h, dt, c1, c2)
        if slope > F + tol:
            out.append(DissipationViolation(r1.t, r2.t, slope, F, tol))
    return out


def check_envelope(records, C0, tol=1e-3):
    """Records where E_alpha exceeds C0 exp(-mu1 t) + tol."""
    return [r.t for r in records if r.E_alpha > envelope_value(C0, r.t) + tol]


def positive_root_of_F(proof: ProofParams, xtol=1e-10):
    """Positive root of F_{p,delta}; requires F(0) < 0 and eps > 0."""
    if not proof.F(0.0) < 0:
        raise ValueError("F_{p,delta}(0) is not negative")
    hi = 1.0
    while proof.F(hi) < 0:
        hi *= 2.0
        if hi > 1e12:
            raise ValueError("F_{p,delta} has no positive root")
    return bisect(proof.F, 0.0, hi, xtol=xtol, maxiter=500)


def singularity_certificate(records, proof: ProofParams, C0, barrier_tol=1e-9):
    """Linear barrier forcing E_alpha below -1 in finite time.

    Returns a JSON-ready dict. Below the threshold the certificate is
    reported as inapplicable.
    """
    report = {
        "applicable": False,
        "lambda": proof.lam,
        "lambda_star": proof.lambda_star,
        "p": proof.p,
        "delta": proof.delta,
        "alpha": proof.alpha,
        "chi": proof.chi,
        "y_pdelta": None,
        "F_at_y": None,
        "t_pdelta": None,
        "anchor_time": None,
        "barrier_crossing_time": None,
        "observed_end_time": records[-1].t if records else None,
        "violations": [],
    }
    if not proof.lam > proof.lambda_star:
        report["reason"] = "certificate inapplicable: lambda <= lambda_star"
        return report
    root = positive_root_of_F(proof)
    y = 0.5 * root
    Fy = proof.F(y)
    t_pd = 0.0 if C0 <= y else math.log(C0 / y) / MU1
    report.update(applicable=True, y_pdelta=y, F_at_y=Fy, t_pdelta=t_pd, y_root=root)
    if not records:
        return report

    anchor = next((r for r in records if r.t >= t_pd), None)
    if anchor is None:
        report["reason"] = "trajectory ends before t_pdelta"
        return report
    report["anchor_time"] = anchor.t
    report["barrier_crossing_time"] = anchor.t + (-1.0 - anchor.E_alpha) / Fy
    violations = []
    for r in records:
        if r.t < anchor.t:
            bound = envelope_value(C0, r.t) + 1e-3
        else:
            bound = anchor.E_alpha + Fy * (r.t - anchor.t)
        if r.E_alpha > bound + barrier_tol:
            violations.append({"t": r.t, "E_alpha": r.E_alpha, "bound": bound})
    report["violations"] = violations
    return report
