"""Coupled self-consistent equations behind the asymptotic risk formulas.

The pair (nu1, nu2) solves, at a spectral argument xi in the upper half plane,

    nu1 = psi1 * (-xi - nu2 - zeta^2 nu2 / (1 - zeta^2 nu1 nu2))^-1
    nu2 = psi2 * (-xi - nu1 - zeta^2 nu1 / (1 - zeta^2 nu1 nu2))^-1

and every asymptotic quantity in this package is a rational function of the
product chi = nu1 * nu2 evaluated at xi = i sqrt(psi1 psi2 lambda_bar).  Two
independent routes to chi live here: a damped fixed-point / Newton homotopy in
(nu1, nu2), and a scalar quartic whose admissible root is tracked by
continuity from large |xi|.  Callers cross-check one against the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class SingularDenominator(ArithmeticError):
    """The map was evaluated where 1 - zeta^2 nu1 nu2 vanishes."""


class NoConvergence(RuntimeError):
    """The iteration stalled at some point of the continuation path."""

    def __init__(self, message: str, xi: complex):
        super().__init__(f"{message} (xi = {xi})")
        self.xi = xi


class InvariantViolation(RuntimeError):
    """A solution invariant (half-plane membership, norm bound, realness) failed."""


class RootSelectionAmbiguous(RuntimeError):
    """Continuity tracking could not single out an admissible quartic root."""


class InconsistentChi(RuntimeError):
    """The reconstructed pair does not multiply back to the supplied chi."""


@dataclass(frozen=True)
class SpectralParams:
    """Shape ratios and activation amplitude ratio defining one model family.

    psi1 = features per dimension, psi2 = samples per dimension,
    zeta_sq = (linear amplitude / nonlinear amplitude)^2 of the activation.
    """

    zeta_sq: float
    psi1: float
    psi2: float

    def __post_init__(self):
        for name in ("zeta_sq", "psi1", "psi2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError(f"{name} must be finite and positive, got {v}")

    @property
    def zeta(self) -> float:
        return math.sqrt(self.zeta_sq)

    def swapped(self) -> "SpectralParams":
        return SpectralParams(self.zeta_sq, self.psi2, self.psi1)


@dataclass(frozen=True)
class SolverConfig:
    """Tunables for the homotopy solver.

    path_start_height of None means "pick per parameters": the iteration is a
    strong contraction once the start satisfies
    max(100, 10 (psi1+psi2) max(1, zeta)), and the first path node doubles as
    an empirical contraction check by being required to converge within
    ``first_step_cap`` damped iterations.
    """

    tol: float = 1e-12
    damping: float = 0.5
    max_iter: int = 2000
    path_steps: int = 64
    path_start_height: float | None = None
    newton_fallback: bool = True
    first_step_cap: int = 200

    def __post_init__(self):
        if not (0.0 < self.damping <= 1.0):
            raise ValueError(f"damping must lie in (0, 1], got {self.damping}")
        if self.tol <= 0.0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.path_steps < 2:
            raise ValueError(f"path_steps must be >= 2, got {self.path_steps}")

    def start_height(self, params: SpectralParams) -> float:
        if self.path_start_height is not None:
            floor = 10.0 * max(params.psi1, params.psi2, 1.0)
            if self.path_start_height < floor:
                raise ValueError(
                    f"path_start_height {self.path_start_height} is below the "
                    f"contraction floor {floor} for these parameters"
                )
            return self.path_start_height
        return max(100.0, 10.0 * (params.psi1 + params.psi2) * max(1.0, params.zeta))


@dataclass(frozen=True)
class SpectralPoint:
    """A converged solution at one xi, with chi = nu1 * nu2 and the map residual."""

    xi: complex
    nu1: complex
    nu2: complex
    chi: complex
    residual: float


def fixed_point_map(
    nu1: complex, nu2: complex, xi: complex, params: SpectralParams
) -> tuple[complex, complex]:
    """One application of the self-consistency map at xi."""
    z = params.zeta_sq
    den = 1.0 - z * nu1 * nu2
    if abs(den) < 1e-14:
        raise SingularDenominator(
            f"1 - zeta_sq nu1 nu2 = {den} at nu1={nu1}, nu2={nu2}"
        )
    f1 = params.psi1 / (-xi - nu2 - z * nu2 / den)
    f2 = params.psi2 / (-xi - nu1 - z * nu1 / den)
    return f1, f2


def _residual(nu1, nu2, xi, params) -> tuple[float, complex, complex]:
    f1, f2 = fixed_point_map(nu1, nu2, xi, params)
    return max(abs(f1 - nu1), abs(f2 - nu2)), f1, f2


def _newton_refine(nu1, nu2, xi, params, tol, max_steps=60):
    """Damped Newton on G(nu) = F(nu) - nu, rejecting steps that leave the half plane."""
    z = params.zeta_sq
    res, f1, f2 = _residual(nu1, nu2, xi, params)
    for _ in range(max_steps):
        if res <= tol:
            break
        den = 1.0 - z * nu1 * nu2
        d1 = -xi - nu2 - z * nu2 / den
        d2 = -xi - nu1 - z * nu1 / den
        # dF1/dnu1 etc. by the chain rule through the shared denominator
        dd1_d1 = -z * z * nu2 * nu2 / (den * den)
        dd1_d2 = -1.0 - z / (den * den)
        dd2_d2 = -z * z * nu1 * nu1 / (den * den)
        dd2_d1 = -1.0 - z / (den * den)
        j11 = -params.psi1 / (d1 * d1) * dd1_d1 - 1.0
        j12 = -params.psi1 / (d1 * d1) * dd1_d2
        j21 = -params.psi2 / (d2 * d2) * dd2_d1
        j22 = -params.psi2 / (d2 * d2) * dd2_d2 - 1.0
        det = j11 * j22 - j12 * j21
        if abs(det) < 1e-300:
            break
        g1, g2 = f1 - nu1, f2 - nu2
        s1 = -(j22 * g1 - j12 * g2) / det
        s2 = -(-j21 * g1 + j11 * g2) / det
        step = 1.0
        for _ in range(25):
            c1, c2 = nu1 + step * s1, nu2 + step * s2
            if c1.imag > 0.0 and c2.imag > 0.0:
                try:
                    cres, cf1, cf2 = _residual(c1, c2, xi, params)
                except SingularDenominator:
                    step *= 0.5
                    continue
                if cres < res:
                    nu1, nu2, res, f1, f2 = c1, c2, cres, cf1, cf2
                    break
            step *= 0.5
        else:
            break
    return nu1, nu2, res


def _iterate_node(nu1, nu2, xi, params, config, cap, tol, allow_newton):
    """Damped iteration at a single path node, optionally finishing with Newton."""
    gamma = config.damping
    res, f1, f2 = _residual(nu1, nu2, xi, params)
    for _ in range(cap):
        if res <= tol:
            return nu1, nu2, res
        nu1 = (1.0 - gamma) * nu1 + gamma * f1
        nu2 = (1.0 - gamma) * nu2 + gamma * f2
        if nu1.imag <= 0.0 or nu2.imag <= 0.0:
            raise InvariantViolation(
                f"iterate left the upper half plane at xi = {xi}"
            )
        res, f1, f2 = _residual(nu1, nu2, xi, params)
    if allow_newton and config.newton_fallback:
        nu1, nu2, res = _newton_refine(nu1, nu2, xi, params, tol)
        if res <= tol:
            return nu1, nu2, res
    raise NoConvergence(f"residual {res:.3e} after {cap} damped iterations", xi)


def _solve_path(xi_target, params, config, path_steps):
    h0 = config.start_height(params)
    xi0 = complex(0.0, h0)
    nu1 = -params.psi1 / xi0
    nu2 = -params.psi2 / xi0
    # geometric approach to the target, then one exact final node
    offsets = np.geomspace(1.0, 1e-6, path_steps)
    nodes = [xi_target + (xi0 - xi_target) * s for s in offsets] + [xi_target]
    for k, xi in enumerate(nodes):
        last = k == len(nodes) - 1
        if k == 0:
            # contraction check: the start height must make this converge fast
            cap, tol, newton = config.first_step_cap, max(config.tol, 1e-10), False
        elif last:
            cap, tol, newton = config.max_iter, config.tol, True
        else:
            cap, tol, newton = config.max_iter, max(config.tol, 1e-10), True
        nu1, nu2, res = _iterate_node(nu1, nu2, xi, params, config, cap, tol, newton)
    return nu1, nu2, res


def solve_at(
    xi: complex, params: SpectralParams, config: SolverConfig | None = None
) -> SpectralPoint:
    """Solve the coupled equations at xi (Im xi > 0) by homotopy from high on the axis.

    Starts at xi0 = i * start_height where the damped map is a strong
    contraction, then warm-starts down a geometric path to the target,
    finishing each node with Newton if damping stalls.  The path is retried
    with doubled resolution if an iterate ever leaves the upper half plane.
    """
    if config is None:
        config = SolverConfig()
    if not (xi.imag > 0.0):
        raise ValueError(f"xi must have positive imaginary part, got {xi}")
    steps = config.path_steps
    last_err: InvariantViolation | None = None
    for _ in range(4):
        try:
            nu1, nu2, res = _solve_path(xi, params, config, steps)
            break
        except InvariantViolation as err:
            last_err, steps = err, steps * 2
    else:
        raise last_err
    if nu1.imag <= 0.0 or nu2.imag <= 0.0:
        raise InvariantViolation(f"solution left the upper half plane at xi = {xi}")
    # relative slack for rounding plus absolute slack at the residual scale,
    # which dominates when |nu| ~ psi / Im(xi) is itself tiny
    bound_slack = 1.0 + 1e-9
    margin = 100.0 * config.tol
    if (
        abs(nu1) > bound_slack * params.psi1 / xi.imag + margin
        or abs(nu2) > bound_slack * params.psi2 / xi.imag + margin
    ):
        raise InvariantViolation(
            f"|nu| exceeds psi / Im(xi) at xi = {xi}: |nu1|={abs(nu1)}, |nu2|={abs(nu2)}"
        )
    chi = nu1 * nu2
    if xi.real == 0.0:
        # on the imaginary axis the solution is purely imaginary and chi <= 0
        axis_tol = max(1e-10, 100.0 * config.tol)
        if (
            abs(nu1.real) > axis_tol * (1.0 + abs(nu1))
            or abs(nu2.real) > axis_tol * (1.0 + abs(nu2))
            or abs(chi.imag) > axis_tol * (1.0 + abs(chi))
            or chi.real > axis_tol
        ):
            raise InvariantViolation(
                f"imaginary-axis structure lost at xi = {xi}: nu1={nu1}, nu2={nu2}"
            )
    return SpectralPoint(xi=xi, nu1=nu1, nu2=nu2, chi=chi, residual=res)


# ---------------------------------------------------------------------------
# scalar quartic oracle
# ---------------------------------------------------------------------------

def _quartic_coeffs(zeta_sq: float, psi1: float, psi2: float, u_sq: float) -> np.ndarray:
    """Coefficients (degree 4 down to 0) of the polynomial chi must satisfy.

    Eliminating nu1 and nu2 from the coupled equations at xi = i u leaves
    P1(chi) P2(chi) + u^2 chi (1 - zeta^2 chi)^2 = 0 with
    P_k(chi) = zeta^2 chi^2 + (zeta^2 psi_k - zeta^2 - 1) chi - psi_k.
    """
    z = zeta_sq
    b1 = z * psi1 - z - 1.0
    b2 = z * psi2 - z - 1.0
    return np.array(
        [
            z * z,
            z * (b1 + b2) + u_sq * z * z,
            b1 * b2 - z * (psi1 + psi2) - 2.0 * u_sq * z,
            -b1 * psi2 - b2 * psi1 + u_sq,
            psi1 * psi2,
        ]
    )


def chi_scalar_oracle(
    params: SpectralParams, lambda_bar: float, steps: int = 192
) -> float:
    """chi at xi = i sqrt(psi1 psi2 lambda_bar), via the quartic it satisfies.

    All four roots are computed (companion matrix) along a geometric path in u
    from far above the spectrum down to the target, and the admissible root is
    followed by nearest-neighbor continuity from its large-u asymptote
    chi ~ -psi1 psi2 / u^2.  The quartic can have several real negative roots
    at the target, so the filter alone does not identify the answer; tracking
    does.  Raises RootSelectionAmbiguous when the tracked root fails the
    real / non-positive filter or a competitor root sits within the tracking
    resolution.
    """
    if not (math.isfinite(lambda_bar) and lambda_bar > 0.0):
        raise ValueError(f"lambda_bar must be finite and positive, got {lambda_bar}")
    z, p1, p2 = params.zeta_sq, params.psi1, params.psi2
    u_target = math.sqrt(p1 * p2 * lambda_bar)
    u_start = max(100.0, 10.0 * u_target, 10.0 * (p1 + p2) * max(1.0, params.zeta))
    chi = complex(-p1 * p2 / (u_start * u_start), 0.0)
    ratio = u_target / u_start
    displacement = 0.0
    roots = None
    for k in range(1, steps + 1):
        u = u_start * ratio ** (k / steps)
        roots = np.roots(_quartic_coeffs(z, p1, p2, u * u))
        nearest = roots[np.argmin(np.abs(roots - chi))]
        displacement = abs(nearest - chi)
        chi = nearest
    assert roots is not None
    if abs(chi.imag) > 1e-9:
        raise RootSelectionAmbiguous(
            f"tracked root left the real axis: chi = {chi} at lambda_bar = {lambda_bar}"
        )
    if chi.real > 1e-12:
        raise RootSelectionAmbiguous(
            f"tracked root is positive: chi = {chi} at lambda_bar = {lambda_bar}"
        )
    # another admissible root within the tracking resolution cannot be told apart
    resolution = 10.0 * displacement + 1e-13 * (1.0 + abs(chi))
    for r in roots:
        if abs(r - chi) < 1e-16:
            continue
        if abs(r.imag) <= 1e-9 and r.real <= 1e-12 and abs(r - chi) < resolution:
            raise RootSelectionAmbiguous(
                f"roots {chi} and {r} both admissible within tracking resolution "
                f"{resolution:.3e}; raise steps above {steps}"
            )
    return float(chi.real)


def nu_from_chi(
    chi: float, params: SpectralParams, lambda_bar: float
) -> tuple[complex, complex]:
    """Reconstruct (nu1, nu2) at xi = i sqrt(psi1 psi2 lambda_bar) from chi.

    Inverts the sum / product structure of the coupled equations:
    nu_k = (-zeta^2 chi / (1 - zeta^2 chi) - chi - psi_k) / (i u).  The product
    of the reconstructed pair must reproduce chi; that only happens when chi
    actually solves the quartic, so the check guards against a wrong branch.
    """
    if not (math.isfinite(lambda_bar) and lambda_bar > 0.0):
        raise ValueError(f"lambda_bar must be finite and positive, got {lambda_bar}")
    if chi > 0.0:
        raise ValueError(f"chi must be <= 0, got {chi}")
    z = params.zeta_sq
    if 1.0 - z * chi <= 0.0:
        raise ValueError(f"1 - zeta_sq chi must be positive, got {1.0 - z * chi}")
    u = math.sqrt(params.psi1 * params.psi2 * lambda_bar)
    s = -z * chi / (1.0 - z * chi) - chi
    nu1 = (s - params.psi1) / complex(0.0, u)
    nu2 = (s - params.psi2) / complex(0.0, u)
    if abs(nu1 * nu2 - chi) > 1e-8 * max(1.0, abs(chi)):
        raise InconsistentChi(
            f"nu1 nu2 = {nu1 * nu2} differs from chi = {chi}; "
            "chi does not solve the self-consistent equations at this lambda_bar"
        )
    if nu1.imag <= 0.0 or nu2.imag <= 0.0:
        raise InconsistentChi(
            f"reconstructed pair leaves the upper half plane: nu1={nu1}, nu2={nu2}"
        )
    return nu1, nu2
