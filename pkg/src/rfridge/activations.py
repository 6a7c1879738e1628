"""Gaussian moment statistics of pointwise activation functions.

Everything downstream of the data model is controlled by three moments of the
activation sigma against a standard normal G:

    mu0 = E[sigma(G)],  mu1 = E[G sigma(G)],  mu_star_sq = E[sigma(G)^2] - mu0^2 - mu1^2,

i.e. the constant and linear Hermite coefficients and the residual nonlinear
power.  Built-in activations use closed forms; custom activations are handled
by quadrature with a doubling certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


class DegenerateActivation(ValueError):
    """The activation has no usable linear or nonlinear component."""


class QuadratureFailure(ArithmeticError):
    """Doubling the quadrature order moved a moment by more than the certificate allows."""


_SQRT_2PI = math.sqrt(2.0 * math.pi)

# Integration window for the piecewise rule: the normal density at |u| = 13 is
# ~1e-37, below every tolerance in play for polynomially bounded activations.
_TRUNCATION = 13.0


def _normal_pdf(u: float) -> float:
    return math.exp(-0.5 * u * u) / _SQRT_2PI


def _normal_cdf(u: float) -> float:
    return 0.5 * (1.0 + math.erf(u / math.sqrt(2.0)))


@dataclass(frozen=True)
class Activation:
    """A pointwise activation, constructed through one of the factory methods.

    ``breakpoints`` lists locations where the function has a kink; the
    quadrature engine integrates piecewise between them instead of pushing a
    non-smooth integrand through a global Gauss-Hermite rule.  ``stats`` lets a
    custom activation supply closed-form moments (mu0, mu1, mu_star_sq) and
    skip quadrature entirely.
    """

    kind: str
    shift: float = 0.0
    evaluator: Callable[[np.ndarray], np.ndarray] | None = None
    stats: tuple[float, float, float] | None = None
    breakpoints: tuple[float, ...] = ()

    @classmethod
    def relu(cls) -> "Activation":
        return cls(kind="relu", breakpoints=(0.0,))

    @classmethod
    def identity(cls) -> "Activation":
        return cls(kind="identity")

    @classmethod
    def shifted_relu(cls, c: float) -> "Activation":
        """sigma(u) = max(u - c, 0), with its kink at u = c."""
        return cls(kind="shifted_relu", shift=float(c), breakpoints=(float(c),))

    @classmethod
    def custom(
        cls,
        evaluator: Callable[[np.ndarray], np.ndarray],
        breakpoints: Sequence[float] = (),
        stats: tuple[float, float, float] | None = None,
    ) -> "Activation":
        return cls(
            kind="custom",
            evaluator=evaluator,
            stats=None if stats is None else tuple(float(s) for s in stats),
            breakpoints=tuple(float(b) for b in breakpoints),
        )

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "relu":
            return np.maximum(x, 0.0)
        if self.kind == "identity":
            return x
        if self.kind == "shifted_relu":
            return np.maximum(x - self.shift, 0.0)
        assert self.evaluator is not None, "custom activation without evaluator"
        try:
            out = np.asarray(self.evaluator(x), dtype=float)
        except (TypeError, ValueError):
            out = None
        if out is None or out.shape != x.shape:
            # evaluator is scalar-only; fall back to a pointwise loop
            out = np.vectorize(self.evaluator, otypes=[float])(x)
        return out

    def label(self) -> str:
        if self.kind == "shifted_relu":
            return f"shifted_relu:{self.shift:g}"
        return self.kind


@dataclass(frozen=True)
class HermiteStats:
    """First two Hermite coefficients and the nonlinear residual of an activation.

    zeta = mu1 / mu_star is the linear-to-nonlinear amplitude ratio; the
    asymptotic formulas consume zeta_sq.  ``quadrature_gap`` records the
    doubling-certificate disagreement when the moments came from quadrature
    (None for closed forms).
    """

    mu0: float
    mu1: float
    mu_star_sq: float
    zeta: float
    zeta_sq: float
    quadrature_gap: float | None = None

    @property
    def mu_star(self) -> float:
        return math.sqrt(self.mu_star_sq)


def gauss_hermite_expectation(
    fn: Callable[[np.ndarray], np.ndarray],
    order: int = 64,
    breakpoints: Sequence[float] = (),
) -> float:
    """E[fn(G)] for standard normal G, by order-``order`` quadrature.

    Without breakpoints this is the plain Gauss-Hermite rule, which is
    spectrally accurate for smooth fn but converges slowly across kinks.  When
    breakpoints are supplied the expectation is assembled piecewise: between
    consecutive kinks (and the truncation edges at |u| = 13) an order-``order``
    Gauss-Legendre rule integrates fn(u) * pdf(u), restoring spectral accuracy
    for piecewise-smooth fn.
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    cuts = sorted(b for b in breakpoints if -_TRUNCATION < b < _TRUNCATION)
    if not cuts:
        nodes, weights = np.polynomial.hermite.hermgauss(order)
        vals = np.asarray(fn(nodes * math.sqrt(2.0)), dtype=float)
        return float(weights @ vals / math.sqrt(math.pi))
    edges = [-_TRUNCATION] + cuts + [_TRUNCATION]
    t, w = np.polynomial.legendre.leggauss(order)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a <= 0.0:
            continue
        u = 0.5 * (b - a) * t + 0.5 * (b + a)
        pdf = np.exp(-0.5 * u * u) / _SQRT_2PI
        vals = np.asarray(fn(u), dtype=float)
        total += 0.5 * (b - a) * float(w @ (vals * pdf))
    return total


def _raw_moments(activation: Activation, order: int) -> tuple[float, float, float]:
    bp = activation.breakpoints
    m0 = gauss_hermite_expectation(activation, order, bp)
    m1 = gauss_hermite_expectation(lambda u: u * activation(u), order, bp)
    m2 = gauss_hermite_expectation(lambda u: activation(u) ** 2, order, bp)
    return m0, m1, m2


def hermite_stats(activation: Activation, order: int = 64) -> HermiteStats:
    """Compute (mu0, mu1, mu_star_sq, zeta) for an activation.

    Built-ins use closed forms.  Custom activations are integrated at
    ``order`` and certified by recomputing at 2*order: any moment moving by
    more than 1e-8 raises QuadratureFailure.  Raises DegenerateActivation when
    |mu1| or mu_star_sq falls below 1e-10; the asymptotic theory needs both a
    linear and a nonlinear component.
    """
    gap: float | None = None
    if activation.kind == "relu":
        mu0 = 1.0 / _SQRT_2PI
        mu1 = 0.5
        second = 0.5
    elif activation.kind == "identity":
        mu0, mu1, second = 0.0, 1.0, 1.0
    elif activation.kind == "shifted_relu":
        c = activation.shift
        mu0 = _normal_pdf(c) - c * _normal_cdf(-c)
        mu1 = _normal_cdf(-c)
        second = (1.0 + c * c) * _normal_cdf(-c) - c * _normal_pdf(c)
    elif activation.stats is not None:
        mu0, mu1, mu_star_sq = activation.stats
        return _finalize(mu0, mu1, mu_star_sq, gap)
    else:
        lo = _raw_moments(activation, order)
        hi = _raw_moments(activation, 2 * order)
        gap = max(abs(a - b) for a, b in zip(lo, hi))
        if gap > 1e-8:
            raise QuadratureFailure(
                f"moments moved by {gap:.3e} when doubling order {order}; "
                "supply breakpoints or closed-form stats for this activation"
            )
        mu0, mu1, second = lo
    return _finalize(mu0, mu1, second - mu0 * mu0 - mu1 * mu1, gap)


def _finalize(mu0: float, mu1: float, mu_star_sq: float, gap: float | None) -> HermiteStats:
    if abs(mu1) < 1e-10:
        raise DegenerateActivation(
            f"activation has no linear component (mu1 = {mu1:.3e})"
        )
    if mu_star_sq < 1e-10:
        raise DegenerateActivation(
            f"activation has no nonlinear component (mu_star_sq = {mu_star_sq:.3e})"
        )
    zeta = mu1 / math.sqrt(mu_star_sq)
    return HermiteStats(
        mu0=mu0,
        mu1=mu1,
        mu_star_sq=mu_star_sq,
        zeta=zeta,
        zeta_sq=zeta * zeta,
        quadrature_gap=gap,
    )
