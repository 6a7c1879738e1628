"""Finite-dimensional Monte Carlo of ridge-regularized random-features regression.

One trial draws feature directions and data at finite (d, n, N), fits the
penalized least-squares coefficients, and measures test error on a fresh
sample, the training objective, and the coefficient norm.  Aggregation over
trials produces means with standard errors for comparison against the
asymptotic theory.

Randomness is counter-based and fully keyed: trial ``t`` of a run with seed
``s`` draws from Philox4x64 streams keyed by the 64-bit pair
(s, 8 t + purpose), with purpose ids theta=0, x=1, noise=2, test=3, w=4.
Trials are therefore independent of execution order and thread count, and a
run with more features extends the feature rows of a smaller one drawn under
the same key (prefix nesting).
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .activations import Activation, hermite_stats


class InsufficientTrials(ValueError):
    """Aggregation needs at least two trials for a standard error."""


class IllConditionedWarning(UserWarning):
    """The linear system behind the fit had condition number above 1e12."""


class SmallTestSetWarning(UserWarning):
    """n_test below 1000 makes per-trial test errors noisy."""


_PURPOSE = {"theta": 0, "x": 1, "noise": 2, "test": 3, "w": 4}


def substream(seed: int, trial_index: int, purpose: str) -> np.random.Generator:
    """Independent generator for one (trial, purpose) slot of a seeded run."""
    key = [np.uint64(seed), np.uint64(8 * trial_index + _PURPOSE[purpose])]
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class TargetKind:
    """Regression target on the sphere of radius sqrt(d).

    linear:            f(x) = beta_norm * x_1
    linear_plus_quad:  f(x) = x_1 + (x_1^2 - 1) / 2
    linear_plus_cross: f(x) = x_1 + x_1 x_2 / sqrt(2)

    The linear component always has power beta_norm^2 (1 for the nonlinear
    targets); the quadratic additions carry dimension-dependent excess power
    given by nonlinear_power, vanishing like 1/2 as d grows.
    """

    name: str
    beta_norm: float = 1.0

    _KNOWN = ("linear", "linear_plus_quad", "linear_plus_cross")

    def __post_init__(self):
        if self.name not in self._KNOWN:
            raise ValueError(f"unknown target {self.name!r}, expected one of {self._KNOWN}")
        if self.name != "linear" and self.beta_norm != 1.0:
            raise ValueError("only the linear target takes a beta_norm")
        if not (math.isfinite(self.beta_norm) and self.beta_norm > 0.0):
            raise ValueError(f"beta_norm must be finite and positive, got {self.beta_norm}")

    @classmethod
    def linear(cls, beta_norm: float = 1.0) -> "TargetKind":
        return cls("linear", beta_norm)

    @classmethod
    def linear_plus_quad(cls) -> "TargetKind":
        return cls("linear_plus_quad")

    @classmethod
    def linear_plus_cross(cls) -> "TargetKind":
        return cls("linear_plus_cross")

    @property
    def f1_sq(self) -> float:
        return self.beta_norm * self.beta_norm

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        x1 = X[:, 0]
        if self.name == "linear":
            return self.beta_norm * x1
        if self.name == "linear_plus_quad":
            return x1 + (x1 * x1 - 1.0) / 2.0
        return x1 + x1 * X[:, 1] / math.sqrt(2.0)


def nonlinear_power(target: TargetKind, d: int) -> float:
    """Exact power of the non-linear target component at dimension d.

    Computed from the sphere moments E[x1^2] = 1, E[x1^4] = 3d/(d+2),
    E[x1^2 x2^2] = d/(d+2): the quadratic term of linear_plus_quad carries
    (d-1)/(2(d+2)) and the cross term of linear_plus_cross d/(2(d+2)).
    """
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    if target.name == "linear":
        return 0.0
    if target.name == "linear_plus_quad":
        return (d - 1.0) / (2.0 * (d + 2.0))
    return d / (2.0 * (d + 2.0))


@dataclass(frozen=True)
class SimConfig:
    """One finite-dimensional experiment: shape, penalty, activation, target, RNG seed.

    The penalty enters the objective as (N lambda / d) ||a||^2; all theory
    conversions downstream use the realized ratios N/d and n/d, never nominal
    ones.  n_test defaults to 10 n.
    """

    d: int
    n: int
    N: int
    lam: float
    activation: Activation
    target: TargetKind
    tau_sq: float = 0.0
    trials: int = 1
    seed: int = 0
    n_test: int | None = None
    model: str = "random_features"

    def __post_init__(self):
        for name in ("d", "n", "N"):
            v = getattr(self, name)
            if not (isinstance(v, (int, np.integer)) and v >= 1):
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if not (math.isfinite(self.lam) and self.lam >= 0.0):
            raise ValueError(f"lam must be finite and >= 0, got {self.lam}")
        if not (math.isfinite(self.tau_sq) and self.tau_sq >= 0.0):
            raise ValueError(f"tau_sq must be finite and >= 0, got {self.tau_sq}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.model not in ("random_features", "gaussian_covariates"):
            raise ValueError(f"unknown model {self.model!r}")
        if self.n_test is None:
            object.__setattr__(self, "n_test", 10 * self.n)
        if self.n_test < 1000:
            warnings.warn(
                f"n_test = {self.n_test} is small; per-trial test errors will be noisy",
                SmallTestSetWarning,
                stacklevel=2,
            )

    @property
    def psi1_d(self) -> float:
        return self.N / self.d

    @property
    def psi2_d(self) -> float:
        return self.n / self.d


@dataclass(frozen=True)
class FitResult:
    """Fitted coefficients with solver provenance and conditioning."""

    a_hat: np.ndarray
    solver_path: str
    cond: float


@dataclass(frozen=True)
class TrialResult:
    """Measured errors of one trial.

    train_error is the full objective value (mean squared residual plus
    penalty); penalty and coef_norm_sq are reported separately so the
    coefficient-norm asymptotics can be checked on their own.
    """

    trial_index: int
    test_error: float
    train_error: float
    penalty: float
    coef_norm_sq: float
    solver_path: str
    cond: float


@dataclass(frozen=True)
class AggregateResult:
    """Across-trial means and standard errors of the mean."""

    n_trials: int
    test_error_mean: float
    test_error_sem: float
    train_error_mean: float
    train_error_sem: float
    penalty_mean: float
    penalty_sem: float
    coef_norm_sq_mean: float
    coef_norm_sq_sem: float


def sample_sphere(d: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """count i.i.d. rows uniform on the sphere of radius sqrt(d)."""
    X = rng.standard_normal((count, d))
    norms = np.linalg.norm(X, axis=1)
    # a zero draw has probability ~0 but would poison the normalization
    while np.any(norms < 1e-12):
        bad = norms < 1e-12
        X[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(X, axis=1)
    return X * (math.sqrt(d) / norms)[:, None]


def build_design(X: np.ndarray, Theta: np.ndarray, activation: Activation) -> np.ndarray:
    """Design matrix Z = sigma(X Theta^T / sqrt(d)) / sqrt(d), shape (n, N)."""
    d = X.shape[1]
    if Theta.shape[1] != d:
        raise ValueError(f"dimension mismatch: X has d={d}, Theta has d={Theta.shape[1]}")
    return activation(X @ Theta.T / math.sqrt(d)) / math.sqrt(d)


def ridge_fit(
    Z: np.ndarray, y: np.ndarray, lam: float, psi1_d: float, psi2_d: float
) -> FitResult:
    """Minimize (1/n) ||y - sqrt(d) Z a||^2 + (N lam / d) ||a||^2.

    The normal equations are (Z^T Z + lam psi1_d psi2_d I) a = Z^T y / sqrt(d),
    solved in whichever of the primal (N x N) or dual (n x n) dimension is
    smaller.  For lam <= 1e-6 (including the exact ridgeless case lam = 0) the
    solve switches to the singular-value path: components below
    1e-10 * sigma_max are dropped and the rest shrunk by s / (s^2 + c), which
    at lam = 0 is exactly the minimum-norm pseudo-inverse solution.
    """
    n, N = Z.shape
    if y.shape != (n,):
        raise ValueError(f"y has shape {y.shape}, expected ({n},)")
    if not (math.isfinite(lam) and lam >= 0.0):
        raise ValueError(f"lam must be finite and >= 0, got {lam}")
    d = N / psi1_d
    if abs(d - n / psi2_d) > 1e-9 * max(1.0, d):
        raise ValueError(
            f"inconsistent ratios: N/psi1_d = {d} but n/psi2_d = {n / psi2_d}"
        )
    sqrt_d = math.sqrt(d)
    c = lam * psi1_d * psi2_d

    if lam <= 1e-6:
        U, s, Vt = np.linalg.svd(Z, full_matrices=False)
        cutoff = 1e-10 * s[0] if s.size else 0.0
        keep = s > cutoff
        s_kept = s[keep]
        coef = (s_kept / (s_kept * s_kept + c)) * (U[:, keep].T @ y)
        a_hat = Vt[keep].T @ coef / sqrt_d
        cond = float(s[0] / s_kept[-1]) if s_kept.size else 1.0
        path = "svd"
    elif N <= n:
        M = Z.T @ Z + c * np.eye(N)
        a_hat = np.linalg.solve(M, Z.T @ y) / sqrt_d
        ev = np.linalg.eigvalsh(M)
        cond = float(ev[-1] / ev[0])
        path = "primal"
    else:
        M = Z @ Z.T + c * np.eye(n)
        a_hat = Z.T @ np.linalg.solve(M, y) / sqrt_d
        ev = np.linalg.eigvalsh(M)
        cond = float(ev[-1] / ev[0])
        path = "dual"

    if cond > 1e12:
        warnings.warn(
            f"linear system condition number {cond:.3e} exceeds 1e12",
            IllConditionedWarning,
            stacklevel=2,
        )
    return FitResult(a_hat=a_hat, solver_path=path, cond=cond)


def _measure(config: SimConfig, fit: FitResult, y, Z, test_target, test_pred, trial_index):
    sqrt_d = math.sqrt(config.d)
    residual = y - sqrt_d * (Z @ fit.a_hat)
    coef_norm_sq = float(fit.a_hat @ fit.a_hat)
    penalty = config.N * config.lam / config.d * coef_norm_sq
    train_error = float(residual @ residual) / config.n + penalty
    test_error = float(np.mean((test_target - test_pred) ** 2))
    return TrialResult(
        trial_index=trial_index,
        test_error=test_error,
        train_error=train_error,
        penalty=penalty,
        coef_norm_sq=coef_norm_sq,
        solver_path=fit.solver_path,
        cond=fit.cond,
    )


def run_trial(config: SimConfig, trial_index: int) -> TrialResult:
    """One random-features trial: draw, fit, measure.

    Test error is measured against the noiseless target on a fresh sphere
    sample.  Noise variates are drawn even when tau_sq = 0 (then scaled away)
    so that configurations differing only in noise level share all other
    randomness.
    """
    d, n, N = config.d, config.n, config.N
    sqrt_d = math.sqrt(d)
    Theta = sample_sphere(d, N, substream(config.seed, trial_index, "theta"))
    X = sample_sphere(d, n, substream(config.seed, trial_index, "x"))
    noise = substream(config.seed, trial_index, "noise").standard_normal(n)
    y = config.target.evaluate(X) + math.sqrt(config.tau_sq) * noise
    Z = build_design(X, Theta, config.activation)
    fit = ridge_fit(Z, y, config.lam, N / d, n / d)

    X_test = sample_sphere(d, config.n_test, substream(config.seed, trial_index, "test"))
    test_pred = config.activation(X_test @ Theta.T / sqrt_d) @ fit.a_hat
    return _measure(
        config, fit, y, Z, config.target.evaluate(X_test), test_pred, trial_index
    )


def run_gaussian_covariates_trial(config: SimConfig, trial_index: int) -> TrialResult:
    """One trial of the matched Gaussian-covariates surrogate.

    Covariates are u = mu0 + mu1 Theta x / sqrt(d) + mu_star w with Gaussian x
    and w, keeping only the activation's moment profile; the target must be
    linear.  The ridge objective and measurements coincide with the
    random-features ones under Z = U / sqrt(d).  The training noise matrix is
    drawn from the "w" stream first, the test noise matrix second; test inputs
    come from the "test" stream.
    """
    if config.target.name != "linear":
        raise ValueError("the gaussian covariates surrogate is defined for the linear target only")
    stats = hermite_stats(config.activation)  # raises DegenerateActivation if mu_star = 0
    d, n, N = config.d, config.n, config.N
    sqrt_d = math.sqrt(d)
    Theta = sample_sphere(d, N, substream(config.seed, trial_index, "theta"))
    rng_w = substream(config.seed, trial_index, "w")
    X = substream(config.seed, trial_index, "x").standard_normal((n, d))
    W = rng_w.standard_normal((n, N))
    U = stats.mu0 + stats.mu1 * (X @ Theta.T) / sqrt_d + stats.mu_star * W
    noise = substream(config.seed, trial_index, "noise").standard_normal(n)
    y = config.target.beta_norm * X[:, 0] + math.sqrt(config.tau_sq) * noise
    Z = U / sqrt_d
    fit = ridge_fit(Z, y, config.lam, N / d, n / d)

    X_test = substream(config.seed, trial_index, "test").standard_normal((config.n_test, d))
    W_test = rng_w.standard_normal((config.n_test, N))
    U_test = stats.mu0 + stats.mu1 * (X_test @ Theta.T) / sqrt_d + stats.mu_star * W_test
    return _measure(
        config,
        fit,
        y,
        Z,
        config.target.beta_norm * X_test[:, 0],
        U_test @ fit.a_hat,
        trial_index,
    )


def run_trials(config: SimConfig, threads: int | None = None) -> list[TrialResult]:
    """All trials of a config, in trial order, optionally thread-parallel.

    Per-trial randomness is keyed, not sequential, so the result is identical
    for any thread count.
    """
    fn = (
        run_gaussian_covariates_trial
        if config.model == "gaussian_covariates"
        else run_trial
    )
    indices = range(config.trials)
    if threads is None or threads <= 1 or config.trials == 1:
        return [fn(config, t) for t in indices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda t: fn(config, t), indices))


def _mean_sem(values: np.ndarray) -> tuple[float, float]:
    m = float(np.mean(values))
    sem = float(np.std(values, ddof=1) / math.sqrt(len(values)))
    return m, sem


def aggregate(results: Sequence[TrialResult]) -> AggregateResult:
    """Means and standard errors across at least two trials."""
    if len(results) < 2:
        raise InsufficientTrials(
            f"need at least 2 trials for a standard error, got {len(results)}"
        )
    test = np.array([r.test_error for r in results])
    train = np.array([r.train_error for r in results])
    pen = np.array([r.penalty for r in results])
    norm = np.array([r.coef_norm_sq for r in results])
    te = _mean_sem(test)
    tr = _mean_sem(train)
    pe = _mean_sem(pen)
    no = _mean_sem(norm)
    return AggregateResult(
        n_trials=len(results),
        test_error_mean=te[0],
        test_error_sem=te[1],
        train_error_mean=tr[0],
        train_error_sem=tr[1],
        penalty_mean=pe[0],
        penalty_sem=pe[1],
        coef_norm_sq_mean=no[0],
        coef_norm_sq_sem=no[1],
    )
