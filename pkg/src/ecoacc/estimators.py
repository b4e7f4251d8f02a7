"""Recursive least-squares estimation with forgetting factor, normalization,
parameter projection and covariance bounding.

Three instances run online: the longitudinal-dynamics model (5 parameters),
the fuel-rate model (4) and the SOC-rate model (3). Convergence is judged
on prediction error, never on the parameters themselves — with limited
excitation the estimates need not reach their physical values as long as
the predicted output matches the measured one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .setalg import GRAVITY, IntervalBox


@dataclass
class BetaSchedule:
    """Forgetting factor decaying from an aggressive initial value to a
    steady tracking value."""

    initial: float = 0.5
    final: float = 0.05
    time_constant: float = 30.0

    def at(self, t: float) -> float:
        return self.final + (self.initial - self.final) * np.exp(-t / self.time_constant)


class RegressorFilter:
    """Bank of first-order lowpass channels 1/(s + lambda), discretized exactly.

    The extra output channel realizes s/(s + lambda) applied to a signal z
    as z - lambda * lowpass(z), which gives a filtered derivative without
    differentiating measurements.
    """

    def __init__(self, n_channels: int, lam: float):
        if lam <= 0:
            raise ValueError("filter constant must be positive")
        self.lam = lam
        self.state = np.zeros(n_channels)

    def update(self, raw, dt: float) -> np.ndarray:
        raw = np.asarray(raw, dtype=float)
        if not np.all(np.isfinite(raw)):
            raise ValueError("non-finite filter input")
        if dt <= 0:
            raise ValueError("dt must be positive")
        decay = np.exp(-self.lam * dt)
        self.state = decay * self.state + (1.0 - decay) * raw / self.lam
        return self.state.copy()


@dataclass
class RlsConfig:
    theta0: np.ndarray
    theta_bounds: IntervalBox
    p0: float = 100.0
    r0: float = 1e6
    alpha_norm: float = 1.0
    beta: BetaSchedule = field(default_factory=BetaSchedule)


class RlsEstimator:
    """Continuous-time least-squares update law integrated at the estimator
    period, with projection onto box parameter bounds and a covariance cap."""

    def __init__(self, cfg: RlsConfig):
        self.cfg = cfg
        self.theta = np.asarray(cfg.theta0, dtype=float).copy()
        n = self.theta.size
        if cfg.theta_bounds.dim != n:
            raise ValueError("parameter bounds dimension mismatch")
        self.theta = np.clip(self.theta, cfg.theta_bounds.lower, cfg.theta_bounds.upper)
        self.p = cfg.p0 * np.eye(n)
        self.t = 0.0
        self.resets = 0
        self._bound_tol = 1e-9

    def predict(self, phi) -> float:
        return float(self.theta @ np.asarray(phi, dtype=float))

    def _project_theta_dot(self, theta_dot_raw, eps, phi):
        """Subtract the outward component on every active box face."""
        lo = self.cfg.theta_bounds.lower
        hi = self.cfg.theta_bounds.upper
        span = np.maximum(hi - lo, 1.0)
        if np.all((self.theta > lo + self._bound_tol * span)
                  & (self.theta < hi - self._bound_tol * span)):
            return theta_dot_raw, False  # strictly interior: no active face
        theta_dot = theta_dot_raw.copy()
        outward = False
        for j in range(self.theta.size):
            at_hi = self.theta[j] >= hi[j] - self._bound_tol * span[j]
            at_lo = self.theta[j] <= lo[j] + self._bound_tol * span[j]
            if not (at_hi or at_lo):
                continue
            grad = np.zeros_like(theta_dot)
            grad[j] = 1.0 if at_hi else -1.0
            if theta_dot @ grad <= 0:
                continue  # boundary but moving inward: leave untouched
            outward = True
            denom = grad @ self.p @ grad
            if denom <= 0:
                theta_dot[j] = 0.0
                continue
            correction = self.p @ np.outer(grad, grad) @ self.p @ (eps * phi) / denom
            theta_dot = theta_dot - correction
        return theta_dot, outward

    def step(self, phi, z: float, dt: float) -> float:
        """One update from a regressor/output pair; returns the normalized
        prediction error used in the update."""
        phi = np.asarray(phi, dtype=float)
        if not (np.all(np.isfinite(phi)) and np.isfinite(z)):
            raise ValueError("non-finite estimator input")
        if dt <= 0:
            raise ValueError("dt must be positive")
        cfg = self.cfg
        beta = cfg.beta.at(self.t)
        m2 = 1.0 + cfg.alpha_norm * float(phi @ phi)
        eps = (z - float(self.theta @ phi)) / m2
        theta_dot_raw = self.p @ (eps * phi)
        theta_dot, outward = self._project_theta_dot(theta_dot_raw, eps, phi)

        p_phi = self.p @ phi
        p_new = self.p + dt * (beta * self.p - np.outer(p_phi, p_phi) / m2)
        p_new = 0.5 * (p_new + p_new.T)
        # Frobenius norm bounds the spectral norm from above, so capping it
        # keeps the covariance-bound invariant while staying cheap per step
        freeze = outward or float(np.sqrt(np.sum(p_new * p_new))) > cfg.r0
        if not freeze:
            try:
                np.linalg.cholesky(p_new + 1e-15 * np.eye(self.theta.size))
            except np.linalg.LinAlgError:
                # covariance lost definiteness: standard hygiene is to restart it
                p_new = cfg.p0 * np.eye(self.theta.size)
                self.resets += 1
            self.p = p_new

        self.theta = self.theta + dt * theta_dot
        self.theta = np.clip(self.theta, cfg.theta_bounds.lower, cfg.theta_bounds.upper)
        self.t += dt
        return eps

    @property
    def covariance_norm(self) -> float:
        return float(np.linalg.norm(self.p, 2))


def predict_longitudinal(theta, t_com: float, v_h: float, phi_r: float) -> float:
    """Host acceleration from the 5-parameter reduced model."""
    th = np.asarray(theta, dtype=float)
    return float(th[0] * t_com - th[1] * v_h ** 2 - th[2] * v_h - th[3] * phi_r - th[4])


def longitudinal_regressor(t_com: float, v_h: float, phi_r: float) -> np.ndarray:
    """Regressor vector matching predict_longitudinal's sign convention."""
    return np.array([t_com, -v_h ** 2, -v_h, -phi_r, -1.0])


def predict_fuel(a_coeffs, p_e: float, v_h: float) -> float:
    """Fuel rate from the 4-parameter polynomial (unclamped)."""
    a = np.asarray(a_coeffs, dtype=float)
    return float(a[0] + a[1] * p_e + a[2] * p_e ** 2 + a[3] * v_h)


def fuel_regressor(p_e: float, v_h: float) -> np.ndarray:
    return np.array([1.0, p_e, p_e ** 2, v_h])


def predict_soc(g_coeffs, p_m: float) -> float:
    """SOC rate from the 3-parameter polynomial."""
    g = np.asarray(g_coeffs, dtype=float)
    return float(g[0] + g[1] * p_m + g[2] * p_m ** 2)


def soc_regressor(p_m: float) -> np.ndarray:
    return np.array([1.0, p_m, p_m ** 2])


def theta_from_params(params, wind: float = 0.0) -> np.ndarray:
    """Map physical plant parameters to the reduced 5-parameter vector.

    The torque channel is the measured wheel torque, so the drive gain is
    1/(r_w m) scaled by the gear/efficiency path of the command chain.
    """
    k_aero = params.rho_a * params.frontal_area * params.c_d
    return np.array([
        params.r_g * params.eta_p / (params.r_w * params.m),
        k_aero / (2.0 * params.m),
        k_aero * wind / params.m + GRAVITY * params.mu_rv,
        GRAVITY,
        k_aero * wind ** 2 / (2.0 * params.m) + GRAVITY * params.mu_r0,
    ])


class LongitudinalEstimator:
    """RLS on the reduced longitudinal model with filtered regressors.

    Regressors pass through 1/(s + lambda); the output channel is the
    filtered speed derivative s/(s + lambda) v_h.
    """

    def __init__(self, cfg: RlsConfig, lam: float = 1.0):
        self.rls = RlsEstimator(cfg)
        self.lam = lam
        self._phi_filter = RegressorFilter(5, lam)
        self._v_filter = RegressorFilter(1, lam)
        self.last_eps = 0.0

    def observe(self, t_w: float, v_h: float, phi_r: float, dt: float) -> float:
        phi = self._phi_filter.update(longitudinal_regressor(t_w, v_h, phi_r), dt)
        v_f = self._v_filter.update([v_h], dt)[0]
        z = v_h - self.lam * v_f
        self.last_eps = self.rls.step(phi, z, dt)
        return self.last_eps

    def predict_accel(self, t_com: float, v_h: float, phi_r: float) -> float:
        return predict_longitudinal(self.rls.theta, t_com, v_h, phi_r)

    @property
    def theta(self) -> np.ndarray:
        return self.rls.theta


class PolynomialEstimator:
    """RLS on an algebraic regressor (fuel or SOC model); no filtering needed."""

    def __init__(self, cfg: RlsConfig, regressor):
        self.rls = RlsEstimator(cfg)
        self._regressor = regressor
        self.last_eps = 0.0

    def observe(self, inputs: tuple, z: float, dt: float) -> float:
        self.last_eps = self.rls.step(self._regressor(*inputs), z, dt)
        return self.last_eps

    @property
    def theta(self) -> np.ndarray:
        return self.rls.theta
