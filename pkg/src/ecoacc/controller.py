"""Control orchestration: linear stabilizer design, spacing policy, tube
setup, estimator snapshots, and the per-period control computation."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from . import estimators as est
from . import nmpc, setalg
from .errors import ConfigError
from .plant import PlantParams, PowerRatioPolicy
from .setalg import IntervalBox, UncertainParams

MODES = ("tracking-nmpc", "eco-nmpc", "at-nmpc", "nonrobust-nmpc")


def car_following_matrices(m: float, r_w: float, headway: float, tau_a: float,
                           k_a: float = 1.0):
    """Continuous-time (A, B, B_p, B_g) of the 4-state car-following model
    [e_p, e_v, v_h, T_w]; the road-load input direction B_g carries
    force-per-mass units."""
    c = 1.0 / (m * r_w)
    a = np.array([
        [0.0, 1.0, 0.0, -headway * c],
        [0.0, 0.0, 0.0, -c],
        [0.0, 0.0, 0.0, c],
        [0.0, 0.0, 0.0, -1.0 / tau_a],
    ])
    b = np.array([[0.0], [0.0], [0.0], [k_a / tau_a]])
    b_p = np.array([[0.0], [1.0], [0.0], [0.0]])
    b_g = np.array([[-headway], [-1.0], [1.0], [0.0]])
    return a, b, b_p, b_g


def discretize_euler(a, b, ts: float):
    a = np.asarray(a, dtype=float)
    return np.eye(a.shape[0]) + ts * a, ts * np.asarray(b, dtype=float)


def design_stabilizer(a_d, b_d, q_weights, r_weight: float):
    """Discrete LQR gain for the Euler-discretized model; returns (K, closed
    loop eigenvalues). Fails if the closed loop is not strictly stable."""
    a_d = np.atleast_2d(np.asarray(a_d, dtype=float))
    b_d = np.asarray(b_d, dtype=float).reshape(a_d.shape[0], -1)
    q = np.diag(np.asarray(q_weights, dtype=float))
    r = np.atleast_2d(float(r_weight))
    try:
        s = scipy.linalg.solve_discrete_are(a_d, b_d, q, r)
    except Exception as exc:  # scipy raises LinAlgError/ValueError variants
        raise ConfigError(f"Riccati solve failed: {exc}") from exc
    k = np.linalg.solve(r + b_d.T @ s @ b_d, b_d.T @ s @ a_d)
    eigs = np.linalg.eigvals(a_d - b_d @ k)
    if np.max(np.abs(eigs)) >= 1.0:
        raise ConfigError("LQR gain does not stabilize the discrete model")
    return k, eigs


@dataclass(frozen=True)
class Measurement:
    """One radar/CAN sample; the harness replays these with transport delay."""

    timestamp: float
    gap: float
    rel_speed: float
    v_h: float
    a_h: float
    grade: float
    torque_applied: float
    soc: float
    p_e: float = 0.0
    p_m: float = 0.0
    fuel_rate: float = 0.0
    soc_rate: float = 0.0

    def __post_init__(self):
        if self.gap <= 0:
            raise ValueError("radar gap must be positive")


def spacing_errors(meas: Measurement, headway: float, d0: float):
    """Headway-policy errors: gap error and closing speed."""
    e_p = meas.gap - (d0 + headway * meas.v_h)
    return e_p, meas.rel_speed


@dataclass
class EstimatorSettings:
    lam: float = 1.0
    alpha_norm: float = 1.0
    beta: est.BetaSchedule = field(default_factory=est.BetaSchedule)
    p0_long: float = 50.0
    p0_fuel: float = 50.0
    p0_soc: float = 50.0
    r0: float = 1e4
    coeff_bound_factor: float = 5.0


@dataclass
class ControllerConfig:
    mode: str = "at-nmpc"
    headway: float = 1.5
    standstill_gap: float = 5.0
    ts: float = 0.1
    np_horizon: int = 10
    t_d: float = 0.5
    sigma: float = 0.5
    penalty: float = 1e3
    max_outer: int = 5
    max_inner: int = 5
    tube_step_offset: int = 1
    ap_bound: float = 2.0
    v_max: float = 40.0
    lqr_q: tuple = (0.5, 1.5, 1e-8)  # weights on [e_p, e_v, T_w]
    lqr_r: float = 2e-5
    x_box: IntervalBox = field(default_factory=lambda: IntervalBox(
        [-5.0, -5.0, -5.0, -3000.0], [5.0, 5.0, 45.0, 3000.0]))
    u_box: IntervalBox = field(default_factory=lambda: IntervalBox([-1500.0], [1500.0]))
    error_region: IntervalBox = field(default_factory=lambda: IntervalBox.symmetric(
        [2.0, 2.0, 2.0, 0.0]))
    weights_tracking: nmpc.OcpWeights = field(default_factory=lambda: nmpc.OcpWeights(
        2.0, 4.0, 1e-6, 150.0))
    weights_eco: nmpc.OcpWeights = field(default_factory=lambda: nmpc.OcpWeights(
        0.35, 1.2, 1e-6, 4000.0))
    estimator: EstimatorSettings = field(default_factory=EstimatorSettings)
    adapt: bool = True
    tighten: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown controller mode {self.mode!r}")
        if self.headway <= 0 or self.standstill_gap < 0:
            raise ConfigError("headway must be positive and standstill gap nonnegative")
        if self.x_box.is_empty or self.u_box.is_empty:
            raise ConfigError("state and input constraint boxes must be nonempty")


def resolve_mode(cfg: ControllerConfig) -> ControllerConfig:
    """Apply the mode presets. The four modes nest: the eco and tracking
    modes differ only in weights; the adaptive tube mode differs from eco
    only by switching adaptation and tightening on, and the non-robust mode
    keeps adaptation but drops the tube."""
    flags = {
        "tracking-nmpc": (False, False),
        "eco-nmpc": (False, False),
        "at-nmpc": (True, True),
        "nonrobust-nmpc": (True, False),
    }[cfg.mode]
    return replace(cfg, adapt=flags[0], tighten=flags[1])


def active_weights(cfg: ControllerConfig) -> nmpc.OcpWeights:
    if cfg.mode == "tracking-nmpc":
        return cfg.weights_tracking
    return cfg.weights_eco


def theta_bounds_from_uncertain(uncertain: UncertainParams, rho_a: float,
                                frontal_area: float, r_g: float = 1.0,
                                pad: float = 1e-6) -> IntervalBox:
    """Bounds for the reduced longitudinal parameters implied by the
    physical parameter box, via vertex enumeration of the exact mapping."""
    import itertools

    corners = np.array(list(itertools.product(*zip(uncertain.lower, uncertain.upper))))
    thetas = []
    for c in corners:
        m, r_w, c_d, mu_rv, mu_r0, phi_r, v_w, eta_p = c
        k_aero = rho_a * frontal_area * c_d
        thetas.append([
            r_g * eta_p / (r_w * m),
            k_aero / (2.0 * m),
            k_aero * v_w / m + setalg.GRAVITY * mu_rv,
            setalg.GRAVITY,
            k_aero * v_w ** 2 / (2.0 * m) + setalg.GRAVITY * mu_r0,
        ])
    thetas = np.asarray(thetas)
    lo = thetas.min(axis=0) - pad
    hi = thetas.max(axis=0) + pad
    # grade error folds into the gravity channel
    lo[3] -= abs(uncertain.lower[5]) * setalg.GRAVITY
    hi[3] += abs(uncertain.upper[5]) * setalg.GRAVITY
    return IntervalBox(lo, hi)


def _magnitude_bounds(theta0, factor: float, floor: float = 1e-12) -> IntervalBox:
    mag = factor * np.abs(np.asarray(theta0, dtype=float)) + floor
    return IntervalBox(-mag, mag)


@dataclass
class ControlTelemetry:
    t: float
    e_p: float
    e_v: float
    torque_cmd: float
    c0_first: float
    kkt_residual: float
    objective: float
    solve_time: float
    inner_iters: int
    outer_iters: int
    active_faces: int
    power_ratio: float
    theta_hash: str
    held: bool = False


class Controller:
    """One control channel: owns the stabilizer, the tube, the estimators
    and the warm-started solver state."""

    def __init__(self, cfg: ControllerConfig, nominal_plant: PlantParams,
                 uncertain: UncertainParams,
                 power_ratio: PowerRatioPolicy | None = None):
        self.cfg = resolve_mode(cfg)
        self.nominal_plant = nominal_plant
        self.uncertain = uncertain
        self.power_ratio = power_ratio or nominal_plant.power_ratio
        self._setup()

    # -- setup ---------------------------------------------------------

    def _setup(self):
        cfg = self.cfg
        p = self.nominal_plant
        a_c_mats = car_following_matrices(p.m, p.r_w, cfg.headway, p.tau_a, p.k_a)
        self.a_cont, self.b_cont, self.bp_cont, self.bg_cont = a_c_mats
        self.a_disc, self.b_disc = discretize_euler(self.a_cont, self.b_cont, cfg.ts)
        # The full model carries a structurally uncontrollable marginal mode
        # (the preceding speed e_v + v_h is conserved), so the LQR is designed
        # on the controllable [e_p, e_v, T_w] error subsystem and zero-padded.
        sub = np.ix_([0, 1, 3], [0, 1, 3])
        k3, self.stabilizer_eigs = design_stabilizer(
            self.a_disc[sub], self.b_disc[[0, 1, 3]], cfg.lqr_q, cfg.lqr_r)
        self.k_c = np.array([[k3[0, 0], k3[0, 1], 0.0, k3[0, 2]]])
        self.closed_loop_eigs = np.linalg.eigvals(
            self.a_disc - self.b_disc @ self.k_c)
        self.theta_nominal = est.theta_from_params(p)
        self.disturbance = None
        self.tube = None
        if cfg.tighten:
            self.disturbance = self.build_disturbance_spec()
            a_cl = self.a_disc - self.b_disc @ self.k_c
            self.tube = setalg.reachable_tube(
                a_cl, self.disturbance.combined, cfg.np_horizon,
                step_offset=cfg.tube_step_offset, require_stable=False)
            self.x_sets, self.u_sets = setalg.tighten_constraints(
                cfg.x_box, cfg.u_box, self.k_c, self.tube)
        else:
            self.x_sets = [cfg.x_box] * (cfg.np_horizon + 1)
            self.u_sets = [cfg.u_box] * (cfg.np_horizon + 1)

        self.estimators = None
        if cfg.adapt:
            s = cfg.estimator
            theta_bounds = theta_bounds_from_uncertain(
                self.uncertain, p.rho_a, p.frontal_area, p.r_g)
            self.estimators = {
                "long": est.LongitudinalEstimator(
                    est.RlsConfig(self.theta_nominal, theta_bounds, p0=s.p0_long,
                                  r0=s.r0, alpha_norm=s.alpha_norm, beta=s.beta),
                    lam=s.lam),
                "fuel": est.PolynomialEstimator(
                    est.RlsConfig(np.array(p.alpha),
                                  _magnitude_bounds(p.alpha, s.coeff_bound_factor),
                                  p0=s.p0_fuel, r0=s.r0, alpha_norm=s.alpha_norm,
                                  beta=s.beta),
                    est.fuel_regressor),
                "soc": est.PolynomialEstimator(
                    est.RlsConfig(np.array(p.gamma),
                                  _magnitude_bounds(p.gamma, s.coeff_bound_factor),
                                  p0=s.p0_soc, r0=s.r0, alpha_norm=s.alpha_norm,
                                  beta=s.beta),
                    est.soc_regressor),
            }
        self._warm = nmpc.OcpSolution.cold(cfg.np_horizon)
        self._prev_cmd = 0.0
        self._prev_v_p = None
        self._ap_est = 0.0
        self._consecutive_failures = 0

    def build_disturbance_spec(self) -> setalg.DisturbanceSpec:
        """Combine the four uncertainty sources into per-step disturbance
        boxes for the tube (all scaled to discrete state increments)."""
        cfg = self.cfg
        p = self.nominal_plant
        a_p_box = IntervalBox.symmetric([cfg.ap_bound])
        w_g_rate = setalg.lipschitz_disturbance(
            self.uncertain, p.rho_a, p.frontal_area, cfg.headway, cfg.v_max,
            cfg.error_region)
        # dt=1 yields the rate-level box B_g * E_a
        w_h_rate = setalg.param_uncertainty_disturbance(
            self.uncertain, cfg.v_max, (cfg.u_box.lower[0], cfg.u_box.upper[0]),
            self.bg_cont, 1.0, rho_a=p.rho_a, frontal_area=p.frontal_area,
            r_g=p.r_g)
        w_a_rate = setalg.linear_map(self.bp_cont, a_p_box)
        w_model_rate = setalg.minkowski_sum(w_g_rate, w_h_rate)
        w_tau_rate = setalg.delay_disturbance(
            cfg.t_d, self.k_c, cfg.x_box, cfg.u_box, a_p_box, w_model_rate,
            self.a_cont, self.b_cont, self.bp_cont)
        parts = [setalg.scale(b, cfg.ts)
                 for b in (w_g_rate, w_tau_rate, w_a_rate, w_h_rate)]
        combined = parts[0]
        for b in parts[1:]:
            combined = setalg.minkowski_sum(combined, b)
        return setalg.DisturbanceSpec(*parts, combined)

    # -- per-period control --------------------------------------------

    def _snapshot_models(self):
        p = self.nominal_plant
        if self.cfg.adapt and self.estimators is not None:
            theta = self.estimators["long"].theta.copy()
            alpha = tuple(self.estimators["fuel"].theta)
            gamma = tuple(self.estimators["soc"].theta)
        else:
            theta = self.theta_nominal
            alpha = p.alpha
            gamma = p.gamma
        return theta, alpha, gamma

    def observe(self, meas: Measurement, dt: float):
        """Feed one measurement sample to the online estimators."""
        if self.estimators is None:
            return
        self.estimators["long"].observe(
            meas.torque_applied, meas.v_h, meas.grade, dt)
        self.estimators["fuel"].observe((meas.p_e, meas.v_h), meas.fuel_rate, dt)
        self.estimators["soc"].observe((meas.p_m,), meas.soc_rate, dt)

    def _estimate_preceding_accel(self, v_p: float) -> float:
        if self._prev_v_p is None:
            raw = 0.0
        else:
            raw = (v_p - self._prev_v_p) / self.cfg.ts
        self._prev_v_p = v_p
        self._ap_est = 0.6 * self._ap_est + 0.4 * raw
        return float(np.clip(self._ap_est, -self.cfg.ap_bound, self.cfg.ap_bound))

    def _build_spec(self, theta, alpha, gamma, pr: float) -> nmpc.OcpSpec:
        cfg = self.cfg
        p = self.nominal_plant
        return nmpc.OcpSpec(
            np_horizon=cfg.np_horizon,
            ts=cfg.ts,
            weights=active_weights(cfg),
            nominal=nmpc.LongitudinalModel(self.theta_nominal, p.tau_a, p.k_a),
            adapted=nmpc.LongitudinalModel(theta, p.tau_a, p.k_a),
            energy=nmpc.EnergyModel(alpha, gamma, p.cost_fuel, p.cost_elec,
                                    p.v_floor, p.r_w, pr),
            k_c=self.k_c,
            headway=cfg.headway,
            standstill_gap=cfg.standstill_gap,
            sigma=cfg.sigma,
            x_sets=self.x_sets,
            u_sets=self.u_sets,
            penalty=cfg.penalty,
            max_outer=cfg.max_outer,
            max_inner=cfg.max_inner,
        )

    def control_period(self, meas: Measurement, t: float):
        """Compute one torque command from a (possibly stale) measurement."""
        cfg = self.cfg
        e_p, e_v = spacing_errors(meas, cfg.headway, cfg.standstill_gap)
        v_p = meas.v_h + meas.rel_speed
        a_p = self._estimate_preceding_accel(v_p)
        x0 = nmpc.AugmentedState.from_measurement(
            meas.gap, v_p, a_p, meas.v_h, meas.torque_applied)
        theta, alpha, gamma = self._snapshot_models()
        p = self.nominal_plant
        p_total = meas.v_h * meas.torque_applied / p.r_w
        pr = self.power_ratio(p_total, meas.soc)
        spec = self._build_spec(theta, alpha, gamma, pr)
        grade_preview = np.full(cfg.np_horizon, meas.grade)

        warm = nmpc.OcpSolution(c0=np.concatenate([self._warm.c0[1:],
                                                   self._warm.c0[-1:]]))
        held = False
        try:
            sol = nmpc.solve_step(spec, x0, warm, grade_preview)
            self._consecutive_failures = 0
        except FloatingPointError:
            self._consecutive_failures += 1
            held = True
            if self._consecutive_failures > 5:
                # safe-stop: ramp toward a firm brake command
                cmd = max(self._prev_cmd - 100.0, -600.0)
            else:
                cmd = self._prev_cmd
            self._prev_cmd = cmd
            telem = ControlTelemetry(
                t=t, e_p=e_p, e_v=e_v, torque_cmd=cmd, c0_first=0.0,
                kkt_residual=float("nan"), objective=float("nan"),
                solve_time=0.0, inner_iters=0, outer_iters=0, active_faces=0,
                power_ratio=pr, theta_hash=_hash_vec(theta), held=True)
            return cmd, telem
        self._warm = sol

        state_vec = np.array([e_p, e_v, meas.v_h, meas.torque_applied])
        cmd = float(sol.c0[0] - self.k_c @ state_vec)
        cmd = float(np.clip(cmd, cfg.u_box.lower[0], cfg.u_box.upper[0]))
        self._prev_cmd = cmd

        traj = nmpc.rollout(spec, x0, sol.c0, grade_preview)
        violations = nmpc.constraint_violations(spec, traj, sol.c0)
        telem = ControlTelemetry(
            t=t, e_p=e_p, e_v=e_v, torque_cmd=cmd, c0_first=float(sol.c0[0]),
            kkt_residual=sol.kkt_residual, objective=sol.objective,
            solve_time=sol.solve_time, inner_iters=sol.inner_iters,
            outer_iters=sol.outer_iters,
            active_faces=int(np.sum(violations > 1e-9)),
            power_ratio=pr, theta_hash=_hash_vec(theta), held=held)
        return cmd, telem


def _hash_vec(vec) -> str:
    return hashlib.sha1(np.asarray(vec, dtype=float).tobytes()).hexdigest()[:8]
