"""Mid-fidelity PHEV longitudinal plant: lagged wheel torque, environment
forces, and fuel/battery energy accounting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .setalg import GRAVITY


@dataclass(frozen=True)
class PowerRatioPolicy:
    """Engine share of the total power demand, as decided by an external
    energy-management layer.

    Braking power always goes to the battery (the engine cannot absorb
    power); below the SOC floor the engine supplies everything.
    """

    engine_ratio: float = 0.45
    soc_floor: float = 0.2

    def __call__(self, p_total: float, soc: float) -> float:
        if p_total <= 0.0:
            return 0.0
        if soc < self.soc_floor:
            return 1.0
        return self.engine_ratio


@dataclass(frozen=True)
class PlantParams:
    m: float                 # vehicle mass, kg
    r_w: float               # wheel radius, m
    rho_a: float             # air density, kg/m^3
    frontal_area: float      # m^2
    c_d: float               # drag coefficient
    mu_r0: float             # static rolling-resistance coefficient
    mu_rv: float             # speed rolling-resistance coefficient, s/m
    tau_a: float             # actuation lag time constant, s
    k_a: float               # actuation gain
    r_g: float               # gear ratio of the torque command path
    eta_p: float             # driveline efficiency
    alpha: tuple             # fuel-rate coefficients (kg/s, kg/J, kg s/J^2 ..., kg/m)
    gamma: tuple             # SOC-rate coefficients (1/s, 1/(s W), 1/(s W^2))
    cost_fuel: float         # $/kg
    cost_elec: float         # $ per full SOC swing
    v_floor: float           # m/s, cost-rate denominator floor
    power_ratio: PowerRatioPolicy = PowerRatioPolicy()

    def __post_init__(self):
        for name in ("m", "r_w", "tau_a", "eta_p", "v_floor"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if len(self.alpha) != 4 or len(self.gamma) != 3:
            raise ValueError("need 4 fuel and 3 SOC coefficients")
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))


@dataclass(frozen=True)
class PlantState:
    s_h: float               # host position, m
    v_h: float               # host speed, m/s
    t_w: float               # wheel torque, N*m
    soc: float               # battery state of charge, 0..1
    fuel_used: float = 0.0   # kg
    energy_cost: float = 0.0  # $

    def __post_init__(self):
        if self.v_h < 0:
            raise ValueError("speed must be nonnegative")
        if not 0.0 <= self.soc <= 1.0:
            raise ValueError("SOC out of range")


class EnvProfile:
    """Piecewise-linear road grade over position and wind over time."""

    def __init__(self, grade_table=((0.0, 0.0),), wind_table=((0.0, 0.0),)):
        self._grade_s, self._grade = self._validate(grade_table, "grade")
        self._wind_t, self._wind = self._validate(wind_table, "wind")
        if np.any(np.abs(self._grade) >= np.pi / 2):
            raise ValueError("grade must stay below vertical")

    @staticmethod
    def _validate(table, name):
        arr = np.asarray(table, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 1:
            raise ValueError(f"{name} table must be (breakpoint, value) rows")
        x = arr[:, 0]
        if np.any(np.diff(x) <= 0) and arr.shape[0] > 1:
            raise ValueError(f"{name} breakpoints must increase")
        return x, arr[:, 1]

    def grade_at(self, s: float) -> float:
        return float(np.interp(s, self._grade_s, self._grade))

    def wind_at(self, t: float) -> float:
        return float(np.interp(t, self._wind_t, self._wind))


def road_load(state: PlantState, env: EnvProfile, params: PlantParams,
              t: float) -> float:
    """Total resistive force on the body, N (negative opposes motion)."""
    v_air = state.v_h + env.wind_at(t)
    phi = env.grade_at(state.s_h)
    drag = -0.5 * params.rho_a * params.frontal_area * params.c_d * v_air ** 2
    roll = -(params.mu_r0 + params.mu_rv * state.v_h) * params.m * GRAVITY * np.cos(phi)
    grade = -params.m * GRAVITY * np.sin(phi)
    return drag + roll + grade


def split_power(v_h: float, u: float, m: float, pr: float):
    """Engine/motor power split for a traction-equivalent acceleration demand."""
    if not 0.0 <= pr <= 1.0:
        raise ValueError("power ratio must lie in [0, 1]")
    p_total = v_h * u * m
    return pr * p_total, (1.0 - pr) * p_total


def fuel_rate(p_e: float, v_h: float, params: PlantParams) -> float:
    """Engine fuel consumption, kg/s, clamped at zero from below."""
    a1, a2, a3, a4 = params.alpha
    return max(0.0, a1 + a2 * p_e + a3 * p_e ** 2 + a4 * v_h)


def soc_rate(p_m: float, params: PlantParams) -> float:
    """Battery SOC derivative, 1/s; the quadratic term models ohmic losses."""
    g1, g2, g3 = params.gamma
    return g1 + g2 * p_m + g3 * p_m ** 2


def energy_cost_rate(state: PlantState, p_e: float, p_m: float,
                     params: PlantParams) -> float:
    """Combined per-meter energy cost, $/m, with the denominator floored at
    v_floor so the cost stays finite at low speed."""
    mf = fuel_rate(p_e, state.v_h, params)
    ds = soc_rate(p_m, params)
    v_eff = max(state.v_h, params.v_floor)
    return (params.cost_fuel * mf - params.cost_elec * ds) / v_eff


def _derivs(y, torque_cmd, env, params, t):
    s, v, t_w, soc = y[0], y[1], y[2], y[3]
    v_air = v + env.wind_at(t)
    phi = env.grade_at(s)
    f_r = (-0.5 * params.rho_a * params.frontal_area * params.c_d * v_air * v_air
           - (params.mu_r0 + params.mu_rv * v) * params.m * GRAVITY * math.cos(phi)
           - params.m * GRAVITY * math.sin(phi))
    a_trac = t_w / (params.m * params.r_w)
    dv = a_trac + f_r / params.m
    if v <= 0.0 and dv < 0.0:
        dv = 0.0  # resistive forces cannot push the vehicle backwards
    dtw = (-t_w + params.k_a * torque_cmd) / params.tau_a
    p_total = params.m * v * a_trac  # wheel traction power v * T_w / r_w
    pr = params.power_ratio(p_total, soc)
    p_e = pr * p_total
    p_m = (1.0 - pr) * p_total
    a1, a2, a3, a4 = params.alpha
    mf = a1 + a2 * p_e + a3 * p_e * p_e + a4 * v
    if mf < 0.0:
        mf = 0.0
    g1, g2, g3 = params.gamma
    ds = g1 + g2 * p_m + g3 * p_m * p_m
    # accumulated cost integrates $ directly so trip cost is exactly
    # cost_fuel * fuel + cost_elec * soc drop
    dcost = params.cost_fuel * mf - params.cost_elec * ds
    return (v, dv, dtw, ds, mf, dcost)


def step_plant(state: PlantState, torque_cmd: float, env: EnvProfile,
               params: PlantParams, t: float, dt: float) -> PlantState:
    """One RK4 step of the full plant, including energy accounting."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if not math.isfinite(torque_cmd):
        raise ValueError("non-finite torque command")
    y = (state.s_h, state.v_h, state.t_w, state.soc,
         state.fuel_used, state.energy_cost)
    half = 0.5 * dt
    k1 = _derivs(y, torque_cmd, env, params, t)
    y2 = tuple(yi + half * ki for yi, ki in zip(y, k1))
    k2 = _derivs(y2, torque_cmd, env, params, t + half)
    y3 = tuple(yi + half * ki for yi, ki in zip(y, k2))
    k3 = _derivs(y3, torque_cmd, env, params, t + half)
    y4 = tuple(yi + dt * ki for yi, ki in zip(y, k3))
    k4 = _derivs(y4, torque_cmd, env, params, t + dt)
    scale = dt / 6.0
    out = tuple(yi + scale * (a + 2 * b + 2 * c + d)
                for yi, a, b, c, d in zip(y, k1, k2, k3, k4))
    return PlantState(
        s_h=out[0],
        v_h=max(out[1], 0.0),
        t_w=out[2],
        soc=min(max(out[3], 0.0), 1.0),
        fuel_used=out[4],
        energy_cost=out[5],
    )


def acceleration(state: PlantState, env: EnvProfile, params: PlantParams,
                 t: float) -> float:
    """Instantaneous host acceleration, m/s^2."""
    return float(_derivs(
        (state.s_h, state.v_h, state.t_w, state.soc, 0.0, 0.0),
        0.0, env, params, t)[1])


def power_demand(state: PlantState, params: PlantParams):
    """Current (P_e, P_m, PR) at the plant's operating point."""
    a_trac = state.t_w / (params.m * params.r_w)
    p_total = params.m * state.v_h * a_trac
    pr = params.power_ratio(p_total, state.soc)
    p_e, p_m = split_power(state.v_h, a_trac, params.m, pr)
    return p_e, p_m, pr


def equilibrium_torque(state: PlantState, env: EnvProfile, params: PlantParams,
                       t: float) -> float:
    """Wheel torque holding the current speed on the current road."""
    return -params.r_w * road_load(state, env, params, t)
