"""Closed-loop simulation harness: scenario ingestion, drive-cycle preceding
vehicle, radar delay injection, parameter-error injection, metrics and
result emission."""

from __future__ import annotations

import dataclasses
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from . import estimators as est
from . import nmpc, plant as plant_mod, setalg
from .controller import (Controller, ControllerConfig, EstimatorSettings,
                         Measurement, MODES)
from .errors import ConfigError, DivergenceError
from .plant import EnvProfile, PlantParams, PlantState, PowerRatioPolicy
from .setalg import IntervalBox, UncertainParams

CYCLE_HEADERS = {"t_s,v_mps": 1.0, "t_s,v_mph": 0.44704}


class DriveCycle:
    """Monotone (time, speed) table with linear interpolation."""

    def __init__(self, t, v, name: str = "cycle"):
        self.t = np.asarray(t, dtype=float)
        self.v = np.asarray(v, dtype=float)
        self.name = name
        if self.t.size < 2:
            raise ConfigError("drive cycle needs at least two rows")
        if np.any(np.diff(self.t) <= 0):
            raise ConfigError("drive cycle time must be strictly increasing")
        if np.any(self.v < 0):
            raise ConfigError("drive cycle speeds must be nonnegative")

    @property
    def duration(self) -> float:
        return float(self.t[-1])

    def speed(self, t: float, repeat: int = 1) -> float:
        if repeat > 1:
            t = math.fmod(t, self.duration) if t < repeat * self.duration else self.duration
        return float(np.interp(t, self.t, self.v))

    def to_csv_text(self) -> str:
        lines = ["t_s,v_mps"]
        lines += [f"{ti:.12g},{vi:.12g}" for ti, vi in zip(self.t, self.v)]
        return "\n".join(lines) + "\n"


def parse_drive_cycle(text: str, name: str = "cycle") -> DriveCycle:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ConfigError("drive cycle file is empty")
    header = lines[0].replace(" ", "").lower()
    if header not in CYCLE_HEADERS:
        raise ConfigError(
            f"line 1: unknown cycle header {lines[0]!r}; expected one of "
            + ", ".join(sorted(CYCLE_HEADERS)))
    unit = CYCLE_HEADERS[header]
    ts, vs = [], []
    for idx, ln in enumerate(lines[1:], start=2):
        parts = ln.split(",")
        if len(parts) != 2:
            raise ConfigError(f"line {idx}: expected two comma-separated values")
        try:
            ti, vi = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise ConfigError(f"line {idx}: {exc}") from exc
        if vi < 0:
            raise ConfigError(f"line {idx}: negative speed")
        if ts and ti <= ts[-1]:
            raise ConfigError(f"line {idx}: time not increasing")
        ts.append(ti)
        vs.append(vi * unit)
    if len(ts) < 2:
        raise ConfigError("drive cycle needs at least two rows")
    return DriveCycle(ts, vs, name)


def load_drive_cycle(path) -> DriveCycle:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"drive cycle file not found: {path}")
    return parse_drive_cycle(path.read_text(), name=path.stem)


@dataclass
class ParamStep:
    """Mid-run multiplicative step change of one true plant parameter."""

    param: str
    factor: float
    at_time: float


@dataclass
class Excitation:
    enabled: bool = False
    amplitude: float = 0.0
    period: float = 1.0


@dataclass
class ScenarioConfig:
    name: str
    seed: int
    duration: float
    plant_dt: float
    cycle: DriveCycle
    cycle_repeat: int
    radar_delay: float
    env: EnvProfile
    plant: PlantParams
    nominal: PlantParams
    uncertain: UncertainParams
    controller: ControllerConfig
    soc_init: float = 0.65
    excitation: Excitation = field(default_factory=Excitation)
    param_step: ParamStep | None = None

    def __post_init__(self):
        if self.duration <= 0 or self.plant_dt <= 0:
            raise ConfigError("duration and plant_dt must be positive")
        if self.radar_delay < 0:
            raise ConfigError("radar delay must be nonnegative")
        total = self.cycle.duration * self.cycle_repeat
        if self.duration > total + 1e-9:
            raise ConfigError(
                f"duration {self.duration}s exceeds cycle coverage {total}s")
        ratio = self.controller.ts / self.plant_dt
        if abs(ratio - round(ratio)) > 1e-9:
            raise ConfigError("controller period must be a multiple of plant_dt")


@dataclass
class RunMetrics:
    mode: str
    energy_cost: float
    fuel_used: float
    soc_delta: float
    ep_rms: float
    ev_rms: float
    constraint_violations: int
    max_ep_excursion: float
    solve_time_p50: float
    solve_time_p95: float
    solve_time_max: float
    duration: float
    diverged: bool = False

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class RunResult:
    metrics: RunMetrics
    trace_columns: list
    trace_rows: list
    timing_rows: list
    estimator_columns: list = field(default_factory=list)
    estimator_rows: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# scenario file handling


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"missing config key {where}.{key}")
    return section[key]


def _plant_from_dict(d: dict) -> PlantParams:
    pr = d.get("power_ratio", {})
    policy = PowerRatioPolicy(
        engine_ratio=float(pr.get("engine_ratio", 0.45)),
        soc_floor=float(pr.get("soc_floor", 0.2)))
    try:
        return PlantParams(
            m=float(_require(d, "m", "plant")),
            r_w=float(_require(d, "r_w", "plant")),
            rho_a=float(d.get("rho_a", 1.2)),
            frontal_area=float(_require(d, "frontal_area", "plant")),
            c_d=float(_require(d, "c_d", "plant")),
            mu_r0=float(d.get("mu_r0", 0.008)),
            mu_rv=float(d.get("mu_rv", 1.2e-4)),
            tau_a=float(d.get("tau_a", 0.4)),
            k_a=float(d.get("k_a", 1.0)),
            r_g=float(d.get("r_g", 1.0)),
            eta_p=float(d.get("eta_p", 1.0)),
            alpha=tuple(_require(d, "alpha", "plant")),
            gamma=tuple(_require(d, "gamma", "plant")),
            cost_fuel=float(d.get("cost_fuel", 1.5)),
            cost_elec=float(d.get("cost_elec", 1.2)),
            v_floor=float(d.get("v_floor", 1.0)),
            power_ratio=policy,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid plant parameters: {exc}") from exc


def _apply_nominal_errors(true_params: PlantParams, err: dict) -> PlantParams:
    changes = {}
    if "m_factor" in err:
        changes["m"] = true_params.m * float(err["m_factor"])
    if "c_d_factor" in err:
        changes["c_d"] = true_params.c_d * float(err["c_d_factor"])
    if err.get("drop_rolling", False):
        changes["mu_r0"] = 0.0
        changes["mu_rv"] = 0.0
    if "alpha_factor" in err:
        changes["alpha"] = tuple(a * float(f) for a, f in
                                 zip(true_params.alpha, err["alpha_factor"]))
    if "gamma_factor" in err:
        changes["gamma"] = tuple(g * float(f) for g, f in
                                 zip(true_params.gamma, err["gamma_factor"]))
    return replace(true_params, **changes)


def _uncertain_from_dict(nominal: PlantParams, d: dict) -> UncertainParams:
    rel = {"m": nominal.m, "r_w": nominal.r_w, "c_d": nominal.c_d,
           "eta_p": nominal.eta_p}
    nom = np.array([nominal.m, nominal.r_w, nominal.c_d, nominal.mu_rv,
                    nominal.mu_r0, 0.0, 0.0, nominal.eta_p])
    lo, hi = nom.copy(), nom.copy()
    for i, name in enumerate(setalg.PARAM_NAMES):
        if name not in d:
            continue
        b0, b1 = float(d[name][0]), float(d[name][1])
        if name in rel:
            lo[i], hi[i] = b0 * rel[name], b1 * rel[name]
        else:
            lo[i], hi[i] = b0, b1
    lo = np.minimum(lo, nom)
    hi = np.maximum(hi, nom)
    return UncertainParams(nom, lo, hi)


def _controller_from_dict(d: dict) -> ControllerConfig:
    kwargs = {}
    simple = {"mode": str, "headway": float, "standstill_gap": float, "ts": float,
              "np_horizon": int, "t_d": float, "sigma": float, "penalty": float,
              "max_outer": int, "max_inner": int, "tube_step_offset": int,
              "ap_bound": float, "v_max": float, "lqr_r": float}
    for key, cast in simple.items():
        if key in d:
            kwargs[key] = cast(d[key])
    if "lqr_q" in d:
        kwargs["lqr_q"] = tuple(float(x) for x in d["lqr_q"])
    if "x_box" in d:
        xb = d["x_box"]
        order = ("e_p", "e_v", "v_h", "t_w")
        lo = [float(xb[k][0]) for k in order]
        hi = [float(xb[k][1]) for k in order]
        kwargs["x_box"] = IntervalBox(lo, hi)
    if "u_box" in d:
        kwargs["u_box"] = IntervalBox([float(d["u_box"][0])], [float(d["u_box"][1])])
    if "error_region" in d:
        kwargs["error_region"] = IntervalBox.symmetric(
            [float(x) for x in d["error_region"]])
    weights = d.get("weights", {})
    for preset, attr in (("tracking", "weights_tracking"), ("eco", "weights_eco")):
        if preset in weights:
            w = weights[preset]
            kwargs[attr] = nmpc.OcpWeights(float(w["w_ep"]), float(w["w_ev"]),
                                           float(w["w_u"]), float(w["w_energy"]))
    est_cfg = d.get("estimator", {})
    beta = est_cfg.get("beta", {})
    kwargs["estimator"] = EstimatorSettings(
        lam=float(est_cfg.get("lam", 1.0)),
        alpha_norm=float(est_cfg.get("alpha_norm", 1.0)),
        beta=est.BetaSchedule(
            initial=float(beta.get("initial", 0.5)),
            final=float(beta.get("final", 0.05)),
            time_constant=float(beta.get("time_constant", 30.0))),
        p0_long=float(est_cfg.get("p0_long", 50.0)),
        p0_fuel=float(est_cfg.get("p0_fuel", 50.0)),
        p0_soc=float(est_cfg.get("p0_soc", 50.0)),
        r0=float(est_cfg.get("r0", 1e4)),
        coeff_bound_factor=float(est_cfg.get("coeff_bound_factor", 5.0)),
    )
    try:
        return ControllerConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"invalid controller config: {exc}") from exc


def scenario_from_dict(d: dict, base_dir: Path | None = None) -> ScenarioConfig:
    base_dir = Path(base_dir) if base_dir else Path.cwd()
    cyc = _require(d, "cycle", "scenario")
    if "csv_text" in cyc:
        cycle = parse_drive_cycle(cyc["csv_text"], name=cyc.get("name", "inline"))
    elif "path" in cyc:
        cpath = Path(cyc["path"])
        if not cpath.is_absolute():
            cpath = base_dir / cpath
        cycle = load_drive_cycle(cpath)
    else:
        raise ConfigError("cycle section needs 'path' or 'csv_text'")

    env_d = d.get("env", {})
    env = EnvProfile(
        grade_table=env_d.get("grade", [[0.0, 0.0]]),
        wind_table=env_d.get("wind", [[0.0, 0.0]]))

    true_plant = _plant_from_dict(_require(d, "plant", "scenario"))
    nominal = _apply_nominal_errors(true_plant, d.get("nominal_errors", {}))
    uncertain = _uncertain_from_dict(nominal, d.get("uncertain_bounds", {}))
    controller = _controller_from_dict(d.get("controller", {}))

    timing = d.get("timing", {})
    exc_d = d.get("excitation", {})
    step_d = d.get("param_step")
    step = None
    if step_d:
        step = ParamStep(param=str(step_d["param"]), factor=float(step_d["factor"]),
                         at_time=float(step_d["at_time"]))
    repeat = int(cyc.get("repeat", 1))
    duration = float(d.get("duration", cycle.duration * repeat))
    return ScenarioConfig(
        name=str(d.get("name", "scenario")),
        seed=int(d.get("seed", 0)),
        duration=duration,
        plant_dt=float(timing.get("plant_dt", 0.01)),
        cycle=cycle,
        cycle_repeat=repeat,
        radar_delay=float(d.get("radar_delay", 0.0)),
        env=env,
        plant=true_plant,
        nominal=nominal,
        uncertain=uncertain,
        controller=controller,
        soc_init=float(d.get("initial", {}).get("soc", 0.65)),
        excitation=Excitation(
            enabled=bool(exc_d.get("enabled", False)),
            amplitude=float(exc_d.get("amplitude", 0.0)),
            period=float(exc_d.get("period", 1.0))),
        param_step=step,
    )


def packaged_scenario_path(name: str) -> Path:
    """Path of a scenario shipped with the package ('default' or 'estimation')."""
    root = Path(__file__).parent / "configs"
    path = root / f"{name}_scenario.yaml"
    if not path.exists():
        raise ConfigError(f"no packaged scenario named {name!r}")
    return path


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"scenario file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse scenario file: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("scenario file must contain a mapping")
    return scenario_from_dict(data, base_dir=path.parent)


# ---------------------------------------------------------------------------
# closed-loop simulation

TRACE_COLUMNS = [
    "t", "v_p", "v_h", "gap", "e_p", "e_v", "a_h", "grade", "wind",
    "torque_cmd", "c0_first", "t_w", "soc", "fuel_used", "energy_cost",
    "power_ratio", "kkt_residual", "outer_iters", "inner_iters",
    "active_faces", "violation", "theta_hash",
]

ESTIMATOR_COLUMNS = (
    ["t"]
    + [f"theta_long_{i}" for i in range(1, 6)]
    + ["eps_long", "pnorm_long", "z_long", "zhat_long"]
    + [f"alpha_{i}" for i in range(1, 5)]
    + ["eps_fuel", "pnorm_fuel", "z_fuel", "zhat_fuel"]
    + [f"gamma_{i}" for i in range(1, 4)]
    + ["eps_soc", "pnorm_soc", "z_soc", "zhat_soc"]
)


def _check_violation(x_box: IntervalBox, e_p, e_v, v_h, t_w) -> bool:
    state = np.array([e_p, e_v, v_h, t_w])
    return bool(np.any(state < x_box.lower) or np.any(state > x_box.upper))


def run_scenario(cfg: ScenarioConfig, mode: str | None = None,
                 collect_estimators: bool = False) -> RunResult:
    """Simulate the closed loop and collect metrics and traces.

    The preceding vehicle replays the drive cycle kinematically; the plant
    steps at the fine period, the controller at its own period, and the
    radar buffer serves measurements aged by the configured transport
    delay (exact on the fine grid).
    """
    ctrl_cfg = cfg.controller
    if mode is not None:
        if mode not in MODES:
            raise ConfigError(f"unknown mode {mode!r}")
        ctrl_cfg = replace(ctrl_cfg, mode=mode)
    if cfg.radar_delay > ctrl_cfg.t_d + 1e-12 and ctrl_cfg.mode == "at-nmpc":
        # deliberate falsification runs are allowed, but flagged
        print(f"warning: realized delay {cfg.radar_delay}s exceeds design bound "
              f"{ctrl_cfg.t_d}s")

    controller = Controller(ctrl_cfg, cfg.nominal, cfg.uncertain,
                            power_ratio=cfg.plant.power_ratio)
    rng = np.random.default_rng(cfg.seed)

    dt = cfg.plant_dt
    n_steps = int(round(cfg.duration / dt))
    ratio = int(round(ctrl_cfg.ts / dt))
    delay_steps = int(round(cfg.radar_delay / dt))

    true_params = cfg.plant
    v0 = cfg.cycle.speed(0.0, cfg.cycle_repeat)
    gap0 = ctrl_cfg.standstill_gap + ctrl_cfg.headway * v0
    state = PlantState(s_h=0.0, v_h=v0, t_w=0.0, soc=cfg.soc_init)
    s_p = gap0
    v_p_prev = v0
    v_h_prev = v0

    history: list[Measurement] = []
    trace_rows: list[list] = []
    timing_rows: list[list] = []
    est_rows: list[list] = []
    solve_times: list[float] = []
    ep_sq = ev_sq = 0.0
    n_periods = 0
    violations = 0
    max_ep = 0.0
    cmd = 0.0
    stepped = cfg.param_step is None

    n_dither = n_steps // max(ratio, 1) + 2
    dither = (cfg.excitation.amplitude
              * rng.choice([-1.0, 1.0], size=n_dither)) if cfg.excitation.enabled \
        else np.zeros(n_dither)

    for k in range(n_steps):
        t = k * dt
        if not stepped and t + 1e-12 >= cfg.param_step.at_time:
            value = getattr(true_params, cfg.param_step.param)
            true_params = replace(true_params,
                                  **{cfg.param_step.param: value * cfg.param_step.factor})
            stepped = True

        v_p = cfg.cycle.speed(t, cfg.cycle_repeat)
        gap = s_p - state.s_h
        if gap <= 0.2:
            raise DivergenceError(f"inter-vehicle gap collapsed at t={t:.2f}s")
        a_h = (state.v_h - v_h_prev) / dt if k > 0 else 0.0
        p_e, p_m, pr_now = plant_mod.power_demand(state, true_params)
        meas = Measurement(
            timestamp=t, gap=gap, rel_speed=v_p - state.v_h, v_h=state.v_h,
            a_h=a_h, grade=cfg.env.grade_at(state.s_h),
            torque_applied=state.t_w, soc=state.soc, p_e=p_e, p_m=p_m,
            fuel_rate=plant_mod.fuel_rate(p_e, state.v_h, true_params),
            soc_rate=plant_mod.soc_rate(p_m, true_params))
        history.append(meas)
        delayed = history[max(0, k - delay_steps)]

        controller.observe(delayed, dt)
        if collect_estimators and controller.estimators is not None and k % ratio == 0:
            est_rows.append(_estimator_row(t, controller, delayed))

        if k % ratio == 0:
            period_idx = k // ratio
            cmd, telem = controller.control_period(delayed, t)
            cmd = float(np.clip(cmd + dither[period_idx],
                                ctrl_cfg.u_box.lower[0], ctrl_cfg.u_box.upper[0]))
            if not np.isfinite(cmd):
                raise DivergenceError(f"controller produced non-finite torque at t={t:.2f}s")
            e_p_true = gap - (ctrl_cfg.standstill_gap + ctrl_cfg.headway * state.v_h)
            e_v_true = v_p - state.v_h
            violated = _check_violation(ctrl_cfg.x_box, e_p_true, e_v_true,
                                        state.v_h, state.t_w)
            violations += int(violated)
            max_ep = max(max_ep, abs(e_p_true))
            ep_sq += e_p_true ** 2
            ev_sq += e_v_true ** 2
            n_periods += 1
            solve_times.append(telem.solve_time)
            timing_rows.append([t, telem.solve_time])
            trace_rows.append([
                t, v_p, state.v_h, gap, e_p_true, e_v_true, a_h,
                cfg.env.grade_at(state.s_h), cfg.env.wind_at(t), cmd,
                telem.c0_first, state.t_w, state.soc, state.fuel_used,
                state.energy_cost, telem.power_ratio, telem.kkt_residual,
                telem.outer_iters, telem.inner_iters, telem.active_faces,
                int(violated), telem.theta_hash,
            ])

        v_h_prev = state.v_h
        state = plant_mod.step_plant(state, cmd, cfg.env, true_params, t, dt)
        if not np.isfinite(state.v_h) or not np.isfinite(state.t_w):
            raise DivergenceError(f"plant state diverged at t={t:.2f}s")
        s_p += 0.5 * (v_p_prev + v_p) * dt
        v_p_prev = v_p

    solve_arr = np.array(solve_times) if solve_times else np.zeros(1)
    metrics = RunMetrics(
        mode=ctrl_cfg.mode,
        energy_cost=state.energy_cost,
        fuel_used=state.fuel_used,
        soc_delta=state.soc - cfg.soc_init,
        ep_rms=math.sqrt(ep_sq / max(n_periods, 1)),
        ev_rms=math.sqrt(ev_sq / max(n_periods, 1)),
        constraint_violations=violations,
        max_ep_excursion=max_ep,
        solve_time_p50=float(np.percentile(solve_arr, 50)),
        solve_time_p95=float(np.percentile(solve_arr, 95)),
        solve_time_max=float(solve_arr.max()),
        duration=cfg.duration,
    )
    return RunResult(metrics=metrics, trace_columns=TRACE_COLUMNS,
                     trace_rows=trace_rows, timing_rows=timing_rows,
                     estimator_columns=ESTIMATOR_COLUMNS, estimator_rows=est_rows)


def _estimator_row(t: float, controller: Controller, meas: Measurement) -> list:
    ests = controller.estimators
    long_e = ests["long"]
    zhat_long = long_e.predict_accel(meas.torque_applied, meas.v_h, meas.grade)
    fuel_e = ests["fuel"]
    zhat_fuel = est.predict_fuel(fuel_e.theta, meas.p_e, meas.v_h)
    soc_e = ests["soc"]
    zhat_soc = est.predict_soc(soc_e.theta, meas.p_m)
    return ([t]
            + list(long_e.theta)
            + [long_e.last_eps, long_e.rls.covariance_norm, meas.a_h, zhat_long]
            + list(fuel_e.theta)
            + [fuel_e.last_eps, fuel_e.rls.covariance_norm, meas.fuel_rate, zhat_fuel]
            + list(soc_e.theta)
            + [soc_e.last_eps, soc_e.rls.covariance_norm, meas.soc_rate, zhat_soc])


def compare_modes(cfg: ScenarioConfig, modes) -> dict:
    """Run the same scenario once per mode and report energy-cost deltas
    relative to the tracking mode (or the first mode listed)."""
    modes = list(modes)
    if not modes:
        raise ConfigError("need at least one mode to compare")
    rows = []
    for mode in modes:
        result = run_scenario(cfg, mode=mode)
        rows.append(result.metrics)
    ref = next((m for m in rows if m.mode == "tracking-nmpc"), rows[0])
    table = {"scenario": cfg.name, "reference_mode": ref.mode, "rows": []}
    for m in rows:
        entry = m.as_dict()
        entry["energy_cost_delta_pct"] = (
            100.0 * (m.energy_cost - ref.energy_cost) / ref.energy_cost
            if ref.energy_cost else 0.0)
        table["rows"].append(entry)
    return table


# ---------------------------------------------------------------------------
# reports and writers


def tube_report(cfg: ScenarioConfig) -> dict:
    """Disturbance-set and tube summary for the scenario's robust controller."""
    ctrl_cfg = replace(cfg.controller, mode="at-nmpc")
    controller = Controller(ctrl_cfg, cfg.nominal, cfg.uncertain,
                            power_ratio=cfg.plant.power_ratio)
    dist = controller.disturbance
    tube = controller.tube
    dims = ("e_p", "e_v", "v_h", "t_w")
    sources = {}
    for name in ("w_g", "w_tau", "w_a", "w_h", "combined"):
        box = getattr(dist, name)
        sources[name] = {d: [float(box.lower[i]), float(box.upper[i])]
                         for i, d in enumerate(dims)}
    steps = []
    for i, box in enumerate(tube.boxes):
        x_t = controller.x_sets[i]
        u_t = controller.u_sets[i]
        steps.append({
            "step": i,
            "radius": {d: float(box.radius[i2]) for i2, d in enumerate(dims)},
            "state_bounds": {d: [float(x_t.lower[i2]), float(x_t.upper[i2])]
                             for i2, d in enumerate(dims)},
            "input_bounds": [float(u_t.lower[0]), float(u_t.upper[0])],
        })
    return {
        "scenario": cfg.name,
        "closed_loop_spectral_radius": float(
            np.max(np.abs(controller.closed_loop_eigs))),
        "gain": [float(g) for g in controller.k_c.ravel()],
        "disturbance": sources,
        "tube": steps,
    }


def format_tube_report(report: dict) -> str:
    dims = ("e_p", "e_v", "v_h", "t_w")
    out = io.StringIO()
    out.write(f"scenario: {report['scenario']}\n")
    out.write(f"closed-loop spectral radius: "
              f"{report['closed_loop_spectral_radius']:.4f}\n")
    out.write("feedback gain [e_p e_v v_h T_w]: "
              + " ".join(f"{g: .4g}" for g in report["gain"]) + "\n\n")
    out.write("disturbance boxes (per-step state increments)\n")
    for name, box in report["disturbance"].items():
        out.write(f"  {name:9s}"
                  + "  ".join(f"{d}=[{box[d][0]: .4g},{box[d][1]: .4g}]"
                              for d in dims) + "\n")
    out.write("\ntube radii and tightened bounds per step\n")
    out.write("  step " + " ".join(f"r_{d:4s}" for d in dims)
              + "  e_p band        u band\n")
    for s in report["tube"]:
        r = s["radius"]
        eb = s["state_bounds"]["e_p"]
        ub = s["input_bounds"]
        out.write(f"  {s['step']:4d} "
                  + " ".join(f"{r[d]:6.3f}" for d in dims)
                  + f"  [{eb[0]: 6.2f},{eb[1]: 6.2f}]"
                  + f"  [{ub[0]: 7.1f},{ub[1]: 7.1f}]\n")
    return out.getvalue()


def format_float(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def rows_to_csv(columns, rows) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(format_float(v) for v in row))
    return "\n".join(lines) + "\n"


def rows_to_json(columns, rows) -> str:
    data = {col: [row[i] for row in rows] for i, col in enumerate(columns)}
    return json.dumps(data, separators=(",", ":"), allow_nan=True)


def metrics_to_json(metrics: RunMetrics) -> str:
    return json.dumps(metrics.as_dict(), indent=2, sort_keys=True)
