"""Finite-horizon optimal control with dual prediction models, solved by a
warm-started Newton/GMRES continuation scheme.

The horizon rolls out a 9-state field vector: a nominal host block (fixed
physics used for constraint handling), a preceding-vehicle block with
decaying acceleration, and an estimated host block (adapted parameters used
in the objective). Constraints are handled with an exterior quadratic
penalty on the nominal block against the tightened per-step boxes, which
keeps the optimality residual smooth for the matrix-free linear solves.

The residual is the exact gradient of the penalized objective, computed by
a discrete adjoint sweep; GMRES sees the residual's Jacobian only through
forward-difference directional derivatives.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .setalg import IntervalBox

# field-vector layout
_P_NOM, _V_NOM, _T_NOM = 0, 1, 2
_P_PRE, _V_PRE, _A_PRE = 3, 4, 5
_P_EST, _V_EST, _T_EST = 6, 7, 8


@dataclass(frozen=True)
class LongitudinalModel:
    """One host block of the field vector: reduced dynamics plus torque lag."""

    theta: np.ndarray  # 5-vector of the reduced longitudinal model
    tau_a: float
    k_a: float = 1.0

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float).copy()
        if th.shape != (5,):
            raise ValueError("need 5 longitudinal parameters")
        th.setflags(write=False)
        object.__setattr__(self, "theta", th)
        if self.tau_a <= 0:
            raise ValueError("actuation lag must be positive")


@dataclass(frozen=True)
class EnergyModel:
    """Objective-side energy cost: engine/battery polynomials, prices, and
    the wheel-power convention P = v * T_w / r_w."""

    alpha: tuple
    gamma: tuple
    cost_fuel: float
    cost_elec: float
    v_floor: float
    r_w: float
    pr: float  # engine power share, frozen for one solve

    def rates(self, v: float, t_w: float):
        p_total = v * t_w / self.r_w
        p_e = self.pr * p_total
        p_m = (1.0 - self.pr) * p_total
        a1, a2, a3, a4 = self.alpha
        g1, g2, g3 = self.gamma
        mf = a1 + a2 * p_e + a3 * p_e ** 2 + a4 * v
        ds = g1 + g2 * p_m + g3 * p_m ** 2
        return p_total, p_e, p_m, mf, ds

    def cost_per_meter(self, v: float, t_w: float) -> float:
        _, _, _, mf, ds = self.rates(v, t_w)
        return (self.cost_fuel * mf - self.cost_elec * ds) / max(v, self.v_floor)

    def cost_gradient(self, v: float, t_w: float):
        """(dE/dv, dE/dT_w) of cost_per_meter."""
        a1, a2, a3, a4 = self.alpha
        g1, g2, g3 = self.gamma
        p_total, p_e, p_m, mf, ds = self.rates(v, t_w)
        num = self.cost_fuel * mf - self.cost_elec * ds
        dnum_dp = (self.cost_fuel * (a2 + 2 * a3 * p_e) * self.pr
                   - self.cost_elec * (g2 + 2 * g3 * p_m) * (1.0 - self.pr))
        dp_dv = t_w / self.r_w
        dp_dt = v / self.r_w
        dnum_dv = dnum_dp * dp_dv + self.cost_fuel * a4
        dnum_dt = dnum_dp * dp_dt
        v_eff = max(v, self.v_floor)
        de_dv = dnum_dv / v_eff
        if v > self.v_floor:
            de_dv -= num / v_eff ** 2
        return de_dv, dnum_dt / v_eff


@dataclass(frozen=True)
class OcpWeights:
    w_ep: float
    w_ev: float
    w_u: float
    w_energy: float


@dataclass
class OcpSpec:
    np_horizon: int
    ts: float
    weights: OcpWeights
    nominal: LongitudinalModel
    adapted: LongitudinalModel
    energy: EnergyModel
    k_c: np.ndarray              # feedback gain on [e_p, e_v, v_h, T_w]
    headway: float
    standstill_gap: float
    sigma: float                 # preceding-acceleration decay, 1/s
    x_sets: list                 # tightened state boxes, len np_horizon + 1
    u_sets: list                 # tightened input boxes, len >= np_horizon
    penalty: float = 1e3
    max_outer: int = 5
    max_inner: int = 5
    gmres_rtol: float = 1e-6
    residual_tol: float = 5e-7

    def __post_init__(self):
        if self.np_horizon < 1:
            raise ValueError("horizon must be at least one step")
        if self.max_outer > 5 or self.max_inner > 5:
            raise ValueError("iteration caps above 5 break the real-time budget")
        self.k_c = np.asarray(self.k_c, dtype=float).reshape(4)
        if len(self.x_sets) < self.np_horizon + 1 or len(self.u_sets) < self.np_horizon:
            raise ValueError("need tightened sets for every horizon step")


@dataclass(frozen=True)
class AugmentedState:
    """Solver anchor state; nominal and estimated blocks must agree because
    the measured current state is not a decision variable."""

    nominal: np.ndarray    # [p_h, v_h, T_w]
    preceding: np.ndarray  # [p_p, v_p, a_p]
    estimated: np.ndarray  # [p_h, v_h, T_w]

    def __post_init__(self):
        nom = np.asarray(self.nominal, dtype=float).copy()
        pre = np.asarray(self.preceding, dtype=float).copy()
        est = np.asarray(self.estimated, dtype=float).copy()
        if nom.shape != (3,) or pre.shape != (3,) or est.shape != (3,):
            raise ValueError("blocks must be 3-vectors")
        if not np.allclose(nom, est, rtol=0, atol=1e-12):
            raise ValueError("nominal and estimated blocks must share the anchor state")
        for v in (nom, pre, est):
            v.setflags(write=False)
        object.__setattr__(self, "nominal", nom)
        object.__setattr__(self, "preceding", pre)
        object.__setattr__(self, "estimated", est)

    @classmethod
    def from_measurement(cls, gap: float, v_p: float, a_p: float,
                         v_h: float, t_w: float) -> "AugmentedState":
        host = np.array([0.0, v_h, t_w])
        return cls(host, np.array([gap, v_p, a_p]), host.copy())

    def vector(self) -> np.ndarray:
        return np.concatenate([self.nominal, self.preceding, self.estimated])


@dataclass
class OcpSolution:
    c0: np.ndarray
    kkt_residual: float = np.inf
    objective: float = np.inf
    solve_time: float = 0.0
    inner_iters: int = 0
    outer_iters: int = 0
    cold_restarts: int = 0
    stagnated: bool = False

    @classmethod
    def cold(cls, np_horizon: int) -> "OcpSolution":
        return cls(c0=np.zeros(np_horizon))


def _spacing_errors(z, block: int, headway: float, d0: float):
    p, v = z[block], z[block + 1]
    e_p = z[_P_PRE] - p - d0 - headway * v
    e_v = z[_V_PRE] - v
    return e_p, e_v


def _block_input(z, block: int, c: float, k_c, headway: float, d0: float) -> float:
    e_p, e_v = _spacing_errors(z, block, headway, d0)
    x_err = (e_p, e_v, z[block + 1], z[block + 2])
    return c - float(k_c[0] * x_err[0] + k_c[1] * x_err[1]
                     + k_c[2] * x_err[2] + k_c[3] * x_err[3])


def field_vector(spec: OcpSpec, z, c: float, grade: float) -> np.ndarray:
    """Continuous-time derivative of the 9-state field vector (reference
    implementation; the rollout inlines this for speed)."""
    f = np.zeros(9)
    for block, model in ((_P_NOM, spec.nominal), (_P_EST, spec.adapted)):
        th = model.theta
        v, t_w = z[block + 1], z[block + 2]
        u_tot = _block_input(z, block, c, spec.k_c, spec.headway, spec.standstill_gap)
        f[block] = v
        f[block + 1] = th[0] * t_w - th[1] * v * v - th[2] * v - th[3] * grade - th[4]
        f[block + 2] = (-t_w + model.k_a * u_tot) / model.tau_a
    f[_P_PRE] = z[_V_PRE]
    f[_V_PRE] = z[_A_PRE]
    f[_A_PRE] = -spec.sigma * z[_A_PRE]
    return f


def rollout(spec: OcpSpec, x0: AugmentedState, c0, grade_preview) -> np.ndarray:
    """Forward-Euler trajectory of the field vector, shape (Np + 1, 9)."""
    c0 = np.asarray(c0, dtype=float)
    if c0.size != spec.np_horizon:
        raise ValueError("input sequence length must match the horizon")
    grade = np.asarray(grade_preview, dtype=float)
    if grade.size < spec.np_horizon:
        raise ValueError("grade preview shorter than the horizon")
    n = spec.np_horizon
    traj = np.empty((n + 1, 9))
    z = tuple(float(v) for v in x0.vector())
    traj[0] = z
    k1, k2, k3, k4 = (float(k) for k in spec.k_c)
    h, d0, ts, sigma = (spec.headway, spec.standstill_gap, spec.ts, spec.sigma)
    tn0, tn1, tn2, tn3, tn4 = (float(v) for v in spec.nominal.theta)
    ta0, ta1, ta2, ta3, ta4 = (float(v) for v in spec.adapted.theta)
    kan, taun = spec.nominal.k_a, spec.nominal.tau_a
    kae, taue = spec.adapted.k_a, spec.adapted.tau_a
    for i in range(n):
        pn, vn, tn, pp, vp, ap, pe, ve, te = z
        phi = float(grade[i])
        c = float(c0[i])
        u_nom = c - (k1 * (pp - pn - d0 - h * vn) + k2 * (vp - vn)
                     + k3 * vn + k4 * tn)
        u_est = c - (k1 * (pp - pe - d0 - h * ve) + k2 * (vp - ve)
                     + k3 * ve + k4 * te)
        z = (pn + ts * vn,
             vn + ts * (tn0 * tn - tn1 * vn * vn - tn2 * vn - tn3 * phi - tn4),
             tn + ts * (-tn + kan * u_nom) / taun,
             pp + ts * vp,
             vp + ts * ap,
             ap - ts * sigma * ap,
             pe + ts * ve,
             ve + ts * (ta0 * te - ta1 * ve * ve - ta2 * ve - ta3 * phi - ta4),
             te + ts * (-te + kae * u_est) / taue)
        traj[i + 1] = z
    if not np.all(np.isfinite(traj)):
        raise FloatingPointError("rollout diverged")
    return traj


def _nominal_constraint_coords(z, headway: float, d0: float):
    e_p, e_v = _spacing_errors(z, _P_NOM, headway, d0)
    return np.array([e_p, e_v, z[_V_NOM], z[_T_NOM]])


def constraint_violations(spec: OcpSpec, trajectory, c0) -> np.ndarray:
    """Signed distances to every finite tightened face, negative when
    satisfied. State faces are evaluated on the nominal block so the
    robustness guarantee never depends on the adapted model; input faces
    act on the solver's own decision sequence."""
    c0 = np.asarray(c0, dtype=float)
    values = []
    for j in range(1, spec.np_horizon + 1):
        q = _nominal_constraint_coords(trajectory[j], spec.headway, spec.standstill_gap)
        box = spec.x_sets[j]
        for d in range(4):
            if np.isfinite(box.upper[d]):
                values.append(q[d] - box.upper[d])
            if np.isfinite(box.lower[d]):
                values.append(box.lower[d] - q[d])
    for i in range(spec.np_horizon):
        box = spec.u_sets[i]
        if np.isfinite(box.upper[0]):
            values.append(float(c0[i]) - box.upper[0])
        if np.isfinite(box.lower[0]):
            values.append(box.lower[0] - float(c0[i]))
    return np.array(values)


def cost(spec: OcpSpec, trajectory, c0, pr: float | None = None,
         a_coeffs=None, g_coeffs=None) -> float:
    """The horizon objective (no penalty): tracking and input effort on the
    adapted block plus the per-step energy cost."""
    energy = spec.energy
    if pr is not None or a_coeffs is not None or g_coeffs is not None:
        energy = EnergyModel(
            alpha=tuple(a_coeffs) if a_coeffs is not None else spec.energy.alpha,
            gamma=tuple(g_coeffs) if g_coeffs is not None else spec.energy.gamma,
            cost_fuel=spec.energy.cost_fuel, cost_elec=spec.energy.cost_elec,
            v_floor=spec.energy.v_floor, r_w=spec.energy.r_w,
            pr=spec.energy.pr if pr is None else pr,
        )
    c0 = np.asarray(c0, dtype=float)
    w = spec.weights
    total = 0.0
    for i in range(spec.np_horizon):
        u_hat = _block_input(trajectory[i], _P_EST, float(c0[i]), spec.k_c,
                             spec.headway, spec.standstill_gap)
        z = trajectory[i + 1]
        e_p, e_v = _spacing_errors(z, _P_EST, spec.headway, spec.standstill_gap)
        total += (w.w_ep * e_p ** 2 + w.w_ev * e_v ** 2 + w.w_u * u_hat ** 2
                  + w.w_energy * energy.cost_per_meter(z[_V_EST], z[_T_EST]))
    return float(total)


def _stage_bound_arrays(spec: OcpSpec):
    """Cache the per-step state/input bounds as dense arrays (inf = inactive)."""
    cached = getattr(spec, "_bound_cache", None)
    if cached is not None:
        return cached
    n = spec.np_horizon
    x_lo = np.stack([spec.x_sets[j].lower for j in range(n + 1)])
    x_hi = np.stack([spec.x_sets[j].upper for j in range(n + 1)])
    u_lo = np.array([spec.u_sets[i].lower[0] for i in range(n)])
    u_hi = np.array([spec.u_sets[i].upper[0] for i in range(n)])
    cached = (x_lo, x_hi, u_lo, u_hi)
    spec._bound_cache = cached
    return cached


def _energy_terms_vec(energy: EnergyModel, v, t_w):
    """Vectorized per-step energy cost and its (dE/dv, dE/dT) over the horizon."""
    a1, a2, a3, a4 = energy.alpha
    g1, g2, g3 = energy.gamma
    p_total = v * t_w / energy.r_w
    p_e = energy.pr * p_total
    p_m = (1.0 - energy.pr) * p_total
    mf = a1 + a2 * p_e + a3 * p_e ** 2 + a4 * v
    ds = g1 + g2 * p_m + g3 * p_m ** 2
    num = energy.cost_fuel * mf - energy.cost_elec * ds
    v_eff = np.maximum(v, energy.v_floor)
    val = num / v_eff
    dnum_dp = (energy.cost_fuel * (a2 + 2 * a3 * p_e) * energy.pr
               - energy.cost_elec * (g2 + 2 * g3 * p_m) * (1.0 - energy.pr))
    de_dv = (dnum_dp * t_w / energy.r_w + energy.cost_fuel * a4) / v_eff
    de_dv = de_dv - np.where(v > energy.v_floor, num / v_eff ** 2, 0.0)
    de_dt = dnum_dp * (v / energy.r_w) / v_eff
    return val, de_dv, de_dt


def _value_and_gradient(spec: OcpSpec, x0: AugmentedState, c0, grade_preview,
                        include_penalty: bool = True):
    """Penalized objective, its exact gradient in c0 (discrete adjoint), and
    the trajectory."""
    c0 = np.asarray(c0, dtype=float)
    grade = np.asarray(grade_preview, dtype=float)
    traj = rollout(spec, x0, c0, grade)
    w = spec.weights
    h, d0 = spec.headway, spec.standstill_gap
    k1, k2, k3, k4 = spec.k_c
    mu = spec.penalty
    n = spec.np_horizon

    # stage state costs at steps 1..Np, vectorized over the horizon
    zs = traj[1:]
    e_p = zs[:, _P_PRE] - zs[:, _P_EST] - d0 - h * zs[:, _V_EST]
    e_v = zs[:, _V_PRE] - zs[:, _V_EST]
    e_cost, de_dv, de_dt = _energy_terms_vec(spec.energy, zs[:, _V_EST],
                                             zs[:, _T_EST])
    value = float(w.w_ep * (e_p @ e_p) + w.w_ev * (e_v @ e_v)
                  + w.w_energy * e_cost.sum())
    grad_h = np.zeros((n + 1, 9))
    gh = grad_h[1:]
    gh[:, _P_PRE] += 2 * w.w_ep * e_p
    gh[:, _P_EST] -= 2 * w.w_ep * e_p
    gh[:, _V_EST] -= 2 * w.w_ep * e_p * h + 2 * w.w_ev * e_v
    gh[:, _V_PRE] += 2 * w.w_ev * e_v
    gh[:, _V_EST] += w.w_energy * de_dv
    gh[:, _T_EST] += w.w_energy * de_dt

    if include_penalty:
        x_lo, x_hi, u_lo, u_hi = _stage_bound_arrays(spec)
        q = np.empty((n, 4))
        q[:, 0] = zs[:, _P_PRE] - zs[:, _P_NOM] - d0 - h * zs[:, _V_NOM]
        q[:, 1] = zs[:, _V_PRE] - zs[:, _V_NOM]
        q[:, 2] = zs[:, _V_NOM]
        q[:, 3] = zs[:, _T_NOM]
        with np.errstate(invalid="ignore"):
            over = np.maximum(0.0, q - x_hi[1:])
            under = np.maximum(0.0, x_lo[1:] - q)
        over[~np.isfinite(over)] = 0.0
        under[~np.isfinite(under)] = 0.0
        value += float(mu * (np.sum(over ** 2) + np.sum(under ** 2)))
        dpen = 2.0 * mu * (over - under)
        gh[:, _P_NOM] -= dpen[:, 0]
        gh[:, _V_NOM] += -dpen[:, 0] * h - dpen[:, 1] + dpen[:, 2]
        gh[:, _T_NOM] += dpen[:, 3]
        gh[:, _P_PRE] += dpen[:, 0]
        gh[:, _V_PRE] += dpen[:, 1]

    # input-effort stage terms use z_i (the state the input acts from)
    za = traj[:-1]
    ep_a = za[:, _P_PRE] - za[:, _P_EST] - d0 - h * za[:, _V_EST]
    ev_a = za[:, _V_PRE] - za[:, _V_EST]
    u_hat = c0 - (k1 * ep_a + k2 * ev_a + k3 * za[:, _V_EST] + k4 * za[:, _T_EST])
    value += float(w.w_u * (u_hat @ u_hat))
    dg_dc = 2 * w.w_u * u_hat
    if include_penalty:
        over_u = np.maximum(0.0, c0 - u_hi)
        under_u = np.maximum(0.0, u_lo - c0)
        value += float(mu * (over_u @ over_u + under_u @ under_u))
        dg_dc = dg_dc + 2.0 * mu * (over_u - under_u)

    # batched step Jacobians (df/dz at z_i), then one backward adjoint sweep
    jac = np.zeros((n, 9, 9))
    for block, model in ((_P_NOM, spec.nominal), (_P_EST, spec.adapted)):
        th = model.theta
        g = model.k_a / model.tau_a
        jac[:, block, block + 1] = 1.0
        jac[:, block + 1, block + 1] = -2.0 * th[1] * za[:, block + 1] - th[2]
        jac[:, block + 1, block + 2] = th[0]
        jac[:, block + 2, block] = g * k1
        jac[:, block + 2, block + 1] = g * (k1 * h + k2 - k3)
        jac[:, block + 2, block + 2] = (-1.0 - model.k_a * k4) / model.tau_a
        jac[:, block + 2, _P_PRE] = -g * k1
        jac[:, block + 2, _V_PRE] = -g * k2
    jac[:, _P_PRE, _V_PRE] = 1.0
    jac[:, _V_PRE, _A_PRE] = 1.0
    jac[:, _A_PRE, _A_PRE] = -spec.sigma

    two_wu = 2 * w.w_u
    b_nom = spec.ts * spec.nominal.k_a / spec.nominal.tau_a
    b_est = spec.ts * spec.adapted.k_a / spec.adapted.tau_a
    grad_c = np.empty(n)
    lam = grad_h[n].copy()
    dg_dz = np.zeros(9)
    for i in range(n - 1, -1, -1):
        grad_c[i] = dg_dc[i] + b_nom * lam[_T_NOM] + b_est * lam[_T_EST]
        if i > 0:
            uh = two_wu * u_hat[i]
            dg_dz[_P_EST] = uh * k1
            dg_dz[_V_EST] = uh * (k1 * h + k2 - k3)
            dg_dz[_T_EST] = -uh * k4
            dg_dz[_P_PRE] = -uh * k1
            dg_dz[_V_PRE] = -uh * k2
            lam = grad_h[i] + dg_dz + lam + spec.ts * (jac[i].T @ lam)
    return float(value), grad_c, traj


def _gmres(apply_op, rhs, max_iter: int, rtol: float):
    """Minimal dense GMRES (no restarts); returns (solution, iterations)."""
    beta = float(np.linalg.norm(rhs))
    if beta == 0.0 or max_iter < 1:
        return np.zeros_like(rhs), 0
    n = rhs.size
    max_iter = min(max_iter, n)
    basis = [rhs / beta]
    hess = np.zeros((max_iter + 1, max_iter))
    y = None
    used = 0
    for j in range(max_iter):
        used = j + 1
        w = apply_op(basis[j])
        for i in range(j + 1):
            hess[i, j] = float(basis[i] @ w)
            w = w - hess[i, j] * basis[i]
        hess[j + 1, j] = float(np.linalg.norm(w))
        e1 = np.zeros(j + 2)
        e1[0] = beta
        y, res, _, _ = np.linalg.lstsq(hess[: j + 2, : j + 1], e1, rcond=None)
        resid = float(np.linalg.norm(hess[: j + 2, : j + 1] @ y - e1))
        if hess[j + 1, j] < 1e-14 or resid <= rtol * beta:
            break
        basis.append(w / hess[j + 1, j])
    x = np.zeros_like(rhs)
    for i in range(y.size):
        x += y[i] * basis[i]
    return x, used


def solve_step(spec: OcpSpec, x0: AugmentedState, warm: OcpSolution | None,
               grade_preview) -> OcpSolution:
    """One control period's continuation update: Newton corrections on the
    optimality residual, each solved approximately by matrix-free GMRES.

    Never returns an iterate with a larger residual than the warm start;
    a non-finite residual triggers a cold restart from zero inputs.
    """
    t_start = time.perf_counter()
    n = spec.np_horizon
    c = warm.c0.copy() if warm is not None else np.zeros(n)
    if c.size != n:
        raise ValueError("warm start length mismatch")
    grade = np.asarray(grade_preview, dtype=float)

    cold_restarts = 0
    stagnated = False

    def evaluate(cand):
        value, grad, _ = _value_and_gradient(spec, x0, cand, grade)
        return value, grad

    try:
        value, f = evaluate(c)
    except FloatingPointError:
        c = np.zeros(n)
        value, f = evaluate(c)
        cold_restarts += 1
    if not np.all(np.isfinite(f)):
        c = np.zeros(n)
        value, f = evaluate(c)
        cold_restarts += 1

    best = (c.copy(), float(np.linalg.norm(f)), value, f)
    inner_total = 0
    outer = 0
    for outer in range(1, spec.max_outer + 1):
        f_norm = float(np.linalg.norm(f))
        if f_norm <= spec.residual_tol:
            break
        fd_scale = 1e-7 * (1.0 + float(np.linalg.norm(c)))

        def apply_jac(v):
            nv = float(np.linalg.norm(v))
            if nv == 0.0:
                return np.zeros_like(v)
            step = fd_scale / nv
            return (evaluate(c + step * v)[1] - f) / step

        delta, inner = _gmres(apply_jac, -f, spec.max_inner, spec.gmres_rtol)
        inner_total += inner
        improved = False
        scale_step = 1.0
        for _ in range(4):
            try:
                v_new, f_new = evaluate(c + scale_step * delta)
            except FloatingPointError:
                scale_step *= 0.5
                continue
            if np.all(np.isfinite(f_new)) and np.linalg.norm(f_new) < f_norm:
                c = c + scale_step * delta
                value, f = v_new, f_new
                improved = True
                break
            scale_step *= 0.5
        if not improved:
            stagnated = True
            break
        if np.linalg.norm(f) < best[1]:
            best = (c.copy(), float(np.linalg.norm(f)), value, f)

    if best[1] < float(np.linalg.norm(f)):
        c, _, value, f = best
        c = c.copy()

    # saturate into the tightened input boxes; skip the extra evaluation when
    # saturation leaves the iterate untouched
    x_lo, x_hi, u_lo, u_hi = _stage_bound_arrays(spec)
    saturated = np.clip(c, u_lo, u_hi)
    if np.array_equal(saturated, c):
        kkt = float(np.linalg.norm(f))
    else:
        value, grad, _ = _value_and_gradient(spec, x0, saturated, grade)
        kkt = float(np.linalg.norm(grad))
    return OcpSolution(
        c0=saturated,
        kkt_residual=kkt,
        objective=value,
        solve_time=time.perf_counter() - t_start,
        inner_iters=inner_total,
        outer_iters=outer,
        cold_restarts=cold_restarts,
        stagnated=stagnated,
    )
