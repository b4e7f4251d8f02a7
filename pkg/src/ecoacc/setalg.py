"""Axis-aligned set arithmetic and error-tube construction for tube-based MPC.

All sets are interval boxes. Boxes are closed under Minkowski sums,
Pontryagin differences and interval-arithmetic images of linear maps,
which is everything the robust constraint-tightening pipeline needs.
Linear maps are over-approximated soundly (the image of a box under a
matrix is generally not a box); a single application is tight per output
dimension.

Values are immutable after construction and all operations are pure, so
they are safe to share across threads. Tube construction happens once at
controller setup, never inside the control loop.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InfeasibleTighteningError

GRAVITY = 9.81


@dataclass(frozen=True)
class IntervalBox:
    """Axis-aligned box {x : lower <= x <= upper}, or the explicit empty set."""

    lower: np.ndarray
    upper: np.ndarray
    is_empty: bool = False

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float)).copy()
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float)).copy()
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError(f"bound shapes differ: {lo.shape} vs {hi.shape}")
        if not self.is_empty and np.any(lo > hi):
            raise ValueError("lower bound exceeds upper bound; use IntervalBox.empty()")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def empty(cls, dim: int) -> "IntervalBox":
        return cls(np.zeros(dim), np.zeros(dim), is_empty=True)

    @classmethod
    def point(cls, x) -> "IntervalBox":
        x = np.asarray(x, dtype=float)
        return cls(x, x)

    @classmethod
    def zero(cls, dim: int) -> "IntervalBox":
        return cls.point(np.zeros(dim))

    @classmethod
    def symmetric(cls, radius) -> "IntervalBox":
        r = np.abs(np.asarray(radius, dtype=float))
        return cls(-r, r)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def radius(self) -> np.ndarray:
        """Per-dimension half-width; zeros for the empty box."""
        if self.is_empty:
            return np.zeros(self.dim)
        return 0.5 * (self.upper - self.lower)

    def contains(self, points, tol: float = 0.0) -> np.ndarray:
        """Elementwise membership test for an (n, dim) array of points."""
        if self.is_empty:
            pts = np.atleast_2d(points)
            return np.zeros(pts.shape[0], dtype=bool)
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all((pts >= self.lower - tol) & (pts <= self.upper + tol), axis=1)

    def contains_box(self, other: "IntervalBox", tol: float = 0.0) -> bool:
        if other.is_empty:
            return True
        if self.is_empty:
            return False
        return bool(
            np.all(other.lower >= self.lower - tol)
            and np.all(other.upper <= self.upper + tol)
        )

    def contains_zero(self, tol: float = 1e-12) -> bool:
        return not self.is_empty and bool(
            np.all(self.lower <= tol) and np.all(self.upper >= -tol)
        )

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Uniform samples, shape (n, dim). Requires a nonempty, finite box."""
        if self.is_empty:
            raise ValueError("cannot sample the empty box")
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise ValueError("cannot sample an unbounded box")
        return rng.uniform(self.lower, self.upper, size=(n, self.dim))


@dataclass(frozen=True)
class TubeSequence:
    """Per-step error boxes for the prediction horizon.

    boxes[0] is the zero box (the measured current state is exact); box i
    bounds the deviation of the true state from the nominal prediction at
    step i. Boxes grow monotonically because they are cumulative sums of
    mapped disturbance sets.
    """

    boxes: tuple

    def __post_init__(self):
        boxes = tuple(self.boxes)
        if not boxes:
            raise ValueError("tube must contain at least one box")
        if np.any(boxes[0].radius > 0):
            raise ValueError("tube must start at the zero box")
        for i in range(len(boxes) - 1):
            if not boxes[i + 1].contains_box(boxes[i], tol=1e-9):
                raise ValueError(f"tube boxes must be nested; step {i} is not")
        object.__setattr__(self, "boxes", boxes)

    def __len__(self) -> int:
        return len(self.boxes)

    def __getitem__(self, i: int) -> IntervalBox:
        return self.boxes[i]

    def radii(self) -> np.ndarray:
        """(steps, dim) matrix of per-step half-widths, for reporting."""
        return np.array([b.radius for b in self.boxes])


@dataclass(frozen=True)
class DisturbanceSpec:
    """The four per-step additive disturbance boxes and their Minkowski sum.

    All boxes are discrete-time state increments in [m, m/s, m/s, N*m].
    """

    w_g: IntervalBox
    w_tau: IntervalBox
    w_a: IntervalBox
    w_h: IntervalBox
    combined: IntervalBox

    def __post_init__(self):
        parts = (self.w_g, self.w_tau, self.w_a, self.w_h)
        for name, box in zip(("w_g", "w_tau", "w_a", "w_h"), parts):
            if not box.contains_zero(tol=1e-9):
                raise ValueError(f"disturbance component {name} must contain zero")
        total = parts[0]
        for box in parts[1:]:
            total = minkowski_sum(total, box)
        if not (
            np.allclose(total.lower, self.combined.lower, atol=1e-9)
            and np.allclose(total.upper, self.combined.upper, atol=1e-9)
        ):
            raise ValueError("combined box must equal the sum of the components")


PARAM_NAMES = ("m", "r_w", "c_d", "mu_rv", "mu_r0", "phi_r", "v_w", "eta_p")


@dataclass(frozen=True)
class UncertainParams:
    """Nominal value and bounds for the uncertain longitudinal parameters.

    Order: mass, wheel radius, drag coefficient, speed-dependent and static
    rolling-resistance coefficients, road grade error, wind speed,
    driveline efficiency.
    """

    nominal: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        nom = np.asarray(self.nominal, dtype=float).copy()
        lo = np.asarray(self.lower, dtype=float).copy()
        hi = np.asarray(self.upper, dtype=float).copy()
        for v in (nom, lo, hi):
            if v.shape != (len(PARAM_NAMES),):
                raise ValueError(f"expected {len(PARAM_NAMES)} parameters, got {v.shape}")
        if np.any(lo > nom) or np.any(nom > hi):
            raise ValueError("parameter bounds must satisfy lower <= nominal <= upper")
        for v in (nom, lo, hi):
            v.setflags(write=False)
        object.__setattr__(self, "nominal", nom)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def named(self, which: str = "nominal") -> dict:
        vec = getattr(self, which)
        return dict(zip(PARAM_NAMES, vec))


def _check_dims(a: IntervalBox, b: IntervalBox, op: str):
    if a.dim != b.dim:
        raise ValueError(f"{op}: dimension mismatch ({a.dim} vs {b.dim})")


def minkowski_sum(a: IntervalBox, b: IntervalBox) -> IntervalBox:
    """Set sum {x + y : x in a, y in b}; exact for boxes."""
    _check_dims(a, b, "minkowski_sum")
    if a.is_empty or b.is_empty:
        raise ValueError("minkowski_sum requires nonempty operands")
    return IntervalBox(a.lower + b.lower, a.upper + b.upper)


def pontryagin_diff(a: IntervalBox, b: IntervalBox) -> IntervalBox:
    """Set erosion {v : v + b is contained in a}; empty if b is too wide.

    The empty result is a valid value: callers detect it to diagnose
    infeasible constraint tightening.
    """
    _check_dims(a, b, "pontryagin_diff")
    if a.is_empty:
        return IntervalBox.empty(a.dim)
    if b.is_empty:
        raise ValueError("pontryagin_diff by the empty set is undefined")
    lo = a.lower - b.lower
    hi = a.upper - b.upper
    if np.any(lo > hi):
        return IntervalBox.empty(a.dim)
    return IntervalBox(lo, hi)


def linear_map(matrix, x: IntervalBox) -> IntervalBox:
    """Interval-arithmetic image of a box under a matrix; contains {Mx : x in box}."""
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    if m.shape[1] != x.dim:
        raise ValueError(f"linear_map: matrix has {m.shape[1]} columns, box dim {x.dim}")
    if x.is_empty:
        return IntervalBox.empty(m.shape[0])
    if not (np.all(np.isfinite(x.lower)) and np.all(np.isfinite(x.upper))):
        raise ValueError("linear_map requires a bounded box")
    center = m @ x.center
    spread = np.abs(m) @ x.radius
    return IntervalBox(center - spread, center + spread)


def scale(box: IntervalBox, factor: float) -> IntervalBox:
    """Image of a box under scalar multiplication."""
    if box.is_empty:
        return box
    if factor >= 0:
        return IntervalBox(factor * box.lower, factor * box.upper)
    return IntervalBox(factor * box.upper, factor * box.lower)


def longitudinal_accel(params, v_h, t_com, rho_a: float, frontal_area: float,
                       r_g: float = 1.0):
    """Host acceleration from the parametric longitudinal model.

    ``params`` is an (..., 8) array in PARAM_NAMES order; broadcasts over
    leading axes so vertex/grid sweeps evaluate in one shot.
    """
    p = np.asarray(params, dtype=float)
    m, r_w, c_d, mu_rv, mu_r0, phi_r, v_w, eta_p = (p[..., i] for i in range(8))
    drive = r_g * eta_p * t_com / (r_w * m)
    drag = 0.5 * rho_a * frontal_area * c_d * (v_h + v_w) ** 2 / m
    roll = GRAVITY * (mu_r0 + mu_rv * v_h) * np.cos(phi_r)
    grade = GRAVITY * np.sin(phi_r)
    return drive - drag - roll - grade


def lipschitz_disturbance(params: UncertainParams, rho_a: float, frontal_area: float,
                          headway: float, v_max: float,
                          error_region: IntervalBox) -> IntervalBox:
    """Rate-disturbance box covering the drag nonlinearity's prediction error.

    The drag term is quadratic in velocity, so its slope over
    [0, v_max + v_w_max] bounds the mismatch between true and nominal
    trajectories by slope * max ||e||_2 over the expected error region.
    The bound enters the state equations through the road-load input
    directions [-h, -1, 1, 0]; the torque row is untouched. Units are
    state rates (an acceleration-level bound); callers scale by the step
    length when assembling a discrete-time disturbance.
    """
    if v_max <= 0:
        raise ValueError("v_max must be positive")
    if error_region.is_empty or not error_region.contains_zero(tol=1e-9):
        raise ValueError("error_region must be nonempty and include the origin")
    p = params.named("nominal")
    hi = params.named("upper")
    if not np.all(np.isfinite(params.nominal)):
        raise ValueError("non-finite nominal parameters")
    c_d = max(p["c_d"], hi["c_d"])
    v_w_max = max(abs(params.lower[PARAM_NAMES.index("v_w")]),
                  abs(hi["v_w"]))
    mass = min(p["m"], params.lower[PARAM_NAMES.index("m")])
    lip = rho_a * frontal_area * c_d * (v_max + v_w_max) / mass
    corner = np.maximum(np.abs(error_region.lower), np.abs(error_region.upper))
    bound = lip * float(np.linalg.norm(corner))
    b_g = np.array([-headway, -1.0, 1.0, 0.0])
    return IntervalBox.symmetric(np.abs(b_g) * bound)


def delay_disturbance(t_d: float, k_c, x: IntervalBox, u: IntervalBox,
                      a_p: IntervalBox, w: IntervalBox,
                      a, b, b_p) -> IntervalBox:
    """Rate-disturbance box for feedback acting on delay-stale measurements.

    The state mismatch over one delay interval is bounded by t_d times the
    reachable rate set dX = A X (+) B U (+) B_p A_p (+) W; feeding that
    mismatch through the feedback gain and the input matrix bounds the
    resulting disturbance.
    """
    if t_d < 0:
        raise ValueError("delay bound must be nonnegative")
    for name, box in (("X", x), ("U", u), ("A_p", a_p), ("W", w)):
        if box.is_empty:
            raise ValueError(f"delay_disturbance: {name} must be nonempty")
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.asarray(b, dtype=float).reshape(a.shape[0], -1)
    b_p = np.asarray(b_p, dtype=float).reshape(a.shape[0], -1)
    k_c = np.asarray(k_c, dtype=float).reshape(b.shape[1], a.shape[1])
    dx = minkowski_sum(linear_map(a, x), linear_map(b, u))
    dx = minkowski_sum(dx, minkowski_sum(linear_map(b_p, a_p), w))
    return linear_map(t_d * (b @ k_c), dx)


def param_uncertainty_disturbance(params: UncertainParams, v_h_max: float,
                                  t_range, b_g, dt: float,
                                  rho_a: float, frontal_area: float,
                                  r_g: float = 1.0,
                                  grid: tuple = (50, 50)) -> IntervalBox:
    """State-increment box covering acceleration error from parameter bounds.

    Extremizes a_h(params) - a_h(nominal) over the parameter box jointly
    with the operating envelope. The model is monotone in every parameter
    at a fixed operating point, so the parameter optimum sits at a vertex;
    the operating point is swept on a grid.
    """
    t_min, t_max = float(t_range[0]), float(t_range[1])
    if t_min > t_max:
        raise ValueError("torque range inverted")
    if np.any(params.lower > params.upper):
        raise ValueError("empty parameter box")
    corners = np.array(list(itertools.product(*zip(params.lower, params.upper))))
    v_grid = np.linspace(0.0, v_h_max, grid[0])
    t_grid = np.linspace(t_min, t_max, grid[1])
    vv, tt = np.meshgrid(v_grid, t_grid, indexing="ij")
    # (corners, v, T) broadcast: corners on axis 0, operating grid on 1-2
    a_true = longitudinal_accel(corners[:, None, None, :], vv[None], tt[None],
                                rho_a, frontal_area, r_g)
    a_nom = longitudinal_accel(params.nominal, vv, tt, rho_a, frontal_area, r_g)
    err = a_true - a_nom[None]
    e_a = IntervalBox(np.array([float(err.min())]), np.array([float(err.max())]))
    b_g = np.asarray(b_g, dtype=float).reshape(-1, 1)
    return linear_map(dt * b_g, e_a)


def cumulative_reach_sets(a_c, w: IntervalBox, n: int,
                          require_stable: bool = True) -> list:
    """Raw cumulative reach boxes Phi_i = sum of A^j W for j <= i, i = 0..n.

    ``require_stable=False`` admits marginal (spectral radius exactly 1)
    closed loops, whose finite sums are still bounded; genuinely expansive
    matrices are always rejected.
    """
    a_c = np.atleast_2d(np.asarray(a_c, dtype=float))
    if a_c.shape[0] != a_c.shape[1] or a_c.shape[0] != w.dim:
        raise ValueError("closed-loop matrix must be square and match the box")
    if n < 0:
        raise ValueError("need at least one step")
    spectral = float(np.max(np.abs(np.linalg.eigvals(a_c))))
    limit = 1.0 if require_stable else 1.0 + 1e-9
    if spectral > limit or (require_stable and spectral >= 1.0):
        raise ConfigError(
            f"closed-loop spectral radius {spectral:.4f} too large; the error "
            "tube would diverge — retune the stabilizer"
        )
    phis = [w]
    mapped = w
    for _ in range(n):
        mapped = linear_map(a_c, mapped)
        phis.append(minkowski_sum(phis[-1], mapped))
    return phis


def reachable_tube(a_c, w: IntervalBox, np_horizon: int,
                   step_offset: int = 1,
                   require_stable: bool = True) -> TubeSequence:
    """Controller tube over the horizon: zero box at the anchor step, then
    cumulative reach sets.

    With the default offset the box applied at predicted step i is the
    (i-1)-th cumulative reach set (the first predicted state has absorbed
    exactly one disturbance). Offset 0 applies the i-th set instead, one
    step more conservative.
    """
    if np_horizon < 1:
        raise ValueError("horizon must be at least one step")
    if step_offset not in (0, 1):
        raise ValueError("step_offset must be 0 or 1")
    phis = cumulative_reach_sets(a_c, w, np_horizon + 1 - step_offset,
                                 require_stable=require_stable)
    start = 1 - step_offset
    boxes = [IntervalBox.zero(w.dim)] + phis[start:start + np_horizon]
    return TubeSequence(tuple(boxes))


def tighten_constraints(x: IntervalBox, u: IntervalBox, k_c,
                        tube: TubeSequence):
    """Per-step state boxes X (-) Phi[i] and input boxes U (-) (-Kc Phi[i]).

    Raises InfeasibleTighteningError naming the first step whose tightened
    set comes out empty.
    """
    if x.is_empty or u.is_empty:
        raise ValueError("state and input constraint boxes must be nonempty")
    k_c = np.asarray(k_c, dtype=float).reshape(u.dim, x.dim)
    states = []
    inputs = []
    for i, phi in enumerate(tube.boxes):
        xt = pontryagin_diff(x, phi)
        if xt.is_empty:
            raise InfeasibleTighteningError(i, "state")
        states.append(xt)
        ut = pontryagin_diff(u, linear_map(-k_c, phi))
        if ut.is_empty:
            raise InfeasibleTighteningError(i, "input")
        inputs.append(ut)
    return states, inputs
