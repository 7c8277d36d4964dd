"""Flow-line integration for tube fields.

Trajectories are computed with the adaptive Dormand-Prince 5(4) pair
(scipy's RK45) and carry dense output, so downstream consumers can resample
the polyline to any segment length without re-integrating.  The fields are
only C^1 at tube boundaries; step-size control absorbs the reduced local
order there.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import RK45, OdeSolution

from .fields import FieldSpec, as_vec3


@dataclass(frozen=True)
class StepControl:
    """Integrator tolerances and limits."""

    rel_tol: float = 1e-9
    abs_tol: float = 1e-9
    max_step: float = 0.05
    max_steps: int = 500_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0 and self.max_step > 0
                and self.max_steps > 0):
            raise ValueError("StepControl fields must all be positive")


class FlowError(RuntimeError):
    """Integration failure; carries the partial trajectory computed so far."""

    def __init__(self, message: str, trajectory: "Trajectory | None" = None):
        super().__init__(message)
        self.trajectory = trajectory


class _DenseSlice:
    """View of one 3-vector block of a stacked dense solution."""

    def __init__(self, sol, index: int):
        self._sol = sol
        self._i = 3 * index

    def __call__(self, t):
        y = self._sol(t)
        return y[self._i:self._i + 3]


@dataclass
class Trajectory:
    """Time-stamped polyline approximation of a flow arc.

    `t` is strictly increasing from 0 to T; `points[k]` is the position at
    `t[k]`; `dense` (when present) interpolates positions over [0, T].
    """

    t: np.ndarray
    points: np.ndarray
    field: FieldSpec | None = None
    dense: object | None = dc_field(default=None, repr=False)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise ValueError("points must have shape (n, 3)")
        if self.t.shape != (self.points.shape[0],):
            raise ValueError("t and points lengths differ")
        if len(self.t) and self.t[0] != 0.0:
            raise ValueError("trajectories start at t = 0")
        if np.any(np.diff(self.t) <= 0.0):
            raise ValueError("sample times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.t)

    @property
    def t0(self) -> float:
        return float(self.t[0])

    @property
    def T(self) -> float:
        return float(self.t[-1])

    @property
    def start(self) -> np.ndarray:
        return self.points[0]

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]

    def position(self, t) -> np.ndarray:
        """Position at time(s) t in [0, T] via dense output (linear
        interpolation of the samples when no dense output is attached)."""
        t = np.clip(np.asarray(t, dtype=float), 0.0, self.T)
        if self.dense is not None:
            if t.ndim == 0:
                return np.asarray(self.dense(float(t)), dtype=float)
            return np.stack([np.asarray(self.dense(tv), dtype=float) for tv in t])
        if t.ndim == 0:
            return np.array([np.interp(t, self.t, self.points[:, k]) for k in range(3)])
        return np.stack([np.interp(t, self.t, self.points[:, k]) for k in range(3)], axis=-1)

    def truncate(self, T_new: float) -> "Trajectory":
        """Restriction to [0, T_new] (requires T_new <= T)."""
        if T_new > self.T + 1e-12:
            raise ValueError(f"cannot truncate to {T_new} > T = {self.T}")
        T_new = min(T_new, self.T)
        keep = self.t <= T_new + 1e-15
        t = self.t[keep]
        pts = self.points[keep]
        if t[-1] < T_new - 1e-15:
            t = np.append(t, T_new)
            pts = np.vstack([pts, self.position(T_new)])
        return Trajectory(t, pts, field=self.field, dense=self.dense)

    def chord_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.points, axis=0), axis=1)

    def to_csv(self, path) -> None:
        data = np.column_stack([self.t, self.points])
        np.savetxt(path, data, delimiter=",", header="t,x,y,z", comments="", fmt="%.17g")

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        data = np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=1))
        return cls(data[:, 0], data[:, 1:4])


def _rk45_arc(fun, y0: np.ndarray, T: float, ctrl: StepControl):
    """Run RK45 over [0, T]; returns (times, states, dense solution)."""
    ts = [0.0]
    ys = [y0.copy()]
    interpolants = []
    solver = RK45(fun, 0.0, y0, t_bound=T, rtol=ctrl.rel_tol, atol=ctrl.abs_tol,
                  max_step=ctrl.max_step)
    nsteps = 0
    while solver.status == "running":
        if nsteps >= ctrl.max_steps:
            return ts, ys, interpolants, False
        msg = solver.step()
        if solver.status == "failed":
            raise FlowError(f"integrator failed: {msg}")
        interpolants.append(solver.dense_output())
        ts.append(solver.t)
        ys.append(solver.y.copy())
        nsteps += 1
    return ts, ys, interpolants, True


def integrate(field: FieldSpec, x0, T: float, ctrl: StepControl = StepControl()) -> Trajectory:
    """Flow line of `field` from x0 over [0, T].

    Raises FlowError (carrying the partial trajectory) if ctrl.max_steps is
    exhausted before reaching T.
    """
    x0 = as_vec3(x0)
    if T < 0:
        raise ValueError("T must be nonnegative")
    if T == 0.0:
        return Trajectory(np.zeros(1), x0[None, :], field=field)
    ts, ys, interps, complete = _rk45_arc(lambda t, y: field.eval(y), x0, T, ctrl)
    dense = OdeSolution(np.asarray(ts), interps) if interps else None
    traj = Trajectory(np.asarray(ts), np.asarray(ys), field=field, dense=dense)
    if not complete:
        raise FlowError(f"max_steps = {ctrl.max_steps} exceeded at t = {ts[-1]:.6g} < T = {T:.6g}",
                        trajectory=traj)
    return traj


def integrate_batch(field: FieldSpec, seeds, T: float,
                    ctrl: StepControl = StepControl()) -> list[Trajectory]:
    """Flow lines from several seeds, integrated as one stacked system.

    One adaptive solve serves all seeds, which amortizes the per-step cost;
    the step controller bounds the RMS error of the stacked state, so
    individual seeds see tolerances looser by at most sqrt(n_seeds).
    """
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    if seeds.shape[1] != 3:
        raise ValueError("seeds must have shape (n, 3)")
    n = len(seeds)
    if T < 0:
        raise ValueError("T must be nonnegative")
    if T == 0.0 or n == 0:
        return [Trajectory(np.zeros(1), s[None, :], field=field) for s in seeds]

    def fun(t, y):
        return field.eval(y.reshape(n, 3)).ravel()

    ts, ys, interps, complete = _rk45_arc(fun, seeds.ravel(), T, ctrl)
    if not complete:
        raise FlowError(f"max_steps = {ctrl.max_steps} exceeded in batch integration "
                        f"at t = {ts[-1]:.6g} < T = {T:.6g}")
    t_arr = np.asarray(ts)
    y_arr = np.asarray(ys).reshape(len(ts), n, 3)
    sol = OdeSolution(t_arr, interps)
    return [Trajectory(t_arr.copy(), y_arr[:, i, :].copy(), field=field,
                       dense=_DenseSlice(sol, i)) for i in range(n)]


def flow_jacobian_det(field: FieldSpec, x0, T: float, h: float = 1e-4,
                      ctrl: StepControl = StepControl()) -> float:
    """Determinant of the central-difference Jacobian of the time-T flow map.

    Equals 1 up to O(h^2) + integration error for divergence-free fields.
    """
    if not h > 0:
        raise ValueError("finite-difference step h must be positive")
    x0 = as_vec3(x0)
    offsets = np.vstack([np.eye(3) * h, -np.eye(3) * h])
    trajs = integrate_batch(field, x0 + offsets, T, ctrl)
    ends = np.array([tr.end for tr in trajs])
    jac = (ends[:3] - ends[3:]).T / (2.0 * h)
    return float(np.linalg.det(jac))


def resample(traj: Trajectory, max_seglen: float) -> Trajectory:
    """Piecewise-linear refinement with every chord <= max_seglen.

    Dense output is used when available; otherwise chords are subdivided
    linearly.  Endpoints are preserved exactly.
    """
    if not max_seglen > 0:
        raise ValueError("max_seglen must be positive")
    if len(traj) < 2:
        return Trajectory(traj.t.copy(), traj.points.copy(), field=traj.field,
                          dense=traj.dense)

    if traj.dense is not None:
        t = traj.t.copy()
        pts = traj.points.copy()
        for _ in range(64):
            seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
            bad = seg > max_seglen
            if not np.any(bad):
                break
            mids = 0.5 * (t[:-1][bad] + t[1:][bad])
            t = np.sort(np.concatenate([t, mids]))
            pts = traj.position(t)
            # keep original endpoint samples bit-exact
            pts[0] = traj.points[0]
            pts[-1] = traj.points[-1]
        else:
            raise FlowError("resample did not converge; degenerate time grid?")
        return Trajectory(t, pts, field=traj.field, dense=traj.dense)

    # no dense output: split each chord uniformly
    new_t = [traj.t[:1]]
    new_p = [traj.points[:1]]
    for k in range(len(traj) - 1):
        seg = np.linalg.norm(traj.points[k + 1] - traj.points[k])
        m = max(1, int(np.ceil(seg / max_seglen)))
        frac = np.arange(1, m + 1) / m
        new_t.append(traj.t[k] + frac * (traj.t[k + 1] - traj.t[k]))
        new_p.append(traj.points[k] + frac[:, None] * (traj.points[k + 1] - traj.points[k]))
    return Trajectory(np.concatenate(new_t), np.vstack(new_p), field=traj.field)
