"""Particle swarm state, the velocity/position update and full runs."""

from __future__ import annotations

import struct
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .configspace import HyperParams, TopologyKind
from .suite import LOWER, UPPER, ProblemInstance, evaluate_batch
from .topology import NeighborhoodGraph, local_best, ring_neighbors, star_neighbors, von_neumann_k


class RunAborted(RuntimeError):
    """A run hit a non-finite objective value; ``record`` carries the context."""

    def __init__(self, message: str, record: dict):
        super().__init__(message)
        self.record = record


@dataclass(frozen=True)
class RunSpec:
    instance: ProblemInstance
    config: HyperParams
    topology: TopologyKind
    budget: int
    seed: int

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        object.__setattr__(self, "topology", TopologyKind(self.topology))


@dataclass
class SwarmState:
    positions: np.ndarray
    velocities: np.ndarray
    pbest_positions: np.ndarray
    pbest_values: np.ndarray
    t: int
    rng: np.random.Generator = field(repr=False)
    graph: NeighborhoodGraph | None = field(default=None, repr=False)

    @property
    def best_value(self) -> float:
        return float(self.pbest_values.min())


@dataclass
class RunTrajectory:
    best_so_far: np.ndarray
    final_position: np.ndarray
    wall_time: float = 0.0


def init_swarm(spec: RunSpec) -> SwarmState:
    """Uniform positions in the box, zero velocities, personal bests at the start."""
    n, dim = spec.config.n_particles, spec.instance.dim
    rng = np.random.default_rng(spec.seed)
    pos = rng.uniform(LOWER, UPPER, size=(n, dim))
    vals = _objective(spec, pos, 0)
    graph = None
    if spec.topology is TopologyKind.VON_NEUMANN:
        k = von_neumann_k(dim, spec.config.r, n)
        graph = ring_neighbors(pos, k, spec.config.p, static=True)
    elif spec.topology is TopologyKind.STAR:
        graph = star_neighbors(n)
    return SwarmState(pos, np.zeros_like(pos), pos.copy(), vals, 0, rng, graph)


def _objective(spec: RunSpec, X: np.ndarray, t: int) -> np.ndarray:
    vals = evaluate_batch(spec.instance, X)
    if not np.all(np.isfinite(vals)):
        bad = int(np.flatnonzero(~np.isfinite(vals))[0])
        raise RunAborted(
            f"non-finite objective at iteration {t}",
            {"fid": spec.instance.fid, "iid": spec.instance.iid, "dim": spec.instance.dim,
             "seed": spec.seed, "t": t, "particle": bad, "position": X[bad].tolist()},
        )
    return vals


def attractors(state: SwarmState, spec: RunSpec) -> np.ndarray:
    """Neighbourhood-best personal-best position for every particle."""
    if spec.topology is TopologyKind.RING:
        graph = ring_neighbors(state.positions, spec.config.k, spec.config.p)
    else:
        graph = state.graph
    return state.pbest_positions[local_best(graph, state.pbest_values)]


def velocity_update(v, x, pbest, lbest, r1, r2, cfg: HyperParams):
    return cfg.w * v + cfg.c1 * r1 * (pbest - x) + cfg.c2 * r2 * (lbest - x)


def draw_coefficients(rng: np.random.Generator, n: int, dim: int) -> tuple[np.ndarray, np.ndarray]:
    # per particle: dim r1 draws, then dim r2 draws
    block = rng.random((n, 2, dim))
    return block[:, 0, :], block[:, 1, :]


def step(state: SwarmState, spec: RunSpec, coefficients=None) -> SwarmState:
    """Advance the swarm one iteration.

    ``coefficients`` overrides the random ``(r1, r2)`` pair; it exists for
    tests that pin the update to hand-computed values.
    """
    if state.t >= spec.budget:
        raise ValueError("run budget exhausted")
    n, dim = state.positions.shape
    lbest = attractors(state, spec)
    if coefficients is None:
        r1, r2 = draw_coefficients(state.rng, n, dim)
    else:
        r1, r2 = (np.broadcast_to(np.asarray(c, dtype=float), (n, dim)) for c in coefficients)
    vel = velocity_update(state.velocities, state.positions, state.pbest_positions, lbest, r1, r2, spec.config)
    pos = state.positions + vel
    vals = _objective(spec, pos, state.t + 1)
    better = vals < state.pbest_values
    pb_pos = np.where(better[:, None], pos, state.pbest_positions)
    pb_val = np.where(better, vals, state.pbest_values)
    return replace(state, positions=pos, velocities=vel, pbest_positions=pb_pos, pbest_values=pb_val, t=state.t + 1)


def run(spec: RunSpec, per_evaluation: bool = False) -> RunTrajectory:
    """Run the full budget and log the best-so-far value.

    By default one value per iteration; with ``per_evaluation`` one value
    per objective evaluation after initialisation (particles are evaluated
    in index order).
    """
    start = time.perf_counter()
    state = init_swarm(spec)
    n = spec.config.n_particles
    best = np.empty(spec.budget * n if per_evaluation else spec.budget)
    for t in range(spec.budget):
        prev = state.best_value
        try:
            state = step(state, spec)
        except RunAborted as exc:
            exc.record.update(topology=spec.topology.value, budget=spec.budget)
            raise
        if per_evaluation:
            # a new personal best is never worse than the old swarm best, so
            # the running minimum over pbests in index order is exact
            best[t * n : (t + 1) * n] = np.minimum(prev, np.minimum.accumulate(state.pbest_values))
        else:
            best[t] = state.pbest_values.min()
    final = state.pbest_positions[int(np.argmin(state.pbest_values))].copy()
    return RunTrajectory(best, final, time.perf_counter() - start)


# --------------------------------------------------------------------------
# trajectory export

TRAJ_MAGIC = b"PSOT"
_HEADER = struct.Struct("<4sII")


def trajectory_csv(traj: RunTrajectory) -> str:
    lines = ["iteration,best_so_far"]
    lines += [f"{i + 1},{v!r}" for i, v in enumerate(traj.best_so_far.tolist())]
    return "\n".join(lines) + "\n"


def pack_trajectories(trajs: list[RunTrajectory]) -> bytes:
    """Little-endian block: magic ``PSOT``, uint32 count, uint32 budget, float64 values."""
    budget = len(trajs[0].best_so_far) if trajs else 0
    if any(len(t.best_so_far) != budget for t in trajs):
        raise ValueError("all trajectories in a block must share the budget")
    body = np.concatenate([t.best_so_far for t in trajs]) if trajs else np.empty(0)
    return _HEADER.pack(TRAJ_MAGIC, len(trajs), budget) + body.astype("<f8").tobytes()


def unpack_trajectories(blob: bytes) -> np.ndarray:
    magic, count, budget = _HEADER.unpack_from(blob)
    if magic != TRAJ_MAGIC:
        raise ValueError("not a packed trajectory block")
    data = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size)
    if data.size != count * budget:
        raise ValueError("truncated trajectory block")
    return data.reshape(count, budget)
