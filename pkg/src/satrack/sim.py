"""Ground-truth world, measurement generation, agent mode logic and the
deterministic simulation loop."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import ScenarioConfig
from .metrics import (
    TrialResult,
    ospa_timeseries,
    searched_fraction,
    tracked_flags,
    tracking_ratio_series,
)
from .overlap import OverlapLedger, decide_switch, overlap_step
from .phd import (
    ParticlePHD,
    add_births,
    phd_estimate,
    phd_survive,
    phd_update,
    resample,
    square,
)
from .planner import Plan, build_graph, greedy_path, joint_plan, search_control
from .search_density import SearchGrid, fuse, planning_targets, search_predict, search_update
from .tracking import select_track_control
from .world import (
    Area,
    MotionModel,
    SensorModel,
    admissible_controls,
    in_sensing_range_batch,
    observe_batch,
    propagate_batch,
    wrap_angle,
)

SEARCHING = "searching"
TRACKING = "tracking"

# labels for independent random streams derived from the trial seed
_WORLD, _SENSE, _FILTER, _COORD, _INIT, _POLICY = range(6)


def stream(seed: int, *label: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=label))


# --- ground truth -----------------------------------------------------------


@dataclass
class Target:
    id: int
    state: np.ndarray
    birth: int
    death: int  # first step at which the target no longer exists

    def alive(self, k: int) -> bool:
        return self.birth <= k < self.death


@dataclass
class WorldState:
    k: int
    targets: list[Target]
    area: Area
    motion: MotionModel
    survival_law: bool = False

    def alive(self) -> list[Target]:
        return [t for t in self.targets if t.alive(self.k)]

    def positions(self) -> np.ndarray:
        live = self.alive()
        if not live:
            return np.zeros((0, 2))
        return np.array([[t.state[0], t.state[2]] for t in live])


def _reflect(X: np.ndarray, area: Area) -> np.ndarray:
    X = X.copy()
    for p, v, lo, hi in ((0, 1, area.xmin, area.xmax), (2, 3, area.ymin, area.ymax)):
        low = X[:, p] < lo
        X[low, p] = 2 * lo - X[low, p]
        X[low, v] = -X[low, v]
        high = X[:, p] > hi
        X[high, p] = 2 * hi - X[high, p]
        X[high, v] = -X[high, v]
        X[:, p] = np.clip(X[:, p], lo, hi)
    return X


def script_targets(cfg: ScenarioConfig, rng: np.random.Generator) -> list[Target]:
    """Draw the ground-truth birth schedule, initial states and lifetimes."""
    tc = cfg.targets
    area = cfg.area()
    horizon = cfg.run.horizon
    out = []
    for i in range(tc.count):
        birth = int(rng.integers(0, tc.birth_window + 1))
        if tc.birth == "center":
            px, py = (area.xmin + area.xmax) / 2, (area.ymin + area.ymax) / 2
        else:
            px, py = rng.uniform(area.xmin, area.xmax), rng.uniform(area.ymin, area.ymax)
        heading = rng.uniform(0, 2 * math.pi)
        state = np.array(
            [px, tc.speed * math.cos(heading), py, tc.speed * math.sin(heading)]
        )
        if tc.lifetime == "geometric":
            death = birth + int(rng.geometric(1.0 / tc.lifetime_mean))
        elif tc.lifetime == "fixed":
            death = birth + int(round(tc.lifetime_mean))
        else:  # survival: decided step by step in step_world
            death = 10 * horizon + birth + 1
        out.append(Target(i, state, birth, death))
    return out


def make_world(cfg: ScenarioConfig, rng: np.random.Generator) -> WorldState:
    return WorldState(
        0,
        script_targets(cfg, rng),
        cfg.area(),
        cfg.truth_motion_model(),
        survival_law=cfg.targets.lifetime == "survival",
    )


def step_world(w: WorldState, rng: np.random.Generator) -> WorldState:
    """Advance ground truth by one step (mutates and returns ``w``)."""
    k = w.k
    movers = [t for t in w.targets if t.alive(k)]
    if w.survival_law:
        for t in movers:
            if rng.random() >= w.motion.p_survive:
                t.death = k + 1
        movers = [t for t in movers if t.alive(k + 1)]
    else:
        movers = [t for t in movers if t.alive(k + 1)]
    if movers:
        X = np.array([t.state for t in movers])
        X = _reflect(propagate_batch(X, w.motion, rng), w.area)
        for t, x in zip(movers, X):
            t.state = x
    w.k = k + 1
    return w


def generate_measurements(
    w: WorldState, s, sm: SensorModel, rng: np.random.Generator
) -> np.ndarray:
    """Detections of live targets in range plus Poisson clutter, as (M, 2) range/bearing."""
    rows = []
    live = w.alive()
    if live:
        X = np.array([t.state for t in live])
        seen = in_sensing_range_batch(X[:, [0, 2]], s, sm.side)
        detected = seen & (rng.random(len(X)) < sm.pd_max)
        if detected.any():
            r, b = observe_batch(X[detected], s)
            r_noisy = np.maximum(r + rng.normal(0, 1, len(r)) * sm.range_std(r), 0.0)
            b_noisy = wrap_angle(b + rng.normal(0, 1, len(b)) * sm.bearing_std(r))
            rows.append(np.column_stack([r_noisy, b_noisy]))
    n_clutter = rng.poisson(sm.clutter_rate)
    if n_clutter:
        rows.append(sm.sample_clutter(s, n_clutter, rng))
    if not rows:
        return np.zeros((0, 2))
    return np.vstack(rows)


# --- agents -----------------------------------------------------------------


@dataclass
class Agent:
    id: int
    pos: tuple[float, float]
    grid: SearchGrid
    phd: ParticlePHD
    prev_pos: tuple[float, float] | None = None
    mode: str = SEARCHING
    plan: list[int] = field(default_factory=list)
    plan_joint: bool = False
    plan_snapshot: frozenset = frozenset()
    plan_cutoff: float = 0.5  # plan nodes whose search value exceeds this are done
    cohort: frozenset = frozenset()
    lost_count: int = 0
    cooldown: int = 0
    n_hat: int = 0
    estimates: np.ndarray = field(default_factory=lambda: np.zeros((0, 4)))
    pred_phd: ParticlePHD | None = None
    pred_estimates: np.ndarray = field(default_factory=lambda: np.zeros((0, 4)))
    events: list[str] = field(default_factory=list)


def communication_pairs(agents: list[Agent], comm_range: float) -> list[tuple[int, int]]:
    out = []
    for i in range(len(agents)):
        for j in range(i + 1, len(agents)):
            a, b = agents[i], agents[j]
            if math.hypot(a.pos[0] - b.pos[0], a.pos[1] - b.pos[1]) <= comm_range:
                out.append((a.id, b.id))
    return out


def exchange_policy(agent_i: Agent, agent_j: Agent) -> bool:
    """True to exchange search densities, False to suppress.

    Agents executing a joint plan stay silent towards their own cohort.
    """
    return not (agent_i.cohort and agent_j.id in agent_i.cohort)


class Simulation:
    """One Monte Carlo trial of the multi-agent search-and-track mission."""

    def __init__(self, cfg: ScenarioConfig, seed: int | None = None):
        self.cfg = cfg
        self.seed = cfg.run.seed if seed is None else seed
        self.area = cfg.area()
        self.sm = cfg.sensor_model()
        self.motion = cfg.motion_model()
        self.controls = cfg.control_model()
        self.world = make_world(cfg, stream(self.seed, _WORLD))
        self.world_rng = stream(self.seed, _WORLD, 1)
        self.coord_rng = stream(self.seed, _COORD)
        self.ledger = OverlapLedger(cfg.overlap.window, cfg.overlap.cutoff, cfg.overlap.threshold)
        proto = SearchGrid.uniform(
            cfg.world.width,
            cfg.world.height,
            cfg.search.cell,
            cfg.search.init_value,
            decay=cfg.search.decay,
            threshold=cfg.search.threshold,
        )
        self.graph = build_graph(proto, cfg.search.connectivity)
        self.agents: list[Agent] = []
        self.sense_rng, self.filter_rng, self.policy_rng = [], [], []
        for i in range(cfg.agents.count):
            init = stream(self.seed, _INIT, i)
            pos = (float(init.uniform(0, cfg.world.width)), float(init.uniform(0, cfg.world.height)))
            phd = ParticlePHD.empty(cfg.birth_model(), cfg.filter.rho)
            self.agents.append(Agent(i, pos, proto, phd))
            self.sense_rng.append(stream(self.seed, _SENSE, i))
            self.filter_rng.append(stream(self.seed, _FILTER, i))
            self.policy_rng.append(stream(self.seed, _POLICY, i))
        reach = cfg.control.radial_step * cfg.control.radial_levels
        self.lookahead_side = self.sm.side + 2 * reach
        self.event_rows: list[tuple] = []
        self.truth_rows: list[tuple] = []
        self._searched: list[float] = []
        self._estimates: list[np.ndarray] = []
        self._truth: list[list] = []

    # -- per-agent phases --------------------------------------------------
    def _sense(self, ag: Agent, k: int) -> None:
        a = self.sm.side
        prev = ag.prev_pos if ag.prev_pos is not None else ag.pos
        ag.grid = search_update(search_predict(ag.grid, prev, a), ag.pos, a)
        if not self.cfg.tracking.enabled:
            return
        i = ag.id
        pred = ag.pred_phd if ag.pred_phd is not None else ag.phd
        pred = add_births(pred, square(ag.pos, a), self.filter_rng[i])
        Z = generate_measurements(self.world, ag.pos, self.sm, self.sense_rng[i])
        ag.phd = resample(phd_update(pred, Z, ag.pos, self.sm), rng=self.filter_rng[i])
        ag.n_hat, ag.estimates = phd_estimate(
            ag.phd,
            square(ag.pos, a),
            restarts=self.cfg.filter.kmeans_restarts,
            persistent_only=self.cfg.filter.persistent_only,
        )
        if ag.cooldown > 0:
            ag.cooldown -= 1
        if ag.mode == SEARCHING:
            if ag.n_hat >= 1 and ag.cooldown == 0:
                ag.mode = TRACKING
                ag.lost_count = 0
                ag.cohort = frozenset()
                ag.plan = []
                ag.events.append("detect")
        else:
            ag.lost_count = ag.lost_count + 1 if ag.n_hat == 0 else 0
            if ag.lost_count >= self.cfg.tracking.lost_steps:
                self._to_search(ag, "lost")

    def _lookahead(self, ag: Agent) -> None:
        if not self.cfg.tracking.enabled:
            return
        ag.pred_phd = phd_survive(ag.phd, self.motion, self.filter_rng[ag.id])
        if ag.mode == TRACKING:
            _, ag.pred_estimates = phd_estimate(
                ag.pred_phd,
                square(ag.pos, self.lookahead_side),
                restarts=self.cfg.filter.kmeans_restarts,
            )
        else:
            ag.pred_estimates = np.zeros((0, 4))

    def _to_search(self, ag: Agent, tag: str) -> None:
        ag.mode = SEARCHING
        ag.lost_count = 0
        ag.cohort = frozenset()
        ag.events.append(tag)
        self._replan_solo(ag)

    def _targets(self, grid: SearchGrid) -> tuple[set[int], float]:
        return planning_targets(grid, self.cfg.search.revisit_fraction)

    def _replan_solo(self, ag: Agent) -> None:
        vbar, cutoff = self._targets(ag.grid)
        start = ag.grid.cell_of(ag.pos)
        ag.plan = greedy_path(self.graph, vbar, start).nodes
        ag.plan_joint = False
        ag.plan_snapshot = frozenset(vbar)
        ag.plan_cutoff = cutoff
        ag.cohort = frozenset()

    # -- cooperation --------------------------------------------------------
    def _communicate(self) -> None:
        if self.cfg.agents.policy != "cooperative":
            return
        pairs = communication_pairs(self.agents, self.cfg.agents.comm_range)
        links = [
            (i, j)
            for i, j in pairs
            if exchange_policy(self.agents[i], self.agents[j])
            and exchange_policy(self.agents[j], self.agents[i])
        ]
        if not links:
            return
        parent = list(range(len(self.agents)))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for i, j in links:
            parent[find(i)] = find(j)
        linked = sorted({v for link in links for v in link})
        groups: dict[int, list[int]] = {}
        for v in linked:
            groups.setdefault(find(v), []).append(v)
        for members in groups.values():
            fused = self.agents[members[0]].grid
            for m in members[1:]:
                fused = fuse(fused, self.agents[m].grid)
            for m in members:
                self.agents[m].grid = fused
                self.agents[m].events.append("exchange")
            searchers = [m for m in members if self.agents[m].mode == SEARCHING]
            if not searchers:
                continue
            vbar, cutoff = self._targets(fused)
            starts = [fused.cell_of(self.agents[m].pos) for m in searchers]
            plans = joint_plan(self.graph, vbar, starts)
            joint = len(searchers) > 1
            for m, plan in zip(searchers, plans):
                ag = self.agents[m]
                ag.plan = plan.nodes
                ag.plan_joint = joint
                ag.plan_snapshot = frozenset(vbar)
                ag.plan_cutoff = cutoff
                ag.cohort = frozenset(searchers) if joint else frozenset()
                ag.events.append("joint_plan")

    def _overlaps(self) -> None:
        if not (self.cfg.tracking.enabled and self.cfg.overlap.enabled):
            return
        a = self.sm.side
        tracking = [ag for ag in self.agents if ag.mode == TRACKING]
        tracked_ids = {ag.id for ag in tracking}
        for pair in list(self.ledger.scores):
            if not set(pair) <= tracked_ids:
                self.ledger.reset(pair)
        switched: set[int] = set()
        for x in range(len(tracking)):
            for y in range(x + 1, len(tracking)):
                ai, aj = tracking[x], tracking[y]
                if ai.id in switched or aj.id in switched:
                    continue
                pair = (ai.id, aj.id)
                if math.hypot(ai.pos[0] - aj.pos[0], ai.pos[1] - aj.pos[1]) > self.cfg.agents.comm_range:
                    overlap_step(self.ledger, pair, [], [], ai.pos, aj.pos, a)
                    continue
                overlap_step(self.ledger, pair, ai.pred_estimates, aj.pred_estimates, ai.pos, aj.pos, a)
                chosen = decide_switch(self.ledger, pair, self.coord_rng)
                if chosen is not None:
                    ag = self.agents[chosen]
                    ag.cooldown = self.cfg.tracking.switch_cooldown
                    self._to_search(ag, "overlap_switch")
                    switched.add(chosen)

    # -- control -------------------------------------------------------------
    def _next_waypoint(self, ag: Agent):
        values = ag.grid.values()
        if not ag.plan_joint and ag.plan_snapshot:
            now = frozenset(self._targets(ag.grid)[0])
            if len(now ^ ag.plan_snapshot) > self.cfg.search.replan_fraction * len(ag.plan_snapshot):
                self._replan_solo(ag)
                ag.events.append("replan")
        for attempt in range(2):
            while ag.plan and values[ag.plan[0]] > ag.plan_cutoff:
                ag.plan.pop(0)
            if ag.plan:
                return tuple(self.graph.positions[ag.plan[0]])
            if attempt == 0:
                if ag.plan_joint or ag.plan_snapshot:
                    ag.events.append("replan")
                self._replan_solo(ag)
        return None

    def _control(self, ag: Agent) -> tuple[float, float]:
        U = admissible_controls(ag.pos, self.controls, self.area)
        if ag.mode == TRACKING:
            return select_track_control(
                ag.pred_phd, ag.pos, U, self.sm, self.cfg.tracking.alpha, X_hat=ag.pred_estimates
            )
        if self.cfg.agents.policy == "random":
            return self._random_control(ag, U)
        v = self._next_waypoint(ag)
        if v is None:
            return U[0]
        return search_control(ag.pos, U, v)

    def _random_control(self, ag: Agent, U) -> tuple[float, float]:
        rng = self.policy_rng[ag.id]
        vbar = sorted(self._targets(ag.grid)[0])
        if vbar:
            centers = self.graph.positions[vbar]
            d = np.hypot(centers[:, 0] - ag.pos[0], centers[:, 1] - ag.pos[1])
            v = centers[int(np.argmin(d))]
            here = math.hypot(v[0] - ag.pos[0], v[1] - ag.pos[1])
            closer = [u for u in U if math.hypot(v[0] - u[0], v[1] - u[1]) < here]
            if closer:
                return closer[int(rng.integers(len(closer)))]
        return U[int(rng.integers(len(U)))]

    # -- main loop -------------------------------------------------------------
    def step(self) -> None:
        k = self.world.k
        for ag in self.agents:
            ag.events = []
            self._sense(ag, k)
        for ag in self.agents:
            self._lookahead(ag)
        self._communicate()
        self._overlaps()
        moves = [self._control(ag) for ag in self.agents]
        self._record(k)
        for ag, u in zip(self.agents, moves):
            ag.prev_pos = ag.pos
            ag.pos = (float(u[0]), float(u[1]))
        step_world(self.world, self.world_rng)

    def _record(self, k: int) -> None:
        for ag in self.agents:
            self.event_rows.append(
                (k, ag.id, ag.mode, ag.pos[0], ag.pos[1], ag.n_hat, "|".join(ag.events))
            )
        for t in self.world.targets:
            if t.birth <= k < t.death or (t.birth <= k and k == t.death):
                self.truth_rows.append((k, t.id, t.state[0], t.state[2], int(t.alive(k))))
        self._searched.append(searched_fraction([ag.grid for ag in self.agents], self.cfg.metrics.searched_threshold))
        tracking_est = [ag.estimates for ag in self.agents if ag.mode == TRACKING and len(ag.estimates)]
        est = np.vstack(tracking_est) if tracking_est else np.zeros((0, 4))
        self._estimates.append(est)
        self._truth.append([(t.id, t.state[0], t.state[2]) for t in self.world.alive()])

    def run(self) -> TrialResult:
        while self.world.k < self.cfg.run.horizon:
            self.step()
        truth_pos = [np.array([[x, y] for _, x, y in row]).reshape(-1, 2) for row in self._truth]
        series_ospa = ospa_timeseries(self._estimates, truth_pos, self.cfg.metrics.ospa_cutoff)
        eps = self.cfg.metrics.track_eps
        return TrialResult(
            seed=self.seed,
            searched=np.array(self._searched),
            ospa=series_ospa,
            tracked=tracked_flags(self._truth, self._estimates, eps),
            ratio_series=tracking_ratio_series(self._truth, self._estimates, eps),
            events=self.event_rows,
            truth=self.truth_rows,
        )


def run_trial(cfg: ScenarioConfig, seed: int) -> TrialResult:
    return Simulation(cfg, seed).run()
