"""Group and individual scenarios, repetition runner and parameter sweeps.

Every repetition owns its data centers and RNG streams. Seeds are derived
from ``(master seed, repetition index)`` only, so the same repetition sees the
same event trace at every sweep value and for every algorithm subset.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .model import PlacementState, audit, terminate_deployment
from .placement import PLACERS, get_placer
from .topology import build_topology
from .workload import Deploy, DemandParams, TraceStream

SCENARIOS = ("group", "individual")
DEFAULT_ALGOS = ("ndap", "nva", "ffd")
LAYERS = ("access", "aggregation", "core")
# safety net for runs that never saturate (e.g. tiny demands)
MAX_EVENTS = 100_000

CSV_VERSION = "ndap-results/1"
CSV_COLUMNS = [
    "param", "value", "algorithm", "scenario", "n", "df", "reps",
    "avg_cost", "avg_cost_std", "deploy_count", "deploy_count_std",
    "util_access", "util_aggregation", "util_core", "mean_ntpp",
]

# heterogeneous demand levels
LEVELS = {"L": 0.2, "H": 0.7}

SWEEP_PARAMS = {
    "n": "N (servers)",
    "df": "distance factor",
    "mean": "mean_com = mean_str = mean_vlbw",
    "levels": "three letters L/H for mean_com, mean_str, mean_vlbw",
    "mean_com": "mean CPU/memory demand",
    "mean_str": "mean storage demand",
    "mean_vlbw": "mean VL bandwidth",
    "sd": "standard deviation of every demand",
    "sd_com_str": "standard deviation of CPU/memory/storage demands",
    "sd_vlbw": "standard deviation of VL bandwidth",
}


class ConfigError(ValueError):
    pass


class AuditError(RuntimeError):
    """A constraint or conservation check failed during a run."""

    def __init__(self, algorithm, event, problems):
        self.algorithm = algorithm
        self.event = event
        self.problems = problems
        super().__init__(f"{algorithm}: {len(problems)} violation(s) after event {event}: "
                         + "; ".join(problems[:5]))


@dataclass
class ScenarioConfig:
    scenario: str = "group"
    n: int = 144
    df: float = 2.0
    params: DemandParams = field(default_factory=DemandParams)
    algorithms: tuple = DEFAULT_ALGOS
    reps: int = 1000
    seed: int | None = None
    max_events: int = MAX_EVENTS
    audit: bool = True

    def validate(self) -> "ScenarioConfig":
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if not self.algorithms:
            raise ConfigError("at least one algorithm is required")
        for a in self.algorithms:
            try:
                get_placer(a)
            except ValueError as e:
                raise ConfigError(str(e)) from None
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ConfigError("duplicate algorithm names")
        if self.scenario == "group" and len(self.algorithms) < 2:
            raise ConfigError("the group scenario needs at least two algorithms")
        if not isinstance(self.reps, int) or self.reps < 1:
            raise ConfigError(f"reps must be >= 1, got {self.reps}")
        if self.max_events < 1:
            raise ConfigError("max_events must be >= 1")
        try:
            build_topology(self.n, self.df)
        except ValueError as e:
            raise ConfigError(str(e)) from None
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["algorithms"] = list(self.algorithms)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        data = dict(data)
        if "params" in data and not isinstance(data["params"], DemandParams):
            data["params"] = DemandParams(**data["params"])
        if "algorithms" in data:
            data["algorithms"] = tuple(a.lower() for a in data["algorithms"])
        return cls(**data)


@dataclass
class AlgoRun:
    """What one algorithm did in one repetition."""

    costs: list = field(default_factory=list)
    deploys: int = 0
    util: dict | None = None
    decision_time: float = 0.0
    decisions: int = 0
    ntpp: list = field(default_factory=list)
    halted_by: str = ""

    @property
    def avg_cost(self) -> float:
        return math.fsum(self.costs) / len(self.costs) if self.costs else math.nan


# -- per-repetition seeding ---------------------------------------------------

def _algo_index(name: str) -> int:
    # fixed by name so that an algorithm's stream does not depend on which
    # other algorithms are configured
    return sorted(PLACERS).index(name)


def rep_streams(seed: int, rep: int, algorithms) -> tuple:
    """Trace RNG and per-algorithm RNGs for one repetition."""
    trace_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(rep, 0)))
    algo_rngs = {a: np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(rep, 1 + _algo_index(a)))) for a in algorithms}
    return trace_rng, algo_rngs


# -- metrics ------------------------------------------------------------------

def switch_traffic(state: PlacementState) -> dict[int, float]:
    """Reserved VL bandwidth crossing every switch (switch node id -> traffic)."""
    dc = state.dc
    amounts: dict[int, list] = {s: [] for s in dc.switches()}
    for rec in state.deployed.values():
        for r in rec.reservations:
            for s in dc.ep_route(r.u, r.v):
                amounts[s].append(r.bw)
    return {s: math.fsum(v) for s, v in amounts.items()}


def layer_utilization(state: PlacementState) -> dict[str, float]:
    """Mean over switches of traffic / (degree x link capacity), per layer."""
    dc = state.dc
    traffic = switch_traffic(state)
    out = {}
    for layer in LAYERS:
        ids = dc.switches(layer)
        out[layer] = math.fsum(traffic[s] / dc.degree(s) for s in ids) / len(ids) if ids else 0.0
    return out


def _place_timed(placer, state, ae, rng, run: AlgoRun, trace):
    t0 = time.perf_counter()
    if trace is not None:
        out = placer(state, ae, rng, trace=trace)
    else:
        out = placer(state, ae, rng)
    run.decision_time += time.perf_counter() - t0
    run.decisions += 1
    return out


def _check(state, name, i, enabled):
    if enabled:
        problems = audit(state)
        if problems:
            raise AuditError(name, i, problems)


# -- scenarios for a single repetition ------------------------------------------

def run_group_rep(config: ScenarioConfig, rep: int, seed: int, decision_trace=None) -> dict[str, AlgoRun]:
    """One group repetition: shared trace, halt at the first failure of any algorithm.

    The event that caused the halt is rolled back for the algorithms that had
    already placed it, so every algorithm ends with the same deployments.
    """
    dc = build_topology(config.n, config.df)
    trace_rng, rngs = rep_streams(seed, rep, config.algorithms)
    stream = TraceStream(config.params, trace_rng)
    placers = {a: get_placer(a) for a in config.algorithms}
    states = {a: PlacementState(dc) for a in config.algorithms}
    runs = {a: AlgoRun() for a in config.algorithms}
    halted = ""
    for i in range(config.max_events):
        ev = stream[i]
        if isinstance(ev, Deploy):
            outs = {}
            for a in config.algorithms:
                dt = decision_trace if a == "ndap" else None
                out = _place_timed(placers[a], states[a], ev.ae, rngs[a], runs[a], dt)
                if not out.placed:
                    halted = a
                    break
                outs[a] = out
            if halted:
                for a in outs:
                    terminate_deployment(states[a], ev.ae.id)
                break
            for a, out in outs.items():
                runs[a].costs.append(out.total_cost)
                runs[a].deploys += 1
                runs[a].ntpp.append(math.fsum(out.ntpp) / len(out.ntpp) if out.ntpp else 0.0)
        else:
            for a in config.algorithms:
                terminate_deployment(states[a], ev.ae_id)
        for a in config.algorithms:
            _check(states[a], a, i, config.audit)
    for a in config.algorithms:
        runs[a].util = layer_utilization(states[a])
        runs[a].halted_by = halted or "max_events"
    return runs


def run_individual_rep(config: ScenarioConfig, rep: int, seed: int, decision_trace=None) -> dict[str, AlgoRun]:
    """One individual repetition: each algorithm runs alone until its first failure."""
    dc = build_topology(config.n, config.df)
    trace_rng, rngs = rep_streams(seed, rep, config.algorithms)
    stream = TraceStream(config.params, trace_rng)
    runs = {}
    for a in config.algorithms:
        placer = get_placer(a)
        state = PlacementState(dc)
        run = runs[a] = AlgoRun(halted_by="max_events")
        dt = decision_trace if a == "ndap" else None
        for i in range(config.max_events):
            ev = stream[i]
            if isinstance(ev, Deploy):
                out = _place_timed(placer, state, ev.ae, rngs[a], run, dt)
                if not out.placed:
                    run.halted_by = a
                    break
                run.costs.append(out.total_cost)
                run.deploys += 1
                run.ntpp.append(math.fsum(out.ntpp) / len(out.ntpp) if out.ntpp else 0.0)
            else:
                terminate_deployment(state, ev.ae_id)
            _check(state, a, i, config.audit)
    return runs


def run_rep(config: ScenarioConfig, rep: int, seed: int, decision_trace=None) -> dict[str, AlgoRun]:
    fn = run_group_rep if config.scenario == "group" else run_individual_rep
    return fn(config, rep, seed, decision_trace)


# -- aggregation ----------------------------------------------------------------

def _stats(values) -> dict:
    v = np.array([x for x in values if not math.isnan(x)], dtype=float)
    if not len(v):
        return {"mean": math.nan, "std": math.nan, "min": math.nan, "max": math.nan}
    return {"mean": math.fsum(v) / len(v), "std": float(v.std()),
            "min": float(v.min()), "max": float(v.max())}


@dataclass
class AlgoSummary:
    avg_cost: dict
    deploy_count: dict
    utilization: dict | None
    decision_time_mean: float
    mean_ntpp: float
    placements: int


@dataclass
class MetricsSummary:
    config: ScenarioConfig
    seed: int
    algorithms: dict  # name -> AlgoSummary

    def __getitem__(self, name: str) -> AlgoSummary:
        return self.algorithms[name]

    def to_dict(self, timing: bool = True) -> dict:
        algos = {}
        for a, s in self.algorithms.items():
            d = asdict(s)
            if not timing:
                d.pop("decision_time_mean")
            algos[a] = d
        return {"config": self.config.to_dict(), "seed": self.seed, "algorithms": algos}


def summarize(config: ScenarioConfig, seed: int, reps: list[dict[str, AlgoRun]]) -> MetricsSummary:
    """Merge repetitions. Order of ``reps`` is the repetition index order."""
    out = {}
    for a in config.algorithms:
        runs = [r[a] for r in reps]
        util = None
        if config.scenario == "group":
            util = {layer: _stats([r.util[layer] for r in runs]) for layer in LAYERS}
        n_dec = sum(r.decisions for r in runs)
        ntpp = [x for r in runs for x in r.ntpp]
        out[a] = AlgoSummary(
            avg_cost=_stats([r.avg_cost for r in runs]),
            deploy_count=_stats([float(r.deploys) for r in runs]),
            utilization=util,
            decision_time_mean=math.fsum(r.decision_time for r in runs) / n_dec if n_dec else math.nan,
            mean_ntpp=math.fsum(ntpp) / len(ntpp) if ntpp else math.nan,
            placements=n_dec,
        )
    return MetricsSummary(config, seed, out)


def _rep_worker(args):
    config, rep, seed = args
    return run_rep(config, rep, seed)


def new_seed() -> int:
    return int(np.random.SeedSequence().entropy % (2 ** 63))


def run(config: ScenarioConfig, jobs: int = 1, decision_trace: list | None = None) -> MetricsSummary:
    """Run every repetition of ``config`` and aggregate.

    With ``jobs > 1`` repetitions run in worker processes; results are merged
    in repetition order so the summary does not depend on ``jobs``. The
    NDAP decision trace, if requested, covers repetition 0 only.
    """
    config.validate()
    seed = config.seed if config.seed is not None else new_seed()
    reps = []
    first = run_rep(config, 0, seed, decision_trace)
    reps.append(first)
    rest = range(1, config.reps)
    if jobs > 1 and len(rest) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reps.extend(pool.map(_rep_worker, [(config, r, seed) for r in rest],
                                 chunksize=max(1, len(rest) // (4 * jobs))))
    else:
        reps.extend(run_rep(config, r, seed) for r in rest)
    return summarize(config, seed, reps)


def run_group(config: ScenarioConfig, jobs: int = 1) -> MetricsSummary:
    return run(_with(config, scenario="group"), jobs)


def run_individual(config: ScenarioConfig, jobs: int = 1) -> MetricsSummary:
    return run(_with(config, scenario="individual"), jobs)


def _with(config: ScenarioConfig, **changes) -> ScenarioConfig:
    d = {**config.__dict__, **changes}
    return ScenarioConfig(**d)


# -- sweeps ---------------------------------------------------------------------

def parse_value(param: str, text: str):
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"unknown sweep parameter {param!r}; choose from {sorted(SWEEP_PARAMS)}")
    if param == "n":
        return int(text)
    if param == "levels":
        text = text.strip().upper()
        if len(text) != 3 or set(text) - set(LEVELS):
            raise ConfigError(f"levels value must be three letters from L/H, got {text!r}")
        return text
    return float(text)


def apply_param(config: ScenarioConfig, param: str, value) -> ScenarioConfig:
    """Copy of ``config`` with one sweep parameter set."""
    p = config.params
    if param == "n":
        return _with(config, n=int(value))
    if param == "df":
        return _with(config, df=float(value))
    try:
        if param == "mean":
            p = p.with_(mean_com=value, mean_str=value, mean_vlbw=value)
        elif param == "levels":
            c, s, b = (LEVELS[ch] for ch in value)
            p = p.with_(mean_com=c, mean_str=s, mean_vlbw=b)
        elif param in SWEEP_PARAMS:
            p = p.with_(**{param: value})
        else:
            raise ConfigError(f"unknown sweep parameter {param!r}; choose from {sorted(SWEEP_PARAMS)}")
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e)) from None
    return _with(config, params=p)


def sweep(config: ScenarioConfig, param: str, values, jobs: int = 1) -> list[tuple[object, MetricsSummary]]:
    """One summary per value. All values share the master seed, so repetition
    ``r`` draws its trace from the same stream at every value."""
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"unknown sweep parameter {param!r}; choose from {sorted(SWEEP_PARAMS)}")
    seed = config.seed if config.seed is not None else new_seed()
    base = _with(config, seed=seed)
    configs = [apply_param(base, param, v).validate() for v in values]
    return [(v, run(c, jobs)) for v, c in zip(values, configs)]


# -- output -----------------------------------------------------------------------

def csv_rows(summary: MetricsSummary, param: str = "", value="") -> list[dict]:
    c = summary.config
    rows = []
    for a, s in summary.algorithms.items():
        util = s.utilization or {}
        rows.append({
            "param": param, "value": value, "algorithm": a, "scenario": c.scenario,
            "n": c.n, "df": c.df, "reps": c.reps,
            "avg_cost": s.avg_cost["mean"], "avg_cost_std": s.avg_cost["std"],
            "deploy_count": s.deploy_count["mean"], "deploy_count_std": s.deploy_count["std"],
            "util_access": util.get("access", {}).get("mean", ""),
            "util_aggregation": util.get("aggregation", {}).get("mean", ""),
            "util_core": util.get("core", {}).get("mean", ""),
            "mean_ntpp": s.mean_ntpp,
        })
    return rows


def to_csv(rows: list[dict], seed: int | None = None) -> str:
    """CSV text with a versioned header comment. Decision time is left out so
    that equal runs give equal bytes; it is in the JSON output."""
    buf = io.StringIO()
    buf.write(f"# {CSV_VERSION} seed={seed} columns: {','.join(CSV_COLUMNS)}\n")
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    lines = [l for l in text.splitlines(keepends=True) if not l.startswith("#")]
    return list(csv.DictReader(lines))


def _no_nan(obj):
    if isinstance(obj, float) and math.isnan(obj):
        return None
    if isinstance(obj, dict):
        return {k: _no_nan(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_no_nan(v) for v in obj]
    return obj


def to_json(results: list[tuple[object, MetricsSummary]], param: str = "") -> str:
    """Full distributions (mean, std, min, max) plus config and seed; NaN becomes null."""
    return json.dumps(_no_nan({
        "format": CSV_VERSION,
        "param": param,
        "results": [{"value": v, **s.to_dict()} for v, s in results],
    }), indent=2, default=str)
