"""AE templates, normally distributed demands and deploy/terminate traces."""
from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .model import (
    ApplicationEnvironment,
    DataBlock,
    LinkKind,
    VirtualLink,
    VirtualMachine,
)

DEMAND_MIN = 0.01
DEMAND_MAX = 1.0

DEPLOY_PROB = 2 / 3
DEFAULT_MIX = {"three-tier": 0.8, "montage": 0.2}


@dataclass(frozen=True)
class DemandParams:
    mean_com: float = 0.3
    mean_str: float = 0.4
    mean_vlbw: float = 0.35
    sd: float = 0.5
    sd_com_str: float | None = None
    sd_vlbw: float | None = None

    def __post_init__(self):
        for name in ("mean_com", "mean_str", "mean_vlbw"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")
        for name in ("sd", "sd_com_str", "sd_vlbw"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be >= 0, got {v}")

    @property
    def sd_resources(self) -> float:
        return self.sd if self.sd_com_str is None else self.sd_com_str

    @property
    def sd_bandwidth(self) -> float:
        return self.sd if self.sd_vlbw is None else self.sd_vlbw

    def with_(self, **changes) -> "DemandParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class AETemplate:
    name: str
    vms: tuple[str, ...]
    dbs: tuple[str, ...]
    links: tuple[tuple[str, str], ...]

    @property
    def counts(self) -> tuple[int, int, int, int]:
        dbs = set(self.dbs)
        n_vd = sum(1 for a, b in self.links if a in dbs or b in dbs)
        return len(self.vms), len(self.dbs), len(self.links) - n_vd, n_vd

    def to_dict(self) -> dict:
        return {"name": self.name, "vms": list(self.vms), "dbs": list(self.dbs),
                "vls": [{"a": a, "b": b} for a, b in self.links]}

    @classmethod
    def from_dict(cls, data: dict) -> "AETemplate":
        return cls(data["name"], tuple(data["vms"]), tuple(data.get("dbs", ())),
                   tuple((l["a"], l["b"]) for l in data.get("vls", ())))

    @classmethod
    def from_json(cls, text: str) -> "AETemplate":
        return cls.from_dict(json.loads(text))


def three_tier_template() -> AETemplate:
    return AETemplate(
        "three-tier",
        ("web1", "web2", "app1", "app2", "dbsrv"),
        ("DB1", "DB2", "DB3"),
        (
            ("web1", "app1"), ("web2", "app2"), ("app1", "dbsrv"), ("app2", "dbsrv"),
            ("web1", "DB1"), ("web2", "DB1"), ("app1", "DB2"), ("app2", "DB2"),
            ("dbsrv", "DB3"),
        ),
    )


def montage_template() -> AETemplate:
    return AETemplate(
        "montage",
        ("VM1", "VM2", "VM3", "VM4", "VM5", "VM6", "VM7"),
        ("DB1", "DB2", "DB3", "DB4"),
        (
            ("VM1", "VM2"), ("VM2", "VM3"), ("VM3", "VM4"), ("VM4", "VM5"), ("VM3", "VM5"),
            ("VM1", "DB1"), ("VM2", "DB1"), ("VM2", "DB2"), ("VM3", "DB2"),
            ("VM4", "DB3"), ("VM5", "DB3"), ("VM6", "DB4"), ("VM7", "DB4"), ("VM5", "DB4"),
        ),
    )


TEMPLATES = {"three-tier": three_tier_template, "montage": montage_template}


def _draw(rng, mean, sd, size):
    return np.clip(rng.normal(mean, sd, size), DEMAND_MIN, DEMAND_MAX)


def sample_ae(template: AETemplate, params: DemandParams, rng, ae_id: str = "ae") -> ApplicationEnvironment:
    """Instantiate ``template`` with clamped normal demands.

    Draw order is fixed (CPU, memory, storage, bandwidth) so a seed fully
    determines the instance.
    """
    nv, nd, nl = len(template.vms), len(template.dbs), len(template.links)
    cpu = _draw(rng, params.mean_com, params.sd_resources, nv)
    mem = _draw(rng, params.mean_com, params.sd_resources, nv)
    sto = _draw(rng, params.mean_str, params.sd_resources, nd)
    bw = _draw(rng, params.mean_vlbw, params.sd_bandwidth, nl)
    vms = tuple(VirtualMachine(n, float(c), float(m)) for n, c, m in zip(template.vms, cpu, mem))
    dbs = tuple(DataBlock(n, float(s)) for n, s in zip(template.dbs, sto))
    db_ids = set(template.dbs)
    vls = []
    for (a, b), w in zip(template.links, bw):
        if a in db_ids:
            a, b = b, a
        kind = LinkKind.VDL if b in db_ids else LinkKind.VCL
        vls.append(VirtualLink(kind, a, b, float(w)))
    return ApplicationEnvironment(vms, dbs, tuple(vls), template.name, ae_id)


@dataclass(frozen=True)
class Deploy:
    ae: ApplicationEnvironment

    def to_dict(self):
        return {"event": "deploy", "ae": self.ae.to_dict()}


@dataclass(frozen=True)
class Terminate:
    ae_id: str

    def to_dict(self):
        return {"event": "terminate", "ae_id": self.ae_id}


class TraceStream:
    """Lazily generated, cached event sequence.

    Indexing past the generated prefix extends it, so every consumer of the
    same stream sees the same events regardless of how far each one reads.
    """

    def __init__(self, params: DemandParams, rng, mix: dict | None = None,
                 deploy_prob: float = DEPLOY_PROB, templates: dict | None = None):
        self.params = params
        self.rng = rng
        self.mix = dict(mix or DEFAULT_MIX)
        self.deploy_prob = deploy_prob
        self.templates = {k: (v() if callable(v) else v) for k, v in (templates or TEMPLATES).items()}
        self._names = list(self.mix)
        total = sum(self.mix.values())
        self._p = np.array([self.mix[k] / total for k in self._names])
        self.events: list = []
        self._live: list[str] = []
        self._next_id = 0

    def _generate(self):
        rng = self.rng
        if self._live and rng.random() >= self.deploy_prob:
            victim = self._live.pop(int(rng.integers(len(self._live))))
            return Terminate(victim)
        name = self._names[int(rng.choice(len(self._names), p=self._p))]
        ae = sample_ae(self.templates[name], self.params, rng, f"ae-{self._next_id:06d}")
        self._next_id += 1
        self._live.append(ae.id)
        return Deploy(ae)

    def __getitem__(self, i: int):
        while len(self.events) <= i:
            self.events.append(self._generate())
        return self.events[i]

    def take(self, n: int) -> list:
        if n > 0:
            self[n - 1]
        return self.events[:n]


@dataclass
class EventTrace:
    events: list
    seed: int | None = None

    def to_jsonl(self) -> str:
        head = json.dumps({"seed": self.seed, "events": len(self.events)})
        return "\n".join([head] + [json.dumps(e.to_dict()) for e in self.events]) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "EventTrace":
        lines = [l for l in text.splitlines() if l.strip()]
        head = json.loads(lines[0])
        events = []
        for line in lines[1:]:
            d = json.loads(line)
            if d["event"] == "deploy":
                events.append(Deploy(ApplicationEnvironment.from_dict(d["ae"])))
            else:
                events.append(Terminate(d["ae_id"]))
        return cls(events, head.get("seed"))


def generate_trace(length: int, params: DemandParams | None = None, rng=None,
                   mix: dict | None = None, seed: int | None = None) -> EventTrace:
    """Trace of ``length`` events: deploys with probability 2/3, otherwise a
    uniformly chosen live AE is terminated (deploy is forced when none is live)."""
    if length <= 0:
        raise ValueError("trace length must be positive")
    if rng is None:
        rng = np.random.default_rng(seed)
    stream = TraceStream(params or DemandParams(), rng, mix)
    return EventTrace(stream.take(length), seed)
