"""Application environments, placement state and network-cost accounting.

All demands and capacities are normalized: every CN facet starts with one unit
of CPU and memory, every SN facet with one unit of storage, every
bandwidth pool between two facet endpoints with one unit of bandwidth.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .topology import EPS, BandwidthPools, DataCenterTopology

AE_FORMAT = "ndap-ae/1"


class LinkKind(str, enum.Enum):
    VCL = "VCL"
    VDL = "VDL"


@dataclass(frozen=True)
class VirtualMachine:
    id: str
    cpu: float
    mem: float


@dataclass(frozen=True)
class DataBlock:
    id: str
    str: float


@dataclass(frozen=True)
class VirtualLink:
    kind: LinkKind
    a: str  # always a VM
    b: str  # VM for a VCL, DB for a VDL
    bw: float

    @property
    def id(self) -> str:
        return f"{self.a}~{self.b}"


@dataclass(frozen=True)
class ApplicationEnvironment:
    vms: tuple[VirtualMachine, ...]
    dbs: tuple[DataBlock, ...]
    vls: tuple[VirtualLink, ...]
    template: str = "custom"
    id: str = "ae"

    @cached_property
    def vm_by_id(self) -> dict[str, VirtualMachine]:
        return {vm.id: vm for vm in self.vms}

    @cached_property
    def db_by_id(self) -> dict[str, DataBlock]:
        return {db.id: db for db in self.dbs}

    @cached_property
    def peers(self) -> dict[str, list[tuple[str, float, VirtualLink]]]:
        """AN id -> ``[(peer id, bandwidth, link), ...]`` in link order."""
        out: dict[str, list] = {an: [] for an in [*self.vm_by_id, *self.db_by_id]}
        for vl in self.vls:
            out.setdefault(vl.a, []).append((vl.b, vl.bw, vl))
            out.setdefault(vl.b, []).append((vl.a, vl.bw, vl))
        return out

    @property
    def vcls(self) -> list[VirtualLink]:
        return [vl for vl in self.vls if vl.kind is LinkKind.VCL]

    @property
    def vdls(self) -> list[VirtualLink]:
        return [vl for vl in self.vls if vl.kind is LinkKind.VDL]

    @property
    def counts(self) -> tuple[int, int, int, int]:
        """``(N_v, N_d, N_vc, N_vd)``."""
        return len(self.vms), len(self.dbs), len(self.vcls), len(self.vdls)

    def with_id(self, ae_id: str) -> "ApplicationEnvironment":
        return ApplicationEnvironment(self.vms, self.dbs, self.vls, self.template, ae_id)

    def to_dict(self) -> dict:
        return {
            "format": AE_FORMAT,
            "id": self.id,
            "template": self.template,
            "vms": [{"id": v.id, "cpu": v.cpu, "mem": v.mem} for v in self.vms],
            "dbs": [{"id": d.id, "str": d.str} for d in self.dbs],
            "vls": [{"a": l.a, "b": l.b, "bw": l.bw} for l in self.vls],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ApplicationEnvironment":
        vms = tuple(VirtualMachine(str(v["id"]), float(v["cpu"]), float(v["mem"])) for v in data["vms"])
        dbs = tuple(DataBlock(str(d["id"]), float(d["str"])) for d in data.get("dbs", []))
        db_ids = {d.id for d in dbs}
        vls = []
        for l in data.get("vls", []):
            a, b = str(l["a"]), str(l["b"])
            if a in db_ids and b not in db_ids:
                a, b = b, a
            kind = LinkKind.VDL if b in db_ids else LinkKind.VCL
            vls.append(VirtualLink(kind, a, b, float(l["bw"])))
        return cls(vms, dbs, tuple(vls), data.get("template", "custom"), str(data.get("id", "ae")))

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "ApplicationEnvironment":
        return cls.from_dict(json.loads(text))


def validate_ae(ae: ApplicationEnvironment) -> list[str]:
    """Return human-readable invariant violations; empty means valid."""
    problems = []
    seen = set()
    for an in [*ae.vms, *ae.dbs]:
        if an.id in seen:
            problems.append(f"duplicate AN id {an.id!r}")
        seen.add(an.id)
    for vm in ae.vms:
        for name in ("cpu", "mem"):
            v = getattr(vm, name)
            if not 0 < v <= 1:
                problems.append(f"VM {vm.id!r}: {name} demand {v} outside (0, 1]")
    for db in ae.dbs:
        if not 0 < db.str <= 1:
            problems.append(f"DB {db.id!r}: storage demand {db.str} outside (0, 1]")
    vm_ids, db_ids = set(ae.vm_by_id), set(ae.db_by_id)
    pairs = set()
    for vl in ae.vls:
        if vl.a == vl.b:
            problems.append(f"VL {vl.id}: self-loop")
        for end in (vl.a, vl.b):
            if end not in vm_ids and end not in db_ids:
                problems.append(f"VL {vl.id}: dangling endpoint {end!r}")
        if vl.a not in vm_ids and vl.a in db_ids:
            problems.append(f"VL {vl.id}: first endpoint must be a VM")
        if vl.kind is LinkKind.VCL and vl.b in db_ids:
            problems.append(f"VL {vl.id}: VCL endpoint {vl.b!r} is a DB")
        if vl.kind is LinkKind.VDL and vl.b in vm_ids:
            problems.append(f"VL {vl.id}: VDL endpoint {vl.b!r} is a VM")
        if not vl.bw > 0:
            problems.append(f"VL {vl.id}: nonpositive bandwidth {vl.bw}")
        elif vl.bw > 1:
            problems.append(f"VL {vl.id}: bandwidth {vl.bw} above 1")
        pair = frozenset((vl.a, vl.b))
        if pair in pairs:
            problems.append(f"VL {vl.id}: duplicate link between the same pair")
        pairs.add(pair)
    return problems


class PlacementError(RuntimeError):
    pass


class UnplacedError(PlacementError):
    pass


class DeploymentConflictError(PlacementError):
    pass


class UnknownDeploymentError(PlacementError, KeyError):
    pass


@dataclass(frozen=True)
class Reservation:
    u: int  # endpoint index
    v: int
    bw: float
    vl: str


@dataclass
class DeploymentRecord:
    ae: ApplicationEnvironment
    vm_cn: dict[str, int]
    db_sn: dict[str, int]
    reservations: list[Reservation]


@dataclass
class PlacementOutcome:
    status: str  # "Placed" or "Infeasible"
    total_cost: float | None = None
    per_vl_costs: dict[str, float] = field(default_factory=dict)
    vm_cn: dict[str, int] = field(default_factory=dict)
    db_sn: dict[str, int] = field(default_factory=dict)
    reason: str = ""
    ntpp: list[int] = field(default_factory=list)

    @property
    def placed(self) -> bool:
        return self.status == "Placed"

    @classmethod
    def infeasible(cls, reason: str = "") -> "PlacementOutcome":
        return cls("Infeasible", reason=reason)


class PlacementState:
    """Residual resources of one data center plus its deployed AEs.

    Residuals are never updated incrementally: each touched facet is recomputed
    as ``1 - fsum(hosted demands)``, so deploy followed by terminate restores
    the state bit for bit.
    """

    def __init__(self, dc: DataCenterTopology):
        self.dc = dc
        self.cpu = np.ones(dc.n_cn)
        self.mem = np.ones(dc.n_cn)
        self.str = np.ones(dc.n_sn)
        self.pools = BandwidthPools(dc.ep_nodes)
        self.deployed: dict[str, DeploymentRecord] = {}
        self._cn_hosted: dict[int, dict] = {}
        self._sn_hosted: dict[int, dict] = {}

    def dn(self, ae_id: str, an_id: str) -> tuple[str, int] | None:
        """Facet hosting an AN as ``("cn"|"sn", index)``; None when unplaced."""
        rec = self.deployed.get(ae_id)
        if rec is None:
            return None
        if an_id in rec.vm_cn:
            return "cn", rec.vm_cn[an_id]
        if an_id in rec.db_sn:
            return "sn", rec.db_sn[an_id]
        return None

    def _refresh_cn(self, cn):
        hosted = self._cn_hosted.get(cn)
        if hosted:
            self.cpu[cn] = 1.0 - math.fsum(c for c, _ in hosted.values())
            self.mem[cn] = 1.0 - math.fsum(m for _, m in hosted.values())
        else:
            self._cn_hosted.pop(cn, None)
            self.cpu[cn] = 1.0
            self.mem[cn] = 1.0

    def _refresh_sn(self, sn):
        hosted = self._sn_hosted.get(sn)
        if hosted:
            self.str[sn] = 1.0 - math.fsum(hosted.values())
        else:
            self._sn_hosted.pop(sn, None)
            self.str[sn] = 1.0

    def hosted_on_cn(self, cn: int) -> dict:
        return dict(self._cn_hosted.get(cn, {}))

    def hosted_on_sn(self, sn: int) -> dict:
        return dict(self._sn_hosted.get(sn, {}))

    def snapshot(self):
        """Comparable image of the full state."""
        return (
            self.cpu.tobytes(), self.mem.tobytes(), self.str.tobytes(),
            self.pools.snapshot(),
            {k: (dict(r.vm_cn), dict(r.db_sn), tuple(r.reservations))
             for k, r in sorted(self.deployed.items())},
        )


def apply_deployment(state: PlacementState, ae: ApplicationEnvironment,
                     vm_cn: dict[str, int], db_sn: dict[str, int],
                     reservations: list[Reservation]) -> DeploymentRecord:
    """Commit a placer's assignments and bandwidth reservations."""
    if ae.id in state.deployed:
        raise DeploymentConflictError(f"AE {ae.id!r} is already deployed")
    missing = [an for an in [*ae.vm_by_id, *ae.db_by_id] if an not in vm_cn and an not in db_sn]
    if missing:
        raise UnplacedError(f"AE {ae.id!r}: unplaced ANs {missing}")
    done = []
    try:
        for r in reservations:
            state.pools.reserve(r.u, r.v, r.bw)
            done.append(r)
    except Exception:
        for r in done:
            state.pools.release(r.u, r.v, r.bw)
        raise
    for vm_id, cn in vm_cn.items():
        vm = ae.vm_by_id[vm_id]
        state._cn_hosted.setdefault(cn, {})[(ae.id, vm_id)] = (vm.cpu, vm.mem)
        state._refresh_cn(cn)
    for db_id, sn in db_sn.items():
        state._sn_hosted.setdefault(sn, {})[(ae.id, db_id)] = ae.db_by_id[db_id].str
        state._refresh_sn(sn)
    rec = DeploymentRecord(ae, dict(vm_cn), dict(db_sn), list(reservations))
    state.deployed[ae.id] = rec
    return rec


def terminate_deployment(state: PlacementState, ae_id: str) -> None:
    rec = state.deployed.pop(ae_id, None)
    if rec is None:
        raise UnknownDeploymentError(ae_id)
    for r in rec.reservations:
        state.pools.release(r.u, r.v, r.bw)
    for vm_id, cn in rec.vm_cn.items():
        del state._cn_hosted[cn][(ae_id, vm_id)]
        state._refresh_cn(cn)
    for db_id, sn in rec.db_sn.items():
        del state._sn_hosted[sn][(ae_id, db_id)]
        state._refresh_sn(sn)


def _hosts_of(dc, ae, vm_cn, db_sn):
    def host(an):
        if an in vm_cn:
            return int(dc.cn_ep[vm_cn[an]])
        if an in db_sn:
            return int(dc.sn_ep[db_sn[an]])
        raise UnplacedError(f"AN {an!r} of AE {ae.id!r} is not placed")
    return host


def vl_costs(dc: DataCenterTopology, ae: ApplicationEnvironment,
             vm_cn: dict[str, int], db_sn: dict[str, int]) -> dict[str, float]:
    """Per-VL network cost ``bw * hops * DF`` for a complete assignment."""
    host = _hosts_of(dc, ae, vm_cn, db_sn)
    return {vl.id: vl.bw * dc.ep_hops[host(vl.a), host(vl.b)] * dc.df for vl in ae.vls}


def deploy_cost(state_or_dc, ae: ApplicationEnvironment,
                vm_cn: dict[str, int] | None = None,
                db_sn: dict[str, int] | None = None) -> float:
    """Network cost of a placed AE, each VL counted once.

    Accepts a ``PlacementState`` holding ``ae`` or a topology plus explicit
    assignments.
    """
    if isinstance(state_or_dc, PlacementState):
        dc = state_or_dc.dc
        if vm_cn is None:
            rec = state_or_dc.deployed.get(ae.id)
            if rec is None:
                raise UnplacedError(f"AE {ae.id!r} is not deployed")
            vm_cn, db_sn = rec.vm_cn, rec.db_sn
    else:
        dc = state_or_dc
    return math.fsum(vl_costs(dc, ae, vm_cn, db_sn or {}).values())


def deploy_cost_literal(dc: DataCenterTopology, ae: ApplicationEnvironment,
                        vm_cn: dict[str, int], db_sn: dict[str, int]) -> float:
    """Objective as a sum over all ordered (VM, VM) and (VM, DB) index pairs.

    Every VCL is seen from both ends and so contributes twice.
    """
    host = _hosts_of(dc, ae, vm_cn, db_sn)
    bw = {}
    for vl in ae.vls:
        bw[(vl.a, vl.b)] = bw[(vl.b, vl.a)] = vl.bw
    terms = []
    for vi in ae.vms:
        for vj in ae.vms:
            b = bw.get((vi.id, vj.id), 0.0)
            if b:
                terms.append(b * dc.ep_hops[host(vi.id), host(vj.id)] * dc.df)
        for dk in ae.dbs:
            b = bw.get((vi.id, dk.id), 0.0)
            if b:
                terms.append(b * dc.ep_hops[host(vi.id), host(dk.id)] * dc.df)
    return math.fsum(terms)


def audit(state: PlacementState, tol: float = EPS) -> list[str]:
    """Constraint and conservation violations of a state (empty when sound)."""
    out = []
    for name, arr in (("cpu", state.cpu), ("mem", state.mem), ("str", state.str)):
        bad = np.flatnonzero(arr < -tol)
        out.extend(f"{name} residual {arr[i]} < 0 at facet {i}" for i in bad)
    for k, avail, held in state.pools.items():
        if avail < -tol:
            out.append(f"bandwidth pool {k} residual {avail} < 0")
    # replay every record independently of the incremental bookkeeping
    cpu = [[] for _ in range(state.dc.n_cn)]
    mem = [[] for _ in range(state.dc.n_cn)]
    sto = [[] for _ in range(state.dc.n_sn)]
    pools: dict = {}
    for rec in state.deployed.values():
        for vm_id, cn in rec.vm_cn.items():
            cpu[cn].append(rec.ae.vm_by_id[vm_id].cpu)
            mem[cn].append(rec.ae.vm_by_id[vm_id].mem)
        for db_id, sn in rec.db_sn.items():
            sto[sn].append(rec.ae.db_by_id[db_id].str)
        for r in rec.reservations:
            pools.setdefault(BandwidthPools.key(r.u, r.v), []).append(r.bw)
    for name, lists, arr in (("cpu", cpu, state.cpu), ("mem", mem, state.mem), ("str", sto, state.str)):
        for i, demands in enumerate(lists):
            expect = 1.0 - math.fsum(demands) if demands else 1.0
            if arr[i] != expect:
                out.append(f"{name} conservation broken at facet {i}: {arr[i]} != {expect}")
    for k, avail, _ in state.pools.items():
        expect = state.pools.capacity - math.fsum(pools.get(k, ()))
        if avail != expect:
            out.append(f"bandwidth conservation broken on pool {k}")
    if {k for k, _, _ in state.pools.items()} != set(pools):
        out.append("bandwidth pools out of sync with deployment records")
    return out
