"""Staged placement of one AE: feasibility, peer cost and peer-VL placement.

A ``Staging`` is a scratch overlay on a ``PlacementState``. Placers mutate the
overlay while they search; ``commit`` hands the result to
``apply_deployment``. Dropping the overlay leaves the state untouched.

Internally every cost is kept in bandwidth x hops. Multiplying by the distance
factor happens only when costs are reported, so candidate ranking cannot
depend on DF.
"""
from __future__ import annotations

import math
from collections import defaultdict

import numpy as np

from ..model import (
    ApplicationEnvironment,
    DataBlock,
    LinkKind,
    PlacementOutcome,
    PlacementState,
    Reservation,
    VirtualMachine,
    apply_deployment,
)


class Staging:
    def __init__(self, state: PlacementState, ae: ApplicationEnvironment):
        self.state = state
        self.dc = state.dc
        self.ae = ae
        self.cpu = state.cpu.copy()
        self.mem = state.mem.copy()
        self.str = state.str.copy()
        self.vm_cn: dict[str, int] = {}
        self.db_sn: dict[str, int] = {}
        self.reservations: list[Reservation] = []
        self._staged_bw: dict[tuple[int, int], float] = defaultdict(float)
        self._staged_partners: dict[int, set[int]] = defaultdict(set)
        self.vl_hop_cost: dict[str, float] = {}
        self.ntpp: list[int] = []
        order = {vl.id: i for i, vl in enumerate(ae.vls)}
        # nonincreasing bandwidth, request order among equals
        by_bw = sorted(ae.vls, key=lambda vl: (-vl.bw, order[vl.id]))
        self.pending_vdl = [vl for vl in by_bw if vl.kind is LinkKind.VDL]
        self.pending_vcl = [vl for vl in by_bw if vl.kind is LinkKind.VCL]

    # -- lookups -----------------------------------------------------------

    def endpoint_of(self, an_id: str) -> int | None:
        if an_id in self.vm_cn:
            return int(self.dc.cn_ep[self.vm_cn[an_id]])
        if an_id in self.db_sn:
            return int(self.dc.sn_ep[self.db_sn[an_id]])
        return None

    def is_placed(self, an_id: str) -> bool:
        return an_id in self.vm_cn or an_id in self.db_sn

    def placed_peers(self, an_id: str) -> list[tuple[int, float, object]]:
        """NTPP VLs of an AN: ``[(peer endpoint, bw, link), ...]``."""
        out = []
        for peer, bw, vl in self.ae.peers[an_id]:
            h = self.endpoint_of(peer)
            if h is not None and bw > 0:
                out.append((h, bw, vl))
        return out

    def available(self, u: int, v: int) -> float:
        """Residual of an endpoint pair pool, net of staged use."""
        if self.dc.same_node(u, v):
            return math.inf
        k = (u, v) if u < v else (v, u)
        return self.state.pools.available(u, v) - self._staged_bw.get(k, 0.0)

    def available_column(self, host: int) -> np.ndarray:
        col = self.state.pools.column(host)
        for other in self._staged_partners.get(host, ()):
            k = (host, other) if host < other else (other, host)
            col[other] -= self._staged_bw[k]
        return col

    # -- scalar feasibility / cost, one candidate at a time ----------------

    def vm_peer_feas(self, vm: VirtualMachine, cn: int) -> bool:
        if vm.cpu > self.cpu[cn] or vm.mem > self.mem[cn]:
            return False
        h = int(self.dc.cn_ep[cn])
        return all(bw <= self.available(h, p) for p, bw, _ in self.placed_peers(vm.id))

    def vm_pair_peer_feas(self, vm1: VirtualMachine, vm2: VirtualMachine, cn: int) -> bool:
        if vm1.cpu + vm2.cpu > self.cpu[cn] or vm1.mem + vm2.mem > self.mem[cn]:
            return False
        h = int(self.dc.cn_ep[cn])
        need: dict[int, float] = defaultdict(float)
        for vm in (vm1, vm2):
            for p, bw, _ in self.placed_peers(vm.id):
                need[p] += bw
        return all(bw <= self.available(h, p) for p, bw in need.items())

    def db_peer_feas(self, db: DataBlock, sn: int) -> bool:
        if db.str > self.str[sn]:
            return False
        h = int(self.dc.sn_ep[sn])
        return all(bw <= self.available(p, h) for p, bw, _ in self.placed_peers(db.id))

    def vm_peer_hop_cost(self, vm: VirtualMachine, cn: int) -> float:
        h = int(self.dc.cn_ep[cn])
        return sum(bw * self.dc.ep_hops[h, p] for p, bw, _ in self.placed_peers(vm.id))

    def db_peer_hop_cost(self, db: DataBlock, sn: int) -> float:
        h = int(self.dc.sn_ep[sn])
        return sum(bw * self.dc.ep_hops[p, h] for p, bw, _ in self.placed_peers(db.id))

    def vm_peer_cost(self, vm: VirtualMachine, cn: int) -> float:
        return self.vm_peer_hop_cost(vm, cn) * self.dc.df

    def db_peer_cost(self, db: DataBlock, sn: int) -> float:
        return self.db_peer_hop_cost(db, sn) * self.dc.df

    # -- vectorized over every candidate -----------------------------------

    def _peer_scan(self, an_id, to_hosts, ep_hops):
        """Pool feasibility (aggregated per peer endpoint) and hop cost for
        every candidate whose endpoints are ``to_hosts``."""
        ok = np.ones(len(to_hosts), dtype=bool)
        cost = np.zeros(len(to_hosts))
        need: dict[int, float] = defaultdict(float)
        for p, bw, _ in self.placed_peers(an_id):
            cost += bw * ep_hops[:, p]
            need[p] += bw
        for p, bw in need.items():
            ok &= self.available_column(p)[to_hosts] >= bw
        return ok, cost

    def vm_scan(self, vm: VirtualMachine) -> tuple[np.ndarray, np.ndarray]:
        """Feasibility mask and peer hop cost of ``vm`` on every CN."""
        ok, cost = self._peer_scan(vm.id, self.dc.cn_ep, self.dc.cn_ep_hops)
        ok &= (self.cpu >= vm.cpu) & (self.mem >= vm.mem)
        return ok, cost

    def db_scan(self, db: DataBlock) -> tuple[np.ndarray, np.ndarray]:
        ok, cost = self._peer_scan(db.id, self.dc.sn_ep, self.dc.sn_ep_hops)
        ok &= self.str >= db.str
        return ok, cost

    # -- joint check for one greedy step -----------------------------------

    def step_demands(self, moves: list[tuple[str, int]]) -> tuple[dict, list]:
        """Pool demands created by placing ``moves`` (AN id, facet) in order.

        Returns aggregated demand per endpoint pair and the individual
        reservations in placement order.
        """
        hosts = {}
        agg: dict[tuple[int, int], float] = defaultdict(float)
        res = []
        for an_id, facet in moves:
            is_vm = an_id in self.ae.vm_by_id
            h = int(self.dc.cn_ep[facet] if is_vm else self.dc.sn_ep[facet])
            for peer, bw, vl in self.ae.peers[an_id]:
                p = hosts.get(peer, self.endpoint_of(peer))
                if p is None or bw <= 0:
                    continue
                if not self.dc.same_node(p, h):
                    k = (h, p) if h < p else (p, h)
                    agg[k] += bw
                    res.append(Reservation(k[0], k[1], bw, vl.id))
            hosts[an_id] = h
        return agg, res

    def step_feasible(self, moves: list[tuple[str, int]]) -> bool:
        """All resource and pool constraints hold after applying ``moves``."""
        cpu: dict[int, float] = defaultdict(float)
        mem: dict[int, float] = defaultdict(float)
        sto: dict[int, float] = defaultdict(float)
        for an_id, facet in moves:
            vm = self.ae.vm_by_id.get(an_id)
            if vm is not None:
                cpu[facet] += vm.cpu
                mem[facet] += vm.mem
            else:
                sto[facet] += self.ae.db_by_id[an_id].str
        if any(c > self.cpu[f] for f, c in cpu.items()) or any(m > self.mem[f] for f, m in mem.items()):
            return False
        if any(s > self.str[f] for f, s in sto.items()):
            return False
        agg, _ = self.step_demands(moves)
        return all(bw <= self.available(u, v) for (u, v), bw in agg.items())

    # -- placement subroutines (peer-VL placement) -------------------------

    def _place(self, an_id: str, host: int, kind_is_vm: bool) -> None:
        n = 0
        for peer, bw, vl in self.ae.peers[an_id]:
            p = self.endpoint_of(peer)
            if p is None or bw <= 0:
                continue
            n += 1
            if not self.dc.same_node(p, host):
                k = (host, p) if host < p else (p, host)
                self._staged_bw[k] += bw
                self._staged_partners[k[0]].add(k[1])
                self._staged_partners[k[1]].add(k[0])
                self.reservations.append(Reservation(k[0], k[1], bw, vl.id))
            self.vl_hop_cost[vl.id] = bw * self.dc.ep_hops[host, p]
            pending = self.pending_vcl if vl.kind is LinkKind.VCL else self.pending_vdl
            if vl in pending:
                pending.remove(vl)
        self.ntpp.append(n)

    def place_vm(self, vm: VirtualMachine, cn: int) -> None:
        """Host ``vm`` on CN ``cn`` and place all of its NTPP VLs."""
        self.cpu[cn] -= vm.cpu
        self.mem[cn] -= vm.mem
        host = int(self.dc.cn_ep[cn])
        self._place(vm.id, host, True)
        self.vm_cn[vm.id] = cn

    def place_db(self, db: DataBlock, sn: int) -> None:
        """Host ``db`` on SN ``sn`` and place all of its NTPP VLs."""
        self.str[sn] -= db.str
        host = int(self.dc.sn_ep[sn])
        self._place(db.id, host, False)
        self.db_sn[db.id] = sn

    # -- result ------------------------------------------------------------

    def per_vl_costs(self) -> dict[str, float]:
        return {vl.id: self.vl_hop_cost[vl.id] * self.dc.df for vl in self.ae.vls}

    def commit(self) -> PlacementOutcome:
        apply_deployment(self.state, self.ae, self.vm_cn, self.db_sn, self.reservations)
        per_vl = self.per_vl_costs()
        return PlacementOutcome(
            "Placed", math.fsum(per_vl.values()), per_vl,
            dict(self.vm_cn), dict(self.db_sn), ntpp=list(self.ntpp),
        )


def place_isolated(stg: Staging) -> bool:
    """Place ANs without any VL on the first facet with room, in index order."""
    for vm in stg.ae.vms:
        if not stg.is_placed(vm.id):
            ok = np.flatnonzero((stg.cpu >= vm.cpu) & (stg.mem >= vm.mem))
            if not len(ok):
                return False
            stg.place_vm(vm, int(ok[0]))
    for db in stg.ae.dbs:
        if not stg.is_placed(db.id):
            ok = np.flatnonzero(stg.str >= db.str)
            if not len(ok):
                return False
            stg.place_db(db, int(ok[0]))
    return True
