"""Network- and data-aware greedy placement of a whole AE.

VDLs are taken in nonincreasing bandwidth order, then whatever VCLs were not
already placed as peer links. Each step puts the link's unplaced endpoint(s)
on the feasible facet (or facet pair) with the smallest incremental network
cost. The candidate scan order is CN-major and ties go to the first candidate.
"""
from __future__ import annotations

import math

import numpy as np

from ..model import ApplicationEnvironment, PlacementOutcome, PlacementState
from .staging import Staging, place_isolated


def _select(stg: Staging, cost: np.ndarray, mask: np.ndarray, moves_of):
    """Index of the cheapest candidate that passes the joint step check.

    ``cost`` and ``mask`` may be 1-D or 2-D; ties resolve to the first index
    in C order. Returns ``(flat index or None, number of feasible-by-mask
    candidates)``.
    """
    c = np.where(mask, cost, math.inf).ravel()
    scanned = int(mask.sum())
    while True:
        i = int(np.argmin(c))
        if c[i] == math.inf:
            return None, scanned
        if stg.step_feasible(moves_of(i)):
            return i, scanned
        c[i] = math.inf


def _pair_scan(stg: Staging, vm1, vm2):
    """Mask of CNs that can host ``vm1`` and ``vm2`` together."""
    ok = (stg.cpu >= vm1.cpu + vm2.cpu) & (stg.mem >= vm1.mem + vm2.mem)
    need = {}
    for vm in (vm1, vm2):
        for p, bw, _ in stg.placed_peers(vm.id):
            need[p] = need.get(p, 0.0) + bw
    for p, bw in need.items():
        ok &= stg.available_column(p)[stg.dc.cn_ep] >= bw
    return ok


def ndap_place(state: PlacementState, ae: ApplicationEnvironment, rng=None,
               trace: list | None = None) -> PlacementOutcome:
    """Place ``ae`` greedily; on failure the state is left untouched.

    When ``trace`` is a list, one dict per greedy step is appended to it.
    """
    stg = Staging(state, ae)
    dc = stg.dc
    step = 0

    def record(vl, case, scanned, chosen, hop_cost):
        if trace is not None:
            trace.append({
                "ae": ae.id, "step": step, "vl": vl.id, "case": case,
                "scanned": scanned, "chosen": chosen, "step_cost": hop_cost * dc.df,
            })

    while stg.pending_vdl:
        vdl = stg.pending_vdl[0]
        vm, db = ae.vm_by_id[vdl.a], ae.db_by_id[vdl.b]
        vm_placed, db_placed = stg.is_placed(vm.id), stg.is_placed(db.id)
        if not vm_placed and not db_placed:
            case = "1.1"
            okv, cv = stg.vm_scan(vm)
            oks, cs = stg.db_scan(db)
            grid = vdl.bw * dc.cn_sn_hops + cv[:, None] + cs[None, :]
            mask = okv[:, None] & oks[None, :]
            n_sn = dc.n_sn
            i, scanned = _select(stg, grid, mask,
                                 lambda i: [(vm.id, i // n_sn), (db.id, i % n_sn)])
            if i is None:
                return PlacementOutcome.infeasible(f"no feasible CN/SN pair for {vdl.id}")
            cn, sn = divmod(i, n_sn)
            hop_cost = float(grid[cn, sn])
            stg.place_vm(vm, cn)
            stg.place_db(db, sn)
            chosen = {"cn": cn, "sn": sn}
        elif not vm_placed:
            case = "1.2"
            ok, cost = stg.vm_scan(vm)
            cn, scanned = _select(stg, cost, ok, lambda i: [(vm.id, i)])
            if cn is None:
                return PlacementOutcome.infeasible(f"no feasible CN for {vm.id}")
            hop_cost = float(cost[cn])
            stg.place_vm(vm, cn)
            chosen = {"cn": cn}
        elif not db_placed:
            case = "1.3"
            ok, cost = stg.db_scan(db)
            sn, scanned = _select(stg, cost, ok, lambda i: [(db.id, i)])
            if sn is None:
                return PlacementOutcome.infeasible(f"no feasible SN for {db.id}")
            hop_cost = float(cost[sn])
            stg.place_db(db, sn)
            chosen = {"sn": sn}
        else:  # both ends placed through some other link; already reserved
            stg.pending_vdl.pop(0)
            continue
        record(vdl, case, scanned, chosen, hop_cost)
        step += 1

    while stg.pending_vcl:
        vcl = stg.pending_vcl[0]
        vm1, vm2 = ae.vm_by_id[vcl.a], ae.vm_by_id[vcl.b]
        p1, p2 = stg.is_placed(vm1.id), stg.is_placed(vm2.id)
        if not p1 and not p2:
            case = "2.1"
            ok1, c1 = stg.vm_scan(vm1)
            ok2, c2 = stg.vm_scan(vm2)
            grid = vcl.bw * dc.cn_cn_hops + c1[:, None] + c2[None, :]
            mask = ok1[:, None] & ok2[None, :]
            np.fill_diagonal(mask, _pair_scan(stg, vm1, vm2))
            n_cn = dc.n_cn
            i, scanned = _select(stg, grid, mask,
                                 lambda i: [(vm1.id, i // n_cn), (vm2.id, i % n_cn)])
            if i is None:
                return PlacementOutcome.infeasible(f"no feasible CN pair for {vcl.id}")
            cn1, cn2 = divmod(i, n_cn)
            hop_cost = float(grid[cn1, cn2])
            stg.place_vm(vm1, cn1)
            stg.place_vm(vm2, cn2)
            chosen = {"cn1": cn1, "cn2": cn2}
        elif not p1 or not p2:
            case = "2.2"
            vm = vm2 if p1 else vm1
            ok, cost = stg.vm_scan(vm)
            cn, scanned = _select(stg, cost, ok, lambda i: [(vm.id, i)])
            if cn is None:
                return PlacementOutcome.infeasible(f"no feasible CN for {vm.id}")
            hop_cost = float(cost[cn])
            stg.place_vm(vm, cn)
            chosen = {"cn": cn}
        else:
            stg.pending_vcl.pop(0)
            continue
        record(vcl, case, scanned, chosen, hop_cost)
        step += 1

    if not place_isolated(stg):
        return PlacementOutcome.infeasible("no room for an isolated AN")
    return stg.commit()
