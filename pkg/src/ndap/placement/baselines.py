"""Baseline placers: random-data network-aware VM allocation and FFD."""
from __future__ import annotations

import numpy as np

from ..model import ApplicationEnvironment, LinkKind, PlacementOutcome, PlacementState
from .ndap import _select
from .staging import Staging

MAX_TRIES = 100


def _random_fit(stg: Staging, an_id: str, n_facets: int, rng, place) -> bool:
    for _ in range(MAX_TRIES):
        f = int(rng.integers(n_facets))
        if stg.step_feasible([(an_id, f)]):
            place(f)
            return True
    return False


def nva_place(state: PlacementState, ae: ApplicationEnvironment, rng) -> PlacementOutcome:
    """DBs on random SNs, data-linked VMs next to their placed peers, the rest random."""
    stg = Staging(state, ae)
    for db in ae.dbs:
        if not _random_fit(stg, db.id, stg.dc.n_sn, rng, lambda sn, db=db: stg.place_db(db, sn)):
            return PlacementOutcome.infeasible(f"no SN found for {db.id} in {MAX_TRIES} tries")
    data_linked = {vl.a for vl in ae.vls if vl.kind is LinkKind.VDL}
    for vm in ae.vms:
        if vm.id not in data_linked:
            continue
        ok, cost = stg.vm_scan(vm)
        cn, _ = _select(stg, cost, ok, lambda i, vm=vm: [(vm.id, i)])
        if cn is None:
            return PlacementOutcome.infeasible(f"no feasible CN for {vm.id}")
        stg.place_vm(vm, cn)
    for vm in ae.vms:
        if stg.is_placed(vm.id):
            continue
        if not _random_fit(stg, vm.id, stg.dc.n_cn, rng, lambda cn, vm=vm: stg.place_vm(vm, cn)):
            return PlacementOutcome.infeasible(f"no CN found for {vm.id} in {MAX_TRIES} tries")
    return stg.commit()


def ffd_order(values: np.ndarray) -> np.ndarray:
    """Indices by decreasing value; equal values keep ascending index."""
    return np.argsort(-values, kind="stable")


def ffd_place(state: PlacementState, ae: ApplicationEnvironment, rng=None) -> PlacementOutcome:
    """First fit decreasing over residual-sorted node lists.

    Node lists are sorted once per call (CNs by mean of CPU and memory
    residual, SNs by storage residual) and then scanned in that fixed order.
    """
    stg = Staging(state, ae)
    cn_list = ffd_order((stg.cpu + stg.mem) / 2)
    sn_list = ffd_order(stg.str)
    dbs = sorted(ae.dbs, key=lambda d: -d.str)
    vms = sorted(ae.vms, key=lambda v: -(v.cpu + v.mem) / 2)

    for db in dbs:
        ok, _ = stg.db_scan(db)
        for sn in sn_list[ok[sn_list]]:
            if stg.step_feasible([(db.id, int(sn))]):
                stg.place_db(db, int(sn))
                break
        else:
            return PlacementOutcome.infeasible(f"no SN fits {db.id}")
    for vm in vms:
        ok, _ = stg.vm_scan(vm)
        for cn in cn_list[ok[cn_list]]:
            if stg.step_feasible([(vm.id, int(cn))]):
                stg.place_vm(vm, int(cn))
                break
        else:
            return PlacementOutcome.infeasible(f"no CN fits {vm.id}")
    return stg.commit()
