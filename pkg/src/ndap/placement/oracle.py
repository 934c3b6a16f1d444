"""Exhaustive optimal placement for toy instances."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ..model import (
    ApplicationEnvironment,
    DataBlock,
    LinkKind,
    PlacementOutcome,
    PlacementState,
    VirtualLink,
    VirtualMachine,
    terminate_deployment,
)
from .staging import Staging

MAX_ANS = 6
MAX_GRID = 64


class InstanceTooLargeError(ValueError):
    pass


def oracle_place(state: PlacementState, ae: ApplicationEnvironment, rng=None) -> PlacementOutcome:
    """Minimum-cost feasible assignment by enumeration of every mapping.

    Ties go to the first mapping in lexicographic (VMs then DBs) order.
    """
    dc = state.dc
    if len(ae.vms) + len(ae.dbs) > MAX_ANS or dc.n_cn * dc.n_sn > MAX_GRID:
        raise InstanceTooLargeError(
            f"oracle limited to {MAX_ANS} ANs and N_c*N_s <= {MAX_GRID}")
    stg = Staging(state, ae)
    ids = [vm.id for vm in ae.vms] + [db.id for db in ae.dbs]
    ranges = [range(dc.n_cn)] * len(ae.vms) + [range(dc.n_sn)] * len(ae.dbs)
    n_vm = len(ae.vms)
    H = dc.ep_hops
    best, best_cost = None, math.inf
    for combo in itertools.product(*ranges):
        moves = list(zip(ids, combo))
        if not stg.step_feasible(moves):
            continue
        host = {an: int(dc.cn_ep[f]) if k < n_vm else int(dc.sn_ep[f])
                for k, (an, f) in enumerate(moves)}
        cost = math.fsum(vl.bw * H[host[vl.a], host[vl.b]] for vl in ae.vls)
        if cost < best_cost:
            best, best_cost = moves, cost
    if best is None:
        return PlacementOutcome.infeasible("no feasible assignment exists")
    for k, (an, f) in enumerate(best):
        if k < n_vm:
            stg.place_vm(ae.vm_by_id[an], f)
        else:
            stg.place_db(ae.db_by_id[an], f)
    return stg.commit()


# -- toy-instance suite ------------------------------------------------------


def random_toy_ae(rng, ae_id: str = "toy", max_ans: int = 3, single_vdl: bool = False) -> ApplicationEnvironment:
    """Random AE with at most ``max_ans`` ANs and at least one VM."""
    def u(lo, hi):
        return round(float(rng.uniform(lo, hi)), 3)

    if single_vdl:
        n_vm, n_db = 1, 1
    else:
        n_an = int(rng.integers(1, max_ans + 1))
        n_vm = int(rng.integers(1, n_an + 1))
        n_db = n_an - n_vm
    vms = tuple(VirtualMachine(f"vm{i}", u(0.05, 0.7), u(0.05, 0.7)) for i in range(n_vm))
    dbs = tuple(DataBlock(f"db{i}", u(0.05, 0.7)) for i in range(n_db))
    pairs = [(a.id, b.id) for i, a in enumerate(vms) for b in vms[i + 1:]]
    pairs += [(a.id, d.id) for a in vms for d in dbs]
    if single_vdl:
        chosen = pairs
    else:
        chosen = [p for p in pairs if rng.random() < 0.7]
    vls = tuple(VirtualLink(LinkKind.VDL if b.startswith("db") else LinkKind.VCL, a, b, u(0.05, 0.9))
                for a, b in chosen)
    return ApplicationEnvironment(vms, dbs, vls, "toy", ae_id)


def random_toy_case(rng, single_vdl: bool = False):
    """A toy data center (<= 4 CNs, <= 2 SNs), a possibly preloaded state and an AE."""
    from ..topology import toy_topology
    from .ndap import ndap_place

    high_end = int(rng.integers(0, 2))
    servers = int(rng.integers(1 - high_end, 5 - high_end))
    regular = int(rng.integers(1 - high_end, 2))
    dc = toy_topology(servers, high_end, regular, df=float(rng.choice([1.0, 2.0, 4.0])))
    state = PlacementState(dc)
    if rng.random() < 0.5:
        ndap_place(state, random_toy_ae(rng, "prior"))
    return state, random_toy_ae(rng, "ae", single_vdl=single_vdl)


def zero_distance_pair_exists(state: PlacementState, ae: ApplicationEnvironment) -> bool:
    """For a single-VDL AE: some CN and SN on one physical node both have room."""
    dc = state.dc
    (vm,), (db,) = ae.vms, ae.dbs
    for cn in range(dc.n_cn):
        for sn in range(dc.n_sn):
            if (dc.cn_nodes[cn] == dc.sn_nodes[sn] and vm.cpu <= state.cpu[cn]
                    and vm.mem <= state.mem[cn] and db.str <= state.str[sn]):
                return True
    return False


@dataclass
class OracleReport:
    instances: int = 0
    both_placed: int = 0
    neither_placed: int = 0
    oracle_only: int = 0
    ndap_only: int = 0
    zero_cases: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def lines(self) -> list[str]:
        return [
            f"instances: {self.instances}",
            f"both placed: {self.both_placed}",
            f"neither placed: {self.neither_placed}",
            f"oracle only: {self.oracle_only}",
            f"ndap only: {self.ndap_only}",
            f"single-VDL zero-distance cases: {self.zero_cases}",
            f"violations: {len(self.violations)}",
        ] + [f"  {v}" for v in self.violations]


def oracle_check(instances: int = 200, seed: int = 0, tol: float = 1e-9) -> OracleReport:
    """Compare NDAP against the exhaustive optimum on seeded toy instances.

    Every fourth instance is a single VDL. Checks: NDAP never beats the
    optimum, NDAP never places what the optimum cannot, and a single VDL with
    a feasible co-located CN/SN pair costs zero under both.
    """
    from .ndap import ndap_place

    report = OracleReport()
    root = np.random.SeedSequence(seed)
    for k, child in enumerate(root.spawn(instances)):
        rng = np.random.default_rng(child)
        single = k % 4 == 3
        state, ae = random_toy_case(rng, single_vdl=single)
        zero = single and zero_distance_pair_exists(state, ae)
        before = state.snapshot()
        ora = oracle_place(state, ae)
        if ora.placed:
            terminate_deployment(state, ae.id)
        nd = ndap_place(state, ae)
        report.instances += 1
        if ora.placed and nd.placed:
            report.both_placed += 1
            if nd.total_cost < ora.total_cost - tol:
                report.violations.append(
                    f"instance {k}: ndap cost {nd.total_cost} below oracle {ora.total_cost}")
        elif ora.placed:
            report.oracle_only += 1
        elif nd.placed:
            report.ndap_only += 1
            report.violations.append(f"instance {k}: ndap placed an AE the oracle found infeasible")
        else:
            report.neither_placed += 1
        if zero:
            report.zero_cases += 1
            if not (nd.placed and ora.placed and nd.total_cost == 0 and ora.total_cost == 0):
                report.violations.append(f"instance {k}: single VDL with a co-located pair not placed at zero cost")
        if nd.placed:
            terminate_deployment(state, ae.id)
        if state.snapshot() != before:
            report.violations.append(f"instance {k}: state not restored after terminate")
    return report
