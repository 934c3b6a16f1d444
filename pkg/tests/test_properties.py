"""Property-based checks of the model, topology, workload and placers."""
import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from ndap.model import PlacementState, audit, deploy_cost, terminate_deployment
from ndap.placement import get_placer
from ndap.placement.ndap import ndap_place
from ndap.placement.oracle import oracle_place, random_toy_case
from ndap.topology import BandwidthPools, build_topology
from ndap.workload import DEMAND_MAX, DEMAND_MIN, Deploy, DemandParams, TraceStream, montage_template, sample_ae

seeds = st.integers(0, 2**32 - 1)
ALGOS = ["ndap", "nva", "ffd"]
DC36 = build_topology(36, 2.0)


@given(amounts=st.lists(st.floats(0.0, 0.25, allow_nan=False), min_size=1, max_size=4),
       order=st.randoms(use_true_random=False))
def test_pool_reserve_release_exact(amounts, order):
    pools = BandwidthPools(np.array([0, 1, 2]))
    for bw in amounts:
        pools.reserve(0, 2, bw)
        assert pools.available(0, 2) == 1.0 - math.fsum(pools._held.get((0, 2), ()))
    assert pools.available(2, 0) == pools.available(0, 2)
    order.shuffle(amounts)
    for bw in amounts:
        pools.release(2, 0, bw)
    assert pools.available(0, 2) == 1.0
    assert pools.snapshot() == {}
    assert math.isinf(pools.available(1, 1))


@given(a=st.integers(0, len(DC36.nodes) - 1), b=st.integers(0, len(DC36.nodes) - 1),
       c=st.integers(0, len(DC36.nodes) - 1))
def test_hops_is_a_tree_metric(a, b, c):
    h = DC36.hops
    assert h(a, b) == h(b, a) >= 0
    assert (h(a, b) == 0) == (a == b)
    assert h(a, c) <= h(a, b) + h(b, c)
    path = DC36.path(a, b)
    assert path[0] == a and path[-1] == b and len(set(path)) == len(path)
    assert all(tuple(sorted(e)) in {tuple(sorted(x)) for x in DC36.edges} for e in zip(path, path[1:]))


@given(u=st.integers(0, DC36.n_ep - 1), v=st.integers(0, DC36.n_ep - 1))
def test_endpoint_hops_follow_nodes(u, v):
    assert DC36.ep_hops[u, v] == DC36.hops(int(DC36.ep_nodes[u]), int(DC36.ep_nodes[v]))


@given(mean_com=st.floats(0.01, 1.0), mean_str=st.floats(0.01, 1.0), mean_vlbw=st.floats(0.01, 1.0),
       sd=st.floats(0.0, 3.0), seed=seeds)
def test_clamped_demands_in_range(mean_com, mean_str, mean_vlbw, sd, seed):
    p = DemandParams(mean_com, mean_str, mean_vlbw, sd)
    ae = sample_ae(montage_template(), p, np.random.default_rng(seed))
    values = [v.cpu for v in ae.vms] + [v.mem for v in ae.vms] + [d.str for d in ae.dbs] + [l.bw for l in ae.vls]
    assert all(DEMAND_MIN <= x <= DEMAND_MAX for x in values)
    assert ae.counts == montage_template().counts


@given(seed=seeds)
def test_trace_validity(seed):
    stream = TraceStream(DemandParams(), np.random.default_rng(seed))
    live = set()
    for ev in stream.take(150):
        if isinstance(ev, Deploy):
            live.add(ev.ae.id)
        else:
            assert ev.ae_id in live
            live.remove(ev.ae_id)


def _replay(dc, algo, seed, events):
    """Play a trace prefix, auditing after every event. Returns the state."""
    state = PlacementState(dc)
    stream = TraceStream(DemandParams(), np.random.default_rng(seed))
    rng = np.random.default_rng(seed ^ 0x5EED)
    placer = get_placer(algo)
    for i in range(events):
        ev = stream[i]
        if isinstance(ev, Deploy):
            before = state.snapshot()
            out = placer(state, ev.ae, rng)
            if not out.placed:
                assert state.snapshot() == before
                break
            assert out.total_cost == pytest.approx(deploy_cost(state, ev.ae), abs=1e-9)
        elif ev.ae_id in state.deployed:
            terminate_deployment(state, ev.ae_id)
        assert audit(state) == []
    return state


@given(seed=seeds, algo=st.sampled_from(ALGOS), events=st.integers(1, 40))
def test_conservation_after_every_event(seed, algo, events):
    _replay(DC36, algo, seed, events)


@given(seed=seeds, algo=st.sampled_from(ALGOS), events=st.integers(1, 40), order=st.randoms(use_true_random=False))
def test_terminating_everything_restores_empty_state(seed, algo, events, order):
    state = _replay(DC36, algo, seed, events)
    ids = list(state.deployed)
    order.shuffle(ids)
    for ae_id in ids:
        terminate_deployment(state, ae_id)
    assert state.snapshot() == PlacementState(DC36).snapshot()


@given(seed=seeds, algo=st.sampled_from(ALGOS), events=st.integers(0, 30))
def test_deploy_then_terminate_is_identity(seed, algo, events):
    state = _replay(DC36, algo, seed, events)
    ae = sample_ae(montage_template(), DemandParams(), np.random.default_rng(seed + 1), "extra")
    before = state.snapshot()
    out = get_placer(algo)(state, ae, np.random.default_rng(seed))
    if out.placed:
        terminate_deployment(state, ae.id)
    assert state.snapshot() == before


@given(seed=seeds, k=st.sampled_from([2, 4, 8, 3, 5]))
def test_df_argmin_invariance(seed, k):
    lo, hi = build_topology(36, 2.0), build_topology(36, 2.0 * k)
    s_lo, s_hi = PlacementState(lo), PlacementState(hi)
    stream = TraceStream(DemandParams(), np.random.default_rng(seed))
    for i in range(30):
        ev = stream[i]
        if isinstance(ev, Deploy):
            a, b = ndap_place(s_lo, ev.ae), ndap_place(s_hi, ev.ae)
            assert a.status == b.status
            if not a.placed:
                break
            assert (a.vm_cn, a.db_sn) == (b.vm_cn, b.db_sn)
            if k in (2, 4, 8):
                assert b.total_cost == k * a.total_cost
            else:
                assert b.total_cost == pytest.approx(k * a.total_cost, rel=1e-12)
        else:
            terminate_deployment(s_lo, ev.ae_id)
            terminate_deployment(s_hi, ev.ae_id)


@given(seed=seeds, single=st.booleans())
def test_oracle_dominance(seed, single):
    state, ae = random_toy_case(np.random.default_rng(seed), single_vdl=single)
    ora = oracle_place(state, ae)
    if ora.placed:
        terminate_deployment(state, ae.id)
    nd = ndap_place(state, ae)
    if nd.placed:
        assert ora.placed
        assert nd.total_cost >= ora.total_cost - 1e-9


@given(seed=seeds, algo=st.sampled_from(ALGOS))
def test_failure_leaves_state_unchanged(seed, algo):
    rng = np.random.default_rng(seed)
    state = PlacementState(DC36)
    heavy = DemandParams(mean_com=.8, mean_str=.8, mean_vlbw=.8, sd=.3)
    placer = get_placer(algo)
    for i in range(60):
        ae = sample_ae(montage_template(), heavy, rng, f"h{i}")
        before = state.snapshot()
        if not placer(state, ae, rng).placed:
            assert state.snapshot() == before
            return
    assume(False)
