"""Slow, loop-based reference placers used as test oracles.

Nothing here imports the package's staging or scan code; only the topology
(hop table, facet-to-node maps) and the state's starting residuals are read.
"""
import math

from ndap.model import LinkKind


class RefState:
    def __init__(self, state, ae):
        dc = state.dc
        self.dc = dc
        self.ae = ae
        self.cpu = [float(x) for x in state.cpu]
        self.mem = [float(x) for x in state.mem]
        self.str = [float(x) for x in state.str]
        self.pool = {}
        for (u, v), avail, _ in state.pools.items():
            self.pool[(u, v)] = avail
        self.where = {}  # AN id -> endpoint index

    def ep(self, an, facet):
        return facet if an in self.ae.vm_by_id else self.dc.n_cn + facet

    def avail(self, u, v):
        if self.dc.ep_nodes[u] == self.dc.ep_nodes[v]:
            return math.inf
        return self.pool.get((min(u, v), max(u, v)), 1.0)

    def demands(self, moves):
        """Aggregated pool demand of placing ``moves`` in order."""
        where = dict(self.where)
        need = {}
        for an, facet in moves:
            h = self.ep(an, facet)
            for peer, bw, _ in self.ae.peers[an]:
                p = where.get(peer)
                if p is None or self.dc.ep_nodes[p] == self.dc.ep_nodes[h]:
                    continue
                k = (min(h, p), max(h, p))
                need[k] = need.get(k, 0.0) + bw
            where[an] = h
        return need

    def feasible(self, moves):
        cpu, mem, sto = {}, {}, {}
        for an, facet in moves:
            if an in self.ae.vm_by_id:
                vm = self.ae.vm_by_id[an]
                cpu[facet] = cpu.get(facet, 0.0) + vm.cpu
                mem[facet] = mem.get(facet, 0.0) + vm.mem
            else:
                sto[facet] = sto.get(facet, 0.0) + self.ae.db_by_id[an].str
        if any(c > self.cpu[f] for f, c in cpu.items()):
            return False
        if any(m > self.mem[f] for f, m in mem.items()):
            return False
        if any(s > self.str[f] for f, s in sto.items()):
            return False
        return all(bw <= self.avail(u, v) for (u, v), bw in self.demands(moves).items())

    def peer_cost(self, an, facet):
        """Hop cost of an AN's links to already placed peers, summed in link order."""
        h = self.ep(an, facet)
        total = 0.0
        for peer, bw, _ in self.ae.peers[an]:
            p = self.where.get(peer)
            if p is not None:
                total = total + bw * self.dc.ep_hops[h, p]
        return total

    def place(self, an, facet):
        for k, bw in self.demands([(an, facet)]).items():
            self.pool[k] = self.avail(*k) - bw
        if an in self.ae.vm_by_id:
            vm = self.ae.vm_by_id[an]
            self.cpu[facet] -= vm.cpu
            self.mem[facet] -= vm.mem
        else:
            self.str[facet] -= self.ae.db_by_id[an].str
        self.where[an] = self.ep(an, facet)


def ref_ndap_steps(state, ae):
    """Greedy steps as ``(vl id, case, chosen, hop cost)``; None on failure.

    Candidates are scanned in index order (CN-major for pairs) and the first
    strictly smaller cost wins.
    """
    ref = RefState(state, ae)
    dc = state.dc
    order = {vl.id: i for i, vl in enumerate(ae.vls)}
    ranked = sorted(ae.vls, key=lambda vl: (-vl.bw, order[vl.id]))
    todo = [vl for vl in ranked if vl.kind is LinkKind.VDL] + [vl for vl in ranked if vl.kind is LinkKind.VCL]
    steps = []
    for vl in todo:
        a_in, b_in = vl.a in ref.where, vl.b in ref.where
        if a_in and b_in:
            continue
        best, best_cost = None, math.inf
        if not a_in and not b_in:
            is_vdl = vl.kind is LinkKind.VDL
            n_b = dc.n_sn if is_vdl else dc.n_cn
            hops = dc.cn_sn_hops if is_vdl else dc.cn_cn_hops
            for i in range(dc.n_cn):
                for j in range(n_b):
                    moves = [(vl.a, i), (vl.b, j)]
                    if not ref.feasible(moves):
                        continue
                    c = vl.bw * hops[i, j] + ref.peer_cost(vl.a, i) + ref.peer_cost(vl.b, j)
                    if c < best_cost:
                        best, best_cost = (i, j), c
            case = "1.1" if is_vdl else "2.1"
            keys = ("cn", "sn") if is_vdl else ("cn1", "cn2")
        else:
            an = vl.b if a_in else vl.a
            is_vm = an in ae.vm_by_id
            for i in range(dc.n_cn if is_vm else dc.n_sn):
                if not ref.feasible([(an, i)]):
                    continue
                c = ref.peer_cost(an, i)
                if c < best_cost:
                    best, best_cost = (i,), c
            if vl.kind is LinkKind.VDL:
                case = "1.2" if is_vm else "1.3"
            else:
                case = "2.2"
            keys = ("cn",) if is_vm else ("sn",)
        if best is None:
            return None
        ends = [vl.a, vl.b] if len(best) == 2 else [an]
        for end, f in zip(ends, best):
            ref.place(end, f)
        steps.append((vl.id, case, dict(zip(keys, best)), best_cost))
    return steps


def ref_ffd(state, ae):
    """Independent first-fit-decreasing: ``{an: facet}`` or None."""
    ref = RefState(state, ae)
    dc = state.dc
    cn_key = [(-(ref.cpu[i] + ref.mem[i]) / 2, i) for i in range(dc.n_cn)]
    sn_key = [(-ref.str[i], i) for i in range(dc.n_sn)]
    cns = [i for _, i in sorted(cn_key)]
    sns = [i for _, i in sorted(sn_key)]
    dbs = [d for _, _, d in sorted((-d.str, k, d.id) for k, d in enumerate(ae.dbs))]
    vms = [v for _, _, v in sorted((-(v.cpu + v.mem) / 2, k, v.id) for k, v in enumerate(ae.vms))]
    out = {}
    for an, facets in [(d, sns) for d in dbs] + [(v, cns) for v in vms]:
        for f in facets:
            if ref.feasible([(an, f)]):
                ref.place(an, f)
                out[an] = f
                break
        else:
            return None
    return out
