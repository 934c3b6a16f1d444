"""Simulated cloud-ready data center: tree topology, hop distances, bandwidth pools.

The data center is generated from the server count ``N`` alone. Compute and
storage networks are three-tier trees that meet at the core switches:

    servers -> compute access -> aggregation -> core
    storage devices -> storage access -> core

A physical node carries a compute facet (CN), a storage facet (SN), or both
(high-end storage). Facets are the network endpoints of placement: CN facets
are numbered first, then SN facets, each in ascending node id. There is one
bandwidth pool per unordered endpoint pair, so a CN-CN link and a CN-SN link
between the same two boxes draw on separate pools. Endpoints on the same
physical node talk through memory and their pool is unlimited.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

SERVER = "server"
HIGH_END_STORAGE = "high-end-storage"
REGULAR_STORAGE = "regular-storage"
CORE = "core-switch"
AGGREGATION = "aggregation-switch"
ACCESS = "access-switch"

SWITCH_LAYERS = {ACCESS: "access", AGGREGATION: "aggregation", CORE: "core"}

LINK_CAPACITY = 1.0
# slack for float round-off when comparing reservations against a pool
EPS = 1e-9

TOPOLOGY_FORMAT = "ndap-topology/1"


class TopologyError(ValueError):
    pass


class InvalidSizeError(TopologyError):
    pass


class UnknownNodeError(TopologyError, KeyError):
    pass


class BandwidthError(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    id: int
    name: str
    roles: frozenset
    compute: bool = False
    storage: bool = False

    @property
    def is_switch(self) -> bool:
        return any(r in SWITCH_LAYERS for r in self.roles)

    @property
    def layer(self) -> str | None:
        for r in self.roles:
            if r in SWITCH_LAYERS:
                return SWITCH_LAYERS[r]
        return None


@dataclass(eq=False)
class DataCenterTopology:
    """Immutable node inventory and tree wiring.

    Facet order is part of the determinism contract: CN index ``i`` lives on
    ``nodes[cn_nodes[i]]`` and CNs are listed in ascending node id (the same
    holds for SNs).
    """

    nodes: list[Node]
    edges: list[tuple[int, int]]
    df: float = 2.0
    n: int | None = None
    cn_nodes: np.ndarray = field(init=False, repr=False)
    sn_nodes: np.ndarray = field(init=False, repr=False)
    ep_nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.df > 0:
            raise TopologyError(f"distance factor must be positive, got {self.df}")
        for i, node in enumerate(self.nodes):
            if node.id != i:
                raise TopologyError("node ids must be 0..len(nodes)-1 in order")
        if len(self.edges) != len(self.nodes) - 1:
            raise TopologyError("topology must be a tree (|E| = |V| - 1)")
        self.cn_nodes = np.array([n.id for n in self.nodes if n.compute], dtype=np.int64)
        self.sn_nodes = np.array([n.id for n in self.nodes if n.storage], dtype=np.int64)
        self.ep_nodes = np.concatenate([self.cn_nodes, self.sn_nodes])
        self.cn_ep = np.arange(self.n_cn)
        self.sn_ep = self.n_cn + np.arange(self.n_sn)
        self._adj = [[] for _ in self.nodes]
        for a, b in self.edges:
            self._adj[a].append(b)
            self._adj[b].append(a)
        self._parent, self._depth = self._root_tree()

    def _root_tree(self):
        parent = [-1] * len(self.nodes)
        depth = [-1] * len(self.nodes)
        root = 0
        cores = [n.id for n in self.nodes if CORE in n.roles]
        if cores:
            root = cores[0]
        depth[root] = 0
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in self._adj[u]:
                if depth[v] < 0:
                    depth[v] = depth[u] + 1
                    parent[v] = u
                    queue.append(v)
        if min(depth) < 0:
            raise TopologyError("topology is not connected")
        return parent, depth

    # -- inventory ---------------------------------------------------------

    @property
    def n_cn(self) -> int:
        return len(self.cn_nodes)

    @property
    def n_sn(self) -> int:
        return len(self.sn_nodes)

    @property
    def n_ep(self) -> int:
        return len(self.ep_nodes)

    def count(self, role: str) -> int:
        return sum(1 for n in self.nodes if role in n.roles)

    def switches(self, layer: str | None = None) -> list[int]:
        return [n.id for n in self.nodes if n.is_switch and (layer is None or n.layer == layer)]

    def degree(self, node: int) -> int:
        self._check(node)
        return len(self._adj[node])

    def summary(self) -> dict:
        return {
            "N": self.n,
            "DF": self.df,
            "N_c": self.n_cn,
            "N_s": self.n_sn,
            "servers": self.count(SERVER),
            "high_end_storage": self.count(HIGH_END_STORAGE),
            "regular_storage": self.count(REGULAR_STORAGE),
            "core": self.count(CORE),
            "aggregation": self.count(AGGREGATION),
            "access": self.count(ACCESS),
        }

    # -- distances ---------------------------------------------------------

    def _check(self, node):
        if not (isinstance(node, (int, np.integer)) and 0 <= node < len(self.nodes)):
            raise UnknownNodeError(node)

    def path(self, a: int, b: int) -> list[int]:
        """Nodes on the unique tree path from ``a`` to ``b`` (both included)."""
        self._check(a)
        self._check(b)
        left, right = [a], [b]
        u, v = a, b
        while self._depth[u] > self._depth[v]:
            u = self._parent[u]
            left.append(u)
        while self._depth[v] > self._depth[u]:
            v = self._parent[v]
            right.append(v)
        while u != v:
            u = self._parent[u]
            v = self._parent[v]
            left.append(u)
            right.append(v)
        right.pop()
        return left + right[::-1]

    def hops(self, a: int, b: int) -> int:
        return len(self.path(a, b)) - 1

    def distance(self, a: int, b: int) -> float:
        return self.hops(a, b) * self.df

    def route_switches(self, a: int, b: int) -> list[tuple[int, str]]:
        """Switches on the path from ``a`` to ``b`` as ``(node id, layer)``.

        Endpoints count when they are themselves switches (a core switch's
        compute facet sends through its own ports).
        """
        if a == b:
            self._check(a)
            return []
        return [(u, self.nodes[u].layer) for u in self.path(a, b) if self.nodes[u].is_switch]

    @cached_property
    def ep_hops(self) -> np.ndarray:
        """Hop counts between every pair of endpoints."""
        rows = np.array([a for a, b in self.edges] + [b for a, b in self.edges])
        cols = np.array([b for a, b in self.edges] + [a for a, b in self.edges])
        graph = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(self.nodes),) * 2)
        hosts, inv = np.unique(self.ep_nodes, return_inverse=True)
        dist = shortest_path(graph, directed=False, unweighted=True, indices=hosts)
        return np.ascontiguousarray(dist[:, hosts][np.ix_(inv, inv)])

    @cached_property
    def cn_ep_hops(self) -> np.ndarray:
        """Hops from every CN (rows) to every endpoint (columns)."""
        return np.ascontiguousarray(self.ep_hops[self.cn_ep])

    @cached_property
    def sn_ep_hops(self) -> np.ndarray:
        return np.ascontiguousarray(self.ep_hops[self.sn_ep])

    @cached_property
    def cn_sn_hops(self) -> np.ndarray:
        return np.ascontiguousarray(self.cn_ep_hops[:, self.sn_ep])

    @cached_property
    def cn_cn_hops(self) -> np.ndarray:
        return np.ascontiguousarray(self.cn_ep_hops[:, self.cn_ep])

    def same_node(self, u: int, v: int) -> bool:
        """True when endpoints ``u`` and ``v`` sit on one physical node."""
        return self.ep_nodes[u] == self.ep_nodes[v]

    @cached_property
    def _ep_routes(self):
        return {}

    def ep_route(self, u: int, v: int) -> tuple[int, ...]:
        """Switch node ids between two endpoints, cached."""
        key = (u, v) if u < v else (v, u)
        cache = self._ep_routes
        if key not in cache:
            cache[key] = tuple(s for s, _ in self.route_switches(
                int(self.ep_nodes[key[0]]), int(self.ep_nodes[key[1]])))
        return cache[key]

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": TOPOLOGY_FORMAT,
            "N": self.n,
            "DF": self.df,
            "summary": self.summary(),
            "nodes": [
                {"id": n.id, "name": n.name, "roles": sorted(n.roles),
                 "compute": n.compute, "storage": n.storage}
                for n in self.nodes
            ],
            "edges": [list(e) for e in self.edges],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "DataCenterTopology":
        if data.get("format", TOPOLOGY_FORMAT) != TOPOLOGY_FORMAT:
            raise TopologyError(f"unsupported topology format {data.get('format')!r}")
        nodes = [
            Node(int(d["id"]), d["name"], frozenset(d["roles"]),
                 bool(d.get("compute")), bool(d.get("storage")))
            for d in data["nodes"]
        ]
        edges = [(int(a), int(b)) for a, b in data["edges"]]
        return cls(nodes, edges, df=float(data.get("DF", 2.0)), n=data.get("N"))

    @classmethod
    def from_json(cls, text: str) -> "DataCenterTopology":
        return cls.from_dict(json.loads(text))


def _round_robin(children: Iterable[int], parents: list[int], edges: list):
    for i, c in enumerate(children):
        edges.append((c, parents[i % len(parents)]))


@lru_cache(maxsize=32)
def build_topology(n: int, df: float = 2.0) -> DataCenterTopology:
    """Generate the N-server data center.

    Counts: N servers, 5N/36 high-end storage (CN + SN), 4N/36 regular storage
    (SN), N/36 core switches (with a CN), N/18 aggregation switches, N/3
    compute-side and N/12 storage-side access switches. Children are wired to
    parents round-robin by index. Core switches beyond the first hang off core
    0 so that the whole graph stays a single tree.

    Returned objects are shared between calls with equal arguments and must
    not be mutated.
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n <= 0 or n % 36:
        raise InvalidSizeError(f"N must be a positive multiple of 36, got {n}")
    n = int(n)
    nodes: list[Node] = []

    def add(count, prefix, roles, compute=False, storage=False):
        start = len(nodes)
        for i in range(count):
            nodes.append(Node(len(nodes), f"{prefix}-{i}", frozenset(roles), compute, storage))
        return list(range(start, start + count))

    servers = add(n, "server", {SERVER}, compute=True)
    high_end = add(5 * n // 36, "hstore", {HIGH_END_STORAGE}, compute=True, storage=True)
    regular = add(4 * n // 36, "rstore", {REGULAR_STORAGE}, storage=True)
    cores = add(n // 36, "core", {CORE}, compute=True)
    aggs = add(n // 18, "agg", {AGGREGATION})
    access_c = add(n // 3, "acc", {ACCESS})
    access_s = add(n // 12, "sacc", {ACCESS})

    edges: list[tuple[int, int]] = []
    _round_robin(servers, access_c, edges)
    _round_robin(access_c, aggs, edges)
    _round_robin(aggs, cores, edges)
    _round_robin(high_end + regular, access_s, edges)
    _round_robin(access_s, cores, edges)
    edges.extend((c, cores[0]) for c in cores[1:])
    return DataCenterTopology(nodes, edges, df=float(df), n=n)


class BandwidthPools:
    """Residual bandwidth of every unordered endpoint pair.

    Each pool starts at ``capacity``. Endpoints that share a physical node
    (given by ``ep_nodes``) have an unlimited pool and reservations on it are
    no-ops.
    Reservations are kept as individual amounts so that the residual is always
    ``capacity - fsum(outstanding)``, which makes reserve/release exactly
    reversible.
    """

    def __init__(self, ep_nodes, capacity: float = LINK_CAPACITY):
        self.ep_nodes = np.asarray(ep_nodes)
        self.n_ep = len(self.ep_nodes)
        self.capacity = capacity
        self._held: dict[tuple[int, int], list[float]] = {}
        self._avail: dict[tuple[int, int], float] = {}
        self._partners: dict[int, set[int]] = {}

    @staticmethod
    def key(a: int, b: int) -> tuple[int, int]:
        return (a, b) if a < b else (b, a)

    def _check(self, a, b):
        if not (0 <= a < self.n_ep and 0 <= b < self.n_ep):
            raise UnknownNodeError((a, b))

    def colocated(self, a: int, b: int) -> bool:
        return a == b or self.ep_nodes[a] == self.ep_nodes[b]

    def available(self, a: int, b: int) -> float:
        self._check(a, b)
        if self.colocated(a, b):
            return math.inf
        return self._avail.get(self.key(a, b), self.capacity)

    def reserved(self, a: int, b: int) -> float:
        return math.fsum(self._held.get(self.key(a, b), ()))

    def reserve(self, a: int, b: int, bw: float) -> None:
        self._check(a, b)
        if bw < 0:
            raise BandwidthError(f"negative reservation {bw}")
        if self.colocated(a, b):
            return
        if bw > self.available(a, b) + EPS:
            raise BandwidthError(
                f"over-reservation on pool {self.key(a, b)}: {bw} > {self.available(a, b)}")
        k = self.key(a, b)
        self._held.setdefault(k, []).append(bw)
        self._refresh(k)

    def release(self, a: int, b: int, bw: float) -> None:
        self._check(a, b)
        if self.colocated(a, b):
            return
        k = self.key(a, b)
        held = self._held.get(k, [])
        if bw > math.fsum(held) + EPS:
            raise BandwidthError(f"over-release on pool {k}: {bw} > {math.fsum(held)}")
        if bw in held:
            held.remove(bw)
        else:
            rest = math.fsum(held) - bw
            held[:] = [rest] if rest > EPS else []
        self._refresh(k)

    def _refresh(self, k):
        held = self._held.get(k)
        a, b = k
        if held:
            self._avail[k] = self.capacity - math.fsum(held)
            self._partners.setdefault(a, set()).add(b)
            self._partners.setdefault(b, set()).add(a)
        else:
            self._held.pop(k, None)
            self._avail.pop(k, None)
            for u, v in ((a, b), (b, a)):
                s = self._partners.get(u)
                if s is not None:
                    s.discard(v)
                    if not s:
                        del self._partners[u]

    def column(self, host: int) -> np.ndarray:
        """Residual bandwidth from ``host`` to every endpoint (inf where co-located)."""
        col = np.full(self.n_ep, self.capacity)
        for other in self._partners.get(host, ()):
            col[other] = self._avail[self.key(host, other)]
        col[self.ep_nodes == self.ep_nodes[host]] = math.inf
        return col

    def items(self):
        """``(pair, available, outstanding amounts)`` for every touched pool."""
        for k in sorted(self._held):
            yield k, self._avail[k], tuple(self._held[k])

    def snapshot(self) -> dict:
        return {k: (self._avail[k], tuple(sorted(v))) for k, v in self._held.items()}


def toy_topology(servers: int = 3, high_end: int = 1, regular: int = 1, df: float = 2.0) -> DataCenterTopology:
    """Small hand-sized tree for exhaustive checks.

    One core switch (without a compute facet) over one aggregation switch with
    two access switches; servers and high-end storage alternate between them.
    Regular storage hangs off a storage access switch under the core.
    """
    if servers < 0 or high_end < 0 or regular < 0 or servers + high_end < 1 or high_end + regular < 1:
        raise InvalidSizeError("toy topology needs at least one CN and one SN")
    nodes: list[Node] = []

    def add(count, prefix, roles, compute=False, storage=False):
        start = len(nodes)
        for i in range(count):
            nodes.append(Node(len(nodes), f"{prefix}-{i}", frozenset(roles), compute, storage))
        return list(range(start, start + count))

    srv = add(servers, "server", {SERVER}, compute=True)
    hst = add(high_end, "hstore", {HIGH_END_STORAGE}, compute=True, storage=True)
    reg = add(regular, "rstore", {REGULAR_STORAGE}, storage=True)
    (core,) = add(1, "core", {CORE})
    (agg,) = add(1, "agg", {AGGREGATION})
    acc = add(2, "acc", {ACCESS})
    (sacc,) = add(1, "sacc", {ACCESS})
    edges = [(agg, core), (acc[0], agg), (acc[1], agg), (sacc, core)]
    _round_robin(srv + hst, acc, edges)
    _round_robin(reg, [sacc], edges)
    return DataCenterTopology(nodes, edges, df=float(df))
