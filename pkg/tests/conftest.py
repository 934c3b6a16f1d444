import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ndap.model import ApplicationEnvironment, DataBlock, LinkKind, PlacementState, VirtualLink, VirtualMachine
from ndap.topology import build_topology, toy_topology

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=500,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def make_ae(vms=(), dbs=(), links=(), ae_id="ae"):
    """Compact AE builder: ``vms=[("v0", cpu, mem)]``, ``dbs=[("d0", str)]``,
    ``links=[("v0", "d0", bw)]`` (kind inferred from the second endpoint)."""
    vms = tuple(VirtualMachine(i, c, m) for i, c, m in vms)
    dbs = tuple(DataBlock(i, s) for i, s in dbs)
    db_ids = {d.id for d in dbs}
    vls = tuple(VirtualLink(LinkKind.VDL if b in db_ids else LinkKind.VCL, a, b, bw) for a, b, bw in links)
    return ApplicationEnvironment(vms, dbs, vls, "custom", ae_id)


@pytest.fixture
def toy():
    """4 CNs (server0..2, hstore0) and 2 SNs (hstore0, rstore0).

    Endpoint hop table (CN0..CN3, SN0=hstore, SN1=rstore):
    server0/server2 share access switch 0, server1/hstore share access switch 1.
    """
    return toy_topology()


@pytest.fixture
def toy_state(toy):
    return PlacementState(toy)


@pytest.fixture(scope="session")
def dc36():
    return build_topology(36, 2.0)


@pytest.fixture(scope="session")
def dc144():
    return build_topology(144, 2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: end-to-end acceptance criteria (slow)")


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
