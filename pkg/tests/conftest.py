from __future__ import annotations

import pytest

from fabric_lens.simulator import FatTreeSpec, generate_fat_tree


@pytest.hookimpl(tryfirst=True, hookwrapper=True)
def pytest_runtest_makereport(item, call):
    # expose each phase's outcome so the acceptance suite can print its
    # verdict lines in teardown
    outcome = yield
    report = outcome.get_result()
    setattr(item, "outcome_" + report.when, report)


REFERENCE_TOPOLOGY = """\
# two edges, two roots, two hosts per edge
switch aa00000000000001 1 edge 8
switch aa00000000000002 2 edge 8
switch bb00000000000001 3 root 4
switch bb00000000000002 4 root 4
host cc00000000000001 10 node-a 10.1.0.1 compute
host cc00000000000002 11 node-b 10.1.0.2 compute
host cc00000000000003 12 node-c 10.1.0.3 compute
host cc00000000000004 13 oss-a 10.2.0.1 storage
link cc00000000000001:1 aa00000000000001:1 100
link cc00000000000002:1 aa00000000000001:2 100
link cc00000000000003:1 aa00000000000002:1 100
link cc00000000000004:1 aa00000000000002:2 100
link aa00000000000001:5 bb00000000000001:1 100
link aa00000000000001:6 bb00000000000002:1 100
link aa00000000000002:5 bb00000000000001:2 100
link aa00000000000002:6 bb00000000000002:2 100
"""


@pytest.fixture
def reference_text() -> str:
    return REFERENCE_TOPOLOGY


@pytest.fixture
def small_tree():
    """2 edges x 2 roots x 2 hosts, the smallest fabric with real routing."""
    return generate_fat_tree(FatTreeSpec(
        edge_switches=2, root_switches=2, hosts_per_edge=2))


@pytest.fixture
def storage_tree():
    """Adds a storage host per edge and parallel up links."""
    return generate_fat_tree(FatTreeSpec(
        edge_switches=2, root_switches=2, hosts_per_edge=2,
        storage_hosts_per_edge=1, links_per_edge_root_pair=2))
