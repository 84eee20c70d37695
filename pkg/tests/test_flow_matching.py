import numpy as np
import pytest

from slotmech.core import DivisibleInstance, SingleSlotInstance, check_feasible, welfare
from slotmech.flow_matching import (
    build_network,
    cost_without_agent,
    extract_allocation,
    solve_max_weight_matching,
)
from slotmech.oracle import brute_force_divisible, brute_force_single, random_divisible, random_single
from slotmech.vcgt import without_agent

from conftest import S, enumerate_divisible, enumerate_single


def _conserved(net, res):
    balance = [0] * net.n_nodes
    for arc, f in zip(net.arcs, res.flow):
        assert 0 <= f <= arc.capacity
        balance[arc.tail] -= f
        balance[arc.head] += f
    return all(b == 0 for v, b in enumerate(balance) if v not in (net.source, net.sink))


def test_network_shape_single():
    net = build_network(SingleSlotInstance(1, [[1, 2], [3, 4]]))
    assert net.n_nodes == 6
    assert len(net.arcs) == 2 + 4 + 2
    assert all(a.capacity == 1 for a in net.arcs[:2])
    assert all(a.capacity == 1 for a in net.arcs[-2:])


def test_network_divisible_supplies():
    net = build_network(DivisibleInstance(2, [[1, 1, 1], [1, 1, 1]], lengths=(2, 1)))
    assert [a.capacity for a in net.arcs[:2]] == [2, 1]
    assert [a.capacity for a in net.arcs[-3:]] == [2, 2, 2]


def test_network_costs_draft(draft):
    net = build_network(draft)
    costs = [net.arcs[net.match_arc(i, j)].cost for i in range(2) for j in range(2)]
    assert costs == [-51 * S, -50 * S, -50 * S, 0]


def test_solve_draft(draft):
    res = solve_max_weight_matching(build_network(draft))
    assert -res.total_cost == 100 * S
    assert extract_allocation(res, draft).assignment == (1, 0)


def test_solve_single_agent():
    inst = SingleSlotInstance(1, [[5, 3]])
    res = solve_max_weight_matching(build_network(inst))
    assert extract_allocation(res, inst).assignment == (0,)
    assert -res.total_cost == 5


def test_solve_excess_demand(three_agents):
    res = solve_max_weight_matching(build_network(three_agents))
    assert -res.total_cost == 7 * S
    assert extract_allocation(res, three_agents).assignment == (0, 1, None)


def test_zero_flow_is_unallocated():
    inst = SingleSlotInstance(2, [[0, 0], [0, 0]])
    res = solve_max_weight_matching(build_network(inst))
    assert res.augmentations == 0
    assert extract_allocation(res, inst).assignment == (None, None)


def test_dfs_oracle_agrees_with_product_enumeration():
    # The package's pruned DFS oracle is itself checked against itertools.product.
    rng = np.random.default_rng(3)
    for _ in range(100):
        inst = random_single(rng, n_max=4, m_max=3)
        assert brute_force_single(inst)[1] == enumerate_single(inst.values, inst.capacity)
        dinst = random_divisible(rng, n_max=3, m_max=3)
        assert brute_force_divisible(dinst)[1] == enumerate_divisible(
            dinst.values, dinst.lengths, dinst.capacity
        )


@pytest.mark.parametrize("gen,oracle", [
    (random_single, brute_force_single),
    (random_divisible, brute_force_divisible),
])
def test_flow_matches_oracle_and_invariants(gen, oracle):
    rng = np.random.default_rng(5)
    for _ in range(200):
        inst = gen(rng)
        net = build_network(inst)
        res = solve_max_weight_matching(net)
        alloc = extract_allocation(res, inst)
        assert check_feasible(inst, alloc)
        assert welfare(inst, alloc) == -res.total_cost == oracle(inst)[1]
        assert all(isinstance(f, int) for f in res.flow)
        assert _conserved(net, res)
        assert res.augmentations <= sum(inst.lengths)


def test_warm_start_removal_matches_fresh_solve():
    rng = np.random.default_rng(8)
    for t in range(300):
        inst = random_single(rng, n_max=7, m_max=4) if t % 2 else random_divisible(rng, n_max=6)
        if inst.n < 2:
            continue
        net = build_network(inst)
        res = solve_max_weight_matching(net)
        for i in range(inst.n):
            reduced = without_agent(inst, i)
            fresh = solve_max_weight_matching(build_network(reduced)).total_cost
            assert cost_without_agent(net, res, i) == fresh
