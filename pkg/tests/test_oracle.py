import dataclasses

import pytest

from satvnf.oracle import (OracleGuardError, brute_force_optimal,
                           random_tiny_instance, verify_constraints)
from satvnf.pathing import PathTable, candidate_paths, empty_path
from satvnf.requests import ACCESS_VNF, UserRequest, Vnf
from satvnf.state import (NetworkState, PlacementStrategy, commit,
                          end_to_end_delay)
from satvnf.topology import CoverageMap, attach_cloud, build_constellation


def test_enumeration_count_closed_form():
    for seed in (0, 3, 11):
        net, cov, table, req, snap, cands = random_tiny_instance(seed)
        res = brute_force_optimal(req, snap, cands, cov)
        want = sum(len(c.path.nodes) ** len(req.interior) for c in cands)
        assert res.enumeration_count == want


def test_guards_reject_large_instances():
    net, cov, table, req, snap, cands = random_tiny_instance(0)
    with pytest.raises(OracleGuardError):
        brute_force_optimal(req, snap, cands, cov, max_paths=1)
    with pytest.raises(OracleGuardError):
        brute_force_optimal(req, snap, cands, cov, max_sats=2)


def test_oracle_result_is_feasible(default_coverage):
    from satvnf.state import check_feasible

    for seed in range(10):
        net, cov, table, req, snap, cands = random_tiny_instance(seed)
        res = brute_force_optimal(req, snap, cands, cov)
        if res.strategy is not None:
            assert not check_feasible(snap, req, res.strategy, cov)
            assert res.delay == res.strategy.delay


def make_committed_state(default_network, default_coverage):
    net = default_network
    req = UserRequest(0, (ACCESS_VNF, Vnf(2.0, 3.0, 20.0), ACCESS_VNF),
                      (2.0, 3.0), (0.5, 0.5), (0.5, 0.5), 250.0)
    strat = PlacementStrategy(request_id=0, edge=True, src_access=0,
                              dst_access=0, vnf_hosts=(0, 0, 0),
                              chain_paths=(empty_path(0), empty_path(0)))
    strat = dataclasses.replace(
        strat, delay=end_to_end_delay(net, req, strat, default_coverage))
    state = NetworkState(net)
    commit(state, req, strat, default_coverage)
    return state


def test_verify_constraints_accepts_consistent_state(default_network,
                                                     default_coverage):
    state = make_committed_state(default_network, default_coverage)
    assert verify_constraints(state, default_coverage) == []


def test_verify_detects_corrupted_cpu_ledger(default_network, default_coverage):
    state = make_committed_state(default_network, default_coverage)
    state.cpu_used[0] += 1.0  # one phantom vCPU
    bad = verify_constraints(state, default_coverage)
    assert [v.constraint for v in bad] == ["node_capacity"]
    assert "satellite 0" in bad[0].detail


def test_verify_detects_corrupted_link_ledger(default_network,
                                              default_coverage):
    state = make_committed_state(default_network, default_coverage)
    state.isl_used[3] = 1.0  # traffic no committed strategy explains
    bad = verify_constraints(state, default_coverage)
    assert [v.constraint for v in bad] == ["isl_bandwidth"]
    assert "link 3" in bad[0].detail


def test_verify_detects_ground_traffic_on_non_gateway(default_network,
                                                      default_coverage):
    state = make_committed_state(default_network, default_coverage)
    state.ground_used[2] = 5.0
    bad = verify_constraints(state, default_coverage)
    assert [v.constraint for v in bad] == ["ground_bandwidth"]


def test_verify_detects_delay_bound_breach(default_network, default_coverage):
    state = make_committed_state(default_network, default_coverage)
    req, strat = state.committed[0]
    state.committed[0] = (dataclasses.replace(req, max_delay=10.0), strat)
    bad = verify_constraints(state, default_coverage)
    assert [v.constraint for v in bad] == ["delay"]


def test_tiny_instances_are_inside_guards():
    for seed in range(20):
        net, cov, table, req, snap, cands = random_tiny_instance(seed)
        assert net.n_satellites == 6
        assert len(req.interior) <= 4
        assert len(cands) <= 4
        brute_force_optimal(req, snap, cands, cov)  # must not raise
