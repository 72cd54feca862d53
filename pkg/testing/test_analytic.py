import numpy as np
import pytest

from core.errors import FaultBoundTooSmall, Unsatisfiable
from core.models import SystemConfig
from services.analytic import (
    TcpModel,
    UdpModel,
    binomial_tail,
    expected_replies,
    expected_replies_lower_bound,
    joint_pmf,
    message_count,
    message_model_for,
    node_addition_overhead,
    preprepare_overhead,
    quorum_acceptance_distribution,
    required_retransmissions,
    retx_success,
    retx_success_series,
    success_probability,
    tcp_expected_replies_bound,
    tcp_message_success,
    tcp_segment_success,
    transport_switch_recommended,
)
from testing.conftest import make_spec

N4 = SystemConfig(n=4, f=1)
N20 = SystemConfig(n=20, f=6)


# --- joint distribution ---


def test_binomial_tail_edges():
    assert binomial_tail(2, 3, 0.5) == pytest.approx(0.5)
    assert binomial_tail(0, 5, 0.3) == 1.0
    assert binomial_tail(4, 3, 0.99) == 0.0
    assert binomial_tail(1, 1, 0.0) == 0.0


def test_joint_pmf_hand_computed_entry():
    dist = joint_pmf(N4, UdpModel(0.9))
    assert dist.entry(3, 4, 4, 4) == pytest.approx(0.381090, abs=1e-6)


def test_joint_pmf_entry_is_zero_outside_support():
    dist = joint_pmf(N4, UdpModel(0.9))
    assert dist.entry(3, 4, 4, 5) == 0.0
    assert dist.entry(1, 4, 2, 2) == 0.0
    assert dist.entry(4, 4, 4, 4) == 0.0


@pytest.mark.parametrize("cfg", [N4, SystemConfig(n=7, f=2), N20])
@pytest.mark.parametrize("p", [0.0, 0.5, 0.9, 0.99, 1.0])
def test_joint_pmf_sums_to_one(cfg, p):
    dist = joint_pmf(cfg, UdpModel(p))
    assert dist.total_mass() == pytest.approx(1.0, abs=1e-9)
    assert np.all(dist.pmf >= 0.0)


def test_lossless_channel_always_succeeds():
    assert success_probability(N20, UdpModel(1.0)) == pytest.approx(1.0)
    assert expected_replies(N20, UdpModel(1.0)) == pytest.approx(20.0)
    assert expected_replies_lower_bound(N20, UdpModel(1.0)) == pytest.approx(20.0)


def test_dead_channel_never_succeeds():
    assert success_probability(N4, UdpModel(0.0)) == 0.0
    assert expected_replies(N4, UdpModel(0.0)) == 0.0


def test_success_probability_is_monotone_in_p():
    grid = np.linspace(0.0, 1.0, 21)
    values = [success_probability(N4, UdpModel(p)) for p in grid]
    assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))


def test_expected_replies_example():
    assert expected_replies(N4, UdpModel(0.9)) == pytest.approx(2.3793, abs=1e-3)


def test_counting_the_primary_only_relaxes_the_preprepare_condition():
    literal = success_probability(N4, UdpModel(0.99))
    relaxed = success_probability(N4, UdpModel(0.99), count_primary=True)
    assert literal == pytest.approx(0.9697, abs=1e-3)
    assert relaxed > literal
    assert relaxed == pytest.approx(0.995, abs=3e-3)


@pytest.mark.parametrize("cfg", [N4, SystemConfig(n=7, f=2), N20])
@pytest.mark.parametrize("p", [0.0, 0.3, 0.7, 0.9, 0.95, 1.0])
def test_lower_bound_never_exceeds_exact(cfg, p):
    assert expected_replies_lower_bound(cfg, UdpModel(p)) <= expected_replies(cfg, UdpModel(p)) + 1e-12


def test_lower_bound_example():
    assert expected_replies_lower_bound(N4, UdpModel(0.9)) == pytest.approx(2.0466, abs=1e-3)


def test_lower_bound_needs_a_fault():
    with pytest.raises(FaultBoundTooSmall):
        expected_replies_lower_bound(SystemConfig(n=4, f=0), UdpModel(0.9))


def test_reply_threshold_changes_success_not_expectation():
    optimistic = SystemConfig(n=4, f=1, reply_threshold=2)
    assert success_probability(optimistic, UdpModel(0.9)) > success_probability(N4, UdpModel(0.9))
    assert expected_replies(optimistic, UdpModel(0.9)) == pytest.approx(expected_replies(N4, UdpModel(0.9)))


def test_preprepare_copies_only_help():
    once = UdpModel(0.81)
    twice = UdpModel(0.81, p_preprepare=1 - 0.19**2)
    assert success_probability(N4, twice) > success_probability(N4, once)


# --- TCP ---


def test_retx_success_examples():
    assert retx_success(0.81, 1) == pytest.approx(0.9639)
    assert retx_success(0.5, 0) == 0.5
    assert retx_success(0.0, 12) == 0.0
    assert retx_success(1.0, 0) == 1.0


@pytest.mark.parametrize("p_tx", [0.0, 0.1, 0.5, 0.81, 1.0])
@pytest.mark.parametrize("m", [0, 1, 5, 12])
def test_retx_success_forms_agree(p_tx, m):
    assert retx_success_series(p_tx, m) == pytest.approx(retx_success(p_tx, m), abs=1e-12)


def test_tcp_message_success_multiplies_segments():
    assert tcp_segment_success(0.9) == pytest.approx(0.81)
    assert tcp_message_success([0.81, 0.81, 0.81], 1) == pytest.approx(0.9639**3)
    assert tcp_message_success([0.81, 0.81, 0.81], 1) == pytest.approx(0.895563, abs=1e-6)
    assert TcpModel(p_segments=(0.81, 0.81, 0.81), max_retx=1).p_msg == pytest.approx(0.895563, abs=1e-6)


def test_quorum_acceptance_distribution():
    pmf = quorum_acceptance_distribution(4, 1, 0.9)
    assert pmf.sum() == pytest.approx(1.0)
    assert pmf[4] == pytest.approx(0.972**4, abs=1e-6)
    assert pmf[4] == pytest.approx(0.892617, abs=1e-6)


def test_tcp_bound_examples():
    assert tcp_expected_replies_bound(4, 1, 1, 0.9, 1) == pytest.approx(1.7814, abs=1e-3)
    assert tcp_expected_replies_bound(4, 1, 1, 0.9, 2) == pytest.approx(3.43797, abs=1e-4)


def test_required_retransmissions_examples():
    assert required_retransmissions(4, 1, 1, 0.9) == 2
    assert required_retransmissions(4, 1, 1, 0.9, udp=True) == 1
    assert required_retransmissions(4, 1, 1, 1.0) == 0


def test_required_retransmissions_reach_the_quorum():
    for p_l in (0.5, 0.7, 0.9, 0.99):
        r = required_retransmissions(7, 2, 1, p_l)
        assert tcp_expected_replies_bound(7, 2, 1, p_l, r) >= 5
        assert r == 0 or tcp_expected_replies_bound(7, 2, 1, p_l, r - 1) < 5


def test_required_retransmissions_on_a_nearly_dead_channel():
    # p_l**2 = 1e-18 is below machine epsilon, so 1 - p_tx rounds to 1.0
    r = required_retransmissions(4, 1, 1, 1e-9)
    assert r > 1e18
    assert tcp_expected_replies_bound(4, 1, 1, 1e-9, r) == pytest.approx(3.0, rel=1e-6)
    assert retx_success(1e-18, 10**6) == pytest.approx(1e-12, rel=1e-5)
    with pytest.raises(Unsatisfiable):
        required_retransmissions(4, 1, 1, 1e-200)


def test_required_retransmissions_errors():
    with pytest.raises(Unsatisfiable):
        required_retransmissions(4, 1, 1, 0.0)
    with pytest.raises(FaultBoundTooSmall):
        required_retransmissions(4, 0, 1, 0.9)
    with pytest.raises(ValueError):
        required_retransmissions(4, 2, 1, 0.9)


# --- switch rule ---


def test_switch_rule():
    assert not transport_switch_recommended(N4, UdpModel(1.0))
    assert transport_switch_recommended(N4, UdpModel(0.5))
    # the bound is never above the exact value, so it switches no later
    for p in np.linspace(0.5, 1.0, 11):
        if transport_switch_recommended(N4, UdpModel(p)):
            assert transport_switch_recommended(N4, UdpModel(p), fast=True)


def test_switch_rule_can_count_the_primary():
    msg = UdpModel(0.93)
    assert expected_replies(N4, msg) < 3 < expected_replies(N4, msg, count_primary=True)
    assert transport_switch_recommended(N4, msg)
    assert not transport_switch_recommended(N4, msg, count_primary=True)



# --- message accounting ---


def test_message_count_examples():
    assert message_count(4, 1, 0) == 38
    assert message_count(4, 1, 1) == 42
    assert message_count(5, 1, 0) == 57
    assert message_count(6, 1, 0) == 80


def test_overheads():
    assert preprepare_overhead(4, 1) == pytest.approx(4 / 38)
    assert preprepare_overhead(5, 1) == pytest.approx(5 / 57)
    assert preprepare_overhead(6, 1) == pytest.approx(6 / 80)
    assert node_addition_overhead(4, 5, 1) == pytest.approx(0.5)


def test_message_count_rejects_bad_input():
    with pytest.raises(ValueError):
        message_count(3, 1, 0)
    with pytest.raises(ValueError):
        message_count(4, 1, -1)


# --- scenario bridge ---


def test_message_model_for_udp_repeats():
    spec = make_spec(
        loss={"kind": "packet_success", "p": 0.81, "per": "path"},
        transport={"kind": "udp", "repeats": 2, "repeats_preprepare": 3},
    )
    model = message_model_for(spec)
    assert isinstance(model, UdpModel)
    assert model.p_msg == pytest.approx(1 - 0.19**2)
    assert model.preprepare_success == pytest.approx(1 - 0.19**3)


def test_message_model_for_tcp():
    spec = make_spec(
        loss={"kind": "packet_success", "p": 0.81, "per": "path"},
        transport={"kind": "tcp", "max_retx": 1},
    )
    model = message_model_for(spec)
    assert isinstance(model, TcpModel)
    assert model.segment_count == 1
    assert model.p_segment == pytest.approx(0.81 * 0.81)
    assert model.p_msg == pytest.approx(retx_success(0.81 * 0.81, 1))


def test_message_model_for_hybrid():
    spec = make_spec(
        loss={"kind": "packet_success", "p": 0.81, "per": "path"},
        transport={"kind": "hybrid", "preprepare": {"kind": "tcp", "max_retx": 12}, "other": {"kind": "udp"}},
    )
    model = message_model_for(spec)
    assert isinstance(model, UdpModel)
    assert model.p_msg == pytest.approx(0.81)
    assert model.preprepare_success == pytest.approx(retx_success(0.81 * 0.81, 12))


# --- grid properties ---

SIZES = [4, 7, 10, 13, 20]
P_GRID = np.round(np.arange(0.70, 1.0001, 0.05), 2)


@pytest.mark.parametrize("n", SIZES)
def test_bound_dominance_and_endpoint_equality(n):
    cfg = SystemConfig(n=n, f=(n - 1) // 3)
    for p in P_GRID:
        bound = expected_replies_lower_bound(cfg, UdpModel(p))
        exact = expected_replies(cfg, UdpModel(p))
        assert bound <= exact + 1e-9, (n, p)
    assert expected_replies_lower_bound(cfg, UdpModel(1.0)) == pytest.approx(n, abs=1e-9)
    assert expected_replies(cfg, UdpModel(1.0)) == pytest.approx(n, abs=1e-9)


@pytest.mark.parametrize("n", SIZES)
def test_expected_replies_grows_with_p(n):
    cfg = SystemConfig(n=n, f=(n - 1) // 3)
    values = [expected_replies(cfg, UdpModel(p)) for p in np.linspace(0.0, 1.0, 21)]
    assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))


def test_expected_replies_shrinks_with_f():
    for p in P_GRID:
        values = [expected_replies(SystemConfig(n=13, f=f), UdpModel(p)) for f in (1, 2, 3, 4)]
        assert all(a >= b - 1e-12 for a, b in zip(values, values[1:])), p


def test_retx_success_reaches_one():
    for p in (0.1, 0.3, 0.5, 0.9):
        m = int(np.ceil(np.log(1e-6) / np.log(1 - p)))
        assert retx_success(p, m) >= 1 - 1e-6


def test_switch_has_a_single_crossing_for_twenty_nodes():
    switches = [transport_switch_recommended(N20, UdpModel(1 - loss)) for loss in np.linspace(0.0, 0.3, 31)]
    assert not switches[0]
    assert switches[-1]
    crossings = sum(1 for a, b in zip(switches, switches[1:]) if a != b)
    assert crossings == 1
