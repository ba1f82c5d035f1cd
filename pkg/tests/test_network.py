import pytest

from qwdr import (
    FlowSpec,
    NetworkModel,
    QueueMatrix,
    build_interference_sets,
    build_link_flow_index,
    differential_backlog,
)


def three_node_model():
    flows = [FlowSpec(flow_id=3, source=1, route=(1, 2, 3), arrival_rate=1.0)]
    return NetworkModel(nodes=[1, 2, 3], links=[(1, 2), (2, 3)], flows=flows)


class TestInterferenceSets:
    def test_single_link_incident_on_both_endpoints(self):
        sets = build_interference_sets([(1, 2)])
        assert sets == {1: frozenset({(1, 2)}), 2: frozenset({(1, 2)})}

    def test_tandem_links_share_middle_node(self):
        sets = build_interference_sets([(1, 2), (2, 3)])
        assert sets[2] == frozenset({(1, 2), (2, 3)})
        assert sets[1] == frozenset({(1, 2)})
        assert sets[3] == frozenset({(2, 3)})

    def test_star_hub_collects_all_spokes(self):
        spokes = [(0, 1), (0, 2), (0, 3)]
        sets = build_interference_sets(spokes)
        assert sets[0] == frozenset(spokes)

    def test_nodes_without_links_omitted(self):
        sets = build_interference_sets([(5, 7)])
        assert set(sets) == {5, 7}


class TestLinkFlowIndex:
    def test_two_hop_route_enumeration(self):
        flows = [FlowSpec(flow_id=3, source=1, route=(1, 2, 3), arrival_rate=0.5)]
        index = build_link_flow_index(flows)
        assert len(index) == 2
        assert index.index(1, 2, 3) == 1
        assert index.index(2, 3, 3) == 2
        assert index.triple(1) == (1, 2, 3)
        assert index.triple(2) == (2, 3, 3)

    def test_empty_flow_list(self):
        assert len(build_link_flow_index([])) == 0

    def test_lexicographic_ordering_across_flows(self):
        flows = [
            FlowSpec(flow_id=4, source=2, route=(2, 3, 4), arrival_rate=0.1),
            FlowSpec(flow_id=5, source=1, route=(1, 3, 5), arrival_rate=0.1),
        ]
        index = build_link_flow_index(flows)
        assert index.triples == ((1, 3, 5), (2, 3, 4), (3, 4, 4), (3, 5, 5))

    def test_unknown_triple_raises(self):
        index = build_link_flow_index(
            [FlowSpec(flow_id=3, source=1, route=(1, 2, 3), arrival_rate=0.5)]
        )
        with pytest.raises(KeyError):
            index.index(3, 1, 3)
        with pytest.raises(KeyError):
            index.triple(5)


class TestFlowSpec:
    def test_route_must_be_simple_path(self):
        with pytest.raises(ValueError):
            FlowSpec(flow_id=1, source=1, route=(1, 2, 1), arrival_rate=0.5)

    def test_route_endpoints_validated(self):
        with pytest.raises(ValueError):
            FlowSpec(flow_id=3, source=2, route=(1, 2, 3), arrival_rate=0.5)
        with pytest.raises(ValueError):
            FlowSpec(flow_id=9, source=1, route=(1, 2, 3), arrival_rate=0.5)

    def test_negative_rate_rejected(self):
        with pytest.raises(ValueError):
            FlowSpec(flow_id=3, source=1, route=(1, 2, 3), arrival_rate=-1.0)

    def test_queue_threshold_is_rate_times_target(self):
        flow = FlowSpec(flow_id=3, source=1, route=(1, 2, 3), arrival_rate=2.5, delay_target=40.0)
        assert flow.queue_threshold == 100.0
        plain = FlowSpec(flow_id=3, source=1, route=(1, 2, 3), arrival_rate=2.5)
        assert plain.queue_threshold is None


class TestNetworkModel:
    def test_route_through_missing_link_rejected(self):
        flows = [FlowSpec(flow_id=3, source=1, route=(1, 2, 3), arrival_rate=1.0)]
        with pytest.raises(ValueError, match=r"\(2, 3\)"):
            NetworkModel(nodes=[1, 2, 3], links=[(1, 2)], flows=flows)

    def test_every_link_in_exactly_its_endpoint_sets(self):
        model = three_node_model()
        for link in model.links:
            holders = [n for n, s in model.interference_sets.items() if link in s]
            assert sorted(holders) == sorted(link)


class TestQueueMatrix:
    def test_differential_backlog_examples(self):
        model = three_node_model()
        queues = QueueMatrix(model)
        queues.add_arrivals(1, 3, 5, slot=0)
        queues.add_arrivals(2, 3, 2, slot=0)
        assert differential_backlog(queues, 1, 2, 3) == 3
        # clamp at zero when downstream is longer
        queues.add_arrivals(2, 3, 6, slot=1)
        assert differential_backlog(queues, 1, 2, 3) == 0
        # destination queue counts as empty
        assert differential_backlog(queues, 2, 3, 3) == 8

    def test_differential_backlog_unknown_triple(self):
        queues = QueueMatrix(three_node_model())
        with pytest.raises(KeyError):
            differential_backlog(queues, 3, 2, 3)

    def test_fifo_order_and_delay_recording(self):
        model = three_node_model()
        queues = QueueMatrix(model)
        for slot in (0, 1, 2):
            queues.add_arrivals(1, 3, 1, slot=slot)
        queues.transfer(1, 2, 3, 2, slot=5)   # heads move first
        assert queues.length(1, 3) == 1
        assert queues.length(2, 3) == 2
        queues.transfer(2, 3, 3, 5, slot=7)   # delivery records delays 7-0, 7-1
        assert queues.delivered[3] == 2
        assert queues.delay_sum[3] == 7 + 6
        assert queues.delay_hist[3] == {7: 1, 6: 1}

    def test_conservation_and_balance(self):
        model = three_node_model()
        queues = QueueMatrix(model)
        queues.add_arrivals(1, 3, 4, slot=0)
        queues.transfer(1, 2, 3, 3, slot=1)
        queues.transfer(2, 3, 3, 2, slot=2)
        queues.verify_balance(slot=2)
        assert queues.injected == 4
        assert queues.total() == 2
        assert queues.delivered_total == 2

    def test_snapshot_matches_lengths(self):
        model = three_node_model()
        queues = QueueMatrix(model)
        queues.add_arrivals(1, 3, 5, slot=0)
        queues.add_arrivals(2, 3, 1, slot=0)
        snap = queues.snapshot()
        assert snap.total == 6
        assert snap.flow_backlogs == {3: 6}
        assert list(snap.differentials) == [4, 1]
