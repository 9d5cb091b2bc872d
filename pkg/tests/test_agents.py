"""Rule-based agent policies: bound parsing, fault inference, decisions."""

import json

import pytest

from slicegym.agents import (
    MapeKAgent,
    MapeKRule,
    RemoteAgent,
    ThresholdRuleAgent,
    ThresholdRuleConfig,
    infer_degradation_kind,
    intent_specifies_bounds,
    load_mapek_table,
    mapek_decide,
    parse_intent_bounds,
    threshold_rule_decide,
)
from slicegym.dynamics import AnalyticModel
from slicegym.episode import Outcome, SuccessRule, Tier, run_episode
from slicegym.state import (
    DegradationEvent,
    DegradationKind,
    HistoryEntry,
    NetworkState,
    SliceType,
    default_sla_spec,
)
from slicegym.tools import CallRejection, Ok, ToolCall, build_catalog, validate_call

from tests.test_episode import make_task

HEALTHY = NetworkState(SliceType.EMBB, 20.0, 5.0, 0.01, 80.0, 0.3)


def obs_entry(state, idx=0, name="read_telemetry"):
    return HistoryEntry(idx, state, ToolCall(name, ()), Ok(state.to_dict()), state)


def entry(name, args, result, idx=0, state=HEALTHY):
    return HistoryEntry(idx, state, ToolCall(name, args), result, state)


class TestIntentBounds:
    def test_latency_and_jitter(self):
        b = parse_intent_bounds("keep latency below 40 ms and jitter under 8 ms")
        assert b.max_latency_ms == 40.0
        assert b.max_jitter_ms == 8.0
        assert b.max_loss_rate == 1.0  # untouched fields stay loose

    def test_number_may_trail_the_metric(self):
        b = parse_intent_bounds(
            "latency on embb has spiked; restore it below 40 ms promptly")
        assert b.max_latency_ms == 40.0

    def test_loss_percent_and_fraction_forms(self):
        assert parse_intent_bounds("hold loss under 1 %").max_loss_rate == 0.01
        assert parse_intent_bounds("hold loss under 2 percent").max_loss_rate == 0.02
        assert parse_intent_bounds("hold loss under 0.03").max_loss_rate == 0.03

    def test_throughput_and_edge_load(self):
        b = parse_intent_bounds(
            "keep throughput above 25 Mbps with edge load under 70 %")
        assert b.min_throughput_mbps == 25.0
        assert b.max_edge_load == pytest.approx(0.7)
        assert parse_intent_bounds("edge load below 0.55").max_edge_load == 0.55

    def test_case_insensitive(self):
        assert parse_intent_bounds("LATENCY BELOW 12 MS").max_latency_ms == 12.0

    def test_no_bounds_is_loose(self):
        b = parse_intent_bounds("please keep the network healthy")
        assert not intent_specifies_bounds("please keep the network healthy")
        assert (b.max_latency_ms, b.min_throughput_mbps) == (10000.0, 0.0)
        assert intent_specifies_bounds("latency below 9 ms")


class TestKindInference:
    PARAMS = AnalyticModel.reference().params

    def test_baseline_reads_as_no_fault(self):
        assert infer_degradation_kind(HEALTHY, self.PARAMS) is None

    def test_mild_noise_reads_as_no_fault(self):
        wobbly = NetworkState(SliceType.EMBB, 22.0, 5.5, 0.011, 75.0, 0.32)
        assert infer_degradation_kind(wobbly, self.PARAMS) is None

    @pytest.mark.parametrize("kind", list(DegradationKind))
    def test_full_severity_signature_recovered(self, kind):
        b = self.PARAMS.slice_baselines[SliceType.EMBB]
        m = self.PARAMS.degradation_multipliers[kind]
        state = NetworkState(
            SliceType.EMBB,
            b.latency_ms * m.latency,
            min(b.jitter_ms * m.jitter, b.latency_ms * m.latency),
            min(1.0, b.loss_rate * m.loss),
            b.throughput_mbps * m.throughput,
            min(1.0, self.PARAMS.edge_load_baseline * m.edge_load),
        )
        assert infer_degradation_kind(state, self.PARAMS) is kind


class TestThresholdRule:
    CFG = ThresholdRuleConfig()

    def test_observes_first(self):
        assert threshold_rule_decide(self.CFG, "", []) == ToolCall("read_telemetry", ())

    def test_reobserves_after_configuration(self):
        hist = [obs_entry(HEALTHY),
                entry("switch_network_slice", ("EMBB", "URLLC"), Ok({}), 1)]
        assert threshold_rule_decide(self.CFG, "", hist) == ToolCall("read_telemetry", ())

    def test_healthy_goes_straight_to_verify(self):
        call = threshold_rule_decide(self.CFG, "", [obs_entry(HEALTHY)])
        assert call.name == "verify_sla_compliance"
        assert call.args[0] == HEALTHY.to_dict()
        assert call.args[1] == default_sla_spec().for_slice(SliceType.EMBB).to_dict()

    def test_latency_breach_switches_to_urllc(self):
        hot = NetworkState(SliceType.EMBB, 80.0, 5.0, 0.01, 80.0, 0.3)
        call = threshold_rule_decide(self.CFG, "", [obs_entry(hot)])
        assert call == ToolCall("switch_network_slice", ("EMBB", "URLLC"))

    def test_never_switches_twice(self):
        hot = NetworkState(SliceType.EMBB, 80.0, 5.0, 0.01, 80.0, 0.3)
        hist = [entry("switch_network_slice", ("MMTC", "EMBB"), Ok({}), 0),
                obs_entry(hot, 1)]
        call = threshold_rule_decide(self.CFG, "", hist)
        assert call.name == "verify_sla_compliance"

    def test_low_throughput_offloads(self):
        slow = NetworkState(SliceType.EMBB, 20.0, 5.0, 0.01, 4.0, 0.3)
        call = threshold_rule_decide(self.CFG, "", [obs_entry(slow)])
        assert call.name == "edge_offload"
        assert call.args[0] == {"task_id": "threshold-offload", "demand": 0.2}
        assert call.args[1] == {"node_id": "mec-core", "load": 0.4}

    def test_intent_bounds_override_slice_defaults(self):
        # 20 ms is fine for EMBB but breaches an explicit 10 ms intent
        call = threshold_rule_decide(self.CFG, "keep latency below 10 ms",
                                     [obs_entry(HEALTHY)])
        assert call == ToolCall("switch_network_slice", ("EMBB", "URLLC"))

    def test_stops_after_verifying(self):
        hist = [obs_entry(HEALTHY),
                entry("verify_sla_compliance", ({}, {}), Ok({"compliant": True}), 1)]
        assert threshold_rule_decide(self.CFG, "", hist) is None


class TestMapeKRules:
    def test_match_gates(self):
        rule = MapeKRule("r", dimension="latency", slice_name="EMBB",
                         kind="CONGESTION", min_violations=1)
        hot = NetworkState(SliceType.EMBB, 60.0, 5.0, 0.01, 80.0, 0.3)
        assert rule.matches(hot, ["latency"], DegradationKind.CONGESTION)
        assert not rule.matches(hot, [], DegradationKind.CONGESTION)
        assert not rule.matches(hot, ["loss"], DegradationKind.CONGESTION)
        assert not rule.matches(hot, ["latency"], DegradationKind.LINK_FADE)
        assert not rule.matches(hot, ["latency"], None)
        urllc = NetworkState(SliceType.URLLC, 60.0, 1.0, 0.002, 30.0, 0.3)
        assert not rule.matches(urllc, ["latency"], DegradationKind.CONGESTION)

    def test_dimensions_all_and_any(self):
        both = MapeKRule("r", dimensions_all=("latency", "loss"))
        assert both.matches(HEALTHY, ["latency", "loss", "jitter"], None)
        assert not both.matches(HEALTHY, ["latency"], None)
        any_rule = MapeKRule("r", dimension="any")
        assert any_rule.matches(HEALTHY, ["edge_load"], None)
        assert not any_rule.matches(HEALTHY, [], None)

    def test_instantiate_substitutes_slice(self):
        rule = MapeKRule("r", tool="switch_network_slice",
                         args=("$current_slice", "URLLC"))
        assert rule.instantiate(HEALTHY) == ToolCall(
            "switch_network_slice", ("EMBB", "URLLC"))


class TestMapeKTable:
    def test_loads_fifty_rules(self):
        rules, cooldown = load_mapek_table()
        assert len(rules) == 50
        assert cooldown == 2
        assert len({r.rule_id for r in rules}) == 50

    def test_every_action_validates_against_the_catalog(self):
        registry = build_catalog()
        rules, _ = load_mapek_table()
        for rule in rules:
            for slc in SliceType:
                state = NetworkState(slc, 20.0, 5.0, 0.01, 80.0, 0.3)
                got = validate_call(registry, rule.instantiate(state))
                assert not isinstance(got, CallRejection), (rule.rule_id, slc, got)

    def test_rejects_wrong_size_or_schema(self, tmp_path):
        rules, _ = load_mapek_table()
        small = {"schema_version": 1, "cooldown_steps": 2, "rules": [
            {"id": "only", "when": {}, "action": {"tool": "heartbeat",
                                                  "args": ["uav-1"]}}]}
        p = tmp_path / "small.json"
        p.write_text(json.dumps(small))
        with pytest.raises(ValueError, match="exactly 50"):
            load_mapek_table(str(p))
        p.write_text(json.dumps({"schema_version": 2, "rules": []}))
        with pytest.raises(ValueError, match="schema_version"):
            load_mapek_table(str(p))


class TestMapeKDecide:
    def _rules(self):
        return [
            MapeKRule("a", dimension="latency", tool="switch_network_slice",
                      args=("$current_slice", "URLLC")),
            MapeKRule("b", dimension="any", tool="send_alert",
                      args=("uav-1", "critical")),
        ]

    def test_double_checks_before_verifying(self):
        rules = self._rules()
        k = {}
        first = mapek_decide(rules, 2, k, "", [obs_entry(HEALTHY)])
        assert first == ToolCall("read_telemetry", ())  # one reading is not enough
        hist = [obs_entry(HEALTHY, 0), obs_entry(HEALTHY, 1)]
        second = mapek_decide(rules, 2, k, "", hist)
        assert second.name == "verify_sla_compliance"

    def test_stops_after_verify(self):
        hist = [obs_entry(HEALTHY, 0), obs_entry(HEALTHY, 1),
                entry("verify_sla_compliance", ({}, {}), Ok({"compliant": True}), 2)]
        assert mapek_decide(self._rules(), 2, {}, "", hist) is None

    def test_first_matching_rule_fires_and_is_recorded(self):
        hot = NetworkState(SliceType.EMBB, 80.0, 5.0, 0.01, 80.0, 0.3)
        k = {}
        call = mapek_decide(self._rules(), 2, k, "", [obs_entry(hot)])
        assert call == ToolCall("switch_network_slice", ("EMBB", "URLLC"))
        assert k == {"a": 1}

    def test_cooldown_suppression_moves_to_next_rule(self):
        hot = NetworkState(SliceType.EMBB, 80.0, 5.0, 0.01, 80.0, 0.3)
        k = {"a": 0}  # fired moments ago
        call = mapek_decide(self._rules(), 2, k, "", [obs_entry(hot)])
        assert call == ToolCall("send_alert", ("uav-1", "critical"))
        assert k == {"a": 0, "b": 1}

    def test_expired_cooldown_re_enables(self):
        hot = NetworkState(SliceType.EMBB, 80.0, 5.0, 0.01, 80.0, 0.3)
        k = {"a": 0}
        hist = [obs_entry(HEALTHY, i) for i in range(3)] + [obs_entry(hot, 3)]
        call = mapek_decide(self._rules(), 2, k, "", hist)
        assert call.name == "switch_network_slice"
        assert k["a"] == 4

    def test_fallback_when_table_exhausted(self):
        slow = NetworkState(SliceType.URLLC, 5.0, 1.0, 0.002, 2.0, 0.3)
        call = mapek_decide([], 2, {}, "", [obs_entry(slow)])
        assert call.name == "edge_offload"
        assert call.args[0]["task_id"] == "mapek-offload"


class TestEndToEnd:
    def _fade_task(self):
        return make_task(
            rule=SuccessRule("sla_within", bounds=default_sla_spec().for_slice(
                SliceType.URLLC)),
            degradations=[DegradationEvent(DegradationKind.LINK_FADE, 0, 30, 1.0)],
            length=6, tier=Tier.L2, budget=20)

    def test_threshold_agent_succeeds_on_clean_task(self, model):
        traj = run_episode(ThresholdRuleAgent(), model, make_task(), seed=5)
        assert traj.outcome is Outcome.SUCCESS
        assert [e.call.name for e in traj.entries] == [
            "read_telemetry", "verify_sla_compliance"]

    def test_mapek_agent_succeeds_on_clean_task(self, model):
        traj = run_episode(MapeKAgent(), model, make_task(), seed=5)
        assert traj.outcome is Outcome.SUCCESS
        assert [e.call.name for e in traj.entries] == [
            "read_telemetry", "read_telemetry", "verify_sla_compliance"]

    def test_mapek_agent_resolves_link_fade(self, model):
        traj = run_episode(MapeKAgent(), model, self._fade_task(), seed=5)
        assert traj.outcome is Outcome.SUCCESS
        names = [e.call.name for e in traj.entries]
        assert "switch_network_slice" in names or \
            "trigger_slice_reallocation" in names
        assert traj.entries[-1].degradation_active is None  # remediated

    def test_agents_are_deterministic(self, model):
        task = self._fade_task()
        a = run_episode(MapeKAgent(), model, task, seed=5)
        b = run_episode(MapeKAgent(), model, task, seed=5)
        assert a == b


class FakeResponse:
    def __init__(self, status=200, doc=None, text=""):
        self.status_code = status
        self._doc = doc
        self.text = text

    def json(self):
        if self._doc is None:
            raise ValueError("no body")
        return self._doc


class FakeClient:
    def __init__(self, response):
        self.response = response
        self.last_payload = None

    def post(self, path, json=None):
        self.last_payload = json
        if isinstance(self.response, Exception):
            raise self.response
        return self.response


class TestRemoteAgent:
    def _agent(self, response):
        return RemoteAgent("http://agent.test", client=FakeClient(response))

    def test_call_response(self):
        agent = self._agent(FakeResponse(doc={"call": {"tool": "read_telemetry",
                                                       "args": []}}))
        assert agent.decide("", None, []) == ToolCall("read_telemetry", ())

    def test_stop_response(self):
        assert self._agent(FakeResponse(doc={"stop": True})).decide("", None, []) is None

    def test_http_error_stops(self):
        import httpx

        assert self._agent(httpx.ConnectError("down")).decide("", None, []) is None
        assert self._agent(FakeResponse(status=500)).decide("", None, []) is None

    def test_garbage_becomes_invalid_call(self):
        call = self._agent(FakeResponse(doc={"weird": 1})).decide("", None, [])
        assert call.name == "__unparseable_remote_output__"
        call = self._agent(FakeResponse(doc=None, text="<html>")).decide("", None, [])
        assert call.name == "__unparseable_remote_output__"

    def test_payload_window(self):
        client = FakeClient(FakeResponse(doc={"stop": True}))
        agent = RemoteAgent("http://agent.test", client=client)
        hist = [obs_entry(HEALTHY, i) for i in range(8)]
        agent.decide("stay healthy", hist[-1].result, hist)
        payload = client.last_payload
        assert payload["schema_version"] == 1
        assert payload["step_index"] == 8
        assert len(payload["history"]) == 5  # bounded context window
        assert payload["history"][0]["step_index"] == 3
