from __future__ import annotations

import dataclasses
from decimal import Decimal

import pytest

from vmptrace.analysis import classify, validate
from vmptrace.environments import enumerate_environments, env_from_coords
from vmptrace.errors import ConfigError
from vmptrace.generator import (
    ArrivalModel,
    GeneratorConfig,
    HorizontalPolicy,
    ServiceShape,
    SizingRanges,
    UtilizationPolicy,
    VerticalPolicy,
    check_config,
    config_digest,
    config_from_dict,
    config_to_dict,
    default_config,
    evolve_horizontal,
    evolve_utilization,
    evolve_vertical,
    generate,
    sample_service,
)
from vmptrace.model import EventKind, ResourceSpec, UtilizationSample, full_utilization
from vmptrace.rng import SplitMix64, derive_stream
from vmptrace.traceio import trace_to_bytes


def _inert(config: GeneratorConfig) -> GeneratorConfig:
    """Disable every stochastic dynamic so only guaranteed injections remain."""
    return dataclasses.replace(
        config,
        vertical_policy=dataclasses.replace(config.vertical_policy, p_step=0.0),
        horizontal_policy=dataclasses.replace(config.horizontal_policy, p_scale=0.0),
        utilization_policy=dataclasses.replace(
            config.utilization_policy, cpu_step=(0, 0), ram_step=(0, 0), net_step=(0, 0)
        ),
    )


def test_static_environment_produces_constant_series():
    trace = generate(default_config(env_from_coords(0, 0), seed=42, horizon=5))
    assert trace.samples, "expected at least one service"
    specs_seen: dict[tuple[int, int, int], set] = {}
    for sample in trace.samples:
        assert sample.util == full_utilization(sample.spec)
        specs_seen.setdefault(sample.vm_key, set()).add(
            (sample.spec.vcpu, sample.spec.vram, sample.spec.vnet)
        )
    for values in specs_seen.values():
        assert len(values) == 1
    assert all(not event.kind.is_scale for event in trace.events)


def test_identical_configs_generate_identical_traces():
    config = default_config(env_from_coords(3, 3), seed=7, horizon=15, num_datacenters=2)
    first = generate(config)
    second = generate(config)
    assert first == second
    assert trace_to_bytes(first) == trace_to_bytes(second)


def test_different_seeds_generate_different_traces():
    base = default_config(env_from_coords(3, 3), seed=0, horizon=15)
    other = dataclasses.replace(base, seed=1)
    assert trace_to_bytes(generate(base)) != trace_to_bytes(generate(other))


def test_generated_traces_pass_strict_validation():
    for coords in ((0, 0), (1, 0), (2, 0), (0, 3), (3, 3)):
        for seed in (0, 1):
            config = default_config(env_from_coords(*coords), seed=seed, horizon=15)
            report = validate(generate(config), mode="strict")
            assert report.ok, report.render_text()


def test_header_records_the_generating_config():
    config = default_config(env_from_coords(1, 2), seed=99, horizon=12, num_datacenters=3)
    trace = generate(config)
    assert trace.header.environment == config.environment
    assert trace.header.horizon == 12
    assert trace.header.num_datacenters == 3
    assert trace.header.seed == 99
    assert trace.header.sla_levels == config.sizing.sla[1]
    assert trace.header.config_digest == config_digest(config)


def test_sample_service_spans_every_datacenter():
    config = dataclasses.replace(
        default_config(env_from_coords(0, 0), horizon=50, num_datacenters=3),
        service_shape=ServiceShape(vms_per_dc=(2, 2), lifetime=(3, 3)),
    )
    template = sample_service(derive_stream(0, 99), config, 5)
    assert template.service_id == 1
    assert template.t_init == 5
    assert template.t_end == 8
    assert len(template.descriptors) == 6
    assert {d.dc_id for d in template.descriptors} == {1, 2, 3}
    for dc_id in (1, 2, 3):
        indices = sorted(d.vm_index for d in template.descriptors if d.dc_id == dc_id)
        assert indices == [1, 2]
    for descriptor in template.descriptors:
        assert descriptor.t_init == 5 and descriptor.t_end == 8
        assert descriptor.sla == 1
        assert 1 <= descriptor.revenue <= 100
        spec = template.initial_specs[descriptor.key]
        assert 1 <= spec.vcpu <= 16
        assert 1 <= spec.vram <= 64
        assert 10 <= spec.vnet <= 1000


def test_sample_service_advances_the_index_counters():
    config = dataclasses.replace(
        default_config(env_from_coords(0, 0), horizon=50, num_datacenters=2),
        service_shape=ServiceShape(vms_per_dc=(2, 2), lifetime=(3, 3)),
    )
    counters = {1: 5, 2: 1}
    template = sample_service(derive_stream(0, 98), config, 0, service_id=4, next_vm_index=counters)
    assert template.service_id == 4
    assert sorted(d.vm_index for d in template.descriptors if d.dc_id == 1) == [5, 6]
    assert sorted(d.vm_index for d in template.descriptors if d.dc_id == 2) == [1, 2]
    assert counters == {1: 7, 2: 3}


def test_sample_service_respects_the_minimum_lifetime():
    config = dataclasses.replace(
        default_config(env_from_coords(0, 0), horizon=50),
        service_shape=ServiceShape(vms_per_dc=(1, 1), lifetime=(1, 1)),
    )
    template = sample_service(derive_stream(0, 97), config, 0, min_lifetime=3)
    assert template.t_end - template.t_init == 3


def test_sample_service_clamps_to_the_horizon():
    config = dataclasses.replace(
        default_config(env_from_coords(0, 0), horizon=50),
        service_shape=ServiceShape(vms_per_dc=(1, 1), lifetime=(5, 5)),
    )
    template = sample_service(derive_stream(0, 96), config, 48)
    assert template.t_init == 48
    assert template.t_end == 50


def test_initial_vm_count_is_clamped_into_the_horizontal_bounds():
    config = dataclasses.replace(
        default_config(env_from_coords(1, 0), seed=6, horizon=10),
        service_shape=ServiceShape(vms_per_dc=(1, 1), lifetime=(3, 4)),
        horizontal_policy=HorizontalPolicy(p_scale=0.0, min_vms=2, max_vms=5),
    )
    trace = generate(config)
    for service_id in trace.service_ids():
        for dc_id in (1, 2):
            born = [
                d
                for d in trace.descriptors
                if d.service_id == service_id and d.dc_id == dc_id
            ]
            assert len(born) == 2


def test_vertical_step_reachable_values():
    policy = VerticalPolicy(p_step=1.0, magnitude=(0.25, 0.25), vary_net=False, precision=0)
    spec = ResourceSpec(8, 16, 150)
    cpu_seen: set[Decimal] = set()
    ram_seen: set[Decimal] = set()
    for i in range(100):
        stepped = evolve_vertical(derive_stream(3, i), spec, policy)
        assert stepped.vcpu in (Decimal(6), Decimal(10))
        assert stepped.vram in (Decimal(12), Decimal(20))
        assert stepped.vnet == Decimal(150)
        cpu_seen.add(stepped.vcpu)
        ram_seen.add(stepped.vram)
    assert cpu_seen == {Decimal(6), Decimal(10)}
    assert ram_seen == {Decimal(12), Decimal(20)}


def test_vertical_step_never_drops_below_one_unit():
    policy = VerticalPolicy(p_step=1.0, magnitude=(0.5, 0.5), vary_net=False, precision=0)
    spec = ResourceSpec(1, 1, 10)
    for i in range(50):
        stepped = evolve_vertical(derive_stream(4, i), spec, policy)
        assert stepped.vcpu >= 1
        assert stepped.vram >= 1
        assert stepped.vcpu in (Decimal(1), Decimal(2))


def test_vertical_step_skips_zero_valued_components():
    policy = VerticalPolicy(p_step=1.0, magnitude=(0.5, 0.5), vary_net=True, precision=0)
    spec = ResourceSpec(2, 2, 0)
    for i in range(50):
        assert evolve_vertical(derive_stream(5, i), spec, policy).vnet == Decimal(0)


def test_vertical_step_precision_controls_rounding():
    spec = ResourceSpec(5, 5, 10)
    fine = VerticalPolicy(p_step=1.0, magnitude=(0.1, 0.1), vary_net=False, precision=1)
    coarse = VerticalPolicy(p_step=1.0, magnitude=(0.1, 0.1), vary_net=False, precision=0)
    fine_seen = {evolve_vertical(derive_stream(6, i), spec, fine).vcpu for i in range(60)}
    coarse_seen = {evolve_vertical(derive_stream(6, i), spec, coarse).vcpu for i in range(60)}
    assert fine_seen == {Decimal("4.5"), Decimal("5.5")}
    assert coarse_seen == {Decimal(4), Decimal(6)}


def test_vertical_step_probability_zero_leaves_spec_and_stream_alone():
    policy = VerticalPolicy(p_step=0.0, magnitude=(0.1, 0.4), vary_net=True, precision=0)
    spec = ResourceSpec(8, 16, 150)
    stream = derive_stream(9, 1)
    untouched = derive_stream(9, 1)
    assert evolve_vertical(stream, spec, policy) == spec
    assert stream.next_u64() == untouched.next_u64()


def test_horizontal_actions_respect_the_bounds():
    policy = HorizontalPolicy(p_scale=1.0, min_vms=1, max_vms=4)
    for i in range(100):
        at_max = evolve_horizontal(derive_stream(7, i), {1: 4, 2: 4}, policy)
        assert len(at_max) == 1 and at_max[0][0] == "in"
        at_min = evolve_horizontal(derive_stream(8, i), {1: 1, 2: 1}, policy)
        assert len(at_min) == 1 and at_min[0][0] == "out"


def test_horizontal_uses_both_directions_and_datacenters():
    policy = HorizontalPolicy(p_scale=1.0, min_vms=1, max_vms=4)
    directions: set[str] = set()
    datacenters: set[int] = set()
    for i in range(300):
        actions = evolve_horizontal(derive_stream(10, i), {1: 2, 2: 3}, policy)
        assert len(actions) == 1
        direction, dc_id = actions[0]
        assert direction in ("out", "in")
        assert dc_id in (1, 2)
        directions.add(direction)
        datacenters.add(dc_id)
    assert directions == {"out", "in"}
    assert datacenters == {1, 2}


def test_horizontal_probability_zero_means_no_actions():
    policy = HorizontalPolicy(p_scale=0.0, min_vms=1, max_vms=4)
    assert evolve_horizontal(derive_stream(11, 0), {1: 2}, policy) == []


def test_horizontal_scale_frequency_tracks_the_probability():
    policy = HorizontalPolicy(p_scale=0.3, min_vms=1, max_vms=4)
    hits = 0
    for i in range(5000):
        if evolve_horizontal(derive_stream(12, i), {1: 2}, policy):
            hits += 1
    assert abs(hits / 5000 - 0.3) < 0.03


def test_horizontal_simulation_stays_within_bounds():
    policy = HorizontalPolicy(p_scale=1.0, min_vms=1, max_vms=4)
    stream = derive_stream(13, 0)
    counts = {1: 2, 2: 2}
    for _ in range(500):
        for direction, dc_id in evolve_horizontal(stream, counts, policy):
            counts[dc_id] += 1 if direction == "out" else -1
        assert all(1 <= count <= 4 for count in counts.values())


def test_utilization_tracks_the_request_when_overbooking_is_disabled():
    policy = UtilizationPolicy(cpu_step=(1, 3), ram_step=(1, 3), net_step=(1, 3))
    spec = ResourceSpec(4, 8, 100)
    prev = UtilizationSample(1, 1, 1)
    stream = derive_stream(14, 0)
    untouched = derive_stream(14, 0)
    result = evolve_utilization(stream, prev, spec, policy, server=False, network=False)
    assert result == full_utilization(spec)
    assert stream.next_u64() == untouched.next_u64()


def test_utilization_walk_stays_within_the_request_by_default():
    policy = UtilizationPolicy(cpu_step=(1, 2), ram_step=(1, 3), net_step=(5, 20))
    spec = ResourceSpec(4, 8, 100)
    stream = derive_stream(15, 0)
    util = full_utilization(spec)
    for _ in range(300):
        util = evolve_utilization(stream, util, spec, policy, server=True, network=True)
        assert Decimal(0) <= util.ucpu <= spec.vcpu
        assert Decimal(0) <= util.uram <= spec.vram
        assert Decimal(0) <= util.unet <= spec.vnet


def test_utilization_walk_leaves_disabled_classes_pinned():
    policy = UtilizationPolicy(cpu_step=(1, 2), ram_step=(1, 3), net_step=(5, 20))
    spec = ResourceSpec(4, 8, 100)
    stream = derive_stream(16, 0)
    util = full_utilization(spec)
    for _ in range(50):
        util = evolve_utilization(stream, util, spec, policy, server=True, network=False)
        assert util.unet == spec.vnet


def test_utilization_walk_may_exceed_the_request_when_allowed():
    policy = UtilizationPolicy(
        cpu_step=(1, 1), ram_step=(1, 2), net_step=(3, 3), allow_exceed_request=True
    )
    spec = ResourceSpec(2, 4, 10)
    stream = derive_stream(17, 0)
    util = full_utilization(spec)
    exceeded = False
    for _ in range(400):
        util = evolve_utilization(stream, util, spec, policy, server=True, network=True)
        assert util.ucpu <= 2 * spec.vcpu
        assert util.uram <= 2 * spec.vram
        assert util.unet <= 2 * spec.vnet
        exceeded = exceeded or util.ucpu > spec.vcpu
    assert exceeded


def test_config_checks_reject_bad_fields():
    base = default_config(env_from_coords(0, 0))
    bad_cases = [
        dict(horizon=0),
        dict(num_datacenters=0),
        dict(seed=-1),
        dict(seed=2**64),
        dict(arrival=ArrivalModel(rate=-0.1)),
        dict(arrival=ArrivalModel(rate=1.2)),
        dict(service_shape=ServiceShape(lifetime=(0, 2))),
        dict(service_shape=ServiceShape(lifetime=(5, 2))),
        dict(service_shape=ServiceShape(vms_per_dc=(0, 1))),
        dict(service_shape=ServiceShape(vms_per_dc=(2, 1))),
        dict(sizing=SizingRanges(vcpu=(-1, 2))),
        dict(sizing=SizingRanges(revenue=(5, 2))),
        dict(sizing=SizingRanges(sla=(0, 1))),
        dict(vertical_policy=VerticalPolicy(p_step=-0.1)),
        dict(vertical_policy=VerticalPolicy(p_step=1.5)),
        dict(vertical_policy=VerticalPolicy(magnitude=(-0.1, 0.4))),
        dict(vertical_policy=VerticalPolicy(magnitude=(0.4, 0.1))),
        dict(vertical_policy=VerticalPolicy(precision=-1)),
        dict(horizontal_policy=HorizontalPolicy(min_vms=0)),
        dict(horizontal_policy=HorizontalPolicy(min_vms=3, max_vms=2)),
        dict(utilization_policy=UtilizationPolicy(cpu_step=(2, 1))),
        dict(utilization_policy=UtilizationPolicy(net_step=(-1, 2))),
    ]
    for replacement in bad_cases:
        with pytest.raises(ConfigError):
            check_config(dataclasses.replace(base, **replacement))


def test_burst_arrivals_allow_rates_above_one():
    config = dataclasses.replace(
        default_config(env_from_coords(0, 0), seed=8, horizon=6),
        arrival=ArrivalModel(rate=3.0, force_first=True, burst=True),
    )
    check_config(config)
    trace = generate(config)
    arrivals = [e for e in trace.events if e.kind == EventKind.SERVICE_ARRIVAL]
    assert len(arrivals) > 6


def test_guarantee_feasibility_is_checked_up_front():
    cases = [
        default_config(env_from_coords(1, 0), horizon=1, guarantee_dynamics=True),
        dataclasses.replace(
            default_config(env_from_coords(1, 0), guarantee_dynamics=True),
            horizontal_policy=HorizontalPolicy(min_vms=2, max_vms=2),
        ),
        dataclasses.replace(
            default_config(env_from_coords(0, 1), guarantee_dynamics=True),
            sizing=SizingRanges(vcpu=(0, 0), vram=(0, 0)),
        ),
        dataclasses.replace(
            default_config(env_from_coords(0, 2), guarantee_dynamics=True),
            sizing=SizingRanges(vnet=(0, 0)),
        ),
    ]
    for config in cases:
        with pytest.raises(ConfigError):
            check_config(config)
    # A static environment has nothing to guarantee, so a short horizon is fine.
    check_config(default_config(env_from_coords(0, 0), horizon=1, guarantee_dynamics=True))


def test_guarantee_injects_dynamics_even_with_inert_policies():
    for env in enumerate_environments():
        config = _inert(
            default_config(env, seed=1, horizon=8, num_datacenters=2, guarantee_dynamics=True)
        )
        trace = generate(config)
        assert classify(trace) == env, f"environment {env} not realized"
        assert validate(trace, mode="strict").ok


def test_guarantee_forces_an_arrival_at_tick_zero():
    config = dataclasses.replace(
        default_config(env_from_coords(2, 0), seed=0, horizon=8, guarantee_dynamics=True),
        arrival=ArrivalModel(rate=0.0, force_first=False),
    )
    trace = generate(config)
    arrivals = [e for e in trace.events if e.kind == EventKind.SERVICE_ARRIVAL]
    assert arrivals and arrivals[0].t == 0


def test_at_most_one_scale_action_per_service_per_tick():
    config = dataclasses.replace(
        default_config(env_from_coords(1, 0), seed=3, horizon=30),
        arrival=ArrivalModel(rate=0.5, force_first=True),
        horizontal_policy=HorizontalPolicy(p_scale=1.0, min_vms=1, max_vms=4),
    )
    trace = generate(config)
    scale_moments = [
        (event.t, event.service_id) for event in trace.events if event.kind.is_scale
    ]
    assert scale_moments, "expected scale activity at p_scale=1"
    assert len(scale_moments) == len(set(scale_moments))


def test_vm_indices_are_never_reused_within_a_datacenter():
    config = dataclasses.replace(
        default_config(env_from_coords(1, 0), seed=5, horizon=30),
        horizontal_policy=HorizontalPolicy(p_scale=1.0, min_vms=1, max_vms=4),
    )
    trace = generate(config)
    for service_id in trace.service_ids():
        for dc_id in range(1, trace.header.num_datacenters + 1):
            indices = [
                d.vm_index
                for d in trace.descriptors
                if d.service_id == service_id and d.dc_id == dc_id
            ]
            assert len(indices) == len(set(indices))


def test_config_dict_round_trip_preserves_every_field():
    config = GeneratorConfig(
        environment=env_from_coords(2, 3),
        horizon=9,
        num_datacenters=3,
        seed=1234,
        arrival=ArrivalModel(rate=0.6, force_first=False, burst=True),
        service_shape=ServiceShape(vms_per_dc=(1, 3), lifetime=(2, 5)),
        sizing=SizingRanges(vcpu=(2, 8), vram=(4, 32), vnet=(20, 200), revenue=(0, 50), sla=(1, 2)),
        vertical_policy=VerticalPolicy(p_step=0.4, magnitude=(0.2, 0.3), vary_net=True, precision=2),
        horizontal_policy=HorizontalPolicy(p_scale=0.5, min_vms=1, max_vms=3),
        utilization_policy=UtilizationPolicy(
            cpu_step=(0, 1), ram_step=(1, 2), net_step=(2, 30), allow_exceed_request=True
        ),
        guarantee_dynamics=True,
    )
    assert config_from_dict(config_to_dict(config)) == config


def test_config_from_dict_fills_defaults():
    assert config_from_dict({"environment": [2, 1]}) == GeneratorConfig(
        environment=env_from_coords(2, 1)
    )


def test_config_from_dict_rejects_unknown_or_missing_keys():
    with pytest.raises(ConfigError):
        config_from_dict({})
    with pytest.raises(ConfigError):
        config_from_dict({"environment": [0, 0], "bogus": 1})
    with pytest.raises(ConfigError):
        config_from_dict({"environment": [0, 0], "vertical_policy": {"p_stepp": 0.5}})
    with pytest.raises(ConfigError):
        config_from_dict({"environment": [9, 0]})


def test_config_digest_is_stable_and_content_sensitive():
    config = default_config(env_from_coords(0, 0), seed=4)
    digest = config_digest(config)
    assert len(digest) == 64
    assert digest == digest.lower()
    assert int(digest, 16) >= 0
    assert config_digest(config) == digest
    assert config_digest(dataclasses.replace(config, seed=5)) != digest
