"""Seeded stochastic workload generation for all sixteen environments.

The generator turns a :class:`GeneratorConfig` into a trace in two passes.
First it decides membership: service arrival ticks (Bernoulli draw per tick,
or Poisson when burst arrivals are enabled), each service's lifetime and
per-datacenter VM counts, and, when horizontal elasticity is enabled, a
schedule of scale-out/scale-in actions. Then it fills in per-VM time series:
requested resources (constant, or stepped by the vertical policy) and used
resources (equal to the request, or a bounded random walk for overbooked
classes).

Reproducibility rests on a fixed stream map. Every draw comes from a
splitmix64 stream derived from the master seed and an integer path:

* ``(1,)`` arrivals: one draw per tick;
* ``(2, b)`` service b's shape: lifetime, then VM count per datacenter;
* ``(3, b)`` service b's scale decisions: one action draw per alive tick;
* ``(4, b, c, j)`` VM constants and spec series: vcpu, vram, vnet, revenue,
  sla, then the per-tick vertical steps;
* ``(5, b, c, j)`` the VM's utilization walk.

Per-VM streams keep a VM's numbers stable when unrelated knobs change: e.g.
toggling the utilization policy never alters any requested-resource series.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_EVEN, Decimal

from .environments import EnvironmentId, capabilities, env_from_coords
from .errors import ConfigError, ValidationError
from .model import (
    MAX_SEED,
    EventKind,
    ResourceSpec,
    Trace,
    TraceEvent,
    TraceHeader,
    UtilizationSample,
    VmDescriptor,
    VmSample,
)
from .rng import SplitMix64, derive_stream

STREAM_ARRIVALS = 1
STREAM_SERVICE = 2
STREAM_SCALING = 3
STREAM_VM_SPEC = 4
STREAM_VM_UTILIZATION = 5

# a resized requested resource never drops below one unit
SPEC_FLOOR = Decimal(1)


@dataclass(frozen=True)
class ArrivalModel:
    """Service arrival process: at most one arrival per tick with probability
    ``rate``, or a Poisson(``rate``) count per tick when ``burst`` is set.
    ``force_first`` guarantees an arrival at t = 0."""

    rate: float = 0.25
    force_first: bool = True
    burst: bool = False


@dataclass(frozen=True)
class ServiceShape:
    """Per-service structure: VMs per datacenter and lifetime, both drawn
    uniformly from inclusive integer ranges."""

    vms_per_dc: tuple[int, int] = (1, 2)
    lifetime: tuple[int, int] = (2, 8)


@dataclass(frozen=True)
class SizingRanges:
    """Inclusive integer ranges for initial per-VM constants: CPU capacity
    [ECU], memory [GB], network bandwidth [Mbps], revenue, and SLA level."""

    vcpu: tuple[int, int] = (1, 16)
    vram: tuple[int, int] = (1, 64)
    vnet: tuple[int, int] = (10, 1000)
    revenue: tuple[int, int] = (1, 100)
    sla: tuple[int, int] = (1, 1)


@dataclass(frozen=True)
class VerticalPolicy:
    """Requested-resource resizing. Each varied component independently steps
    with probability ``p_step`` per tick, multiplying by (1 + delta) with
    |delta| drawn from ``magnitude`` and a uniform sign, rounded to
    ``precision`` decimal places. Network bandwidth varies only when
    ``vary_net`` is set."""

    p_step: float = 0.25
    magnitude: tuple[float, float] = (0.1, 0.4)
    vary_net: bool = False
    precision: int = 0


@dataclass(frozen=True)
class HorizontalPolicy:
    """Per-service scaling: with probability ``p_scale`` per alive tick one
    VM is added or removed, keeping every (service, datacenter) count within
    [``min_vms``, ``max_vms``]."""

    p_scale: float = 0.25
    min_vms: int = 1
    max_vms: int = 4


@dataclass(frozen=True)
class UtilizationPolicy:
    """Bounded random walk for overbooked resource classes. Steps are drawn
    from inclusive integer magnitude ranges with a uniform sign; values stay
    in [0, request], or [0, 2x request] when ``allow_exceed_request``."""

    cpu_step: tuple[int, int] = (0, 2)
    ram_step: tuple[int, int] = (0, 4)
    net_step: tuple[int, int] = (0, 50)
    allow_exceed_request: bool = False


@dataclass(frozen=True)
class GeneratorConfig:
    environment: EnvironmentId
    horizon: int = 20
    num_datacenters: int = 2
    seed: int = 0
    arrival: ArrivalModel = field(default_factory=ArrivalModel)
    service_shape: ServiceShape = field(default_factory=ServiceShape)
    sizing: SizingRanges = field(default_factory=SizingRanges)
    vertical_policy: VerticalPolicy = field(default_factory=VerticalPolicy)
    horizontal_policy: HorizontalPolicy = field(default_factory=HorizontalPolicy)
    utilization_policy: UtilizationPolicy = field(default_factory=UtilizationPolicy)
    guarantee_dynamics: bool = False


def default_config(
    environment: EnvironmentId,
    *,
    seed: int = 0,
    horizon: int = 20,
    num_datacenters: int = 2,
    guarantee_dynamics: bool = False,
) -> GeneratorConfig:
    return GeneratorConfig(
        environment=environment,
        horizon=horizon,
        num_datacenters=num_datacenters,
        seed=seed,
        guarantee_dynamics=guarantee_dynamics,
    )


def _check_int_range(name: str, value, minimum: int) -> None:
    ok = (
        isinstance(value, tuple)
        and len(value) == 2
        and all(isinstance(v, int) and not isinstance(v, bool) for v in value)
    )
    if not ok:
        raise ConfigError(f"{name} must be an integer pair (lo, hi), got {value!r}")
    lo, hi = value
    if lo > hi:
        raise ConfigError(f"{name} range is empty: ({lo}, {hi})")
    if lo < minimum:
        raise ConfigError(f"{name} lower bound must be >= {minimum}, got {lo}")


def _check_probability(name: str, value) -> None:
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not 0.0 <= value <= 1.0:
        raise ConfigError(f"{name} must be a probability in [0, 1], got {value!r}")


def check_config(config: GeneratorConfig) -> None:
    """Raise ConfigError if the configuration is malformed or, with
    guarantee_dynamics set, cannot possibly exhibit an enabled capability."""
    if not isinstance(config.environment, EnvironmentId):
        raise ConfigError(f"environment must be an EnvironmentId, got {config.environment!r}")
    if not isinstance(config.horizon, int) or isinstance(config.horizon, bool) or config.horizon < 1:
        raise ConfigError(f"horizon must be an integer >= 1, got {config.horizon!r}")
    if not isinstance(config.num_datacenters, int) or isinstance(config.num_datacenters, bool) or config.num_datacenters < 1:
        raise ConfigError(f"num_datacenters must be an integer >= 1, got {config.num_datacenters!r}")
    if not isinstance(config.seed, int) or isinstance(config.seed, bool) or not 0 <= config.seed <= MAX_SEED:
        raise ConfigError(f"seed must be an integer in [0, 2**64), got {config.seed!r}")

    arrival = config.arrival
    if config.arrival.burst:
        if not isinstance(arrival.rate, (int, float)) or isinstance(arrival.rate, bool) or arrival.rate < 0:
            raise ConfigError(f"arrival.rate must be >= 0, got {arrival.rate!r}")
    else:
        _check_probability("arrival.rate", arrival.rate)

    _check_int_range("service_shape.vms_per_dc", config.service_shape.vms_per_dc, 1)
    _check_int_range("service_shape.lifetime", config.service_shape.lifetime, 1)

    sizing = config.sizing
    _check_int_range("sizing.vcpu", sizing.vcpu, 0)
    _check_int_range("sizing.vram", sizing.vram, 0)
    _check_int_range("sizing.vnet", sizing.vnet, 0)
    _check_int_range("sizing.revenue", sizing.revenue, 0)
    _check_int_range("sizing.sla", sizing.sla, 1)

    vertical = config.vertical_policy
    _check_probability("vertical_policy.p_step", vertical.p_step)
    mag = vertical.magnitude
    ok = (
        isinstance(mag, tuple)
        and len(mag) == 2
        and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in mag)
    )
    if not ok or not 0 <= mag[0] <= mag[1]:
        raise ConfigError(f"vertical_policy.magnitude must be a pair 0 <= lo <= hi, got {mag!r}")
    if not isinstance(vertical.precision, int) or isinstance(vertical.precision, bool) or vertical.precision < 0:
        raise ConfigError(f"vertical_policy.precision must be an integer >= 0, got {vertical.precision!r}")

    horizontal = config.horizontal_policy
    _check_probability("horizontal_policy.p_scale", horizontal.p_scale)
    for bound_name, bound in (("min_vms", horizontal.min_vms), ("max_vms", horizontal.max_vms)):
        if not isinstance(bound, int) or isinstance(bound, bool) or bound < 1:
            raise ConfigError(f"horizontal_policy.{bound_name} must be an integer >= 1, got {bound!r}")
    if horizontal.min_vms > horizontal.max_vms:
        raise ConfigError(
            f"horizontal_policy.min_vms {horizontal.min_vms} exceeds max_vms {horizontal.max_vms}"
        )

    util = config.utilization_policy
    _check_int_range("utilization_policy.cpu_step", util.cpu_step, 0)
    _check_int_range("utilization_policy.ram_step", util.ram_step, 0)
    _check_int_range("utilization_policy.net_step", util.net_step, 0)

    if config.guarantee_dynamics:
        caps = capabilities(config.environment)
        if caps.any_elasticity and config.horizon < 2:
            raise ConfigError(
                "guarantee_dynamics with elasticity enabled needs horizon >= 2; "
                f"got horizon {config.horizon}"
            )
        if caps.horizontal and horizontal.min_vms == horizontal.max_vms:
            raise ConfigError(
                "guarantee_dynamics with horizontal elasticity needs min_vms < max_vms; "
                f"both are {horizontal.min_vms}"
            )
        if caps.server_overbooking and sizing.vcpu[1] == 0 and sizing.vram[1] == 0:
            raise ConfigError(
                "guarantee_dynamics with server overbooking needs a positive vcpu or vram range"
            )
        if caps.network_overbooking and sizing.vnet[1] == 0:
            raise ConfigError(
                "guarantee_dynamics with network overbooking needs a positive vnet range"
            )


def evolve_vertical(rng: SplitMix64, spec: ResourceSpec, policy: VerticalPolicy) -> ResourceSpec:
    """Advance a VM's requested resources by one tick.

    Each varied component independently keeps its value with probability
    1 - p_step or is multiplied by (1 + delta), delta drawn from the
    magnitude range with a uniform sign, rounded half-even to the policy
    precision, and clamped to at least one unit. Zero-valued components
    never step (a multiplicative step cannot move them). Network bandwidth
    is varied only when the policy says so.
    """
    vcpu = _step_spec_component(rng, spec.vcpu, policy)
    vram = _step_spec_component(rng, spec.vram, policy)
    vnet = _step_spec_component(rng, spec.vnet, policy) if policy.vary_net else spec.vnet
    return ResourceSpec(vcpu, vram, vnet)


def _step_spec_component(rng: SplitMix64, value: Decimal, policy: VerticalPolicy) -> Decimal:
    if value == 0:
        return value
    if not rng.chance(policy.p_step):
        return value
    magnitude = rng.uniform(policy.magnitude[0], policy.magnitude[1])
    if rng.chance(0.5):
        magnitude = -magnitude
    factor = Decimal(1) + Decimal(repr(magnitude))
    quantum = Decimal(1).scaleb(-policy.precision)
    stepped = (value * factor).quantize(quantum, rounding=ROUND_HALF_EVEN)
    return max(stepped, SPEC_FLOOR)


def evolve_horizontal(
    rng: SplitMix64, counts: dict[int, int], policy: HorizontalPolicy
) -> list[tuple[str, int]]:
    """Decide one service's scale actions for the current tick.

    ``counts`` maps dc_id to the service's current VM count there. At most
    one action fires per tick (probability p_scale); the direction is drawn
    uniformly among the feasible ones and the datacenter uniformly among
    those where the move stays within bounds. Returns a list of
    ("out" | "in", dc_id) pairs, possibly empty.
    """
    if not counts or not rng.chance(policy.p_scale):
        return []
    out_dcs = sorted(dc for dc, n in counts.items() if n < policy.max_vms)
    in_dcs = sorted(dc for dc, n in counts.items() if n > policy.min_vms)
    directions = []
    if out_dcs:
        directions.append("out")
    if in_dcs:
        directions.append("in")
    if not directions:
        return []
    direction = directions[0] if len(directions) == 1 else rng.choice(directions)
    eligible = out_dcs if direction == "out" else in_dcs
    dc_id = eligible[0] if len(eligible) == 1 else rng.choice(eligible)
    return [(direction, dc_id)]


def evolve_utilization(
    rng: SplitMix64,
    prev: UtilizationSample,
    spec: ResourceSpec,
    policy: UtilizationPolicy,
    *,
    server: bool,
    network: bool,
) -> UtilizationSample:
    """One tick of the utilization walk against the current tick's spec.

    Enabled classes take a signed integer step from the previous value,
    clamped to [0, request] (or [0, 2x request] when allow_exceed_request).
    Disabled classes snap to the request: utilization is accounted at 100%
    when that class of overbooking is not supported.
    """
    if server:
        ucpu = _walk(rng, prev.ucpu, spec.vcpu, policy.cpu_step, policy.allow_exceed_request)
        uram = _walk(rng, prev.uram, spec.vram, policy.ram_step, policy.allow_exceed_request)
    else:
        ucpu, uram = spec.vcpu, spec.vram
    if network:
        unet = _walk(rng, prev.unet, spec.vnet, policy.net_step, policy.allow_exceed_request)
    else:
        unet = spec.vnet
    return UtilizationSample(ucpu, uram, unet)


def _walk(
    rng: SplitMix64,
    prev: Decimal,
    bound: Decimal,
    step_range: tuple[int, int],
    allow_exceed: bool,
) -> Decimal:
    step = Decimal(rng.randint(step_range[0], step_range[1]))
    if rng.chance(0.5):
        step = -step
    cap = bound * 2 if allow_exceed else bound
    value = prev + step
    if value < 0:
        return Decimal(0)
    if value > cap:
        return cap
    return value


@dataclass(frozen=True)
class ServiceTemplate:
    """One service's membership skeleton: lifetime and initial descriptors,
    plus the initial spec drawn for each descriptor."""

    service_id: int
    t_init: int
    t_end: int
    descriptors: tuple[VmDescriptor, ...]
    initial_specs: dict[tuple[int, int, int], ResourceSpec]


def _vm_constants(
    config: GeneratorConfig, service_id: int, dc_id: int, vm_index: int
) -> tuple[SplitMix64, ResourceSpec, Decimal, int]:
    """Draw a VM's constants from its own stream; the returned stream is
    positioned just past them, ready to drive the vertical step draws."""
    stream = derive_stream(config.seed, STREAM_VM_SPEC, service_id, dc_id, vm_index)
    sizing = config.sizing
    spec = ResourceSpec(
        vcpu=stream.randint(sizing.vcpu[0], sizing.vcpu[1]),
        vram=stream.randint(sizing.vram[0], sizing.vram[1]),
        vnet=stream.randint(sizing.vnet[0], sizing.vnet[1]),
    )
    revenue = Decimal(stream.randint(sizing.revenue[0], sizing.revenue[1]))
    sla = stream.randint(sizing.sla[0], sizing.sla[1])
    return stream, spec, revenue, sla


def sample_service(
    rng: SplitMix64,
    config: GeneratorConfig,
    t: int,
    *,
    service_id: int = 1,
    next_vm_index: dict[int, int] | None = None,
    min_lifetime: int = 1,
) -> ServiceTemplate:
    """Draw one service arriving at tick t.

    ``rng`` is the service's shape stream (lifetime first, then one VM-count
    draw per datacenter). Per-VM constants come from each VM's own derived
    stream. ``next_vm_index`` maps dc_id to the next unused VM index there
    and is advanced in place; indices start at 1 when omitted. The lifetime
    is clipped to the horizon. When horizontal elasticity is enabled, the
    initial count is clamped into the policy's [min_vms, max_vms] bounds.
    """
    if not 0 <= t < config.horizon:
        raise ValidationError(f"arrival tick {t} outside [0, {config.horizon})")
    if next_vm_index is None:
        next_vm_index = {dc: 1 for dc in range(1, config.num_datacenters + 1)}
    lifetime = max(rng.randint(config.service_shape.lifetime[0], config.service_shape.lifetime[1]), min_lifetime)
    t_end = min(t + lifetime, config.horizon)
    horizontal = capabilities(config.environment).horizontal
    descriptors: list[VmDescriptor] = []
    initial_specs: dict[tuple[int, int, int], ResourceSpec] = {}
    for dc_id in range(1, config.num_datacenters + 1):
        count = rng.randint(config.service_shape.vms_per_dc[0], config.service_shape.vms_per_dc[1])
        if horizontal:
            count = min(max(count, config.horizontal_policy.min_vms), config.horizontal_policy.max_vms)
        for _ in range(count):
            vm_index = next_vm_index.setdefault(dc_id, 1)
            next_vm_index[dc_id] = vm_index + 1
            _, spec, revenue, sla = _vm_constants(config, service_id, dc_id, vm_index)
            descriptors.append(
                VmDescriptor(
                    service_id=service_id,
                    dc_id=dc_id,
                    vm_index=vm_index,
                    revenue=revenue,
                    sla=sla,
                    t_init=t,
                    t_end=t_end,
                )
            )
            initial_specs[(service_id, dc_id, vm_index)] = spec
    return ServiceTemplate(
        service_id=service_id,
        t_init=t,
        t_end=t_end,
        descriptors=tuple(descriptors),
        initial_specs=initial_specs,
    )


@dataclass
class _VmRecord:
    descriptor: VmDescriptor
    specs: dict[int, ResourceSpec] = field(default_factory=dict)
    utils: dict[int, UtilizationSample] = field(default_factory=dict)


@dataclass
class _ServiceState:
    service_id: int
    t_init: int
    t_end: int
    members: list[VmDescriptor]


def generate(config: GeneratorConfig) -> Trace:
    """Produce the deterministic trace described by the configuration.

    Dynamics the environment lacks never occur: specs stay constant without
    vertical elasticity, per-service VM counts stay constant without
    horizontal, and each overbooking-disabled class has utilization equal to
    the request. With guarantee_dynamics set, each enabled capability is
    observable at least once; if the stochastic draws produced no instance,
    one deterministic instance is injected.

    With the default allow_exceed_request = False the output validates
    cleanly in strict mode; allowing utilization above the request
    deliberately produces traces that strict mode flags.
    """
    check_config(config)
    caps = capabilities(config.environment)
    horizon = config.horizon
    num_dcs = config.num_datacenters

    # membership: arrivals
    arrival_stream = derive_stream(config.seed, STREAM_ARRIVALS)
    force_first = config.arrival.force_first or config.guarantee_dynamics
    arrivals: list[tuple[int, int]] = []
    next_service_id = 1
    for t in range(horizon):
        if config.arrival.burst:
            count = arrival_stream.poisson(config.arrival.rate)
        else:
            count = 1 if arrival_stream.chance(config.arrival.rate) else 0
        if t == 0 and force_first and count == 0:
            count = 1
        for _ in range(count):
            arrivals.append((next_service_id, t))
            next_service_id += 1

    # membership: service shapes
    next_vm_index = {dc: 1 for dc in range(1, num_dcs + 1)}
    services: list[_ServiceState] = []
    records: dict[tuple[int, int, int], _VmRecord] = {}
    events: list[TraceEvent] = []
    for service_id, t0 in arrivals:
        # the injection pass needs a VM alive for two consecutive ticks; pin
        # the first service's lifetime when elasticity must be demonstrated
        min_lifetime = 2 if (config.guarantee_dynamics and caps.any_elasticity and service_id == 1) else 1
        shape_stream = derive_stream(config.seed, STREAM_SERVICE, service_id)
        template = sample_service(
            shape_stream,
            config,
            t0,
            service_id=service_id,
            next_vm_index=next_vm_index,
            min_lifetime=min_lifetime,
        )
        services.append(
            _ServiceState(service_id, template.t_init, template.t_end, list(template.descriptors))
        )
        for desc in template.descriptors:
            records[desc.key] = _VmRecord(desc)
        events.append(TraceEvent(t=t0, kind=EventKind.SERVICE_ARRIVAL, service_id=service_id))
        events.append(TraceEvent(t=template.t_end, kind=EventKind.SERVICE_DEPARTURE, service_id=service_id))

    # membership: scale schedule
    if caps.horizontal:
        for svc in services:
            scale_stream = derive_stream(config.seed, STREAM_SCALING, svc.service_id)
            active: dict[int, list[VmDescriptor]] = {dc: [] for dc in range(1, num_dcs + 1)}
            for desc in svc.members:
                active[desc.dc_id].append(desc)
            for t in range(svc.t_init + 1, svc.t_end):
                counts = {dc: len(members) for dc, members in active.items()}
                for direction, dc_id in evolve_horizontal(scale_stream, counts, config.horizontal_policy):
                    if direction == "out":
                        _scale_out(config, svc, dc_id, t, next_vm_index, active, records, events)
                    else:
                        _scale_in(svc, dc_id, t, active, records, events)

    # per-VM series
    _fill_series(config, caps, records)

    if config.guarantee_dynamics:
        _inject_missing_dynamics(config, caps, services, next_vm_index, records, events)

    samples = [
        VmSample(
            service_id=key[0],
            dc_id=key[1],
            vm_index=key[2],
            t=t,
            spec=record.specs[t],
            util=record.utils[t],
        )
        for key, record in records.items()
        for t in range(record.descriptor.t_init, record.descriptor.t_end)
    ]
    samples.sort(key=lambda s: s.sort_key)
    events.sort(key=lambda e: e.sort_key)
    descriptors = sorted((record.descriptor for record in records.values()), key=lambda d: d.key)
    header = TraceHeader(
        environment=config.environment,
        horizon=horizon,
        num_datacenters=num_dcs,
        sla_levels=config.sizing.sla[1],
        seed=config.seed,
        config_digest=config_digest(config),
    )
    return Trace(header=header, descriptors=tuple(descriptors), events=tuple(events), samples=tuple(samples))


def _scale_out(
    config: GeneratorConfig,
    svc: _ServiceState,
    dc_id: int,
    t: int,
    next_vm_index: dict[int, int],
    active: dict[int, list[VmDescriptor]],
    records: dict[tuple[int, int, int], _VmRecord],
    events: list[TraceEvent],
) -> VmDescriptor:
    vm_index = next_vm_index[dc_id]
    next_vm_index[dc_id] = vm_index + 1
    _, _, revenue, sla = _vm_constants(config, svc.service_id, dc_id, vm_index)
    desc = VmDescriptor(
        service_id=svc.service_id,
        dc_id=dc_id,
        vm_index=vm_index,
        revenue=revenue,
        sla=sla,
        t_init=t,
        t_end=svc.t_end,
    )
    active[dc_id].append(desc)
    svc.members.append(desc)
    records[desc.key] = _VmRecord(desc)
    events.append(
        TraceEvent(t=t, kind=EventKind.VM_SCALE_OUT, service_id=svc.service_id, dc_id=dc_id, vm_index=vm_index)
    )
    return desc


def _scale_in(
    svc: _ServiceState,
    dc_id: int,
    t: int,
    active: dict[int, list[VmDescriptor]],
    records: dict[tuple[int, int, int], _VmRecord],
    events: list[TraceEvent],
) -> VmDescriptor:
    # highest alive index in the chosen datacenter; scale actions fire at
    # most once per tick, so every candidate was born before t
    victim = max(active[dc_id], key=lambda d: d.vm_index)
    active[dc_id].remove(victim)
    truncated = replace(victim, t_end=t)
    svc.members[svc.members.index(victim)] = truncated
    records[victim.key] = _VmRecord(truncated)
    events.append(
        TraceEvent(t=t, kind=EventKind.VM_SCALE_IN, service_id=svc.service_id, dc_id=dc_id, vm_index=victim.vm_index)
    )
    return truncated


def _fill_series(config: GeneratorConfig, caps, records: dict[tuple[int, int, int], _VmRecord]) -> None:
    for key in sorted(records):
        record = records[key]
        desc = record.descriptor
        spec_stream, spec, _, _ = _vm_constants(config, *key)
        record.specs = {desc.t_init: spec}
        for t in range(desc.t_init + 1, desc.t_end):
            if caps.vertical:
                spec = evolve_vertical(spec_stream, spec, config.vertical_policy)
            record.specs[t] = spec
        util_stream = derive_stream(config.seed, STREAM_VM_UTILIZATION, *key)
        first = record.specs[desc.t_init]
        util = UtilizationSample(ucpu=first.vcpu, uram=first.vram, unet=first.vnet)
        record.utils = {desc.t_init: util}
        for t in range(desc.t_init + 1, desc.t_end):
            util = evolve_utilization(
                util_stream,
                util,
                record.specs[t],
                config.utilization_policy,
                server=caps.server_overbooking,
                network=caps.network_overbooking,
            )
            record.utils[t] = util


def _spec_change_observed(records: dict[tuple[int, int, int], _VmRecord]) -> bool:
    for record in records.values():
        desc = record.descriptor
        for t in range(desc.t_init + 1, desc.t_end):
            if record.specs[t] != record.specs[t - 1]:
                return True
    return False


def _server_gap_observed(records: dict[tuple[int, int, int], _VmRecord]) -> bool:
    return any(
        record.utils[t].ucpu != record.specs[t].vcpu or record.utils[t].uram != record.specs[t].vram
        for record in records.values()
        for t in record.specs
    )


def _network_gap_observed(records: dict[tuple[int, int, int], _VmRecord]) -> bool:
    return any(
        record.utils[t].unet != record.specs[t].vnet
        for record in records.values()
        for t in record.specs
    )


def _inject_missing_dynamics(
    config: GeneratorConfig,
    caps,
    services: list[_ServiceState],
    next_vm_index: dict[int, int],
    records: dict[tuple[int, int, int], _VmRecord],
    events: list[TraceEvent],
) -> None:
    """Make every enabled capability observable, adding one deterministic
    instance per capability whose stochastic draws produced none."""
    if caps.horizontal and not any(e.kind.is_scale for e in events):
        svc = services[0]
        t = svc.t_init + 1
        dc_id = 1
        active = {dc_id: [d for d in svc.members if d.dc_id == dc_id and d.t_end == svc.t_end]}
        if len(active[dc_id]) < config.horizontal_policy.max_vms:
            desc = _scale_out(config, svc, dc_id, t, next_vm_index, active, records, events)
        else:
            desc = _scale_in(svc, dc_id, t, active, records, events)
        _fill_one_series(config, caps, records[desc.key])

    if caps.vertical and not _spec_change_observed(records):
        host = None
        for key in sorted(records):
            candidate = records[key]
            if candidate.descriptor.t_end - candidate.descriptor.t_init >= 2:
                host = candidate
                break
        if host is None:
            raise ConfigError(
                "guarantee_dynamics: no VM lives two consecutive ticks to host a resize"
            )
        desc = host.descriptor
        for t in range(desc.t_init + 1, desc.t_end):
            spec = host.specs[t]
            bumped = ResourceSpec(vcpu=spec.vcpu + 1, vram=spec.vram, vnet=spec.vnet)
            host.specs[t] = bumped
            util = host.utils[t]
            host.utils[t] = UtilizationSample(
                ucpu=util.ucpu if caps.server_overbooking else bumped.vcpu,
                uram=util.uram if caps.server_overbooking else bumped.vram,
                unet=util.unet if caps.network_overbooking else bumped.vnet,
            )

    if caps.server_overbooking and not _server_gap_observed(records):
        _inject_usage_gap(records, "server")
    if caps.network_overbooking and not _network_gap_observed(records):
        _inject_usage_gap(records, "network")


def _inject_usage_gap(records: dict[tuple[int, int, int], _VmRecord], kind: str) -> None:
    for key in sorted(records):
        record = records[key]
        t = record.descriptor.t_end - 1
        spec = record.specs[t]
        util = record.utils[t]
        if kind == "server":
            if spec.vcpu >= 1:
                record.utils[t] = UtilizationSample(spec.vcpu - 1, util.uram, util.unet)
                return
            if spec.vram >= 1:
                record.utils[t] = UtilizationSample(util.ucpu, spec.vram - 1, util.unet)
                return
        else:
            if spec.vnet >= 1:
                record.utils[t] = UtilizationSample(util.ucpu, util.uram, spec.vnet - 1)
                return
    raise ConfigError(
        f"guarantee_dynamics: no VM has a positive request to host a {kind} overbooking instance"
    )


def _fill_one_series(config: GeneratorConfig, caps, record: _VmRecord) -> None:
    singleton = {record.descriptor.key: record}
    _fill_series(config, caps, singleton)


def config_to_dict(config: GeneratorConfig) -> dict:
    """Plain-JSON form of a configuration; the inverse of config_from_dict."""
    return {
        "environment": [config.environment.elasticity, config.environment.overbooking],
        "horizon": config.horizon,
        "num_datacenters": config.num_datacenters,
        "seed": config.seed,
        "arrival": {
            "rate": config.arrival.rate,
            "force_first": config.arrival.force_first,
            "burst": config.arrival.burst,
        },
        "service_shape": {
            "vms_per_dc": list(config.service_shape.vms_per_dc),
            "lifetime": list(config.service_shape.lifetime),
        },
        "sizing": {
            "vcpu": list(config.sizing.vcpu),
            "vram": list(config.sizing.vram),
            "vnet": list(config.sizing.vnet),
            "revenue": list(config.sizing.revenue),
            "sla": list(config.sizing.sla),
        },
        "vertical_policy": {
            "p_step": config.vertical_policy.p_step,
            "magnitude": list(config.vertical_policy.magnitude),
            "vary_net": config.vertical_policy.vary_net,
            "precision": config.vertical_policy.precision,
        },
        "horizontal_policy": {
            "p_scale": config.horizontal_policy.p_scale,
            "min_vms": config.horizontal_policy.min_vms,
            "max_vms": config.horizontal_policy.max_vms,
        },
        "utilization_policy": {
            "cpu_step": list(config.utilization_policy.cpu_step),
            "ram_step": list(config.utilization_policy.ram_step),
            "net_step": list(config.utilization_policy.net_step),
            "allow_exceed_request": config.utilization_policy.allow_exceed_request,
        },
        "guarantee_dynamics": config.guarantee_dynamics,
    }


def config_digest(config: GeneratorConfig) -> str:
    """SHA-256 over the canonical JSON encoding of the full configuration."""
    canonical = json.dumps(config_to_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _take_section(data: dict, key: str) -> dict:
    section = data.get(key)
    if section is None:
        return {}
    if not isinstance(section, dict):
        raise ConfigError(f"config section {key!r} must be an object, got {section!r}")
    return section


def _reject_unknown(section: dict, known: tuple[str, ...], where: str) -> None:
    unknown = sorted(set(section) - set(known))
    if unknown:
        raise ConfigError(f"unknown {where} key(s): {', '.join(unknown)}")


def _get_pair(section: dict, key: str, default: tuple, where: str) -> tuple:
    value = section.get(key)
    if value is None:
        return default
    if not isinstance(value, list) or len(value) != 2:
        raise ConfigError(f"{where}.{key} must be a [lo, hi] pair, got {value!r}")
    return tuple(value)


def config_from_dict(data: dict) -> GeneratorConfig:
    """Build a configuration from its JSON form.

    Absent fields take their defaults; ``environment`` is required. Unknown
    keys are rejected so typos do not silently fall back to defaults.
    """
    if not isinstance(data, dict):
        raise ConfigError(f"config document must be an object, got {data!r}")
    _reject_unknown(
        data,
        (
            "environment", "horizon", "num_datacenters", "seed", "arrival",
            "service_shape", "sizing", "vertical_policy", "horizontal_policy",
            "utilization_policy", "guarantee_dynamics",
        ),
        "config",
    )
    env_value = data.get("environment")
    if env_value is None:
        raise ConfigError("config is missing required key 'environment'")
    if not isinstance(env_value, list) or len(env_value) != 2 or not all(isinstance(v, int) and not isinstance(v, bool) for v in env_value):
        raise ConfigError(f"environment must be a pair [elasticity, overbooking], got {env_value!r}")
    try:
        environment = env_from_coords(env_value[0], env_value[1])
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None

    arrival_data = _take_section(data, "arrival")
    _reject_unknown(arrival_data, ("rate", "force_first", "burst"), "arrival")
    shape_data = _take_section(data, "service_shape")
    _reject_unknown(shape_data, ("vms_per_dc", "lifetime"), "service_shape")
    sizing_data = _take_section(data, "sizing")
    _reject_unknown(sizing_data, ("vcpu", "vram", "vnet", "revenue", "sla"), "sizing")
    vertical_data = _take_section(data, "vertical_policy")
    _reject_unknown(vertical_data, ("p_step", "magnitude", "vary_net", "precision"), "vertical_policy")
    horizontal_data = _take_section(data, "horizontal_policy")
    _reject_unknown(horizontal_data, ("p_scale", "min_vms", "max_vms"), "horizontal_policy")
    util_data = _take_section(data, "utilization_policy")
    _reject_unknown(util_data, ("cpu_step", "ram_step", "net_step", "allow_exceed_request"), "utilization_policy")

    defaults = GeneratorConfig(environment=environment)
    config = GeneratorConfig(
        environment=environment,
        horizon=data.get("horizon", defaults.horizon),
        num_datacenters=data.get("num_datacenters", defaults.num_datacenters),
        seed=data.get("seed", defaults.seed),
        arrival=ArrivalModel(
            rate=arrival_data.get("rate", defaults.arrival.rate),
            force_first=arrival_data.get("force_first", defaults.arrival.force_first),
            burst=arrival_data.get("burst", defaults.arrival.burst),
        ),
        service_shape=ServiceShape(
            vms_per_dc=_get_pair(shape_data, "vms_per_dc", defaults.service_shape.vms_per_dc, "service_shape"),
            lifetime=_get_pair(shape_data, "lifetime", defaults.service_shape.lifetime, "service_shape"),
        ),
        sizing=SizingRanges(
            vcpu=_get_pair(sizing_data, "vcpu", defaults.sizing.vcpu, "sizing"),
            vram=_get_pair(sizing_data, "vram", defaults.sizing.vram, "sizing"),
            vnet=_get_pair(sizing_data, "vnet", defaults.sizing.vnet, "sizing"),
            revenue=_get_pair(sizing_data, "revenue", defaults.sizing.revenue, "sizing"),
            sla=_get_pair(sizing_data, "sla", defaults.sizing.sla, "sizing"),
        ),
        vertical_policy=VerticalPolicy(
            p_step=vertical_data.get("p_step", defaults.vertical_policy.p_step),
            magnitude=_get_pair(vertical_data, "magnitude", defaults.vertical_policy.magnitude, "vertical_policy"),
            vary_net=vertical_data.get("vary_net", defaults.vertical_policy.vary_net),
            precision=vertical_data.get("precision", defaults.vertical_policy.precision),
        ),
        horizontal_policy=HorizontalPolicy(
            p_scale=horizontal_data.get("p_scale", defaults.horizontal_policy.p_scale),
            min_vms=horizontal_data.get("min_vms", defaults.horizontal_policy.min_vms),
            max_vms=horizontal_data.get("max_vms", defaults.horizontal_policy.max_vms),
        ),
        utilization_policy=UtilizationPolicy(
            cpu_step=_get_pair(util_data, "cpu_step", defaults.utilization_policy.cpu_step, "utilization_policy"),
            ram_step=_get_pair(util_data, "ram_step", defaults.utilization_policy.ram_step, "utilization_policy"),
            net_step=_get_pair(util_data, "net_step", defaults.utilization_policy.net_step, "utilization_policy"),
            allow_exceed_request=util_data.get("allow_exceed_request", defaults.utilization_policy.allow_exceed_request),
        ),
        guarantee_dynamics=data.get("guarantee_dynamics", defaults.guarantee_dynamics),
    )
    check_config(config)
    return config
