"""Core data model for workload traces.

A trace describes, tick by tick, the virtual machines that a set of cloud
services keeps in a set of datacenters. Every VM is identified by the triple
``(service_id, dc_id, vm_index)``: service ``b`` runs VM number ``j`` inside
datacenter ``c``. A VM is alive over a half-open tick interval
``[t_init, t_end)`` and carries one sample per alive tick (dense sampling).
Each sample pairs the requested resources (the spec the VM asks for) with the
resources it actually uses at that tick.

All resource quantities are exact decimals. Binary floats are rejected at
construction so that serialized documents round-trip byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum

from .environments import EnvironmentId
from .errors import ValidationError

MAX_SEED = 2**64 - 1


def as_quantity(value: int | str | Decimal) -> Decimal:
    """Convert a value to a non-negative, finite Decimal quantity.

    Accepts ints, decimal strings, and Decimals. Binary floats are rejected:
    they carry rounding error that would leak into serialized documents.
    """
    if isinstance(value, bool):
        raise ValidationError(f"quantity must be a number, got {value!r}")
    if isinstance(value, float):
        raise ValidationError(
            f"binary float quantity {value!r} is not exact; pass an int, a decimal "
            "string, or a Decimal"
        )
    if isinstance(value, int):
        value = Decimal(value)
    elif isinstance(value, str):
        try:
            value = Decimal(value)
        except ArithmeticError:
            raise ValidationError(f"invalid decimal quantity {value!r}") from None
    elif not isinstance(value, Decimal):
        raise ValidationError(f"quantity must be a number, got {value!r}")
    if not value.is_finite():
        raise ValidationError(f"quantity must be finite, got {value}")
    if value < 0:
        raise ValidationError(f"quantity must be >= 0, got {value}")
    return value if value != 0 else Decimal(0)


def quantity_text(value: Decimal) -> str:
    """Canonical decimal rendering: shortest exact form, no exponent.

    Trailing fractional zeros are dropped and integers render without a
    fractional part, so ``Decimal("12.50")`` becomes ``"12.5"`` and
    ``Decimal("100")`` stays ``"100"``.
    """
    if not value.is_finite():
        raise ValidationError(f"cannot render non-finite quantity {value}")
    normalized = value.normalize()
    if normalized.as_tuple().exponent > 0:
        # normalize() rewrites 100 as 1E+2; expand it back to plain digits
        normalized = normalized.quantize(Decimal(1))
    return format(normalized, "f")


@dataclass(frozen=True)
class ResourceSpec:
    """Resources a VM requests: CPU, memory, and network bandwidth."""

    vcpu: Decimal
    vram: Decimal
    vnet: Decimal

    def __post_init__(self):
        object.__setattr__(self, "vcpu", as_quantity(self.vcpu))
        object.__setattr__(self, "vram", as_quantity(self.vram))
        object.__setattr__(self, "vnet", as_quantity(self.vnet))


@dataclass(frozen=True)
class UtilizationSample:
    """Resources a VM actually uses at one tick."""

    ucpu: Decimal
    uram: Decimal
    unet: Decimal

    def __post_init__(self):
        object.__setattr__(self, "ucpu", as_quantity(self.ucpu))
        object.__setattr__(self, "uram", as_quantity(self.uram))
        object.__setattr__(self, "unet", as_quantity(self.unet))


def full_utilization(spec: ResourceSpec) -> UtilizationSample:
    """Utilization equal to the request, the rule when overbooking is disabled."""
    return UtilizationSample(ucpu=spec.vcpu, uram=spec.vram, unet=spec.vnet)


def _check_id(name: str, value: int) -> None:
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ValidationError(f"{name} must be an integer >= 1, got {value!r}")


def _check_tick(name: str, value: int, minimum: int = 0) -> None:
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise ValidationError(f"{name} must be an integer >= {minimum}, got {value!r}")


@dataclass(frozen=True)
class VmDescriptor:
    """Identity and constants of one VM.

    The lifetime is half-open: the VM is alive at ticks t with
    ``t_init <= t < t_end``.
    """

    service_id: int
    dc_id: int
    vm_index: int
    revenue: Decimal
    sla: int
    t_init: int
    t_end: int

    def __post_init__(self):
        _check_id("service_id", self.service_id)
        _check_id("dc_id", self.dc_id)
        _check_id("vm_index", self.vm_index)
        object.__setattr__(self, "revenue", as_quantity(self.revenue))
        _check_id("sla", self.sla)
        _check_tick("t_init", self.t_init)
        _check_tick("t_end", self.t_end)
        if self.t_init >= self.t_end:
            raise ValidationError(
                f"VM ({self.service_id},{self.dc_id},{self.vm_index}): t_init "
                f"{self.t_init} must be < t_end {self.t_end}"
            )

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.service_id, self.dc_id, self.vm_index)

    def alive_at(self, t: int) -> bool:
        return self.t_init <= t < self.t_end


@dataclass(frozen=True)
class VmSample:
    """One VM's requested and used resources at one tick."""

    service_id: int
    dc_id: int
    vm_index: int
    t: int
    spec: ResourceSpec
    util: UtilizationSample

    def __post_init__(self):
        _check_id("service_id", self.service_id)
        _check_id("dc_id", self.dc_id)
        _check_id("vm_index", self.vm_index)
        _check_tick("t", self.t)
        if not isinstance(self.spec, ResourceSpec):
            raise ValidationError(f"spec must be a ResourceSpec, got {self.spec!r}")
        if not isinstance(self.util, UtilizationSample):
            raise ValidationError(f"util must be a UtilizationSample, got {self.util!r}")

    @property
    def vm_key(self) -> tuple[int, int, int]:
        return (self.service_id, self.dc_id, self.vm_index)

    @property
    def sort_key(self) -> tuple[int, int, int, int]:
        return (self.t, self.service_id, self.dc_id, self.vm_index)


class EventKind(Enum):
    """Lifecycle events. The definition order is the canonical same-tick order."""

    SERVICE_ARRIVAL = "service_arrival"
    SERVICE_DEPARTURE = "service_departure"
    VM_SCALE_OUT = "vm_scale_out"
    VM_SCALE_IN = "vm_scale_in"

    @property
    def order(self) -> int:
        return _EVENT_ORDER[self]

    @property
    def is_scale(self) -> bool:
        return self in (EventKind.VM_SCALE_OUT, EventKind.VM_SCALE_IN)


_EVENT_ORDER = {kind: i for i, kind in enumerate(EventKind)}


@dataclass(frozen=True)
class TraceEvent:
    """A service arrival or departure, or a VM scale-out or scale-in.

    Service-level events carry only the service id; scale events also name
    the datacenter and VM index involved.
    """

    t: int
    kind: EventKind
    service_id: int
    dc_id: int | None = None
    vm_index: int | None = None

    def __post_init__(self):
        _check_tick("t", self.t)
        if not isinstance(self.kind, EventKind):
            raise ValidationError(f"kind must be an EventKind, got {self.kind!r}")
        _check_id("service_id", self.service_id)
        if self.kind.is_scale:
            if self.dc_id is None or self.vm_index is None:
                raise ValidationError(f"{self.kind.value} event requires dc_id and vm_index")
            _check_id("dc_id", self.dc_id)
            _check_id("vm_index", self.vm_index)
        elif self.dc_id is not None or self.vm_index is not None:
            raise ValidationError(f"{self.kind.value} event must not carry dc_id or vm_index")

    @property
    def sort_key(self) -> tuple[int, int, int, int, int]:
        return (self.t, self.kind.order, self.service_id, self.dc_id or 0, self.vm_index or 0)


@dataclass(frozen=True)
class TraceHeader:
    """Document-level facts: environment, horizon, datacenter count, SLA range.

    ``sla_levels`` is the highest SLA priority level a VM may carry. ``seed``
    and ``config_digest`` are present on generated traces and record how the
    trace was produced.
    """

    environment: EnvironmentId
    horizon: int
    num_datacenters: int
    sla_levels: int = 1
    seed: int | None = None
    config_digest: str | None = None

    def __post_init__(self):
        if not isinstance(self.environment, EnvironmentId):
            raise ValidationError(f"environment must be an EnvironmentId, got {self.environment!r}")
        _check_tick("horizon", self.horizon)
        _check_id("num_datacenters", self.num_datacenters)
        _check_id("sla_levels", self.sla_levels)
        if self.seed is not None:
            if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed <= MAX_SEED:
                raise ValidationError(f"seed must be an integer in [0, 2**64), got {self.seed!r}")
        if self.config_digest is not None:
            digest = self.config_digest
            if not (isinstance(digest, str) and len(digest) == 64 and all(ch in "0123456789abcdef" for ch in digest)):
                raise ValidationError("config_digest must be a 64-character lowercase hex string")


@dataclass(frozen=True)
class Trace:
    """A full workload trace: header, VM descriptors, events, samples.

    Construction checks local invariants (field ranges, unique VM identities)
    but not cross-object structure; deep structural checks such as dense
    sampling live in the analysis layer so that broken documents can still be
    represented and reported on. Instances are immutable and safe to share
    across threads.
    """

    header: TraceHeader
    descriptors: tuple[VmDescriptor, ...] = ()
    events: tuple[TraceEvent, ...] = ()
    samples: tuple[VmSample, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "descriptors", tuple(self.descriptors))
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "samples", tuple(self.samples))
        seen: set[tuple[int, int, int]] = set()
        for desc in self.descriptors:
            if desc.key in seen:
                raise ValidationError(f"duplicate VM identity {desc.key}")
            seen.add(desc.key)

    def descriptor_map(self) -> dict[tuple[int, int, int], VmDescriptor]:
        return {desc.key: desc for desc in self.descriptors}

    def service_ids(self) -> tuple[int, ...]:
        return tuple(sorted({desc.service_id for desc in self.descriptors}))


def dc_population(trace: Trace, dc_id: int, t: int) -> list[tuple[int, int]]:
    """VMs alive in one datacenter at one tick, as sorted (service_id, vm_index) pairs.

    A datacenter with no alive VMs (or an id the trace never uses) yields an
    empty list. Ticks outside ``[0, horizon)`` are a caller error.
    """
    _check_population_tick(trace, t)
    pairs = [
        (desc.service_id, desc.vm_index)
        for desc in trace.descriptors
        if desc.dc_id == dc_id and desc.alive_at(t)
    ]
    pairs.sort()
    return pairs


def service_vm_count(trace: Trace, service_id: int, t: int) -> int:
    """Number of VMs a service keeps across all datacenters at one tick.

    Unknown services count zero. Ticks outside ``[0, horizon)`` are a caller
    error.
    """
    _check_population_tick(trace, t)
    return sum(1 for desc in trace.descriptors if desc.service_id == service_id and desc.alive_at(t))


def _check_population_tick(trace: Trace, t: int) -> None:
    if not isinstance(t, int) or isinstance(t, bool) or not 0 <= t < trace.header.horizon:
        raise ValidationError(
            f"tick {t!r} out of range [0, {trace.header.horizon}) for this trace"
        )
