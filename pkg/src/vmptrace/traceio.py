"""Line-oriented trace serialization: canonical, byte-exact, reversible.

A trace document is UTF-8 text, one JSON object per line, LF-terminated:
first exactly one header line, then event lines, then sample lines, each
tagged with a ``"type"`` discriminator. Writing always emits the canonical
form: fixed key order, compact separators, events sorted by (t, kind,
service, dc, vm), samples by (t, service, dc, vm), and every number in its
shortest exact decimal spelling. Reading is tolerant of event/sample line
order and canonicalizes, so write(read(d)) == d for canonical documents and
read(write(x)) == x for every valid trace.

Sample lines carry each VM's revenue and SLA level; descriptors are
reconstructed from the sample extent cross-checked against the lifecycle
events, so a document needs no separate descriptor lines.
"""

from __future__ import annotations

import json
from decimal import Decimal

from .environments import env_from_coords
from .errors import FormatError, IntegrityError, ParseError, TraceIOError, ValidationError
from .model import (
    EventKind,
    ResourceSpec,
    Trace,
    TraceEvent,
    TraceHeader,
    UtilizationSample,
    VmSample,
    VmDescriptor,
    quantity_text,
)

FORMAT_VERSION = 1
FILE_EXTENSION = ".vmpt.jsonl"

CSV_COLUMNS = ("t", "service", "dc", "vm", "vcpu", "vram", "vnet", "ucpu", "uram", "unet", "revenue", "sla")

_HEADER_KEYS = ("type", "format_version", "environment", "horizon", "num_datacenters", "sla_levels", "seed", "config_digest")
_EVENT_KEYS = ("type", "t", "kind", "service", "dc", "vm")
_SAMPLE_KEYS = ("type", "t", "service", "dc", "vm", "vcpu", "vram", "vnet", "ucpu", "uram", "unet", "revenue", "sla")


def canonicalize(trace: Trace) -> Trace:
    """Sort events and samples into canonical order (stable for equal keys)."""
    return Trace(
        header=trace.header,
        descriptors=tuple(sorted(trace.descriptors, key=lambda d: d.key)),
        events=tuple(sorted(trace.events, key=lambda e: e.sort_key)),
        samples=tuple(sorted(trace.samples, key=lambda s: s.sort_key)),
    )


def _header_line(header: TraceHeader) -> str:
    parts = [
        '"type":"header"',
        f'"format_version":{FORMAT_VERSION}',
        f'"environment":[{header.environment.elasticity},{header.environment.overbooking}]',
        f'"horizon":{header.horizon}',
        f'"num_datacenters":{header.num_datacenters}',
        f'"sla_levels":{header.sla_levels}',
    ]
    if header.seed is not None:
        parts.append(f'"seed":{header.seed}')
    if header.config_digest is not None:
        parts.append(f'"config_digest":{json.dumps(header.config_digest)}')
    return "{" + ",".join(parts) + "}"


def _event_line(event: TraceEvent) -> str:
    parts = [
        '"type":"event"',
        f'"t":{event.t}',
        f'"kind":{json.dumps(event.kind.value)}',
        f'"service":{event.service_id}',
    ]
    if event.kind.is_scale:
        parts.append(f'"dc":{event.dc_id}')
        parts.append(f'"vm":{event.vm_index}')
    return "{" + ",".join(parts) + "}"


def _sample_line(sample: VmSample, descriptor: VmDescriptor) -> str:
    spec, util = sample.spec, sample.util
    parts = [
        '"type":"sample"',
        f'"t":{sample.t}',
        f'"service":{sample.service_id}',
        f'"dc":{sample.dc_id}',
        f'"vm":{sample.vm_index}',
        f'"vcpu":{quantity_text(spec.vcpu)}',
        f'"vram":{quantity_text(spec.vram)}',
        f'"vnet":{quantity_text(spec.vnet)}',
        f'"ucpu":{quantity_text(util.ucpu)}',
        f'"uram":{quantity_text(util.uram)}',
        f'"unet":{quantity_text(util.unet)}',
        f'"revenue":{quantity_text(descriptor.revenue)}',
        f'"sla":{descriptor.sla}',
    ]
    return "{" + ",".join(parts) + "}"


def trace_to_lines(trace: Trace) -> list[str]:
    """Canonical document lines, without line terminators."""
    canonical = canonicalize(trace)
    by_key = canonical.descriptor_map()
    lines = [_header_line(canonical.header)]
    lines.extend(_event_line(event) for event in canonical.events)
    for sample in canonical.samples:
        descriptor = by_key.get(sample.vm_key)
        if descriptor is None:
            raise ValidationError(f"sample references unknown VM {sample.vm_key}")
        lines.append(_sample_line(sample, descriptor))
    return lines


def trace_to_bytes(trace: Trace) -> bytes:
    return "".join(line + "\n" for line in trace_to_lines(trace)).encode("utf-8")


def write_trace(trace: Trace, sink) -> int:
    """Write the canonical document to a binary sink; returns bytes written."""
    written = 0
    for line in trace_to_lines(trace):
        data = (line + "\n").encode("utf-8")
        try:
            sink.write(data)
        except OSError as exc:
            raise TraceIOError(f"write failed: {exc}", byte_offset=written) from exc
        written += len(data)
    return written


def write_trace_file(trace: Trace, path) -> int:
    try:
        with open(path, "wb") as sink:
            return write_trace(trace, sink)
    except OSError as exc:
        raise TraceIOError(f"cannot write {path}: {exc}") from exc


def _load_line(line: str, line_number: int) -> dict:
    try:
        value = json.loads(line, parse_float=Decimal)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON ({exc.msg})", line_number) from None
    if not isinstance(value, dict):
        raise ParseError(f"expected a JSON object, got {type(value).__name__}", line_number)
    return value


def _field_int(obj: dict, key: str, line_number: int) -> int:
    value = obj.get(key)
    if not isinstance(value, int) or isinstance(value, bool):
        raise ParseError(f"field {key!r} must be an integer, got {value!r}", line_number)
    return value


def _field_quantity(obj: dict, key: str, line_number: int) -> Decimal | int:
    value = obj.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, Decimal)):
        raise ParseError(f"field {key!r} must be a number, got {value!r}", line_number)
    return value


def _check_keys(obj: dict, allowed: tuple[str, ...], required: tuple[str, ...], line_number: int) -> None:
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ParseError(f"unknown field(s): {', '.join(unknown)}", line_number)
    missing = sorted(set(required) - set(obj))
    if missing:
        raise ParseError(f"missing field(s): {', '.join(missing)}", line_number)


def _parse_header(obj: dict, line_number: int) -> TraceHeader:
    required = ("type", "format_version", "environment", "horizon", "num_datacenters", "sla_levels")
    _check_keys(obj, _HEADER_KEYS, required, line_number)
    version = _field_int(obj, "format_version", line_number)
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported format_version {version}; this reader handles {FORMAT_VERSION}", line_number)
    env_value = obj["environment"]
    if not isinstance(env_value, list) or len(env_value) != 2:
        raise ParseError(f"environment must be a [elasticity, overbooking] pair, got {env_value!r}", line_number)
    try:
        environment = env_from_coords(env_value[0], env_value[1])
        return TraceHeader(
            environment=environment,
            horizon=_field_int(obj, "horizon", line_number),
            num_datacenters=_field_int(obj, "num_datacenters", line_number),
            sla_levels=_field_int(obj, "sla_levels", line_number),
            seed=_field_int(obj, "seed", line_number) if "seed" in obj else None,
            config_digest=obj.get("config_digest"),
        )
    except ValidationError as exc:
        raise ParseError(str(exc), line_number) from None


def _parse_event(obj: dict, line_number: int) -> TraceEvent:
    kind_value = obj.get("kind")
    try:
        kind = EventKind(kind_value)
    except ValueError:
        known = ", ".join(k.value for k in EventKind)
        raise ParseError(f"unknown event kind {kind_value!r}; expected one of: {known}", line_number) from None
    required = ("type", "t", "kind", "service") + (("dc", "vm") if kind.is_scale else ())
    _check_keys(obj, required, required, line_number)
    try:
        return TraceEvent(
            t=_field_int(obj, "t", line_number),
            kind=kind,
            service_id=_field_int(obj, "service", line_number),
            dc_id=_field_int(obj, "dc", line_number) if kind.is_scale else None,
            vm_index=_field_int(obj, "vm", line_number) if kind.is_scale else None,
        )
    except ValidationError as exc:
        raise ParseError(str(exc), line_number) from None


def _parse_sample(obj: dict, line_number: int) -> tuple[VmSample, Decimal | int, int]:
    _check_keys(obj, _SAMPLE_KEYS, _SAMPLE_KEYS, line_number)
    try:
        sample = VmSample(
            service_id=_field_int(obj, "service", line_number),
            dc_id=_field_int(obj, "dc", line_number),
            vm_index=_field_int(obj, "vm", line_number),
            t=_field_int(obj, "t", line_number),
            spec=ResourceSpec(
                vcpu=_field_quantity(obj, "vcpu", line_number),
                vram=_field_quantity(obj, "vram", line_number),
                vnet=_field_quantity(obj, "vnet", line_number),
            ),
            util=UtilizationSample(
                ucpu=_field_quantity(obj, "ucpu", line_number),
                uram=_field_quantity(obj, "uram", line_number),
                unet=_field_quantity(obj, "unet", line_number),
            ),
        )
        revenue = _field_quantity(obj, "revenue", line_number)
        sla = _field_int(obj, "sla", line_number)
    except ValidationError as exc:
        raise ParseError(str(exc), line_number) from None
    return sample, revenue, sla


def _source_text(source) -> str:
    if isinstance(source, bytes):
        data = source
    elif isinstance(source, str):
        return source
    else:
        try:
            data = source.read()
        except OSError as exc:
            raise TraceIOError(f"read failed: {exc}") from exc
        if isinstance(data, str):
            return data
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"document is not valid UTF-8: {exc}") from None


def read_trace(source) -> Trace:
    """Parse a trace document from bytes, text, or a file-like object.

    The header must be the first line; event and sample lines may follow in
    any order. Contradictions between samples and lifecycle events (samples
    at or past a VM's end, inconsistent revenue or SLA within one VM,
    duplicate lifecycle events) raise IntegrityError.
    """
    text = _source_text(source)
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise FormatError("empty document: expected a header line")

    if lines[0] == "":
        raise ParseError("blank line", 1)
    first = _load_line(lines[0], 1)
    if first.get("type") != "header":
        raise FormatError(f"first line must be the header, got type {first.get('type')!r}")
    header = _parse_header(first, 1)

    events: list[TraceEvent] = []
    samples: dict[tuple[int, int, int, int], tuple[VmSample, Decimal | int, int]] = {}
    for index, line in enumerate(lines[1:], start=2):
        if line == "":
            raise ParseError("blank line", index)
        obj = _load_line(line, index)
        line_type = obj.get("type")
        if line_type == "header":
            raise ParseError("duplicate header line", index)
        if line_type == "event":
            events.append(_parse_event(obj, index))
        elif line_type == "sample":
            sample, revenue, sla = _parse_sample(obj, index)
            key = (sample.t, sample.service_id, sample.dc_id, sample.vm_index)
            if key in samples:
                raise IntegrityError(
                    f"duplicate sample for VM {sample.vm_key} at t={sample.t} (line {index})"
                )
            samples[key] = (sample, revenue, sla)
        else:
            raise ParseError(f"unknown line type {line_type!r}", index)

    descriptors = _reconstruct_descriptors(events, samples)
    trace = Trace(
        header=header,
        descriptors=tuple(descriptors),
        events=tuple(events),
        samples=tuple(entry[0] for entry in samples.values()),
    )
    return canonicalize(trace)


def _unique_event_map(events: list[TraceEvent], kind: EventKind, label: str) -> dict:
    mapping: dict = {}
    for event in events:
        if event.kind is not kind:
            continue
        key = event.service_id if not kind.is_scale else (event.service_id, event.dc_id, event.vm_index)
        if key in mapping:
            raise IntegrityError(f"multiple {label} events for {key}")
        mapping[key] = event.t
    return mapping


def _reconstruct_descriptors(
    events: list[TraceEvent],
    samples: dict[tuple[int, int, int, int], tuple[VmSample, Decimal | int, int]],
) -> list[VmDescriptor]:
    arrivals = _unique_event_map(events, EventKind.SERVICE_ARRIVAL, "arrival")
    departures = _unique_event_map(events, EventKind.SERVICE_DEPARTURE, "departure")
    scale_outs = _unique_event_map(events, EventKind.VM_SCALE_OUT, "scale-out")
    scale_ins = _unique_event_map(events, EventKind.VM_SCALE_IN, "scale-in")

    by_vm: dict[tuple[int, int, int], list[tuple[VmSample, Decimal | int, int]]] = {}
    for sample, revenue, sla in samples.values():
        by_vm.setdefault(sample.vm_key, []).append((sample, revenue, sla))

    descriptors = []
    for key in sorted(by_vm):
        entries = by_vm[key]
        revenues = {quantity_text(Decimal(r)) if isinstance(r, int) else quantity_text(r) for _, r, _ in entries}
        slas = {sla for _, _, sla in entries}
        if len(revenues) > 1:
            raise IntegrityError(f"VM {key} has inconsistent revenue values: {sorted(revenues)}")
        if len(slas) > 1:
            raise IntegrityError(f"VM {key} has inconsistent sla values: {sorted(slas)}")
        ticks = sorted(entry[0].t for entry in entries)
        service_id = key[0]
        t_init = scale_outs.get(key, arrivals.get(service_id, ticks[0]))
        t_end = scale_ins.get(key, departures.get(service_id, ticks[-1] + 1))
        if ticks[0] < t_init:
            raise IntegrityError(f"VM {key} has a sample at t={ticks[0]} before its start at t={t_init}")
        if ticks[-1] >= t_end:
            raise IntegrityError(f"VM {key} has a sample at t={ticks[-1]} at or past its end at t={t_end}")
        try:
            descriptors.append(
                VmDescriptor(
                    service_id=service_id,
                    dc_id=key[1],
                    vm_index=key[2],
                    revenue=entries[0][1],
                    sla=entries[0][2],
                    t_init=t_init,
                    t_end=t_end,
                )
            )
        except ValidationError as exc:
            raise IntegrityError(f"VM {key}: {exc}") from None
    return descriptors


def read_trace_file(path) -> Trace:
    try:
        with open(path, "rb") as source:
            return read_trace(source.read())
    except OSError as exc:
        raise TraceIOError(f"cannot read {path}: {exc}") from exc


def trace_to_csv_text(trace: Trace) -> str:
    """Lossy spreadsheet export: canonical sample rows only, no header or
    event information."""
    canonical = canonicalize(trace)
    by_key = canonical.descriptor_map()
    rows = [",".join(CSV_COLUMNS)]
    for sample in canonical.samples:
        descriptor = by_key.get(sample.vm_key)
        if descriptor is None:
            raise ValidationError(f"sample references unknown VM {sample.vm_key}")
        rows.append(
            ",".join(
                (
                    str(sample.t),
                    str(sample.service_id),
                    str(sample.dc_id),
                    str(sample.vm_index),
                    quantity_text(sample.spec.vcpu),
                    quantity_text(sample.spec.vram),
                    quantity_text(sample.spec.vnet),
                    quantity_text(sample.util.ucpu),
                    quantity_text(sample.util.uram),
                    quantity_text(sample.util.unet),
                    quantity_text(descriptor.revenue),
                    str(descriptor.sla),
                )
            )
        )
    return "\n".join(rows) + "\n"


def dump_json(value, indent: int | None = None) -> str:
    """Deterministic JSON text for report and stats documents.

    Dict keys keep insertion order; Decimals render exactly with their
    stored precision (so a ratio quantized to 4 places keeps 4 places).
    """
    pieces: list[str] = []
    _dump_json_into(value, indent, 0, pieces)
    return "".join(pieces)


def _dump_json_into(value, indent: int | None, depth: int, pieces: list[str]) -> None:
    if isinstance(value, dict):
        _dump_container(value.items(), "{", "}", indent, depth, pieces, keyed=True)
    elif isinstance(value, (list, tuple)):
        _dump_container(value, "[", "]", indent, depth, pieces, keyed=False)
    elif isinstance(value, str):
        pieces.append(json.dumps(value))
    elif isinstance(value, bool) or value is None:
        pieces.append(json.dumps(value))
    elif isinstance(value, int):
        pieces.append(str(value))
    elif isinstance(value, Decimal):
        pieces.append(format(value, "f"))
    else:
        raise FormatError(f"cannot serialize {type(value).__name__} to JSON")


def _dump_container(items, open_ch: str, close_ch: str, indent, depth, pieces, *, keyed: bool) -> None:
    items = list(items)
    if not items:
        pieces.append(open_ch + close_ch)
        return
    if indent is None:
        joiner, prefix, suffix = ",", "", ""
    else:
        pad = " " * (indent * (depth + 1))
        joiner = ",\n" + pad
        prefix = "\n" + pad
        suffix = "\n" + " " * (indent * depth)
    pieces.append(open_ch + prefix)
    for position, item in enumerate(items):
        if position:
            pieces.append(joiner)
        if keyed:
            key, entry = item
            if not isinstance(key, str):
                raise FormatError(f"JSON object keys must be strings, got {key!r}")
            pieces.append(json.dumps(key) + ":" + ("" if indent is None else " "))
            _dump_json_into(entry, indent, depth + 1, pieces)
        else:
            _dump_json_into(item, indent, depth + 1, pieces)
    pieces.append(suffix + close_ch)
