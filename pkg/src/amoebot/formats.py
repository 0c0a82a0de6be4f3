"""File formats: configuration (JSON), trace (JSON lines), metrics (JSON).

Every file starts with a versioned ``format`` tag.  Traces hold no wall
time, so equal runs give byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

from .geometry import Orientation
from .scheduler import Configuration, Trace, TraceEvent

CONFIG_FORMAT = "amoebot-config"
TRACE_FORMAT = "amoebot-trace"
METRICS_FORMAT = "amoebot-metrics"
VERSION = 1

PathLike = Union[str, Path]


class FormatError(ValueError):
    pass


def _check_header(doc: dict, fmt: str) -> None:
    if doc.get("format") != fmt:
        raise FormatError(f"expected format {fmt!r}, found {doc.get('format')!r}")
    if doc.get("version") != VERSION:
        raise FormatError(f"unsupported {fmt} version {doc.get('version')!r}")


# configuration


def config_to_dict(config: Configuration) -> dict:
    doc = {"format": CONFIG_FORMAT, "version": VERSION, "dim": config.dim, "nodes": [list(p) for p in config.nodes]}
    if config.orientations is not None:
        doc["orientations"] = [o.name for o in config.orientations]
    elif config.orientation_seed is not None:
        doc["orientations"] = {"randomize": config.orientation_seed}
    else:
        doc["orientations"] = "identity"
    return doc


def config_from_dict(doc: dict) -> Configuration:
    _check_header(doc, CONFIG_FORMAT)
    try:
        dim = int(doc["dim"])
        nodes = [tuple(int(c) for c in p) for p in doc["nodes"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed configuration: {exc}") from None
    entry = doc.get("orientations", "identity")
    if entry == "identity":
        return Configuration(dim, nodes)
    if isinstance(entry, dict) and "randomize" in entry:
        return Configuration(dim, nodes, None, int(entry["randomize"]))
    if isinstance(entry, list):
        return Configuration(dim, nodes, [Orientation.from_name(s) for s in entry])
    raise FormatError(f"bad orientations entry {entry!r}")


def dumps_config(config: Configuration) -> str:
    doc = config_to_dict(config)
    nodes = ",\n    ".join(json.dumps(p) for p in doc.pop("nodes"))
    orient = doc.pop("orientations")
    head = json.dumps(doc)[:-1]
    return f'{head},\n  "orientations": {json.dumps(orient)},\n  "nodes": [\n    {nodes}\n  ]\n}}\n'


def save_config(config: Configuration, path: PathLike) -> None:
    Path(path).write_text(dumps_config(config))


def load_config(path: PathLike) -> Configuration:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from None
    return config_from_dict(doc)


# trace


def event_to_dict(ev: TraceEvent) -> dict:
    return {
        "step": ev.step,
        "id": ev.amoebot,
        "action": ev.action,
        "rule": ev.rule,
        "round": ev.round,
        "ops": [list(op) for op in ev.ops],
    }


def event_from_dict(doc: dict) -> TraceEvent:
    return TraceEvent(doc["step"], doc["id"], doc["action"], doc["rule"], [tuple(op) for op in doc["ops"]], doc["round"])


def summary_of(trace: Trace) -> dict:
    m = trace.metrics()
    m.pop("wall_time")
    return {"summary": m, "violations": trace.violations}


def dumps_trace(trace: Trace) -> str:
    lines = [json.dumps(dict(trace.header, format=TRACE_FORMAT, version=VERSION), sort_keys=True)]
    lines.extend(json.dumps(event_to_dict(ev), separators=(",", ":")) for ev in trace.events)
    lines.append(json.dumps(summary_of(trace), sort_keys=True))
    return "\n".join(lines) + "\n"


def save_trace(trace: Trace, path: PathLike) -> None:
    Path(path).write_text(dumps_trace(trace))


def loads_trace(text: str) -> tuple[dict, list[TraceEvent], dict]:
    """(header, events, summary record); the summary is empty if absent."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FormatError("empty trace")
    header = json.loads(lines[0])
    _check_header(header, TRACE_FORMAT)
    events, summary = [], {}
    for ln in lines[1:]:
        doc = json.loads(ln)
        if "summary" in doc:
            summary = doc
        else:
            events.append(event_from_dict(doc))
    return header, events, summary


def load_trace(path: PathLike):
    return loads_trace(Path(path).read_text())


# metrics


def save_metrics(trace: Trace, path: PathLike, extra: dict | None = None) -> None:
    doc = {"format": METRICS_FORMAT, "version": VERSION}
    doc.update(trace.metrics())
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_metrics(path: PathLike) -> dict:
    doc = json.loads(Path(path).read_text())
    _check_header(doc, METRICS_FORMAT)
    return doc
