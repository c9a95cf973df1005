#  Copyright (c) modcs contributors.

"""
NDJSON trace of solver calls, Monte Carlo trials, dynamic frames and reports.

Tracing is off until :func:`init` is called with a folder (or ``MODCS_TRACE``
is set); while off, ``trace_structured`` is a cheap no-op.
"""

import atexit
import json
import logging
import math
import os
from collections.abc import Mapping
from dataclasses import fields, is_dataclass
from datetime import date, datetime
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from .shared_vars import DEFAULT_TRACE_FILE_PREFIX, MODCS_DEBUG, MODCS_TRACE


log = logging.getLogger("modcs")

modcs_trace_log = logging.getLogger("modcs_trace")
# The folder to store the trace log.
modcs_trace_folder = MODCS_TRACE

MODCS_TRACE_HANDLER = None


class ModcsLogRecord(logging.LogRecord):
    """LogRecord carrying a structured ``metadata`` dict."""

    def __init__(self, name, level, pathname, lineno, msg, args, exc_info, **kwargs):
        metadata = kwargs.pop("metadata", None)
        super().__init__(name, level, pathname, lineno, msg, args, exc_info, **kwargs)
        self.metadata: Dict[str, Any] = metadata or {}


def convert(obj):
    """
    Recursively convert ``obj`` to something ``json.dumps`` accepts.

    numpy scalars and arrays, dataclasses, enums, sets, paths and dates are
    handled; non-finite floats become strings.
    """
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj

    if isinstance(obj, float):
        # JSON has no NaN/Infinity
        if math.isfinite(obj):
            return obj
        return str(obj)

    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return convert(float(obj))
    if isinstance(obj, np.ndarray):
        return convert(obj.tolist())

    if isinstance(obj, (list, tuple)):
        if hasattr(obj, "_asdict"):
            return convert(obj._asdict())
        return [convert(x) for x in obj]

    if isinstance(obj, (set, frozenset)):
        return [convert(x) for x in sorted(obj, key=str)]

    if isinstance(obj, Mapping):
        return {str(k): convert(v) for k, v in obj.items()}

    if isinstance(obj, (datetime, date)):
        return obj.isoformat()

    if isinstance(obj, Enum):
        return convert(obj.value)

    if isinstance(obj, Path):
        return str(obj)

    if hasattr(obj, "to_dict"):
        return convert(obj.to_dict())

    if is_dataclass(obj):
        # shallow field walk: asdict() would deep-copy large arrays
        return {f.name: convert(getattr(obj, f.name)) for f in fields(obj)}

    log.warning(f"Unknown type: {type(obj)}")
    return str(obj)


def maybe_enable_debug_logging(force: bool = False):
    """Switch the package logger to DEBUG when MODCS_DEBUG (or ``force``) is set."""
    if not (MODCS_DEBUG or force):
        return
    log.setLevel(logging.DEBUG)
    log.propagate = False
    has_debug_handler = any(
        isinstance(handler, logging.StreamHandler) and handler.level <= logging.DEBUG
        for handler in log.handlers
    )
    if not has_debug_handler:
        log_handler = logging.StreamHandler()
        log_handler.setLevel(logging.DEBUG)
        formatter = logging.Formatter("%(asctime)s[%(levelname)s] %(message)s")
        formatter.default_time_format = "%Y%m%d %H:%M:%S"
        formatter.default_msec_format = None
        log_handler.setFormatter(formatter)
        log.addHandler(log_handler)


class ModcsJsonFormatter(logging.Formatter):
    """Format trace records as one JSON object per line."""

    def format(self, record: logging.LogRecord):
        log_entry = dict(getattr(record, "metadata", {}))
        log_entry["timestamp"] = self.formatTime(record, "%Y-%m-%dT%H:%M:%S")
        json_str = json.dumps(convert(log_entry), separators=(",", ":"))
        return json_str + "\n"


class ModcsTraceHandler(logging.StreamHandler):
    """Append NDJSON records to ``<root_dir>/<prefix>.ndjson``."""

    def __init__(
        self, root_dir: Optional[str] = None, prefix=DEFAULT_TRACE_FILE_PREFIX
    ):
        logging.Handler.__init__(self)
        self.root_dir = root_dir
        self.prefix = prefix
        self.stream = None
        # close the file stream even if the program is interrupted
        atexit.register(self._cleanup)

    @property
    def log_file_name(self) -> Optional[str]:
        if self.root_dir is None:
            return None
        return os.path.abspath(os.path.join(self.root_dir, f"{self.prefix}.ndjson"))

    def emit(self, record):
        try:
            if self.stream is None:
                if self.root_dir is None:
                    modcs_trace_log.removeHandler(self)
                    return
                os.makedirs(self.root_dir, exist_ok=True)
                self.stream = open(self.log_file_name, mode="a+")
                log.debug("ModcsTraceHandler: logging to %s", self.log_file_name)
            self.stream.write(self.format(record))
            self.flush()
        except Exception as e:
            log.error(f"Error in ModcsTraceHandler.emit: {e}")
            self._ensure_stream_closed()
            self.handleError(record)

    def close(self):
        self.acquire()
        try:
            try:
                self._ensure_stream_closed()
            finally:
                logging.StreamHandler.close(self)
        finally:
            self.release()

    def _cleanup(self):
        if self.stream is not None:
            self.close()

    def _ensure_stream_closed(self):
        if self.stream is not None:
            try:
                self.flush()
            finally:
                self.stream.close()
                self.stream = None


def init_logs():
    """
    Attach or detach the trace handler depending on ``modcs_trace_folder``.

    With no folder the trace logger keeps no handler and does not propagate, so
    nothing reaches the root logger.
    """
    global MODCS_TRACE_HANDLER

    modcs_trace_log.setLevel(logging.DEBUG)
    modcs_trace_log.propagate = False
    if MODCS_TRACE_HANDLER is None:
        MODCS_TRACE_HANDLER = ModcsTraceHandler(modcs_trace_folder)
    if MODCS_TRACE_HANDLER.root_dir is None and modcs_trace_folder is not None:
        MODCS_TRACE_HANDLER.root_dir = modcs_trace_folder
    if MODCS_TRACE_HANDLER.root_dir is None:
        if MODCS_TRACE_HANDLER in modcs_trace_log.handlers:
            modcs_trace_log.removeHandler(MODCS_TRACE_HANDLER)
        return
    if MODCS_TRACE_HANDLER not in modcs_trace_log.handlers:
        MODCS_TRACE_HANDLER.setFormatter(ModcsJsonFormatter())
        modcs_trace_log.addHandler(MODCS_TRACE_HANDLER)


def init(trace_folder: Optional[str] = None, verbose: bool = False):
    """
    Enable the structured trace.

    Args:
        trace_folder: Folder for the NDJSON file. Overrides MODCS_TRACE.
        verbose: Also switch the package logger to DEBUG.
    """
    global modcs_trace_folder
    maybe_enable_debug_logging(force=verbose)
    if modcs_trace_folder is not None and trace_folder is not None:
        log.info(
            "Conflict settings: trace folder is already set to %s, "
            "using provided trace_folder (%s) instead.",
            modcs_trace_folder,
            trace_folder,
        )
    if trace_folder is not None:
        modcs_trace_folder = trace_folder
    init_logs()


def tracing_enabled() -> bool:
    return bool(modcs_trace_log.handlers)


def trace_structured(
    name: str, metadata_fn: Optional[Callable[[], Dict[str, Any]]] = None
):
    """
    Record one trace event.

    Args:
        name: Event type (``solve``, ``trial``, ``frame``, ``report``).
        metadata_fn: Returns the event's fields. Only called when tracing is on.
    """
    if not tracing_enabled():
        return
    metadata: Dict[str, Any] = {"event_type": name, "pid": os.getpid()}
    if metadata_fn is not None:
        metadata.update(metadata_fn() or {})
    record = ModcsLogRecord(
        modcs_trace_log.name,
        logging.DEBUG,
        __file__,
        0,
        "",
        (),
        None,
        metadata=metadata,
    )
    modcs_trace_log.handle(record)


def load_trace(path: str) -> List[Dict[str, Any]]:
    """Read an NDJSON trace file back into a list of dicts."""
    events = []
    with open(path, "r") as f:
        for line in f:
            line = line.strip()
            if line:
                events.append(json.loads(line))
    return events


def clear_logging_config():
    """Detach the trace handler and forget the trace folder."""
    global MODCS_TRACE_HANDLER, modcs_trace_folder
    if MODCS_TRACE_HANDLER is not None:
        if MODCS_TRACE_HANDLER in modcs_trace_log.handlers:
            modcs_trace_log.removeHandler(MODCS_TRACE_HANDLER)
        MODCS_TRACE_HANDLER.close()
        MODCS_TRACE_HANDLER = None
    modcs_trace_folder = None
