"""Custom Logging Setup
"""
import io
import json
import socket
import sys
from typing import Any, Dict, Optional  # noqa

from twisted.logger import (
    formatEvent,
    formatEventAsClassicLogText,
    globalLogBeginner,
    globalLogPublisher,
    LogLevel,
    ILogObserver
)
from zope.interface import implementer

import polyseep

# A complete set of keys we don't include in Fields from a log event
IGNORED_KEYS = frozenset([
    "failure",
    "format",
    "isError",
    "log_failure",
    "log_format",
    "log_flattened",
    "log_level",
    "log_legacy",
    "log_logger",
    "log_namespace",
    "log_source",
    "log_system",
    "log_text",
    "log_time",
    "log_trace",
    "message",
    "severity",
    "time",
    "timestamp",
    "type",
    "why",
])

FIELD_TYPES = (str, list, tuple, int, float, bool)


# whether the global LogBeginner.beginLoggingTo has been called: it
# should only be called once
began_logging = False

hostname = None  # type: Optional[str]


def begin_or_register(observer, redirectStandardIO=False, **kwargs):
    # type: (Any, bool, **Any) -> None
    """Register observer with the global LogPublisher

    Registers via the global LogBeginner the first time called.
    """
    global began_logging
    if not began_logging:
        globalLogBeginner.beginLoggingTo(
            [observer],
            redirectStandardIO=redirectStandardIO,
            **kwargs
        )
        began_logging = True
    else:
        globalLogPublisher.addObserver(observer)


def to_fields(items):
    # type: (Any) -> Dict[str, Any]
    reply = dict()
    for k, v in items:
        if k not in IGNORED_KEYS and isinstance(v, FIELD_TYPES):
            reply[k] = list(v) if isinstance(v, tuple) else v
    return reply


@implementer(ILogObserver)
class SeepLogger(object):
    """Twisted LogObserver implementation

    Writes one json document (or a classic text line) per event to stdout,
    a file, or nowhere.

    """
    def __init__(self, logger_name, log_level="info", log_format="json",
                 log_output="stdout"):
        self.logger_name = "-".join([logger_name, polyseep.__version__])
        self._filename = None
        self.log_level = LogLevel.lookupByName(log_level)
        if log_output == "stdout":
            self._output = sys.stdout
        elif log_output == "stderr":
            self._output = sys.stderr
        elif log_output == "none":
            self._output = None
        else:
            self._filename = log_output
            self._output = None
        if log_format == "json":
            self.format_event = self.json_format
        else:
            self.format_event = formatEventAsClassicLogText

    def __call__(self, event):
        if event["log_level"] < self.log_level:
            return

        text = self.format_event(event)
        if text and self._output:
            self._output.write(text)
            self._output.flush()

    def json_format(self, event):
        error = bool(event.get("isError")) or "log_failure" in event
        ts = event["log_time"]

        if error:
            severity = 3
        elif event["log_level"] >= LogLevel.warn:
            severity = 4
        else:
            severity = 6

        msg = {
            "Hostname": hostname,
            "Timestamp": int(ts * 1000 * 1000 * 1000),
            "Type": "twisted:log",
            "Severity": event.get("severity") or severity,
            "EnvVersion": "2.0",
            "Fields": to_fields(event.items()),
            "Logger": self.logger_name,
        }
        # flatten diagnostics (condition numbers, residuals) into Fields
        diag = event.get("diagnostics")
        if diag and isinstance(diag, dict):
            msg["Fields"].update(to_fields(diag.items()))

        msg["Fields"]["message"] = formatEvent(event)
        return json.dumps(msg, skipkeys=True, default=str) + "\n"

    def start(self):
        if self._filename:
            self._output = io.open(self._filename, "a", encoding="utf-8")
        begin_or_register(self)

    def stop(self):
        globalLogPublisher.removeObserver(self)
        if self._filename and self._output:
            self._output.close()
            self._output = None

    @classmethod
    def setup_logging(cls, logger_name, log_level="info", log_format="json",
                      log_output="stdout"):
        # type: (str, str, str, str) -> SeepLogger
        global hostname
        if not hostname:
            hostname = socket.getfqdn()

        pl = cls(logger_name, log_level=log_level, log_format=log_format,
                 log_output=log_output)
        pl.start()
        return pl
