import json
import logging
import sys

TEXT_FORMAT = "[%(asctime)s] %(levelname)s %(name)s %(message)s"
# Solver context attached through ``extra=``; copied into JSON lines when present.
CONTEXT_KEYS = ("problem", "N", "k", "residual")


class JsonFormatter(logging.Formatter):
    """One JSON object per line: time, level, name, msg plus any solver context."""

    def format(self, record: logging.LogRecord) -> str:
        entry = {
            "time": self.formatTime(record),
            "level": record.levelname,
            "name": record.name,
            "msg": record.getMessage(),
        }
        for key in CONTEXT_KEYS:
            if key in record.__dict__:
                entry[key] = record.__dict__[key]
        if record.exc_info:
            entry["exc"] = self.formatException(record.exc_info)
        return json.dumps(entry, default=str)


class _StderrHandler(logging.StreamHandler):
    """Writes to whatever sys.stderr is at emit time."""

    def emit(self, record: logging.LogRecord) -> None:
        self.stream = sys.stderr
        super().emit(record)


def setup_logging(level: str = "WARNING", fmt: str = "text"):  # text|json
    handler = _StderrHandler()
    handler.setFormatter(JsonFormatter() if fmt == "json" else logging.Formatter(TEXT_FORMAT))
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO), handlers=[handler], force=True
    )
    return logging.getLogger("greenfde")
