"""Line-oriented JSON dataset of demonstration records.

Floats are written with ``repr`` precision by the json module, so a
write/read cycle reproduces every array bit for bit.
"""
import io
import json

from ..errors import MMTaskGenError, ValidationError


class DatasetWriteError(MMTaskGenError, OSError):
    """Writing stopped part way; ``written`` records made it to the sink."""

    def __init__(self, message, written):
        super().__init__(f"{message} ({written} records written)")
        self.written = written


def encode_record(record):
    """One record as a single JSON line (no trailing newline)."""
    d = record.to_dict() if hasattr(record, "to_dict") else record
    return json.dumps(d, sort_keys=True, separators=(",", ":"), allow_nan=False)


def write_demonstrations(records, sink):
    """Write one record per line to a text or byte stream; returns the count."""
    binary = not isinstance(sink, io.TextIOBase)
    n = 0
    for rec in records:
        line = encode_record(rec) + "\n"
        try:
            sink.write(line.encode("utf-8") if binary else line)
        except (OSError, ValueError) as exc:
            raise DatasetWriteError(str(exc), n) from exc
        n += 1
    return n


def read_demonstrations(source):
    """Parse records from a stream or path; blank lines are skipped."""
    from ..taskgen.spec import DemonstrationRecord

    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "rb") as fh:
            return read_demonstrations(fh)
    out = []
    for k, line in enumerate(source, 1):
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        if not line.strip():
            continue
        try:
            out.append(DemonstrationRecord.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError, MMTaskGenError) as exc:
            raise ValidationError(f"record on line {k} is malformed: {exc}") from exc
    return out
