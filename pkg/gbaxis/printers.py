import os
import json
import tempfile
from typing import Any, Iterable, Sequence
import numpy as np


class JSONEncoder(json.JSONEncoder):
    def default(self, o):
        to_json = getattr(o, "to_json", None)
        if callable(to_json):
            return to_json()
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.generic):
            return o.item()
        try:
            return o.__dict__
        except AttributeError:
            return json.JSONEncoder.default(self, o)


def to_pretty_json(obj: Any) -> str:
    return json.dumps(obj, cls=JSONEncoder, indent=4)


def format_number(value: Any) -> str:
    """Full double precision (17 significant digits) for numbers, text otherwise."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % value
    return str(value)


def to_csv(columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(format_number(v) for v in row))
    return "\n".join(lines) + "\n"


def atomic_write(path: str, content: str):
    """Write through a temporary file in the same directory, then rename over `path`."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="\n") as tmp:
            tmp.write(content)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def write_csv(path: str, columns: Sequence[str], rows: Iterable[Sequence[Any]]):
    atomic_write(path, to_csv(columns, rows))


def write_json(path: str, obj: Any):
    atomic_write(path, to_pretty_json(obj) + "\n")
