"""CSV output: '.' decimal, 17-significant-digit scientific notation,
'#'-prefixed comment header recording the full run configuration.
"""

from __future__ import annotations

import subprocess
from pathlib import Path


def build_describe() -> str:
    """git describe of the working tree, falling back to the package version."""
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=here, capture_output=True, text=True, timeout=10)
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    from .. import __version__

    return f"epnls-{__version__}"


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return f"{float(x):.16e}"


class CsvWriter:
    """Streams rows so that partial output survives an aborted run."""

    def __init__(self, path: str, columns: list[str], config: dict,
                 extra_comments: list[str] | None = None):
        self.path = Path(path)
        if self.path.parent != Path(""):
            self.path.parent.mkdir(parents=True, exist_ok=True)
        self.columns = columns
        self._f = open(self.path, "w")
        self._f.write(f"# build: {build_describe()}\n")
        for key, val in config.items():
            self._f.write(f"# {key}: {val}\n")
        for line in extra_comments or []:
            self._f.write(f"# {line}\n")
        self._f.write(",".join(columns) + "\n")
        self._f.flush()

    def comment(self, text: str) -> None:
        self._f.write(f"# {text}\n")
        self._f.flush()

    def row(self, *values) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} values, got {len(values)}")
        self._f.write(",".join(fmt(v) for v in values) + "\n")

    def flush(self) -> None:
        self._f.flush()

    def close(self) -> None:
        if not self._f.closed:
            self._f.flush()
            self._f.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False
