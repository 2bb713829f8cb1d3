"""File manipulation utilities."""

from pathlib import Path


def ensure_dir(path: str | Path) -> Path:
    """Create a directory (and parents) if needed and return it."""
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def atomic_write_text(path: str | Path, text: str) -> Path:
    """Write text through a sibling temp file, then rename into place."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = target.with_suffix(target.suffix + ".tmp")
    tmp.write_text(text)
    tmp.replace(target)
    return target
