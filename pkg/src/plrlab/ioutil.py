"""Atomic file writes shared by every module that emits an artifact."""

import os
import tempfile


def atomic_write_bytes(path, data: bytes) -> None:
    """Write via a temp file in the target directory, then rename over path.

    Readers never observe a partial file; a crash leaves the old content (or
    nothing) in place.
    """
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))
