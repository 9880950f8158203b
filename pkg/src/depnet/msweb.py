"""Locating and fetching the anonymous web-visit benchmark dataset."""

from __future__ import annotations

import os
import urllib.error
import urllib.request
import zipfile
from io import BytesIO
from pathlib import Path

TRAIN_FILE = "anonymous-msweb.data"
TEST_FILE = "anonymous-msweb.test"
ENV_VAR = "DEPNET_MSWEB_DIR"

_LEGACY_BASE = "https://archive.ics.uci.edu/ml/machine-learning-databases/anonymous"
_ZIP_URL = "https://archive.ics.uci.edu/static/public/113/anonymous+microsoft+web+data.zip"


def default_dir() -> Path:
    env = os.environ.get(ENV_VAR)
    return Path(env) if env else Path("data")


def locate(directory: str | Path | None = None) -> tuple[Path, Path] | None:
    """Return (train, test) paths when both benchmark files exist."""
    base = Path(directory) if directory is not None else default_dir()
    train, test = base / TRAIN_FILE, base / TEST_FILE
    if train.is_file() and test.is_file():
        return train, test
    return None


def fetch(dest: str | Path, timeout: float = 60.0) -> tuple[Path, Path]:
    """Download the benchmark files into ``dest`` (needs network access)."""
    base = Path(dest)
    base.mkdir(parents=True, exist_ok=True)
    train, test = base / TRAIN_FILE, base / TEST_FILE
    if train.is_file() and test.is_file():
        return train, test

    errors: list[str] = []
    try:
        for name, path in ((TRAIN_FILE, train), (TEST_FILE, test)):
            with urllib.request.urlopen(f"{_LEGACY_BASE}/{name}", timeout=timeout) as resp:
                path.write_bytes(resp.read())
        return train, test
    except (urllib.error.URLError, OSError) as exc:
        errors.append(f"{_LEGACY_BASE}: {exc}")

    try:
        with urllib.request.urlopen(_ZIP_URL, timeout=timeout) as resp:
            archive = zipfile.ZipFile(BytesIO(resp.read()))
        for name, path in ((TRAIN_FILE, train), (TEST_FILE, test)):
            member = next(m for m in archive.namelist() if m.endswith(name))
            path.write_bytes(archive.read(member))
        return train, test
    except (urllib.error.URLError, OSError, StopIteration, zipfile.BadZipFile) as exc:
        errors.append(f"{_ZIP_URL}: {exc}")

    raise OSError(
        "could not download the anonymous web dataset; fetch manually and place "
        f"{TRAIN_FILE} and {TEST_FILE} under {base} (attempts: {'; '.join(errors)})"
    )
