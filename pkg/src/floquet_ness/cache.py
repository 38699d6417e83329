"""Content-addressed store of scattering solutions.

A record holds psi, the T row, open flags and outgoing momenta for one
(system, truncation, momentum, incoming level).  Keys hash the canonical
system and truncation strings together with the raw momentum bits, so a
record is hit only by the exact same solve.  Records are single small files
under two-level sharded directories; writes go through a temp file and an
atomic rename, which makes concurrent duplicate inserts benign (the values
are deterministic).
"""

from __future__ import annotations

import hashlib
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import ConfigError

__all__ = ["SolutionCache", "CACHE_VERSION"]

CACHE_VERSION = 1
_MAGIC = b"FNSC"


class SolutionCache:
    """Persistent solve cache rooted at a directory (or memory-only if None)."""

    def __init__(self, root=None):
        self.root = Path(root) if root is not None else None
        if self.root is not None:
            self.root.mkdir(parents=True, exist_ok=True)
        self._mem: dict = {}
        self.hits = 0
        self.misses = 0

    @staticmethod
    def record_key(spec_id: str, trunc_id: str, p: float, j_in: int) -> str:
        raw = spec_id.encode() + b"\0" + trunc_id.encode() + b"\0" + \
            struct.pack("<dq", float(p), int(j_in))
        return hashlib.sha256(raw).hexdigest()

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / key[2:]

    def get(self, key: str):
        """Stored (psi, t_row) arrays or None."""
        if key in self._mem:
            self.hits += 1
            return self._mem[key]
        if self.root is None:
            self.misses += 1
            return None
        path = self._path(key)
        if not path.exists():
            self.misses += 1
            return None
        payload = path.read_bytes()
        record = self._decode(payload)
        if record is None:
            self.misses += 1
            return None
        self._mem[key] = record
        self.hits += 1
        return record

    def put(self, key: str, psi: np.ndarray, t_row: np.ndarray) -> None:
        record = (np.ascontiguousarray(psi, dtype=complex),
                  np.ascontiguousarray(t_row, dtype=complex))
        self._mem[key] = record
        if self.root is None:
            return
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        blob = self._encode(*record)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(blob)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    @staticmethod
    def _encode(psi: np.ndarray, t_row: np.ndarray) -> bytes:
        if psi.shape != t_row.shape or psi.ndim != 1:
            raise ConfigError("cache record arrays must be equal-length vectors")
        head = _MAGIC + bytes([CACHE_VERSION]) + struct.pack("<I", psi.size)
        return head + psi.tobytes() + t_row.tobytes()

    @staticmethod
    def _decode(blob: bytes):
        if len(blob) < 9 or blob[:4] != _MAGIC:
            return None
        if blob[4] != CACHE_VERSION:
            return None  # schema evolved; treat as miss
        (n,) = struct.unpack("<I", blob[5:9])
        need = 9 + 2 * n * 16
        if len(blob) != need:
            return None
        psi = np.frombuffer(blob[9:9 + 16 * n], dtype=complex).copy()
        t_row = np.frombuffer(blob[9 + 16 * n:], dtype=complex).copy()
        return psi, t_row
