import os
import threading
from pathlib import Path
from typing import Dict, Optional, Tuple

from riots.model.schemas import GraphDocument

Stamps = Tuple[Tuple[Path, int], ...]


def _mtime(path: Path) -> Optional[int]:
    try:
        return os.stat(path).st_mtime_ns
    except OSError:
        return None


class DocumentCache:
    """
    Thread-safe singleton cache of parsed graph documents.
    An entry is keyed by resolved path and parse mode and goes stale as soon as any
    file it was assembled from (the document and its sub-system files) changes.
    """
    _instance = None
    _lock = threading.Lock()
    _store: Dict[Tuple[Path, bool], Tuple[Stamps, GraphDocument]]

    def __new__(cls):
        if cls._instance is None:
            with cls._lock:
                if cls._instance is None:
                    cls._instance = super(DocumentCache, cls).__new__(cls)
                    cls._instance._store = {}
        return cls._instance

    def set(self, path: Path, lenient: bool, stamps: Stamps, document: GraphDocument):
        with self._lock:
            self._store[(path, lenient)] = (stamps, document)

    def get(self, path: Path, lenient: bool) -> Optional[Tuple[Stamps, GraphDocument]]:
        with self._lock:
            data = self._store.get((path, lenient))

        if not data:
            return None

        stamps, _ = data
        if any(_mtime(p) != mtime for p, mtime in stamps):
            # Lazy delete
            with self._lock:
                self._store.pop((path, lenient), None)
            return None

        return data

    def clear(self):
        with self._lock:
            self._store.clear()


# Global Instance
document_cache = DocumentCache()
