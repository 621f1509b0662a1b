from abc import abstractmethod
import os
from pathlib import Path
from typing import Mapping, Optional

from pandas import DataFrame


class Writer:

    @abstractmethod
    def write(self, path: Path, frame: DataFrame, metadata: Optional[Mapping[str, str]] = None) -> Path:
        pass

    @staticmethod
    def ensure_path(path: Path):
        """Remove a stale file at path, or create its parent directory."""
        path = Path(path)
        if os.path.exists(path):
            os.remove(path)
        else:
            if not os.path.exists(path.parent):
                os.makedirs(path.parent)

    @staticmethod
    def header_lines(metadata: Optional[Mapping[str, str]]) -> str:
        """'# key: value' lines, in insertion order."""
        if not metadata:
            return ""
        return "".join(f"# {k}: {v}\n" for k, v in metadata.items())
