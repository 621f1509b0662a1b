from pathlib import Path
from typing import Mapping, Optional

from pandas import DataFrame

from beamsync.writers.base import Writer
from beamsync.writers import register_writer


@register_writer('csv')
class CsvWriter(Writer):
    """CSV with a block of '# key: value' metadata lines above the header row.

    Read back with ``pandas.read_csv(path, comment='#')``.
    """

    def write(self, path: Path, frame: DataFrame, metadata: Optional[Mapping[str, str]] = None) -> Path:
        Writer.ensure_path(path)
        with open(path, "w", newline="") as fh:
            fh.write(Writer.header_lines(metadata))
            frame.to_csv(fh, index=False, lineterminator="\n")
        return Path(path)
