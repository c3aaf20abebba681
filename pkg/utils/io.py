import json
import logging
import os
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from utils.constants import MAC_IDENTITY, RATE_DISPLAY_COLUMNS, TOOL_VERSION

# Configure logging
logger = logging.getLogger('pla_tag_tool.io')


def _to_serializable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, tuple):
        return list(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def format_rate(rate: float, trials: int) -> str:
    """Display form of an empirical rate; rates below 1/trials become "<1/trials"."""
    if trials and rate < 1.0 / trials:
        return f"<1/{int(trials)}"
    return repr(float(rate))


def add_rate_display_columns(df: pd.DataFrame,
                             columns: Optional[Dict[str, str]] = None) -> pd.DataFrame:
    """
    Add a `<rate>_display` column next to every empirical rate column.

    Args:
        df: Result table
        columns: Mapping of rate column to its trial-count column

    Returns:
        Copy of df with the display columns inserted
    """
    columns = RATE_DISPLAY_COLUMNS if columns is None else columns
    result = df.copy()
    for rate_column, trials_column in columns.items():
        if rate_column not in result.columns or trials_column not in result.columns:
            continue
        display = [
            format_rate(rate, trials) if pd.notna(rate) and pd.notna(trials) else ""
            for rate, trials in zip(result[rate_column], result[trials_column])
        ]
        result.insert(result.columns.get_loc(rate_column) + 1, f"{rate_column}_display", display)
    return result


def write_csv(df: pd.DataFrame, filename: str) -> bool:
    """
    Write a result table as UTF-8 CSV with a header row.

    Args:
        df: DataFrame to write
        filename: Output path

    Returns:
        True if successful, False otherwise
    """
    try:
        add_rate_display_columns(df).to_csv(filename, index=False, encoding='utf-8',
                                            float_format='%.17g')
        logger.info(f"Wrote {len(df)} rows to {filename}")
        return True

    except Exception as e:
        logger.error(f"Error writing CSV {filename}: {str(e)}")
        return False


def write_json(data: Dict, filename: str) -> bool:
    """
    Write a dictionary as indented JSON, converting numpy values.

    Args:
        data: JSON-compatible dictionary (numpy scalars and arrays allowed)
        filename: Output path

    Returns:
        True if successful, False otherwise
    """
    try:
        with open(filename, 'w', encoding='utf-8') as f:
            json.dump(data, f, indent=2, default=_to_serializable)
        logger.info(f"Wrote {filename}")
        return True

    except Exception as e:
        logger.error(f"Error writing JSON {filename}: {str(e)}")
        return False


def read_json(filename: str) -> Optional[Dict]:
    """
    Read a JSON file.

    Args:
        filename: Path to the file

    Returns:
        Decoded object, or None if loading failed
    """
    try:
        with open(filename, 'r', encoding='utf-8') as f:
            return json.load(f)

    except Exception as e:
        logger.error(f"Error reading JSON {filename}: {str(e)}")
        return None


def export_results_to_excel(data: Dict[str, pd.DataFrame], filename: str) -> bool:
    """
    Export result tables into one workbook, one sheet per table.

    Args:
        data: Dictionary mapping sheet names to DataFrames
        filename: Path to save the Excel file

    Returns:
        True if successful, False otherwise
    """
    try:
        with pd.ExcelWriter(filename, engine='openpyxl') as writer:
            for sheet_name, df in data.items():
                # Excel limits sheet names to 31 characters
                add_rate_display_columns(df).to_excel(writer, sheet_name=sheet_name[:31], index=False)

        logger.info(f"Results exported to {filename}")
        return True

    except Exception as e:
        logger.error(f"Error exporting results: {str(e)}")
        return False


@dataclass
class RunManifest:
    """Everything needed to re-run a command: config snapshot, seed, version and outputs."""
    command: str
    config: Dict
    seed: int
    tool_version: str = TOOL_VERSION
    mac_identity: str = MAC_IDENTITY
    outputs: List[str] = field(default_factory=list)
    extra: Dict = field(default_factory=dict)
    started_at: float = field(default_factory=time.time)
    wall_clock_seconds: Optional[float] = None

    def finish(self):
        self.wall_clock_seconds = time.time() - self.started_at


def write_manifest(manifest: RunManifest, out_dir: str, filename: str) -> bool:
    """Write the run manifest into the output directory."""
    if manifest.wall_clock_seconds is None:
        manifest.finish()
    return write_json(asdict(manifest), os.path.join(out_dir, filename))
