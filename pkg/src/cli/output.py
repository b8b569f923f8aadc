"""CSV trajectories and KEY=value result records"""
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from dotenv import dotenv_values
from loguru import logger

FLOAT_FORMAT = "%.12e"


def _format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % value
    if isinstance(value, (list, tuple, np.ndarray)):
        return ",".join(_format_value(v) for v in value)
    return str(value)


def write_csv(
    path: Path,
    columns: Mapping[str, np.ndarray],
    command: str,
    config_lines: Sequence[str],
    summary: Optional[Mapping[str, object]] = None,
) -> Path:
    """
    Comma-separated table with a '#' header block: the command, the
    resolved scenario, an optional summary and finally the column names
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    data = np.column_stack([np.asarray(columns[name], dtype=float) for name in names])

    header = [f"command={command}"]
    header += [f"config.{line}" for line in config_lines]
    header += [f"summary.{key}={_format_value(value)}" for key, value in (summary or {}).items()]
    header.append(",".join(names))

    np.savetxt(path, data, fmt=FLOAT_FORMAT, delimiter=",", header="\n".join(header), comments="# ")
    logger.info(f"Wrote {len(data)} rows x {len(names)} columns to {path}")
    return path


def read_csv(path: Path) -> Tuple[Dict[str, str], List[str], np.ndarray]:
    """Inverse of write_csv: (header entries, column names, data)"""
    header: Dict[str, str] = {}
    comment_lines = []
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            comment_lines.append(line[2:].rstrip("\n"))
    for line in comment_lines[:-1]:
        key, _, value = line.partition("=")
        header[key] = value
    names = comment_lines[-1].split(",")
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    return header, names, data


def write_record(path: Path, record: Mapping[str, object]) -> Path:
    """One KEY=value line per entry, readable with dotenv_values"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{key}={_format_value(value)}\n" for key, value in record.items()))
    logger.info(f"Wrote result record {path}")
    return path


def read_record(path: Path) -> Dict[str, Optional[str]]:
    return dict(dotenv_values(path))
