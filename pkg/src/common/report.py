import dataclasses
import json
from typing import Any, Dict, Iterable, Optional

import numpy as np
import pandas as pd


def _plain(obj: Any) -> Any:
    if hasattr(obj, "to_dict") and not isinstance(obj, (pd.DataFrame, pd.Series)):
        return _plain(obj.to_dict())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set)):
        items = [_plain(v) for v in obj]
        return sorted(items, key=str) if isinstance(obj, set) else items
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, pd.DataFrame):
        return _plain(obj.reset_index().to_dict(orient="records"))
    return obj


def to_json(payload: Dict[str, Any]) -> str:
    return json.dumps(_plain(payload), sort_keys=True, indent=2, default=str)


def table(rows: Iterable[Dict[str, Any]], index: Optional[str] = None) -> str:
    df = pd.DataFrame([_plain(r) for r in rows])
    if df.empty:
        return "(empty)"
    if index and index in df.columns:
        df = df.set_index(index)
    return df.to_string()


def conditions_table(report: Dict[str, Any]) -> str:
    rows = [{"condition": k, "holds": v, "evidence": report.get("evidence", {}).get(k, "")}
            for k, v in report.get("conditions", {}).items()]
    return table(rows, index="condition")


def to_text(payload: Dict[str, Any]) -> str:
    """Flat key/value lines, with tables for the list-of-records and condition sections."""
    data = _plain(payload)
    lines = []
    for key in sorted(data):
        value = data[key]
        if isinstance(value, dict) and "conditions" in value and isinstance(value["conditions"], dict):
            lines.append(f"[{key}]")
            lines.append(conditions_table(value))
            rest = {k: v for k, v in value.items() if k not in ("conditions", "evidence")}
            lines.extend(f"  {k}: {json.dumps(v, sort_keys=True)}" for k, v in sorted(rest.items()))
        elif isinstance(value, list) and value and all(isinstance(v, dict) for v in value):
            lines.append(f"[{key}]")
            lines.append(table(value))
        else:
            lines.append(f"{key}: {json.dumps(value, sort_keys=True) if isinstance(value, (dict, list)) else value}")
    return "\n".join(lines)


def render(payload: Dict[str, Any], fmt: str = "structured") -> str:
    return to_json(payload) if fmt == "structured" else to_text(payload)
