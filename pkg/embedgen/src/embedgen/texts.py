"""Extract unique instance texts from a judgment jsonl file."""

from __future__ import annotations

import json


class MissingTextError(ValueError):
    """Instances lack the non-empty `text` field needed for embedding."""

    def __init__(self, instance_ids: list[str]):
        self.instance_ids = instance_ids
        shown = ", ".join(instance_ids[:10])
        suffix = "" if len(instance_ids) <= 10 else f" (+{len(instance_ids) - 10} more)"
        super().__init__(
            f"{len(instance_ids)} instances have no text: {shown}{suffix}"
        )


def read_instance_texts(path) -> dict[str, str]:
    """instance_id -> text, one entry per unique id (first text wins).

    Skips the optional `{"label_set": [...]}` header line. Raises
    MissingTextError listing every instance id that never carries a
    non-empty text.
    """
    texts: dict[str, str] = {}
    seen: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise ValueError(f"{path}:{lineno}: line is not a JSON object")
            if "label_set" in obj:
                continue
            iid = obj.get("instance_id")
            if not isinstance(iid, str) or not iid:
                raise ValueError(f"{path}:{lineno}: missing or invalid instance_id")
            if iid not in texts:
                seen.append(iid)
            text = obj.get("text")
            if isinstance(text, str) and text and iid not in texts:
                texts[iid] = text
    if not seen:
        raise ValueError(f"{path}: no judgment records")
    missing = [iid for iid in seen if iid not in texts]
    if missing:
        raise MissingTextError(missing)
    return texts
