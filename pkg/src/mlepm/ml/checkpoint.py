"""JSON model checkpoints.

Floats are written with ``repr`` precision by the json module, so a
save/load round trip reproduces parameters bit for bit.
"""

import json
from pathlib import Path

from ..errors import CheckpointError
from .network import CnnModel, param_count

FORMAT_VERSION = 1


def checkpoint_dict(model, standardization, seed, **extra):
    doc = {
        "format_version": FORMAT_VERSION,
        "architecture": model.architecture,
        "input_length": model.input_length,
        "param_count": param_count(model),
        "params": [float(p) for p in model.params],
        "running_stats": [
            {"layer": i, "mean": [float(x) for x in m], "var": [float(x) for x in v]}
            for i, (m, v) in sorted(model.running.items())
        ],
        "standardization": {key: float(value) for key, value in standardization.items()},
        "seed": int(seed),
    }
    doc.update(extra)
    return doc


def save_checkpoint(path, model, standardization, seed, **extra):
    doc = checkpoint_dict(model, standardization, seed, **extra)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return doc


def load_checkpoint(path):
    """Returns ``(model, document)``; raises CheckpointError on any problem."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise CheckpointError(f"checkpoint {path} does not exist") from None
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from None
    version = doc.get("format_version") if isinstance(doc, dict) else None
    if version != FORMAT_VERSION:
        raise CheckpointError(f"checkpoint format_version {version!r} is not supported (expected {FORMAT_VERSION})")
    try:
        running = {int(s["layer"]): (s["mean"], s["var"]) for s in doc["running_stats"]}
        model = CnnModel(doc["architecture"], doc["params"], running, input_length=doc["input_length"])
        for key in ("in_mean", "in_std", "out_mean", "out_std"):
            float(doc["standardization"][key])
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"malformed checkpoint {path}: {exc}") from None
    return model, doc
