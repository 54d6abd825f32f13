"""Model file: one JSON document, floats written as shortest round-trip decimals."""
from __future__ import annotations

import json
import math
import os
import tempfile

from .boosting import BoostedModel
from .data import ColumnSpec, FeatureSchema
from .tree import RegressionTree

FORMAT = "fracboost-model"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


def _check_floats(obj, where="model"):
    if isinstance(obj, float) and not math.isfinite(obj):
        raise ModelFormatError(f"non-finite number in {where}")
    if isinstance(obj, dict):
        for k, v in obj.items():
            _check_floats(v, f"{where}.{k}")
    elif isinstance(obj, list):
        for v in obj:
            _check_floats(v, where)


def model_to_dict(model: BoostedModel) -> dict:
    schema = None
    if model.schema is not None:
        schema = {
            "target": model.schema.target_name,
            "columns": [[c.name, c.kind, c.group, c.role] for c in model.schema.columns],
        }
    return {
        "format": FORMAT,
        "version": FORMAT_VERSION,
        "loss": model.loss,
        "shrinkage": float(model.shrinkage),
        "base_prediction": float(model.base_prediction),
        "schema": schema,
        "feature_names": list(model.feature_names),
        "encoding_map": {k: list(v) for k, v in model.encoding_map.items()},
        "train_loss": [float(v) for v in model.train_loss],
        "stages": [
            {"step": float(b), "max_depth": tree.max_depth, "min_leaf": tree.min_leaf,
             "nodes": tree.to_nodes()}
            for b, tree in model.stages
        ],
    }


def dumps(model: BoostedModel) -> str:
    doc = model_to_dict(model)
    _check_floats(doc)
    # json writes floats with repr(), which round-trips binary doubles exactly
    return json.dumps(doc, indent=1, allow_nan=False) + "\n"


def loads(text: str) -> BoostedModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise ModelFormatError("not a fracboost model file")
    if doc.get("version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {doc.get('version')!r}")
    try:
        schema = None
        if doc["schema"] is not None:
            cols = tuple(ColumnSpec(*c) for c in doc["schema"]["columns"])
            schema = FeatureSchema(cols, doc["schema"]["target"])
        n_features = len(doc["feature_names"])
        stages = []
        for st in doc["stages"]:
            tree = RegressionTree.from_nodes(st["nodes"], st["max_depth"], st["min_leaf"],
                                             n_features)
            stages.append((float(st["step"]), tree))
        return BoostedModel(
            base_prediction=float(doc["base_prediction"]),
            stages=stages,
            shrinkage=float(doc["shrinkage"]),
            loss=doc["loss"],
            schema=schema,
            encoding_map={k: tuple(v) for k, v in doc["encoding_map"].items()},
            feature_names=tuple(doc["feature_names"]),
            train_loss=[float(v) for v in doc["train_loss"]],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from None


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the target directory, then rename over ``path``."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_model(model: BoostedModel, path) -> None:
    atomic_write_text(path, dumps(model))


def load_model(path) -> BoostedModel:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
