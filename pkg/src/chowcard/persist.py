"""Model file: one JSON document per database.

Keys are sorted and floats are written with 17 significant digits, so a
model reloads to bit-identical probabilities and identical inputs give
identical bytes.  Empty MCV and bucket lists are omitted.
"""
from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from .bayesnet import BayesNet
from .estimators import BuildConfig, ModelStore, RelationArtifacts
from .histogram import EndBiasedHistogram
from .relation import Schema

FORMAT_VERSION = 1


class ModelFileError(ValueError):
    pass


class UnsupportedVersion(ModelFileError):
    pass


class CorruptModel(ModelFileError):
    pass


def format_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot store non-finite float {x!r}")
    s = format(x, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _encode(obj: Any, out: list, indent: int) -> None:
    if obj is None:
        out.append("null")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(", ")
            _encode(item, out, indent)
        out.append("]")
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        pad = "\n" + " " * (indent + 1)
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise TypeError(f"object keys must be text, got {key!r}")
            out.append(("," if i else "") + pad + json.dumps(key, ensure_ascii=False) + ": ")
            _encode(obj[key], out, indent + 1)
        out.append("\n" + " " * indent + "}")
    else:
        raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj: Any) -> str:
    out: list[str] = []
    _encode(obj, out, 0)
    return "".join(out) + "\n"


def model_to_dict(store: ModelStore) -> dict:
    rels = {}
    for name, art in store.relations.items():
        rels[name] = {
            "schema": art.schema.to_dict(),
            "rows": art.row_count,
            "distinct": list(art.distinct),
            "histograms": [h.to_dict() for h in art.histograms],
            "bn": art.bn.to_dict(),
        }
    return {"format_version": FORMAT_VERSION, "config": store.config.to_dict(), "relations": rels}


def serialize_model(store: ModelStore) -> str:
    return dumps(model_to_dict(store))


def deserialize_model(text: str) -> ModelStore:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptModel(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise CorruptModel("model file must hold a JSON object")
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"unsupported model format version {version!r}")
    try:
        c = data["config"]
        config = BuildConfig(int(c["k"]), int(c["j"]), float(c["sample_rate"]), int(c["seed"]))
        store = ModelStore(config)
        for name, r in data["relations"].items():
            schema = Schema.from_dict(r["schema"])
            hists = [EndBiasedHistogram.from_dict(h, config.k, config.j) for h in r["histograms"]]
            bn = BayesNet.from_dict(r["bn"], hists, config.k, config.j)
            if len(hists) != len(schema.attributes) or bn.n != len(schema.attributes):
                raise CorruptModel(f"relation {name!r}: artifact shapes disagree with its schema")
            store.relations[name] = RelationArtifacts(schema, int(r["rows"]), [int(d) for d in r["distinct"]],
                                                      hists, bn)
    except ModelFileError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise CorruptModel(f"model file is malformed: {exc!r}") from exc
    return store


def save_model(store: ModelStore, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_model(store))


def load_model(path) -> ModelStore:
    with open(path, encoding="utf-8") as fh:
        return deserialize_model(fh.read())
