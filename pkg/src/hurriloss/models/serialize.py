"""JSON model documents.

A document is ``{"schema_version", "kind", "feature_names", "payload"}``
plus an optional ``"transform"`` block holding the fitted preprocessing.
Floats are written with ``repr`` precision so a load reproduces the model
bit for bit.
"""

from __future__ import annotations

import json

from .ensemble import ForestModel, GbmModel, XgbModel
from .mlp import MlpModel
from .stacked import StackedModel

SCHEMA_VERSION = 1

KINDS = {
    "forest": ForestModel,
    "gbm": GbmModel,
    "xgb": XgbModel,
    "mlp": MlpModel,
    "stacked": StackedModel,
}


class ModelFormatError(ValueError):
    pass


def model_to_dict(model, feature_names=None, transform=None) -> dict:
    if feature_names is None:
        feature_names = getattr(model, "feature_names", None) or [f"x{j}" for j in range(model.n_features)]
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": model.kind,
        "feature_names": list(feature_names),
        "payload": model.to_payload(),
    }
    if transform is not None:
        doc["transform"] = transform
    return doc


def model_from_dict(doc: dict, expect_kind=None):
    if not isinstance(doc, dict):
        raise ModelFormatError("document: expected a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ModelFormatError(f"schema_version: unsupported version {version!r}")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise ModelFormatError(f"kind: unknown model kind {kind!r}; valid kinds: {sorted(KINDS)}")
    if expect_kind is not None and kind != expect_kind:
        raise ModelFormatError(f"kind: document holds a {kind!r} model, expected {expect_kind!r}")
    try:
        model = KINDS[kind].from_payload(doc["payload"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"payload: malformed {kind} payload ({exc})") from exc
    model.feature_names = tuple(doc.get("feature_names", ()))
    return model


def save_model(model, feature_names=None, transform=None) -> str:
    return json.dumps(model_to_dict(model, feature_names, transform), separators=(",", ":")) + "\n"


def load_model(text: str, expect_kind=None):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"document: not valid JSON ({exc.msg} at char {exc.pos})") from exc
    return model_from_dict(doc, expect_kind)


def load_document(text: str) -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"document: not valid JSON ({exc.msg} at char {exc.pos})") from exc
