"""Versioned JSON round trip for trained forest models (standard and pure).

Each tree serializes as a preorder list of nodes: ["s", feature_index,
cutoff] for splits, ["l", prediction, count] for leaves.  Floats use JSON's
shortest round-trip encoding, so deserialize(serialize(m)) predicts
identically to m.
"""

from __future__ import annotations

import json

from .errors import ValidationError
from .forest import ForestModel, ForestParams, Leaf, Split, TreeNode
from .pure_forest import PureForestParams

MODEL_SCHEMA_VERSION = 1


def _encode_tree(tree: TreeNode) -> list:
    nodes = []
    stack = [tree]
    while stack:
        node = stack.pop()
        if isinstance(node, Leaf):
            nodes.append(["l", float(node.prediction), int(node.count)])
        else:
            nodes.append(["s", int(node.feature_index), float(node.cutoff)])
            stack.append(node.right)
            stack.append(node.left)
    return nodes


def _decode_tree(nodes: list) -> TreeNode:
    root = [None]
    pending = [(None, root)]  # (parent, slot) awaiting the next preorder node
    for record in nodes:
        if not pending:
            raise ValidationError("malformed tree encoding: extra nodes after completion")
        parent, slot = pending.pop()
        tag = record[0]
        if tag == "l":
            node = Leaf(prediction=float(record[1]), count=int(record[2]))
        elif tag == "s":
            node = Split(feature_index=int(record[1]), cutoff=float(record[2]))
            pending.append((node, "right"))
            pending.append((node, "left"))
        else:
            raise ValidationError(f"malformed tree encoding: unknown node tag {tag!r}")
        if parent is None:
            slot[0] = node
        else:
            setattr(parent, slot, node)
    if pending:
        raise ValidationError("malformed tree encoding: truncated node list")
    return root[0]


def _params_to_dict(model: ForestModel) -> dict:
    p = model.params
    if model.kind == "standard":
        return {
            "ntree": int(p.ntree),
            "mtry": None if p.mtry is None else int(p.mtry),
            "nodesize": int(p.nodesize),
            "max_terminal_nodes": None if p.max_terminal_nodes is None else int(p.max_terminal_nodes),
            "bootstrap": bool(p.bootstrap),
            "seed": int(p.seed),
        }
    return {"ntree": int(p.ntree), "leaf_min": int(p.leaf_min), "seed": int(p.seed)}


def _params_from_dict(kind: str, payload: dict):
    if kind == "standard":
        return ForestParams(**payload)
    return PureForestParams(**payload)


def model_to_dict(model: ForestModel) -> dict:
    return {
        "schema_version": MODEL_SCHEMA_VERSION,
        "kind": model.kind,
        "params": _params_to_dict(model),
        "feature_names": list(model.feature_names),
        "trees": [_encode_tree(t) for t in model.trees],
    }


def model_from_dict(payload: dict) -> ForestModel:
    if payload.get("schema_version") != MODEL_SCHEMA_VERSION:
        raise ValidationError(f"unsupported model schema {payload.get('schema_version')!r}")
    kind = payload["kind"]
    if kind not in ("standard", "pure"):
        raise ValidationError(f"unknown model kind {kind!r}")
    return ForestModel(
        trees=[_decode_tree(t) for t in payload["trees"]],
        params=_params_from_dict(kind, payload["params"]),
        feature_names=tuple(payload["feature_names"]),
        kind=kind,
    )


def save_model(model: ForestModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)
        fh.write("\n")


def load_model(path) -> ForestModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
