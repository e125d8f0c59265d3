"""Shared fixtures-by-function for certificate tests."""

from __future__ import annotations

import copy
import json
import random

from stackycert.certify import Rejected, validate_report
from stackycert.errors import MalformedInput


def leaf_paths(node, path=()):
    if isinstance(node, dict):
        for k, v in node.items():
            yield from leaf_paths(v, path + (k,))
    elif isinstance(node, list):
        for i, v in enumerate(node):
            yield from leaf_paths(v, path + (i,))
    else:
        yield path


def set_leaf(doc, path, value):
    doc = copy.deepcopy(doc)
    node = doc
    for k in path[:-1]:
        node = node[k]
    node[path[-1]] = value
    return doc


def get_leaf(doc, path):
    for k in path:
        doc = doc[k]
    return doc


def mutations(value, rng: random.Random):
    """Replacement values for one leaf, all different from the original."""
    if isinstance(value, bool):
        return [not value]
    if isinstance(value, str):
        try:
            n = int(value)
        except ValueError:
            return [value + ".", value[:-1] if value else "x"]
        return [str(n + d) for d in (1, -1, rng.choice([2, 3, 7, -5]))]
    return []


def verdict(data: bytes):
    """Validator outcome, with malformed input counted as a rejection."""
    try:
        return validate_report(data)
    except MalformedInput as exc:
        return Rejected(f"malformed: {exc}")


def dumps(doc) -> bytes:
    return json.dumps(doc, sort_keys=True).encode()


def random_single_mutations(doc, count: int, seed: int = 0):
    rng = random.Random(seed)
    paths = list(leaf_paths(doc))
    for _ in range(count):
        path = rng.choice(paths)
        new = rng.choice(mutations(get_leaf(doc, path), rng))
        yield path, new, set_leaf(doc, path, new)
