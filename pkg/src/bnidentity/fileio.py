"""Readers and writers for models, samples, trees, partitions and CSV reports.

Model files are JSON::

    {"nodes": [{"name": "A", "arity": 2, "parents": [], "cpt": [[0.3, 0.7]]},
               {"name": "B", "arity": 2, "parents": [0], "cpt": [[0.9, 0.1], [0.2, 0.8]]}]}

CPT rows follow the mixed-radix code of the parent assignment with parents
taken in ascending index order. Sample files are CSV with a header of node
names and one integer-coded sample per row.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import sys
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np

from .bn_core import BayesNet, Dag, SampleSet
from .decomposition import Block, Factorization
from .errors import InvalidModel
from .gof_product import ProductModel
from .tree_order import Tree


def model_from_dict(doc: dict) -> BayesNet:
    try:
        nodes = doc["nodes"]
        names = [str(nd.get("name", f"X{i}")) for i, nd in enumerate(nodes)]
        parents = [tuple(int(u) for u in nd.get("parents", [])) for nd in nodes]
        arities = [int(nd["arity"]) for nd in nodes]
        cpts = [np.array(nd["cpt"], dtype=float) for nd in nodes]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidModel(f"malformed model document: {exc}") from exc
    for v, pa in enumerate(parents):
        if list(pa) != sorted(pa):
            raise InvalidModel(f"node {v}: list parents in ascending order (CPT rows follow that order)")
    return BayesNet(Dag(len(nodes), tuple(parents), tuple(names)), tuple(arities), tuple(cpts))


def model_to_dict(net: BayesNet) -> dict:
    names = net.dag.names()
    return {
        "nodes": [
            {
                "name": names[v],
                "arity": net.arities[v],
                "parents": list(net.dag.parents[v]),
                "cpt": net.cpts[v].tolist(),
            }
            for v in range(net.n)
        ]
    }


def load_model(path: str | Path) -> BayesNet:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


def save_model(net: BayesNet, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(net), fh, indent=1)


def load_dag(path: str | Path) -> Dag:
    """Structure from a model file; ``cpt`` and ``arity`` entries are optional here."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        nodes = doc["nodes"]
        return Dag(
            len(nodes),
            tuple(tuple(int(u) for u in nd.get("parents", [])) for nd in nodes),
            tuple(str(nd.get("name", f"X{i}")) for i, nd in enumerate(nodes)),
        )
    except (KeyError, TypeError) as exc:
        raise InvalidModel(f"malformed DAG document: {exc}") from exc


def read_sample_table(path: str | Path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InvalidModel(f"{path}: empty sample file") from None
        rows = [r for r in reader if r]
    try:
        data = np.array([[int(x) for x in r] for r in rows], dtype=np.int64)
    except ValueError as exc:
        raise InvalidModel(f"{path}: non-integer sample entry ({exc})") from exc
    if data.size == 0:
        data = data.reshape(0, len(header))
    if data.shape[1] != len(header):
        raise InvalidModel(f"{path}: rows do not match the {len(header)}-column header")
    return header, data


def infer_arities(*tables: np.ndarray) -> tuple[int, ...]:
    cols = tables[0].shape[1]
    top = np.zeros(cols, dtype=np.int64)
    for t in tables:
        if t.shape[1] != cols:
            raise InvalidModel("sample files have different column counts")
        if t.size:
            top = np.maximum(top, t.max(axis=0))
    return tuple(int(k) + 1 for k in top)


def read_samples(path: str | Path, arities: Sequence[int] | None = None) -> SampleSet:
    _, data = read_sample_table(path)
    return SampleSet(data, tuple(arities) if arities is not None else infer_arities(data))


def write_samples(samples: SampleSet, names: Sequence[str], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(names)
    writer.writerows(samples.data.tolist())


def read_tree(path: str | Path) -> Tree:
    """Edge list, one ``u v`` pair of integer node ids per line; ``#`` starts a comment."""
    edges = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise InvalidModel(f"{path}:{lineno}: expected 'u v'")
            edges.append((int(parts[0]), int(parts[1])))
    n = max((max(e) for e in edges), default=0) + 1
    return Tree.from_edges(n, edges)


def read_means(path: str | Path) -> ProductModel:
    with open(path, encoding="utf-8") as fh:
        values = [float(tok) for line in fh for tok in line.split("#", 1)[0].split()]
    return ProductModel(np.array(values))


def read_vector(path: str | Path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        return np.array([float(tok) for line in fh for tok in line.split("#", 1)[0].replace(",", " ").split()])


def read_factorization(path: str | Path) -> Factorization:
    """JSON ``{"blocks": [{"members": [...], "conditioning": [...]}, ...]}``."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        return Factorization(
            tuple(Block(tuple(b["members"]), tuple(b.get("conditioning", []))) for b in doc["blocks"])
        )
    except (KeyError, TypeError) as exc:
        raise InvalidModel(f"malformed partition document: {exc}") from exc


def fmt(value) -> str:
    """Stable text form for CSV cells."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        return repr(value)
    if isinstance(value, (set, frozenset)):
        value = sorted(value)
    if isinstance(value, (tuple, list)):
        return " ".join(str(v) for v in value)
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return str(value)


def write_csv(header: Sequence[str], rows: Iterable[Sequence], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = _io.StringIO()
    write_csv(header, rows, buf)
    return buf.getvalue()


def open_output(path: str | None) -> TextIO:
    if path is None or path == "-":
        return sys.stdout
    return open(path, "w", newline="", encoding="utf-8")
