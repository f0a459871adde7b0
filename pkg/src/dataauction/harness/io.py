"""Embedding files and the JSON instance file.

Instance file (``format: dataauction-instance/1``)::

    {
      "database": {"points": [[...], ...], "labels": [...] | null, "metric": "euclidean"}
                | {"path": "emb.csv", "format": "csv", "metric": "euclidean"},
      "type_set": [0.0, 0.1, ...],
      "bidders": [{"weights": [...] | "uniform", "radii": [...] | r, "true_type": t}, ...],
      "bids": [...],                       # optional, defaults to the true types
      "distributions": [[pmf], ...] | "uniform",   # optional
      "seed": 0
    }

Weights are normalised on load; a scalar radius applies to every point.
Relative embedding paths resolve against the instance file's directory.
"""
from __future__ import annotations

import csv
import json
from importlib import resources
from pathlib import Path

import numpy as np

from ..revenue import TypeDistribution
from ..valuation import BidderProfile, Database, Instance

FORMAT_TAG = "dataauction-instance/1"
DELIMITERS = {"csv": ",", "tsv": "\t", "txt": None}


class ParseError(ValueError):
    """Malformed embedding or instance file."""


def _is_number(text):
    try:
        float(text)
        return True
    except ValueError:
        return False


def load_embeddings(path, fmt: str = None, label_column=None, metric: str = "euclidean") -> Database:
    """Read one point per row; an optional trailing column holds class labels.

    ``fmt`` is ``csv``, ``tsv``, ``txt`` (whitespace), ``npy`` or ``npz``
    (arrays ``points`` and optional ``labels``); it defaults to the file
    suffix. ``label_column=None`` treats the last column as labels when any
    of its entries is non-numeric.
    """
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".") or "csv").lower()
    if fmt in ("npy", "npz"):
        return _load_binary(path, fmt, metric)
    if fmt not in DELIMITERS:
        raise ParseError(f"unknown embedding format {fmt!r}")
    with open(path, newline="") as fh:
        if DELIMITERS[fmt] is None:
            rows = [line.split() for line in fh]
        else:
            rows = list(csv.reader(fh, delimiter=DELIMITERS[fmt]))
    numbered = [(k + 1, [c.strip() for c in r]) for k, r in enumerate(rows) if any(c.strip() for c in r)]
    if not numbered:
        raise ParseError(f"{path}: empty embedding file")
    width = len(numbered[0][1])
    for line, r in numbered:
        if len(r) != width:
            raise ParseError(f"{path}: row {line} has {len(r)} columns, expected {width}")
    if label_column is None:
        label_column = width > 1 and any(not _is_number(r[-1]) for _, r in numbered)
    n_num = width - 1 if label_column else width
    if n_num < 1:
        raise ParseError(f"{path}: no numeric columns")
    points = np.empty((len(numbered), n_num))
    for k, (line, r) in enumerate(numbered):
        for c in range(n_num):
            try:
                points[k, c] = float(r[c])
            except ValueError:
                raise ParseError(f"{path}: row {line}, column {c + 1}: non-numeric value {r[c]!r}") from None
    labels = np.array([r[-1] for _, r in numbered]) if label_column else None
    return Database(points, labels, metric)


def _load_binary(path, fmt, metric):
    try:
        if fmt == "npy":
            return Database(np.load(path, allow_pickle=False), None, metric)
        with np.load(path, allow_pickle=False) as z:
            if "points" not in z:
                raise ParseError(f"{path}: npz archive lacks a 'points' array")
            labels = z["labels"] if "labels" in z else None
            return Database(z["points"], labels, metric)
    except (OSError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"{path}: {exc}") from None


def save_embeddings(path, db: Database, fmt: str = None):
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".") or "csv").lower()
    if fmt == "npz":
        arrays = {"points": db.points}
        if db.labels is not None:
            arrays["labels"] = db.labels.astype(str)
        np.savez(path, **arrays)
        return
    if fmt == "npy":
        np.save(path, db.points)
        return
    delim = DELIMITERS[fmt] or " "
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=delim)
        for k, row in enumerate(db.points):
            cells = [repr(float(x)) for x in row]
            if db.labels is not None:
                cells.append(str(db.labels[k]))
            w.writerow(cells)


def instance_from_dict(doc: dict, base_dir=None) -> Instance:
    try:
        dbdoc = doc["database"]
        lam = np.asarray(doc["type_set"], dtype=float)
        bdocs = doc["bidders"]
    except KeyError as exc:
        raise ParseError(f"instance file lacks required key {exc}") from None
    metric = dbdoc.get("metric", "euclidean")
    if "path" in dbdoc:
        p = Path(dbdoc["path"])
        if base_dir is not None and not p.is_absolute():
            p = Path(base_dir) / p
        db = load_embeddings(p, dbdoc.get("format"), dbdoc.get("label_column"), metric)
    else:
        db = Database(np.asarray(dbdoc["points"], dtype=float), dbdoc.get("labels"), metric)
    bidders = []
    for b in bdocs:
        w = b.get("weights", "uniform")
        w = np.ones(db.n) if isinstance(w, str) and w == "uniform" else np.asarray(w, dtype=float)
        r = np.broadcast_to(np.asarray(b["radii"], dtype=float), (db.n,)).copy()
        bidders.append(BidderProfile(w, r, b.get("true_type", lam[0])))
    bids = doc.get("bids")
    if bids is None:
        bids = [b.true_type for b in bidders]
    dists = doc.get("distributions")
    if isinstance(dists, str):
        if dists != "uniform":
            raise ParseError(f"unknown distribution shorthand {dists!r}")
        dists = [TypeDistribution.uniform(lam) for _ in bidders]
    elif dists is not None:
        dists = [TypeDistribution(lam, np.asarray(p, dtype=float)) for p in dists]
    return Instance(db, tuple(bidders), lam, np.asarray(bids, dtype=float),
                    distributions=dists, seed=int(doc.get("seed", 0)))


def instance_to_dict(instance: Instance) -> dict:
    db = instance.database
    doc = {
        "format": FORMAT_TAG,
        "database": {"points": db.points.tolist(),
                     "labels": None if db.labels is None else db.labels.tolist(),
                     "metric": db.metric},
        "type_set": instance.type_set.tolist(),
        "bidders": [{"weights": b.weights.tolist(), "radii": b.radii.tolist(),
                     "true_type": b.true_type} for b in instance.bidders],
        "bids": instance.bids.tolist(),
        "seed": instance.seed,
    }
    if instance.distributions is not None:
        doc["distributions"] = [d.pmf.tolist() for d in instance.distributions]
    return doc


def load_instance(path) -> Instance:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}") from None
    return instance_from_dict(doc, base_dir=path.parent)


def save_instance(path, instance: Instance):
    Path(path).write_text(json.dumps(instance_to_dict(instance), indent=1))


def fixture_instance() -> Instance:
    """The bundled 5-point, 10-dimensional, two-bidder synthetic instance."""
    text = resources.files("dataauction.data").joinpath("syn_fixture.json").read_text()
    return instance_from_dict(json.loads(text))
