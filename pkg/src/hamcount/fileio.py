"""
Plain-text graph and matrix formats.

Graph files (directed or undirected)::

    # comment lines start with '#'
    n m
    tail head [weight]      (m lines; the weight defaults to 1.0)

Undirected files use the same layout with each line an unordered pair and no
weight column.  Matrix files hold ``n`` on the first line followed by ``n``
rows of ``n`` decimal entries, where ``0`` means "no edge".

Every parse failure raises :exc:`~hamcount.errors.GraphFormatError` naming the
offending line.
"""

from __future__ import annotations

import contextlib
import hashlib
import math
import os
from typing import IO, Iterator, Union

from .digraph import Edge, LogMatrix, UndirectedGraph, WeightedDigraph
from .errors import DomainError, GraphFormatError, InvalidGraphError

__all__ = (
    "read_graph",
    "write_graph",
    "read_undirected",
    "write_undirected",
    "read_matrix",
    "write_matrix",
    "file_digest",
)

Source = Union[str, os.PathLike, IO[str]]


@contextlib.contextmanager
def _open(source: Source) -> Iterator[tuple[IO, str | None]]:
    if isinstance(source, (str, os.PathLike)):
        path = os.fspath(source)
        try:
            # decoded line by line in _records
            f = open(path, "rb")
        except OSError as e:
            raise GraphFormatError(
                f"cannot read the file: {e.strerror}", path=path
            ) from None
        with f:
            yield f, path
    else:
        yield source, getattr(source, "name", None)


def _records(stream: IO, path: str | None) -> Iterator[tuple[int, list[str]]]:
    for lineno, line in enumerate(stream, start=1):
        if isinstance(line, bytes):
            try:
                line = line.decode("utf-8")
            except UnicodeDecodeError as e:
                raise GraphFormatError(
                    f"not valid UTF-8 ({e.reason} at column {e.start + 1})",
                    lineno=lineno,
                    path=path,
                ) from None
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield lineno, stripped.split()


def _int(token: str, what: str, lineno: int, path: str | None) -> int:
    try:
        return int(token)
    except ValueError:
        raise GraphFormatError(
            f"{what} must be an integer, got {token!r}", lineno=lineno, path=path
        ) from None


def _float(token: str, what: str, lineno: int, path: str | None) -> float:
    try:
        value = float(token)
    except ValueError:
        raise GraphFormatError(
            f"{what} must be a decimal number, got {token!r}", lineno=lineno, path=path
        ) from None
    if not math.isfinite(value):
        raise GraphFormatError(
            f"{what} must be finite, got {token!r}", lineno=lineno, path=path
        )
    return value


def _header(records, path, *, count: int) -> tuple[int, list[int]]:
    try:
        lineno, tokens = next(records)
    except StopIteration:
        raise GraphFormatError("missing header line", path=path) from None
    if len(tokens) != count:
        raise GraphFormatError(
            f"the header needs {count} integer(s), got {len(tokens)} token(s)",
            lineno=lineno,
            path=path,
        )
    values = [_int(tok, "header value", lineno, path) for tok in tokens]
    if any(v < 0 for v in values) or values[0] < 1:
        raise GraphFormatError(
            f"invalid header {' '.join(tokens)}", lineno=lineno, path=path
        )
    return lineno, values


def _pairs(source: Source, *, weighted: bool):
    with _open(source) as (stream, path):
        records = _records(stream, path)
        header_line, (n, m) = _header(records, path, count=2)
        rows = []
        max_tokens = 3 if weighted else 2
        for lineno, tokens in records:
            if not 2 <= len(tokens) <= max_tokens:
                raise GraphFormatError(
                    f"expected 2..{max_tokens} tokens, got {len(tokens)}",
                    lineno=lineno,
                    path=path,
                )
            a = _int(tokens[0], "vertex", lineno, path)
            b = _int(tokens[1], "vertex", lineno, path)
            w = _float(tokens[2], "weight", lineno, path) if len(tokens) == 3 else 1.0
            rows.append((lineno, a, b, w))
        if len(rows) != m:
            where = rows[-1][0] if rows else header_line
            raise GraphFormatError(
                f"the header announces {m} edge(s) but {len(rows)} were found",
                lineno=where,
                path=path,
            )
    return n, rows, path


def _locate(n, rows, path, *, directed: bool) -> None:
    # re-validate line by line so that an invariant failure names its line
    seen = set()
    for lineno, a, b, w in rows:
        key = (a, b) if directed else (min(a, b), max(a, b))
        try:
            if directed:
                WeightedDigraph(n, (Edge(a, b, w),))
            else:
                UndirectedGraph(n, ((a, b),))
            if key in seen:
                raise InvalidGraphError(f"duplicate edge {key}")
        except InvalidGraphError as e:
            raise GraphFormatError(str(e), lineno=lineno, path=path) from None
        seen.add(key)


def read_graph(source: Source) -> WeightedDigraph:
    n, rows, path = _pairs(source, weighted=True)
    try:
        return WeightedDigraph(n, tuple(Edge(a, b, w) for _, a, b, w in rows))
    except InvalidGraphError as e:
        _locate(n, rows, path, directed=True)
        raise GraphFormatError(str(e), path=path) from None


def read_undirected(source: Source) -> UndirectedGraph:
    n, rows, path = _pairs(source, weighted=False)
    try:
        return UndirectedGraph(n, tuple((a, b) for _, a, b, _ in rows))
    except InvalidGraphError as e:
        _locate(n, rows, path, directed=False)
        raise GraphFormatError(str(e), path=path) from None


def read_matrix(source: Source) -> LogMatrix:
    with _open(source) as (stream, path):
        records = _records(stream, path)
        header_line, (n,) = _header(records, path, count=1)
        values = []
        lineno = header_line
        for lineno, tokens in records:
            if len(values) == n:
                raise GraphFormatError(
                    f"more than {n} matrix rows", lineno=lineno, path=path
                )
            if len(tokens) != n:
                raise GraphFormatError(
                    f"a matrix row needs {n} entries, got {len(tokens)}",
                    lineno=lineno,
                    path=path,
                )
            row = [_float(tok, "entry", lineno, path) for tok in tokens]
            if any(v < 0 for v in row):
                raise GraphFormatError(
                    "negative entries are not supported", lineno=lineno, path=path
                )
            values.append(row)
        if len(values) != n:
            raise GraphFormatError(
                f"expected {n} matrix rows, found {len(values)}",
                lineno=lineno,
                path=path,
            )
    try:
        return LogMatrix.from_linear(values)
    except DomainError as e:
        raise GraphFormatError(str(e), path=path) from None


def _format_weight(w: float) -> str:
    return repr(float(w))


def write_graph(g: WeightedDigraph, stream: IO[str]) -> None:
    stream.write(f"{g.n} {g.m}\n")
    for e in g.edges:
        if e.weight == 1.0:
            stream.write(f"{e.tail} {e.head}\n")
        else:
            stream.write(f"{e.tail} {e.head} {_format_weight(e.weight)}\n")


def write_undirected(g: UndirectedGraph, stream: IO[str]) -> None:
    stream.write(f"{g.n} {g.m}\n")
    for a, b in g.edges:
        stream.write(f"{a} {b}\n")


def write_matrix(a: LogMatrix, stream: IO[str]) -> None:
    stream.write(f"{a.order}\n")
    for row in a.to_linear():
        stream.write(" ".join("0" if v == 0 else _format_weight(v) for v in row))
        stream.write("\n")


def file_digest(path: Union[str, os.PathLike]) -> str:
    with open(path, "rb") as f:
        return hashlib.sha256(f.read()).hexdigest()
