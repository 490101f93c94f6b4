import hashlib
import io
import math

import numpy as np
import pytest

from hamcount import (
    Edge,
    GraphFormatError,
    LogMatrix,
    UndirectedGraph,
    WeightedDigraph,
    file_digest,
    read_graph,
    read_matrix,
    read_undirected,
    write_graph,
    write_matrix,
    write_undirected,
)


def test_read_graph_with_comments_and_weights():
    text = "# a weighted triangle\n\n3 3\n1 2\n2 3 0.5\n# closing arc\n3 1 2\n"
    g = read_graph(io.StringIO(text))
    assert g.n == 3
    assert g.edges == (Edge(1, 2, 1.0), Edge(2, 3, 0.5), Edge(3, 1, 2.0))


def test_read_graph_from_path(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("2 2\n1 2\n2 1\n")
    g = read_graph(path)
    assert g == WeightedDigraph(2, ((1, 2), (2, 1)))
    assert read_graph(str(path)) == g


def test_write_graph():
    g = WeightedDigraph(3, ((1, 2), (2, 3, 0.25), (3, 1)))
    out = io.StringIO()
    write_graph(g, out)
    assert out.getvalue() == "3 3\n1 2\n2 3 0.25\n3 1\n"
    assert read_graph(io.StringIO(out.getvalue())) == g


@pytest.mark.parametrize(
    "text, lineno, fragment",
    [
        ("3 x\n", 1, "integer"),
        ("3\n", 1, "header"),
        ("# c\n3 1\n1 2 3 4\n", 3, "tokens"),
        ("3 1\n1 two\n", 2, "integer"),
        ("3 1\n1 2 heavy\n", 2, "decimal"),
        ("3 1\n1 2 inf\n", 2, "finite"),
        ("3 2\n1 2\n", 2, "2 edge(s)"),
        ("3 0\n1 2\n", 2, "0 edge(s)"),
        ("3 2\n1 2\n\n2 2\n", 4, "self-loop"),
        ("3 2\n1 2\n1 2\n", 3, "duplicate"),
        ("3 1\n1 5\n", 2, "out of range"),
        ("3 1\n1 2 -0.5\n", 2, "weight"),
    ],
)
def test_read_graph_errors_name_the_line(text, lineno, fragment):
    with pytest.raises(GraphFormatError) as e:
        read_graph(io.StringIO(text))
    assert e.value.lineno == lineno
    assert f"line {lineno}" in str(e.value)
    assert fragment in str(e.value)


def test_read_graph_empty_file():
    with pytest.raises(GraphFormatError) as e:
        read_graph(io.StringIO("# nothing\n"))
    assert "header" in str(e.value)


def test_read_graph_error_names_the_file(tmp_path):
    path = tmp_path / "broken.txt"
    path.write_text("4 1\n1 1\n")
    with pytest.raises(GraphFormatError) as e:
        read_graph(path)
    assert str(e.value).startswith(f"{path}:line 2:")


def test_undirected_round_trip_format():
    g = read_undirected(io.StringIO("4 3\n2 1\n2 3\n4 3\n"))
    assert g == UndirectedGraph(4, ((1, 2), (2, 3), (3, 4)))
    out = io.StringIO()
    write_undirected(g, out)
    assert out.getvalue() == "4 3\n1 2\n2 3\n3 4\n"


def test_undirected_rejects_weights_and_reversed_duplicates():
    with pytest.raises(GraphFormatError) as e:
        read_undirected(io.StringIO("3 1\n1 2 1.0\n"))
    assert e.value.lineno == 2
    with pytest.raises(GraphFormatError) as e:
        read_undirected(io.StringIO("3 2\n1 2\n2 1\n"))
    assert e.value.lineno == 3


def test_read_matrix():
    a = read_matrix(io.StringIO("# weights\n2\n0 0.5\n1 0\n"))
    assert a.order == 2
    assert a.entries[0, 0] == -math.inf
    assert np.allclose(a.to_linear(), [[0, 0.5], [1, 0]])


@pytest.mark.parametrize(
    "text, lineno",
    [
        ("2\n0 1\n1\n", 3),
        ("2\n0 1\n1 0\n1 1\n", 4),
        ("2\n0 1\n", 2),
        ("2\n0 -1\n1 0\n", 2),
        ("2\n0 x\n1 0\n", 2),
        ("0\n", 1),
    ],
)
def test_read_matrix_errors(text, lineno):
    with pytest.raises(GraphFormatError) as e:
        read_matrix(io.StringIO(text))
    assert e.value.lineno == lineno


def test_write_matrix():
    a = LogMatrix.from_linear([[0, 1], [1, 0]])
    out = io.StringIO()
    write_matrix(a, out)
    assert out.getvalue() == "2\n0 1.0\n1.0 0\n"
    back = read_matrix(io.StringIO(out.getvalue()))
    assert np.allclose(back.to_linear(), [[0, 1], [1, 0]])


def test_file_digest(tmp_path):
    path = tmp_path / "g.txt"
    path.write_bytes(b"2 2\n1 2\n2 1\n")
    assert file_digest(path) == hashlib.sha256(b"2 2\n1 2\n2 1\n").hexdigest()


def test_undecodable_bytes_name_the_line(tmp_path):
    path = tmp_path / "g.txt"
    path.write_bytes(b"# header\n3 3\n1 2\n2 3\n3 \xff\xfe1\n")
    with pytest.raises(GraphFormatError) as e:
        read_graph(path)
    assert e.value.lineno == 5
    assert e.value.path == str(path)
    assert "UTF-8" in str(e.value)
    with pytest.raises(GraphFormatError) as e:
        read_matrix(io.BytesIO(b"2\n0 1\n\xc3\x28 0\n"))
    assert e.value.lineno == 3


def test_unreadable_path(tmp_path):
    with pytest.raises(GraphFormatError) as e:
        read_graph(tmp_path / "nope.txt")
    assert e.value.lineno is None
    assert "nope.txt" in str(e.value)
    with pytest.raises(GraphFormatError):
        read_undirected(tmp_path)


def test_read_graph_from_binary_stream():
    g = read_graph(io.BytesIO(b"3 3\r\n1 2\r\n2 3 0.5\r\n3 1\r\n"))
    assert g.m == 3
    assert g.weights[(2, 3)] == 0.5
