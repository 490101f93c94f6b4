import pytest

from hamcount import adjacency_matrix, complete_digraph, prepare


@pytest.fixture(scope="session")
def complete5_instance():
    return prepare(adjacency_matrix(complete_digraph(5)), 0.25)
