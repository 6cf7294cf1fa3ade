import pytest

from pmcodec.corpus import build_corpus
from pmcodec.halfedge import HalfEdgeMesh, normalize_quantize
from pmcodec.simplify import decimate_to_pm

# Square pyramid on the integer grid, outward winding.
B1, B2, B3, B4, APEX = (0, 0, 0), (4, 0, 0), (4, 4, 0), (0, 4, 0), (2, 2, 4)
PYRAMID_COORDS = [B1, B2, B3, B4, APEX]
PYRAMID_FACES = [(0, 1, 4), (1, 2, 4), (2, 3, 4), (3, 0, 4), (0, 2, 1), (0, 3, 2)]

TETRA_COORDS = [(0, 0, 0), (4, 0, 0), (0, 4, 0), (0, 0, 4)]
TETRA_FACES = [(0, 2, 1), (0, 1, 3), (0, 3, 2), (1, 2, 3)]


def coord_faces(coords, faces):
    return {tuple(coords[i] for i in f) for f in faces}


@pytest.fixture
def pyramid():
    return HalfEdgeMesh.from_faces(PYRAMID_COORDS, PYRAMID_FACES)


@pytest.fixture
def tetra():
    return HalfEdgeMesh.from_faces(TETRA_COORDS, TETRA_FACES)


@pytest.fixture
def strip():
    # (u, v, w), (v, x, w)
    coords = [(0, 0, 0), (2, 0, 0), (0, 2, 0), (2, 2, 0)]
    return HalfEdgeMesh.from_faces(coords, [(0, 1, 2), (1, 3, 2)])


@pytest.fixture(scope="session")
def corpus_raw():
    return build_corpus(seed=0, size=100)


@pytest.fixture(scope="session")
def corpus_pms(corpus_raw):
    """(name, quantized mesh, progressive mesh) for the whole corpus."""
    out = []
    for name, raw in corpus_raw:
        mesh, grid = normalize_quantize(raw, 128)
        out.append((name, mesh, decimate_to_pm(mesh, grid)))
    return out


@pytest.fixture(scope="session")
def small_pms(corpus_pms):
    """Every fifth corpus mesh, for the slower exhaustive checks."""
    return corpus_pms[::5]


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
