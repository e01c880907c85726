import random

import pytest

from trimatch import Base, MetricSpace, build_index, make_lane
from trimatch.generate import generate_instance


def line_space(points: dict[str, float]) -> MetricSpace:
    """Bases on a line; distances are |x - y| served from an explicit matrix."""
    ids = list(points)
    matrix = [[abs(points[a] - points[b]) for b in ids] for a in ids]
    return MetricSpace.from_matrix([Base(i) for i in ids], matrix)


def tri4():
    """Four lanes on the line A=0, B=10, C=4, D=1; the worked example used
    throughout: query (t1=AB, ell=0.9, u=40) admits exactly BC+CA and BC+CD."""
    space = line_space({"A": 0.0, "B": 10.0, "C": 4.0, "D": 1.0})
    lanes = [
        make_lane("AB", "A", "B", space),
        make_lane("BC", "B", "C", space),
        make_lane("CD", "C", "D", space),
        make_lane("CA", "C", "A", space),
    ]
    return space, build_index(lanes, space)


def gc_instance(n_bases: int, n_lanes: int, seed: int):
    """Seeded great-circle instance with its index built."""
    bases, rows = generate_instance(n_bases, n_lanes, seed)
    space = MetricSpace.great_circle(bases)
    lanes = [make_lane(lid, s, e, space) for lid, s, e in rows]
    return space, build_index(lanes, space)


def pick_lanes(index, count: int, seed: int) -> list[str]:
    ids = [l.id for l in index.lanes]
    return random.Random(seed).sample(ids, min(count, len(ids)))


@pytest.fixture
def tri4_instance():
    return tri4()
