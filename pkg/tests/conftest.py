import pytest

from mmdistrict.model import Block, StateInstance, generate_synthetic_state


def make_path_state(pops, shares, seats, turnout=0.8):
    """Path-graph state with given block populations and R shares."""
    blocks = []
    adjacency = {}
    n = len(pops)
    for i, (pop, share) in enumerate(zip(pops, shares)):
        votes = pop * turnout
        blocks.append(Block(id=i, population=pop, votes_r=share * votes,
                            votes_d=(1 - share) * votes, x=float(i), y=0.0))
        nbrs = set()
        if i > 0:
            nbrs.add(i - 1)
        if i < n - 1:
            nbrs.add(i + 1)
        adjacency[i] = nbrs
    return StateInstance(blocks, adjacency, seats)


@pytest.fixture
def path_state():
    return make_path_state([100, 100, 100, 100], [0.8, 0.6, 0.3, 0.2], seats=2)


@pytest.fixture(scope="session")
def grid_state():
    return generate_synthetic_state(16, 4, 0.4, 1, seed=3)
