import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from belltouchard.streams import derive_seed, path_rng, run_batch


def _draw(rng, seed):
    return float(rng.random()), seed


def test_derive_seed_deterministic_and_distinct():
    seeds = [derive_seed(7, i) for i in range(1000)]
    assert seeds == [derive_seed(7, i) for i in range(1000)]
    assert len(set(seeds)) == 1000
    assert derive_seed(7, 0) != derive_seed(8, 0)


def test_path_rng_replays():
    assert path_rng(3, 5).random() == np.random.default_rng(derive_seed(3, 5)).random()


@pytest.mark.parametrize("workers", [1, 2, 4])
def test_run_batch_order_and_workers(workers):
    ref = run_batch(_draw, 37, 11)
    assert run_batch(_draw, 37, 11, workers=workers) == ref
    assert [s for _, s in ref] == [derive_seed(11, i) for i in range(37)]


def test_empty_batch():
    assert run_batch(_draw, 0, 1) == []


@pytest.mark.parametrize("bad", [-1, 1.5, True])
def test_bad_seed(bad):
    with pytest.raises(ValueError):
        derive_seed(bad, 0)


@given(st.integers(0, 2**63), st.integers(0, 10**6))
def test_seed_range(master, index):
    assert 0 <= derive_seed(master, index) < 2**64
