"""Hypothesis strategies shared by the test modules."""
import numpy as np
from hypothesis import strategies as st

from drlcheck.network import random_network


@st.composite
def networks(draw, max_inputs=3, max_hidden=6, max_layers=2, max_outputs=2):
    n_in = draw(st.integers(1, max_inputs))
    hidden = draw(st.lists(st.integers(1, max_hidden), min_size=1, max_size=max_layers))
    n_out = draw(st.integers(1, max_outputs))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_network(np.random.default_rng(seed), [n_in, *hidden, n_out])


def small_points(n):
    return st.lists(st.floats(-3, 3, allow_nan=False), min_size=n, max_size=n)
