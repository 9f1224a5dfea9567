import itertools

import numpy as np
import pytest

from marpac.process import MixtureLaw, ProcessLaw

ACCEPTANCE_LINES = []


@pytest.fixture
def flip25():
    return ProcessLaw.flip(0.25)


@pytest.fixture
def two_deltas():
    return MixtureLaw((ProcessLaw.delta(0, 2), ProcessLaw.delta(1, 2)), [0.5, 0.5])


@pytest.fixture
def three_deltas():
    return MixtureLaw(tuple(ProcessLaw.delta(s, 3) for s in range(3)), [0.5, 0.3, 0.2])


@pytest.fixture
def flip_pair():
    return MixtureLaw((ProcessLaw.flip(0.1), ProcessLaw.flip(0.9)), [0.5, 0.5])


def sequence_probability(law, seq):
    """Probability of an exact finite sequence under a component or mixture (test oracle)."""
    if isinstance(law, MixtureLaw):
        return sum(w * sequence_probability(c, seq) for w, c in zip(law.weights, law.components))
    prob = law.initial_law[seq[0]]
    for a, b in zip(seq, seq[1:]):
        prob *= law.kernel[a, b]
    return prob


def enumerate_sequences(law, length):
    """Every sequence of the given length with its probability."""
    for seq in itertools.product(range(law.alphabet), repeat=length):
        yield seq, sequence_probability(law, seq)


@pytest.fixture
def acceptance_log():
    def record(number, title, passed, detail):
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title} -- {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_chain(rng, size):
    mat = rng.random((size, size)) + 0.05
    return mat / mat.sum(axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
