"""Shared strategies and helpers for the test suite."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import strategies as st

from ofal.core import Instance, RequestSequence, ServerLayout


def F(x) -> Fraction:
    return Fraction(x)


def layout_of(*positions) -> ServerLayout:
    return ServerLayout(tuple(Fraction(p) for p in positions))


def seq_of(*requests) -> RequestSequence:
    return RequestSequence(tuple(Fraction(r) for r in requests))


@st.composite
def layouts(draw, min_k: int = 1, max_k: int = 8, den: int = 4, hull: int = 12):
    """Strictly increasing rational layouts on a den-step grid."""
    k = draw(st.integers(min_value=min_k, max_value=max_k))
    ticks = draw(
        st.lists(
            st.integers(min_value=0, max_value=hull * den),
            min_size=k,
            max_size=k,
            unique=True,
        )
    )
    return ServerLayout(tuple(Fraction(t, den) for t in sorted(ticks)))


@st.composite
def instances(draw, min_k: int = 1, max_k: int = 6, cap_max: int = 3):
    layout = draw(layouts(min_k=min_k, max_k=max_k))
    caps = draw(
        st.lists(
            st.integers(min_value=1, max_value=cap_max),
            min_size=layout.k,
            max_size=layout.k,
        )
    )
    return Instance(layout, tuple(caps))


def rand_requests(rng: random.Random, inst: Instance, n: int, den: int = 16) -> RequestSequence:
    lo = inst.layout.positions[0] - 1
    hi = inst.layout.positions[-1] + 1
    return RequestSequence(
        tuple(lo + Fraction(rng.randint(0, den * 32), den * 32) * (hi - lo) for _ in range(n))
    )


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)
