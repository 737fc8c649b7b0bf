"""Hypothesis strategies shared by several test modules."""
from hypothesis import strategies as st

from bsstab.bsgroup import Word


@st.composite
def words(draw, max_len=10):
    syl = draw(
        st.lists(
            st.one_of(
                st.tuples(st.just("a"), st.integers(-6, 6)),
                st.tuples(st.just("t"), st.sampled_from([-1, 1])),
            ),
            max_size=max_len,
        )
    )
    return Word(tuple(syl))
