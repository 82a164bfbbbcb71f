import pytest

from typedmatch.core import TypedInstance, TypeInfo, TypePreference


def P(groups):
    return TypePreference(groups)


def two_sided(men_prefs, women, kind="smti", men_count=3):
    """k = 1 + len(women): men are type 1, women types 2.. with the given
    (count, prefs) rows; every woman row may omit prefs to mean 'type 1'."""
    types = [TypeInfo("m", men_count, P(men_prefs))]
    for row in women:
        count, prefs = row if isinstance(row, tuple) else (row, [[1]])
        types.append(TypeInfo("w", count, P(prefs)))
    return TypedInstance(kind, types)


@pytest.fixture
def paper_example():
    """Three identical men ranking a four-woman tie over a three-woman tie;
    every woman takes any man."""
    return two_sided([[2, 3], [4]], [2, 2, 3])


PAPER_EXAMPLE_TEXT = """\
problem smti
types 4
type 1 side=m count=3 prefs=(2 3) 4
type 2 side=w count=2 prefs=1
type 3 side=w count=2 prefs=1
type 4 side=w count=3 prefs=1
"""


ODD_CYCLE_TEXT = """\
problem srti
types 3
type 1 side=none count=1 prefs=2 3
type 2 side=none count=1 prefs=3 1
type 3 side=none count=1 prefs=1 2
"""
