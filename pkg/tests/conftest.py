from pathlib import Path

import pytest
from hypothesis import strategies as st

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
CORPUS = Path(__file__).resolve().parent / "corpus"

ARTICLE_URL = "https://www.bbc.com/news/articles/cd0elzk24dno"
BBC_PATTERN = rb"https?://(www\.)?bbc\.com/news/articles/[0-9a-z][0-9a-z]*"
RULE_SOURCE = "|WRlcbFQcgwfx2i0edolvIoDjHn8hetX0xkw1QrBBEaQ=|"
INFER_SOURCE = "|JMFb3PAURhU2D2FUWT3X01TV0Vm5Lf6rL63ctK0G10s=|"
PERCEIVE_SOURCE = "|hTVgZNA4cqXL7Rebi76DGKtnqWJr5V0NciiO4U4WUmU=|"
ARTICLE_PREFIX = (
    b"(7:article(8:headline56:BBC complains to Apple over misleading shooting headline)"
    b"(4:date10:1734112342)(6:author13:Graham Fraser)(4:body"
)


def sexpr_trees(max_leaves: int = 30):
    """Random S-expression values: binary and text atoms, nested lists."""
    atoms = st.one_of(
        st.binary(max_size=40),
        st.text(max_size=20).map(lambda s: s.encode("utf-8")),
        st.sampled_from([b"", b"article", b"a b", b'"q"', b"\\", b"3:x", b"|", b"(", b")", b";"]),
    )
    return st.recursive(atoms, lambda kids: st.lists(kids, max_size=6), max_leaves=max_leaves)


@pytest.fixture
def bbc_script() -> bytes:
    return (FIXTURES / "bbc.hex").read_bytes()


@pytest.fixture
def bbc_page() -> bytes:
    return (FIXTURES / "bbc.html").read_bytes()


@pytest.fixture
def bbc_page_no_h1() -> bytes:
    return (FIXTURES / "bbc-no-h1.html").read_bytes()
