import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tcmeval.herbs import Lexicon, default_lexicon


@pytest.fixture(scope="session")
def lexicon() -> Lexicon:
    return default_lexicon()


@pytest.fixture()
def empty_lexicon() -> Lexicon:
    return Lexicon.empty()
