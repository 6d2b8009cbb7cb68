import os
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent

ETHUCY_HELP = (
    "ETH/UCY ground-truth data not found. Point TRAJEVAL_ETHUCY_DIR at a "
    "directory with one subdirectory per scene (eth, hotel, univ, zara1, zara2), "
    "each holding that scene's test-split 'frame agent_id x y' text files at "
    "2.5 fps (the standard leave-one-out distribution). See README for details."
)


@pytest.fixture(scope="session")
def ethucy_dir():
    root = Path(os.environ.get("TRAJEVAL_ETHUCY_DIR", REPO_ROOT / "data" / "ethucy"))
    scenes = ("eth", "hotel", "univ", "zara1", "zara2")
    if not root.is_dir() or not all((root / s).is_dir() for s in scenes):
        pytest.skip(ETHUCY_HELP)
    return root
