from pathlib import Path

import pytest

from aggpush import load_config

REPO_ROOT = Path(__file__).resolve().parent.parent
CONFIG_DIR = REPO_ROOT / "configs"
GOLDEN_DIR = Path(__file__).resolve().parent / "golden"


@pytest.fixture(scope="session")
def config_dir() -> Path:
    return CONFIG_DIR


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN_DIR


@pytest.fixture(scope="session")
def product_config():
    return load_config(CONFIG_DIR / "orders_by_product.json")


@pytest.fixture(scope="session")
def category_config():
    return load_config(CONFIG_DIR / "orders_by_category.json")


@pytest.fixture(scope="session")
def category_small_config():
    return load_config(CONFIG_DIR / "orders_by_category_small.json")


@pytest.fixture(scope="session")
def sorted_unique_config():
    return load_config(CONFIG_DIR / "sorted_unique_keys.json")


@pytest.fixture(scope="session")
def nonfk_config():
    return load_config(CONFIG_DIR / "nonfk_category.json")
