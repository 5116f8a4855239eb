import json
import os

import pytest
from fastapi.testclient import TestClient

# Test environment: no cache, single-threaded evaluation by default
os.environ.pop("REDIS_URL", None)
os.environ.update({
    "SWEEP_WORKERS": "1",
    "REGISTER_LOW_HZ": "100",
    "REGISTER_HIGH_HZ": "300",
})

from app.main import app
from app.models import Piece

P1 = [120, 160, 170, 145]
P2 = [120, 155, 150, 130]
P3 = [120, 125, 130, 95]
P4 = [120, 135, 140, 135]
P5 = [120, 125, 120, 105]


@pytest.fixture
def client():
    """Create test client"""
    return TestClient(app)


@pytest.fixture
def reference_frequencies():
    """Frequencies of the five reference pieces"""
    return {"P1": P1, "P2": P2, "P3": P3, "P4": P4, "P5": P5}


@pytest.fixture
def p1():
    return Piece(label="P1", frequencies=P1)


@pytest.fixture
def p3():
    return Piece(label="P3", frequencies=P3)


@pytest.fixture
def p4():
    return Piece(label="P4", frequencies=P4)


@pytest.fixture
def p5():
    return Piece(label="P5", frequencies=P5)


@pytest.fixture
def p1_json_file(tmp_path):
    """P1 as a structured piece file"""
    path = tmp_path / "p1.json"
    path.write_text(json.dumps({"label": "P1", "frequencies": P1}))
    return path


@pytest.fixture
def pieces_csv_file(tmp_path):
    """P1 and P4 as a delimited piece file"""
    path = tmp_path / "pieces.csv"
    path.write_text("# reference pieces\nP1,120,160,170,145\n\nP4,120,135,140,135\n")
    return path
