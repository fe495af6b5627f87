# ==== tests/conftest.py ====
"""Pytest configuration and fixtures."""

import pytest
from pathlib import Path

from twrn_sim.core.numerics import RngStream
from twrn_sim.core.relay_power import ea_scaling
from twrn_sim.core.signal_model import SystemParams, decompose_offset, lambda_gamma_diagonals
from twrn_sim.core.training import optimal_pair

@pytest.fixture
def params8():
    """N=8 pilots at 10 dB with unit symbol period, channel and noise variances."""
    return SystemParams.from_snr_db(8, 10.0)

@pytest.fixture
def params16():
    """N=16 pilots at 10 dB."""
    return SystemParams.from_snr_db(16, 10.0)

@pytest.fixture
def pair8():
    """Optimal DFT pair of length 8."""
    return optimal_pair(8)

@pytest.fixture
def pair16():
    """Optimal DFT pair of length 16."""
    return optimal_pair(16)

@pytest.fixture
def offset8(params8):
    """Offset of 2.5 symbol periods for N=8."""
    return decompose_offset(2.5, params8)

@pytest.fixture
def ea8(params8, offset8):
    """Equal relay amplification for the N=8 offset."""
    return ea_scaling(params8, offset8)

@pytest.fixture
def diagonals8(offset8, ea8):
    """(Lambda, Gamma) diagonals for the N=8 offset under equal amplification."""
    return lambda_gamma_diagonals(offset8, ea8.gamma_i, ea8.gamma_s, 8)

@pytest.fixture
def rng():
    """Fixed random stream."""
    return RngStream(12345)

@pytest.fixture
def good_config():
    """Minimal valid experiment document."""
    return "scenario=mse_vs_snr\nN=8\ntrials=1000\nseed=1\nsweep=0,5,10,15,20\n"

@pytest.fixture
def small_config():
    """Fast experiment document for harness and CLI runs."""
    return '''# quick LMMSE run
scenario=mse_vs_snr
N=8
trials=120
seed=7
sweep=5,15   # two points
tau=1.5
'''

@pytest.fixture
def config_file(tmp_path: Path, small_config):
    """small_config written to disk."""
    path = tmp_path / "small.cfg"
    path.write_text(small_config, encoding="utf-8")
    return path

@pytest.fixture
def bad_config_file(tmp_path: Path):
    """Document with a trial count below the minimum on line 3."""
    path = tmp_path / "bad.cfg"
    path.write_text("scenario=mse_vs_snr\nN=8\ntrials=50\nseed=1\nsweep=0,10\n", encoding="utf-8")
    return path
