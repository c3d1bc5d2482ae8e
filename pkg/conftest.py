"""Pytest configuration for the Majorana simulator tests."""

import sys
from pathlib import Path

# Add scripts directory to path so tests can import utils.* and simulate
scripts_dir = Path(__file__).parent / "scripts"
sys.path.insert(0, str(scripts_dir))
