import sys
from pathlib import Path

# make sibling helper modules (oracles.py) importable from any test
sys.path.insert(0, str(Path(__file__).parent))
