# conftest.py
import sys
from pathlib import Path

# Make deq_library and deq_app importable without installing them
sys.path.insert(0, str(Path(__file__).resolve().parent / "src"))
