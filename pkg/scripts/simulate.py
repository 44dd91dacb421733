#!/usr/bin/env python3
"""
Script to run norm synthesis experiments from a checkout, without installing the package
"""
import sys
from pathlib import Path

# Add the app directory to Python path
sys.path.insert(0, str(Path(__file__).parent.parent))

from app.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
