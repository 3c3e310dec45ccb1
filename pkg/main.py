#!/usr/bin/env python3
"""Main entry point for the faae toolkit"""
import sys
from pathlib import Path

# Ensure we can import from src
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

if __name__ == "__main__":
    from src.scripts.cli import main

    sys.exit(main(sys.argv[1:]))
