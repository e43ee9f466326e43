#!/usr/bin/env python3
"""
DiscoGraMS - Command-Line Entry Point
Run the screenplay summarization pipeline from a source checkout.
"""

import sys
from pathlib import Path

# Add project root to Python path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

try:
    from discograms.cli import main
except ImportError as e:
    print(f"Error importing pipeline: {e}", file=sys.stderr)
    print("Make sure you have installed all dependencies with: pip install -r requirements.txt", file=sys.stderr)
    sys.exit(1)


if __name__ == '__main__':
    main()
