#!/usr/bin/env python3
"""
Triplet Layout - Command Line Launcher
Generate scenes, train layout networks, evaluate and probe them.
"""

import sys
import os

# Add project root to Python path
project_root = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, project_root)

if __name__ == "__main__":
    try:
        from src.cli.main import main
    except ImportError as e:
        print(f"❌ Import Error: {e}")
        print("💡 Make sure all dependencies are installed (pip install -r requirements.txt)")
        sys.exit(1)

    sys.exit(main())
