#!/usr/bin/env python3
"""
Triplet Layout - Ablation Launcher
Train baseline, triplet and triplet + depth augmentation variants over
several seeds and compare layout metrics and probe accuracy.

Usage: python scripts/run_ablation.py [--config FILE] [--set key=value ...] [--out DIR]
"""

import sys
import os

# Add project root to Python path
project_root = os.path.dirname(os.path.abspath(__file__))
parent_dir = os.path.dirname(project_root)
sys.path.insert(0, parent_dir)

if __name__ == "__main__":
    try:
        from src.cli.main import main

        print("🧪 Starting variant ablation...")
        print("📊 Variants: baseline, triplet, triplet_da")
        print("=" * 60)

        sys.exit(main(["ablate", "--verbose", *sys.argv[1:]]))

    except ImportError as e:
        print(f"❌ Import Error: {e}")
        print("💡 Make sure all dependencies are installed (pip install -r requirements.txt)")
        sys.exit(1)
