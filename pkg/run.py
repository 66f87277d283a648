#!/usr/bin/env python3
"""Entry point script for the sudden Otto refrigerator simulator."""

if __name__ == "__main__":
    import sys
    from src.main import main

    sys.exit(main())
