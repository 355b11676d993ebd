"""
A run script for the laboratory; see kslab/harness/cli.py for the commands.

Commands are fuzzy matched, so "lab swe" runs sweep-eps.
"""

from kslab.harness.cli import main

if __name__ == "__main__":
    main()
