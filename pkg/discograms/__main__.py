"""
Allow ``python -m discograms``.
"""

from discograms.cli import main


if __name__ == '__main__':
    main()
