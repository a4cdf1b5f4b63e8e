import sys

from .lq_recovery import cli

if __name__ == "__main__":
    sys.exit(cli())
